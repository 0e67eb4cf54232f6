"""BehaviorTree.CPP-style XML generation.

Emits one `<BehaviorTree ID="...">` element per tree under a single
`<root BTCPP_format="4" main_tree_to_execute="...">`. Quality annotations map
onto node attributes:

* `_description` collects human-readable entries joined by "; ":
  `satisfices <quality>` per satisficed quality, then `[<id>] <description>`
  per attached requirement, prefixed `FailureIf:` / `SuccessIf:`
  (or `SuccessIf/FailureIf:` when a requirement carries both) so hard
  constraints stay recognizable in viewers that only show descriptions.
* every failureIf (successIf) expression attached to the node is emitted in
  a `_failureIf` (`_successIf`) attribute; multiple expressions are joined
  with " || " since any one of them firing decides the node's outcome.

Output is deterministic byte-for-byte for equal models: two-space indent,
LF line endings, fixed attribute order (ID, name, params sorted by key,
_successIf, _failureIf, _description), all five XML-special characters
escaped in attribute values.
"""

from btq.model import BehaviorTreeModel, QualityRequirement, TreeNode

_XML_ESCAPES = [
    ("&", "&amp;"),
    ("<", "&lt;"),
    (">", "&gt;"),
    ('"', "&quot;"),
    ("'", "&apos;"),
]


def escape_attr(text: str) -> str:
    for raw, entity in _XML_ESCAPES:
        text = text.replace(raw, entity)
    return text


def _description_entry(req: QualityRequirement) -> str:
    if req.failure_if is not None and req.success_if is not None:
        prefix = "SuccessIf/FailureIf: "
    elif req.failure_if is not None:
        prefix = "FailureIf: "
    elif req.success_if is not None:
        prefix = "SuccessIf: "
    else:
        prefix = ""
    return f"{prefix}[{req.id}] {req.description}"


def _node_attrs(node: TreeNode, model: BehaviorTreeModel) -> list[tuple[str, str]]:
    attrs: list[tuple[str, str]] = []
    if node.kind.is_leaf:
        attrs.append(("ID", node.ref_id))
    if node.display_name is not None:
        attrs.append(("name", node.display_name))
    for key in sorted(node.params):
        attrs.append((key, node.params[key]))
    reqs = [
        model.requirement_registry[rid]
        for rid in node.satisfies
        if rid in model.requirement_registry
    ]
    success = [r.success_if.source for r in reqs if r.success_if is not None]
    failure = [r.failure_if.source for r in reqs if r.failure_if is not None]
    if success:
        attrs.append(("_successIf", " || ".join(success)))
    if failure:
        attrs.append(("_failureIf", " || ".join(failure)))
    entries = [f"satisfices {q.display()}" for q in node.satisfices]
    entries.extend(_description_entry(r) for r in reqs)
    if entries:
        attrs.append(("_description", "; ".join(entries)))
    return attrs


def _emit(node: TreeNode, model: BehaviorTreeModel, depth: int, lines: list[str]) -> None:
    pad = "  " * depth
    attrs = "".join(f' {k}="{escape_attr(v)}"' for k, v in _node_attrs(node, model))
    tag = node.kind.value
    if not node.children:
        lines.append(f"{pad}<{tag}{attrs}/>")
        return
    lines.append(f"{pad}<{tag}{attrs}>")
    for child in node.children:
        _emit(child, model, depth + 1, lines)
    lines.append(f"{pad}</{tag}>")


def generate(model: BehaviorTreeModel) -> str:
    """Render the model as BehaviorTree.CPP-flavored XML text.

    Trees appear in declaration order; the element tree mirrors the node tree
    one-to-one, so depth and child order are preserved.
    """
    lines = ['<?xml version="1.0" encoding="UTF-8"?>']
    lines.append(
        f'<root BTCPP_format="4" main_tree_to_execute="{escape_attr(model.main_tree_id)}">'
    )
    for tree_id, root in model.trees.items():
        lines.append(f'  <BehaviorTree ID="{escape_attr(tree_id)}">')
        _emit(root, model, 2, lines)
        lines.append("  </BehaviorTree>")
    lines.append("</root>")
    return "\n".join(lines) + "\n"
