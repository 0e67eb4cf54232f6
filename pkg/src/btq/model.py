"""Quality-annotated behavior-tree domain model and structural validation.

A model is a set of named trees plus two registries: qualities (named
concerns such as "performance", identified case-sensitively by name) and
quality requirements (identified, described requirements that may carry
machine-checkable successIf/failureIf conditions). Any node may *satisfice*
qualities and *satisfy* requirements; the same requirement id may be attached
at several nodes (a cross-cutting requirement), in which case every inline
declaration must agree byte-for-byte on description and conditions.
"""

from dataclasses import dataclass, field
from enum import Enum

from btq.condexpr import ConditionExpr
from btq.diagnostics import (
    Diagnostic,
    SourceLocation,
    error,
    sort_diagnostics,
    warning,
)


class NodeKind(Enum):
    SEQUENCE = "Sequence"
    REACTIVE_SEQUENCE = "ReactiveSequence"
    FALLBACK = "Fallback"
    REACTIVE_FALLBACK = "ReactiveFallback"
    PARALLEL = "Parallel"
    INVERTER = "Inverter"
    REPEAT = "Repeat"
    RETRY_UNTIL_SUCCESSFUL = "RetryUntilSuccessful"
    FORCE_SUCCESS = "ForceSuccess"
    FORCE_FAILURE = "ForceFailure"
    KEEP_RUNNING_UNTIL_FAILURE = "KeepRunningUntilFailure"
    ACTION = "Action"
    CONDITION = "Condition"
    SUBTREE_REF = "SubTree"

    @property
    def is_composite(self) -> bool:
        return self in _COMPOSITES

    @property
    def is_decorator(self) -> bool:
        return self in _DECORATORS

    @property
    def is_leaf(self) -> bool:
        return self in _LEAVES


_COMPOSITES = frozenset(
    {
        NodeKind.SEQUENCE,
        NodeKind.REACTIVE_SEQUENCE,
        NodeKind.FALLBACK,
        NodeKind.REACTIVE_FALLBACK,
        NodeKind.PARALLEL,
    }
)
_DECORATORS = frozenset(
    {
        NodeKind.INVERTER,
        NodeKind.REPEAT,
        NodeKind.RETRY_UNTIL_SUCCESSFUL,
        NodeKind.FORCE_SUCCESS,
        NodeKind.FORCE_FAILURE,
        NodeKind.KEEP_RUNNING_UNTIL_FAILURE,
    }
)
_LEAVES = frozenset({NodeKind.ACTION, NodeKind.CONDITION, NodeKind.SUBTREE_REF})

#: Count parameter each kind must carry: (param name, needs upper bound by child count).
COUNT_PARAMS = {
    NodeKind.REPEAT: "num_cycles",
    NodeKind.RETRY_UNTIL_SUCCESSFUL: "num_attempts",
    NodeKind.PARALLEL: "success_count",
}


@dataclass(frozen=True)
class Quality:
    """A named concern a node aims to satisfice, e.g. performance or security.

    Two values denote the same quality iff their names compare equal
    case-sensitively; the optional facet ("time-behavior", ...) is display
    detail carried along with the name.
    """

    name: str
    facet: str | None = None

    def display(self) -> str:
        return f"{self.name} <{self.facet}>" if self.facet else self.name


@dataclass(frozen=True)
class QualityRequirement:
    """Identified, described requirement, optionally tied to a quality and
    optionally carrying hard-constraint conditions."""

    id: str
    description: str
    quality: Quality | None = None
    success_if: ConditionExpr | None = None
    failure_if: ConditionExpr | None = None

    def is_hard_constraint(self) -> bool:
        return self.success_if is not None or self.failure_if is not None

    def condition_sources(self) -> tuple[str | None, str | None]:
        return (
            self.success_if.source if self.success_if else None,
            self.failure_if.source if self.failure_if else None,
        )


@dataclass
class TreeNode:
    """One node of a behavior tree.

    `satisfies` holds requirement ids in declaration order; `declarations`
    holds the requirement payloads declared inline at this node (back
    references contribute to `satisfies` only). `node_path` is assigned by
    `assign_node_paths` and is empty until then.
    """

    kind: NodeKind
    ref_id: str = ""
    display_name: str | None = None
    params: dict[str, str] = field(default_factory=dict)
    satisfices: list[Quality] = field(default_factory=list)
    satisfies: list[str] = field(default_factory=list)
    declarations: list[QualityRequirement] = field(default_factory=list)
    children: list["TreeNode"] = field(default_factory=list)
    node_path: str = ""
    location: SourceLocation = field(default_factory=SourceLocation)

    @property
    def label(self) -> str:
        """Name used in paths: explicit name, else referenced id, else kind."""
        if self.display_name:
            return self.display_name
        if self.ref_id:
            return self.ref_id
        return self.kind.value

    def walk(self):
        yield self
        for child in self.children:
            yield from child.walk()


@dataclass
class BehaviorTreeModel:
    trees: dict[str, TreeNode]
    main_tree_id: str
    requirement_registry: dict[str, QualityRequirement] = field(default_factory=dict)
    quality_registry: dict[str, Quality] = field(default_factory=dict)
    source_file: str = "<model>"
    _path_index: dict[str, TreeNode] = field(default_factory=dict, repr=False)

    def iter_nodes(self):
        """All nodes of all trees in declaration plus document order."""
        for root in self.trees.values():
            yield from root.walk()

    def node_by_path(self, node_path: str) -> TreeNode:
        if not self._path_index:
            assign_node_paths(self)
        return self._path_index[node_path]

    def leaf_paths(self) -> list[str]:
        """Paths of every scriptable leaf (actions and conditions)."""
        if not self._path_index:
            assign_node_paths(self)
        return [
            node.node_path
            for node in self.iter_nodes()
            if node.kind in (NodeKind.ACTION, NodeKind.CONDITION)
        ]


def assign_node_paths(model: BehaviorTreeModel) -> BehaviorTreeModel:
    """Assign a stable, unique `node_path` to every node.

    The path is `/<tree-id>/<label>#<n>/...` where each segment uses the
    node's label and `n` is the 1-based ordinal among same-labeled siblings,
    so two `MoveBase` leaves under different parents stay distinguishable and
    two under the same parent become `MoveBase#1` / `MoveBase#2`.
    """
    model._path_index = {}

    def assign(node: TreeNode, prefix: str, ordinal: int) -> None:
        node.node_path = f"{prefix}/{node.label}#{ordinal}"
        model._path_index[node.node_path] = node
        seen: dict[str, int] = {}
        for child in node.children:
            seen[child.label] = seen.get(child.label, 0) + 1
            assign(child, node.node_path, seen[child.label])

    for tree_id, root in model.trees.items():
        assign(root, f"/{tree_id}", 1)
    return model


def requirements_of(model: BehaviorTreeModel, node_path: str) -> list[QualityRequirement]:
    """Resolved requirements attached at `node_path`, in declaration order.

    Raises KeyError for an unknown path; ids missing from the registry are
    skipped (validate reports them as E006).
    """
    node = model.node_by_path(node_path)
    return [
        model.requirement_registry[rid]
        for rid in node.satisfies
        if rid in model.requirement_registry
    ]


def _check_count_param(node: TreeNode, diags: list[Diagnostic]) -> None:
    name = COUNT_PARAMS[node.kind]
    raw = node.params.get(name)
    value = None
    if raw is not None:
        try:
            value = int(raw)
        except ValueError:
            value = None
    if value is None or value < 1:
        diags.append(
            error(
                "E005",
                f"{node.kind.value} requires positive integer {name!r}, got {raw!r}",
                node.location,
            )
        )
        return
    if node.kind is NodeKind.PARALLEL and node.children and value > len(node.children):
        diags.append(
            error(
                "E005",
                f"success_count {value} exceeds the {len(node.children)} children",
                node.location,
            )
        )


def _subtree_cycles(model: BehaviorTreeModel, diags: list[Diagnostic]) -> None:
    # Edges between tree ids induced by SubTree leaves; DFS with an explicit stack state.
    state: dict[str, int] = {}  # 0 = visiting, 1 = done

    def visit(tree_id: str, via: TreeNode | None) -> None:
        if state.get(tree_id) == 1:
            return
        if state.get(tree_id) == 0:
            loc = via.location if via else SourceLocation(model.source_file)
            diags.append(error("E004", f"subtree reference cycle through {tree_id!r}", loc))
            return
        state[tree_id] = 0
        root = model.trees.get(tree_id)
        if root is not None:
            for node in root.walk():
                if node.kind is NodeKind.SUBTREE_REF and node.ref_id in model.trees:
                    visit(node.ref_id, node)
        state[tree_id] = 1

    for tree_id in model.trees:
        visit(tree_id, None)


def validate(model: BehaviorTreeModel) -> list[Diagnostic]:
    """Return every structural violation as a diagnostic; empty iff valid.

    Pure: equal models produce the identical list, ordered by
    (file, line, column, code).
    """
    diags: list[Diagnostic] = []
    model_loc = SourceLocation(model.source_file)

    if model.main_tree_id not in model.trees:
        diags.append(error("E001", f"main tree {model.main_tree_id!r} is not declared", model_loc))

    referenced_ids: set[str] = set()
    for node in model.iter_nodes():
        kind = node.kind
        n = len(node.children)
        if kind.is_composite and n < 1:
            diags.append(
                error("E003", f"{kind.value} is a composite and needs at least one child", node.location)
            )
        elif kind.is_decorator and n != 1:
            diags.append(
                error(
                    "E003",
                    f"{kind.value} is a decorator and must have exactly one child, found {n}",
                    node.location,
                )
            )
        elif kind.is_leaf and n != 0:
            diags.append(error("E003", f"{kind.value} is a leaf and cannot have children", node.location))

        if kind in COUNT_PARAMS:
            _check_count_param(node, diags)

        if kind.is_leaf and not node.ref_id.strip():
            diags.append(error("E009", f"{kind.value} needs a referenced identifier", node.location))

        if kind is NodeKind.SUBTREE_REF and node.ref_id and node.ref_id not in model.trees:
            diags.append(error("E002", f"subtree {node.ref_id!r} is not declared", node.location))

        for quality in node.satisfices:
            if not quality.name.strip():
                diags.append(error("E009", "quality name is empty", node.location))

        for rid in node.satisfies:
            referenced_ids.add(rid)
            if rid not in model.requirement_registry:
                diags.append(error("E006", f"requirement {rid!r} is never declared", node.location))

        for decl in node.declarations:
            registered = model.requirement_registry.get(decl.id)
            if registered is None:
                continue
            if (
                decl.description != registered.description
                or decl.condition_sources() != registered.condition_sources()
            ):
                diags.append(
                    error(
                        "E007",
                        f"requirement {decl.id!r} redeclared with a different "
                        "description or conditions",
                        node.location,
                    )
                )

    for rid, req in model.requirement_registry.items():
        if not rid.strip() or any(ch.isspace() for ch in rid):
            diags.append(error("E009", f"requirement id {rid!r} is empty or has whitespace", model_loc))
        if not req.description.strip():
            diags.append(error("E009", f"requirement {rid!r} has an empty description", model_loc))
        if req.quality is not None and req.quality.name not in model.quality_registry:
            diags.append(
                error("E008", f"requirement {rid!r} names unregistered quality {req.quality.name!r}", model_loc)
            )
        if rid not in referenced_ids:
            diags.append(warning("W001", f"requirement {rid!r} is not attached to any node", model_loc))

    _subtree_cycles(model, diags)
    return sort_diagnostics(diags)


def _expr_source(expr: ConditionExpr | None) -> str | None:
    return expr.source if expr is not None else None


def _requirements_equal(a: QualityRequirement, b: QualityRequirement) -> bool:
    return (
        a.id == b.id
        and a.description == b.description
        and a.quality == b.quality
        and _expr_source(a.success_if) == _expr_source(b.success_if)
        and _expr_source(a.failure_if) == _expr_source(b.failure_if)
    )


def _nodes_equal(a: TreeNode, b: TreeNode) -> bool:
    return (
        a.kind is b.kind
        and a.ref_id == b.ref_id
        and a.display_name == b.display_name
        and a.params == b.params
        and a.satisfices == b.satisfices
        and a.satisfies == b.satisfies
        and len(a.declarations) == len(b.declarations)
        and all(_requirements_equal(x, y) for x, y in zip(a.declarations, b.declarations))
        and len(a.children) == len(b.children)
        and all(_nodes_equal(x, y) for x, y in zip(a.children, b.children))
    )


def models_equal(a: BehaviorTreeModel, b: BehaviorTreeModel) -> bool:
    """Structural equality: tree ids and order, node structure, annotations,
    and both registries. Source locations and node paths are ignored."""
    if a.main_tree_id != b.main_tree_id:
        return False
    if list(a.trees) != list(b.trees):
        return False
    if set(a.requirement_registry) != set(b.requirement_registry):
        return False
    for rid, req in a.requirement_registry.items():
        if not _requirements_equal(req, b.requirement_registry[rid]):
            return False
    if a.quality_registry != b.quality_registry:
        return False
    return all(_nodes_equal(a.trees[tid], b.trees[tid]) for tid in a.trees)
