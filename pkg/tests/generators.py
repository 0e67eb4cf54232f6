"""Seeded random builders for property tests.

`random_engine_model` / `random_scenario` make small annotation-free trees
plus scripted scenarios for engine-vs-oracle equivalence runs.
`random_annotated_model` makes quality/requirement-rich models in the shape
the parser itself produces (inline declarations precede back references, and
a quality-linked requirement is declared at a node that satisfices that
quality), which is exactly the set of models the DSL can express; it drives
the parse/format round-trip property.
"""

import random

from btq.condexpr import parse_expr
from btq.engine import BehaviorStep, LeafBehavior, ScenarioSpec, TickStatus
from btq.model import (
    BehaviorTreeModel,
    NodeKind,
    Quality,
    QualityRequirement,
    TreeNode,
    assign_node_paths,
    validate,
)

_COMPOSITES = [
    NodeKind.SEQUENCE,
    NodeKind.FALLBACK,
    NodeKind.REACTIVE_SEQUENCE,
    NodeKind.REACTIVE_FALLBACK,
    NodeKind.PARALLEL,
]
_DECORATORS = [
    NodeKind.INVERTER,
    NodeKind.REPEAT,
    NodeKind.RETRY_UNTIL_SUCCESSFUL,
    NodeKind.FORCE_SUCCESS,
    NodeKind.FORCE_FAILURE,
    NodeKind.KEEP_RUNNING_UNTIL_FAILURE,
]
_ACTION_NAMES = ["Move", "Scan", "Grab", "Dock", "Ping", "Lift"]
_CONDITION_NAMES = ["IsCold", "HasPower", "NearDock", "DoorOpen"]

_COUNT_PARAM = {NodeKind.REPEAT: "num_cycles", NodeKind.RETRY_UNTIL_SUCCESSFUL: "num_attempts"}


def _random_tree(rng: random.Random, budget: int, depth: int, allow_ref: bool) -> tuple[TreeNode, int]:
    """Build a random subtree using at most `budget` nodes; returns (node, used)."""
    can_nest = budget >= 2 and depth < 3
    roll = rng.random()
    if not can_nest or roll < 0.35:
        if allow_ref and rng.random() < 0.2:
            return TreeNode(kind=NodeKind.SUBTREE_REF, ref_id="Sub"), 1
        if rng.random() < 0.3:
            return TreeNode(kind=NodeKind.CONDITION, ref_id=rng.choice(_CONDITION_NAMES)), 1
        return TreeNode(kind=NodeKind.ACTION, ref_id=rng.choice(_ACTION_NAMES)), 1
    if roll < 0.6:
        kind = rng.choice(_DECORATORS)
        child, used = _random_tree(rng, budget - 1, depth + 1, allow_ref)
        node = TreeNode(kind=kind, children=[child])
        if kind in _COUNT_PARAM:
            node.params[_COUNT_PARAM[kind]] = str(rng.randint(1, 3))
        return node, used + 1
    kind = rng.choice(_COMPOSITES)
    node = TreeNode(kind=kind)
    used = 1
    target = rng.randint(1, 3)
    while len(node.children) < target and used < budget:
        child, child_used = _random_tree(rng, budget - used, depth + 1, allow_ref)
        node.children.append(child)
        used += child_used
    if kind is NodeKind.PARALLEL:
        node.params["success_count"] = str(rng.randint(1, len(node.children)))
    return node, used


def random_engine_model(rng: random.Random, max_nodes: int = 7) -> BehaviorTreeModel:
    """Annotation-free random model, at most one SubTree reference."""
    trees: dict[str, TreeNode] = {}
    budget = rng.randint(1, max_nodes)
    with_sub = budget >= 3 and rng.random() < 0.3
    if with_sub:
        sub_root, sub_used = _random_tree(rng, 2, 2, allow_ref=False)
        budget -= sub_used
    root, _ = _random_tree(rng, max(budget, 1), 1, allow_ref=with_sub)
    trees["Main"] = root
    if with_sub:
        trees["Sub"] = sub_root
    model = BehaviorTreeModel(trees=trees, main_tree_id="Main")
    assign_node_paths(model)
    diags = validate(model)
    assert not diags, f"generator produced an invalid model: {diags}"
    return model


_STATUS_POOL = [
    TickStatus.SUCCESS,
    TickStatus.SUCCESS,
    TickStatus.FAILURE,
    TickStatus.FAILURE,
    TickStatus.RUNNING,
]
_EXPR_POOL = [
    "n1 > 2",
    "n2 <= 3",
    "b1",
    "!b2",
    "n1 == n2 || b1",
    "b1 && n1 < 4",
    "n1 >= 1 && n2 >= 0",
]


def random_scenario(rng: random.Random, model: BehaviorTreeModel, max_ticks: int = 20) -> ScenarioSpec:
    init = {
        "n1": float(rng.randint(0, 5)),
        "n2": float(rng.randint(0, 5)),
        "b1": rng.random() < 0.5,
        "b2": rng.random() < 0.5,
    }
    behaviors: dict[str, LeafBehavior] = {}
    for path in model.leaf_paths():
        node = model.node_by_path(path)
        if node.kind is NodeKind.CONDITION and rng.random() < 0.4:
            behaviors[path] = LeafBehavior(expr=parse_expr(rng.choice(_EXPR_POOL)))
            continue
        if rng.random() < 0.05:
            continue  # exercise the lenient immediate-success default
        steps = []
        for _ in range(rng.randint(1, 3)):
            writes = {}
            if rng.random() < 0.3:
                key = rng.choice(["n1", "n2", "b1", "b2"])
                writes[key] = float(rng.randint(0, 5)) if key.startswith("n") else rng.random() < 0.5
            steps.append(BehaviorStep(rng.choice(_STATUS_POOL), rng.randint(1, 3), writes))
        behaviors[path] = LeafBehavior(steps=tuple(steps))
    return ScenarioSpec(
        ticks_per_second=1.0,
        blackboard_init=init,
        leaf_behaviors=behaviors,
        max_ticks=max_ticks,
        strict=False,
    )


_QUALITY_POOL = [
    Quality("performance", "time-behavior"),
    Quality("performance", "resource-utilization"),
    Quality("security", "confidentiality"),
    Quality("reliability", None),
    Quality("usability", None),
]
_DESCRIPTION_POOL = [
    "finish the move quickly",
    'respect the "soft" budget',
    "keep data on the robot",
    "line one\nline two",
    "tabbed\tvalue with \\ backslash",
]
_CONSTRAINT_POOL = ["elapsed_sec > 30", "battery_pct < 3", "x == 1 && y != 2", "status == \"SUCCESS\""]


class _AnnotationState:
    def __init__(self):
        self.counter = 0
        self.declared: list[str] = []


def _annotate(rng: random.Random, node: TreeNode, state: _AnnotationState) -> None:
    if rng.random() < 0.4:
        node.display_name = rng.choice(["Main", "Branch", "Task A", "task_b"])
    if rng.random() < 0.25 and node.kind not in _COUNT_PARAM and node.kind is not NodeKind.PARALLEL:
        node.params[rng.choice(["speed", "target"])] = rng.choice(["fast", "dock #2", "7"])
    if rng.random() < 0.35:
        for quality in rng.sample(_QUALITY_POOL, rng.randint(1, 2)):
            if any(q.name == quality.name for q in node.satisfices):
                continue
            node.satisfices.append(quality)
    # Inline declarations (nested under a satisficed quality or bare) come first,
    # then back references, mirroring how the DSL orders annotation clauses.
    nested_ids: list[str] = []
    clause: list[tuple[str, QualityRequirement | None]] = []
    if node.satisfices and rng.random() < 0.4:
        state.counter += 1
        rid = f"r{state.counter}"
        req = QualityRequirement(
            id=rid,
            description=rng.choice(_DESCRIPTION_POOL),
            quality=rng.choice(node.satisfices),
            failure_if=parse_expr(rng.choice(_CONSTRAINT_POOL)) if rng.random() < 0.5 else None,
        )
        node.declarations.append(req)
        nested_ids.append(rid)
        state.declared.append(rid)
    if rng.random() < 0.3:
        state.counter += 1
        rid = f"r{state.counter}"
        req = QualityRequirement(
            id=rid,
            description=rng.choice(_DESCRIPTION_POOL),
            success_if=parse_expr(rng.choice(_CONSTRAINT_POOL)) if rng.random() < 0.4 else None,
        )
        node.declarations.append(req)
        clause.append((rid, req))
        state.declared.append(rid)
    if state.declared and rng.random() < 0.3:
        rid = rng.choice(state.declared)
        if rid not in nested_ids and all(c[0] != rid for c in clause):
            clause.append((rid, None))
    node.satisfies = nested_ids + [rid for rid, _ in clause]


def random_annotated_model(rng: random.Random, max_nodes: int = 15) -> BehaviorTreeModel:
    model = random_engine_model(rng, max_nodes=max_nodes)
    state = _AnnotationState()
    for node in model.iter_nodes():
        _annotate(rng, node, state)
    requirements: dict[str, QualityRequirement] = {}
    qualities: dict[str, Quality] = {}
    for node in model.iter_nodes():
        for quality in node.satisfices:
            qualities.setdefault(quality.name, quality)
        for decl in node.declarations:
            requirements.setdefault(decl.id, decl)
    model.requirement_registry = requirements
    model.quality_registry = qualities
    diags = [d for d in validate(model) if d.code != "W001"]
    assert not diags, f"generator produced an invalid annotated model: {diags}"
    return model
