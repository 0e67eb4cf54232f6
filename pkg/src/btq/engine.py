"""Deterministic tick-driven interpreter for behavior-tree models.

Leaf behavior comes from a scripted scenario instead of real hardware: every
action/condition leaf is bound either to an ordered tape of steps (a status
to return, how many ticks it repeats, and blackboard writes applied when the
step is first consumed) or, for condition leaves, to an expression evaluated
against the blackboard each tick. The last step of a tape repeats forever.
A tape belongs to the leaf's model path and is never rewound, not even when
the leaf is halted or restarted, so a scenario reads as one linear script of
what the simulated world does over time.

Tick semantics:

* Sequence / Fallback keep memory: they resume at the running child and do
  not re-tick children that already returned a status this pass.
* ReactiveSequence / ReactiveFallback restart from their first child every
  tick; when an earlier child's outcome diverts flow away from a later child
  that is still running, that child's subtree is halted.
* Parallel ticks all not-yet-finished children each tick, succeeds once
  `success_count` children have succeeded, and fails as soon as success has
  become impossible (failures exceed children minus success_count).
* Repeat re-runs its child up to `num_cycles` successes (one cycle per tick,
  so no leaf is ever ticked twice within one root tick) and fails on the
  first child failure; RetryUntilSuccessful mirrors it for failures.
* Inverter swaps terminal statuses; ForceSuccess/ForceFailure coerce them;
  KeepRunningUntilFailure returns running while its child succeeds and
  reports the child's failure as its own failure, ending the loop.

Whenever any node reaches a terminal status the monitor hook runs; it may
override the outcome when a hard-constraint requirement fires, and the
overridden status is what the parent sees. One simulated second equals
`1 / ticks_per_second` ticks, and a node's elapsed time spans its start tick
through its finish tick inclusive, so a leaf that starts and finishes on the
same tick took one tick of simulated time.
"""

import json
from dataclasses import dataclass, field
from enum import Enum

from btq import condexpr
from btq.condexpr import ConditionExpr, EvalError, ExprSyntaxError, Value
from btq.diagnostics import (
    Diagnostic,
    DiagnosticError,
    SourceLocation,
    error,
)
from btq.model import BehaviorTreeModel, NodeKind, TreeNode, assign_node_paths


class TickStatus(Enum):
    SUCCESS = "SUCCESS"
    FAILURE = "FAILURE"
    RUNNING = "RUNNING"


_TERMINAL = (TickStatus.SUCCESS, TickStatus.FAILURE)


@dataclass(frozen=True)
class BlackboardWrite:
    tick: int
    key: str
    old: Value | None
    new: Value


class Blackboard:
    """Mutable key-value store with an append-only write log."""

    def __init__(self, initial: dict[str, Value] | None = None):
        self.values: dict[str, Value] = {}
        self.log: list[BlackboardWrite] = []
        for key, value in (initial or {}).items():
            self.set(key, value, tick=0)

    def set(self, key: str, value: Value, tick: int) -> None:
        self.log.append(BlackboardWrite(tick, key, self.values.get(key), value))
        self.values[key] = value

    def snapshot(self) -> dict[str, Value]:
        return dict(self.values)


@dataclass(frozen=True)
class BehaviorStep:
    status: TickStatus
    repeat: int = 1
    writes: dict[str, Value] = field(default_factory=dict)


@dataclass(frozen=True)
class LeafBehavior:
    """Either a step tape or a condition expression, never both."""

    steps: tuple[BehaviorStep, ...] | None = None
    expr: ConditionExpr | None = None


@dataclass
class ScenarioSpec:
    ticks_per_second: float = 1.0
    blackboard_init: dict[str, Value] = field(default_factory=dict)
    leaf_behaviors: dict[str, LeafBehavior] = field(default_factory=dict)
    max_ticks: int = 1000
    strict: bool = True


def _normalize_value(raw: object) -> Value | None:
    if isinstance(raw, bool):
        return raw
    if isinstance(raw, (int, float)):
        return float(raw)
    if isinstance(raw, str):
        return raw
    return None


def load_scenario(
    text: str,
    model: BehaviorTreeModel,
    path: str = "<scenario>",
    strict_override: bool | None = None,
) -> ScenarioSpec:
    """Parse and validate a `.scn.json` scenario document against the model.

    Raises DiagnosticError with E401 (unknown/non-leaf node path), E402
    (malformed document), or E403 (strict mode and a leaf has no behavior).
    """
    diags: list[Diagnostic] = []
    loc = SourceLocation(path)

    def bad(message: str, code: str = "E402") -> None:
        diags.append(error(code, message, loc))

    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise DiagnosticError(
            [error("E402", f"invalid JSON: {exc.msg}", SourceLocation(path, exc.lineno, exc.colno))]
        ) from exc
    if not isinstance(data, dict):
        raise DiagnosticError([error("E402", "scenario must be a JSON object", loc)])

    spec = ScenarioSpec()
    tps = data.get("ticks_per_second", 1.0)
    if isinstance(tps, bool) or not isinstance(tps, (int, float)) or tps <= 0:
        bad(f"ticks_per_second must be a positive number, got {tps!r}")
    else:
        spec.ticks_per_second = float(tps)
    max_ticks = data.get("max_ticks", 1000)
    if isinstance(max_ticks, bool) or not isinstance(max_ticks, int) or max_ticks < 1:
        bad(f"max_ticks must be a positive integer, got {max_ticks!r}")
    else:
        spec.max_ticks = max_ticks
    strict = data.get("strict", True)
    if not isinstance(strict, bool):
        bad(f"strict must be a boolean, got {strict!r}")
    else:
        spec.strict = strict
    if strict_override is not None:
        spec.strict = strict_override

    init = data.get("blackboard_init", {})
    if not isinstance(init, dict):
        bad("blackboard_init must be an object")
    else:
        for key, raw in init.items():
            value = _normalize_value(raw)
            if value is None:
                bad(f"blackboard_init[{key!r}] must be a number, boolean, or string")
            else:
                spec.blackboard_init[key] = value

    leaf_paths = set(model.leaf_paths())
    nodes = data.get("nodes", {})
    if not isinstance(nodes, dict):
        bad("nodes must be an object keyed by node path")
        nodes = {}
    for node_path, raw_behavior in nodes.items():
        if node_path not in leaf_paths:
            hint = "is not an action or condition leaf" if node_path in getattr(model, "_path_index", {}) else "does not exist in the model"
            bad(f"node path {node_path!r} {hint}", code="E401")
            continue
        behavior = _load_behavior(node_path, raw_behavior, model, bad)
        if behavior is not None:
            spec.leaf_behaviors[node_path] = behavior

    if spec.strict:
        for leaf in sorted(leaf_paths - set(spec.leaf_behaviors)):
            bad(f"leaf {leaf!r} has no scripted behavior", code="E403")

    if diags:
        raise DiagnosticError(diags)
    return spec


def _load_behavior(node_path, raw, model, bad) -> LeafBehavior | None:
    if not isinstance(raw, dict) or len(raw.keys() & {"steps", "expr"}) != 1:
        bad(f"behavior for {node_path!r} must have exactly one of 'steps' or 'expr'")
        return None
    if "expr" in raw:
        if model.node_by_path(node_path).kind is not NodeKind.CONDITION:
            bad(f"'expr' behavior is only valid for Condition leaves, not {node_path!r}")
            return None
        if not isinstance(raw["expr"], str):
            bad(f"expr for {node_path!r} must be a string")
            return None
        try:
            return LeafBehavior(expr=condexpr.parse_expr(raw["expr"]))
        except ExprSyntaxError as exc:
            bad(f"expr for {node_path!r}: {exc.diagnostics[0].message}")
            return None
    steps_raw = raw["steps"]
    if not isinstance(steps_raw, list) or not steps_raw:
        bad(f"steps for {node_path!r} must be a non-empty list")
        return None
    steps: list[BehaviorStep] = []
    for i, entry in enumerate(steps_raw):
        if not isinstance(entry, dict):
            bad(f"steps[{i}] for {node_path!r} must be an object")
            return None
        status_text = entry.get("status")
        if status_text not in ("SUCCESS", "FAILURE", "RUNNING"):
            bad(f"steps[{i}] for {node_path!r} has invalid status {status_text!r}")
            return None
        repeat = entry.get("repeat", 1)
        if isinstance(repeat, bool) or not isinstance(repeat, int) or repeat < 1:
            bad(f"steps[{i}] for {node_path!r} has invalid repeat {repeat!r}")
            return None
        writes: dict[str, Value] = {}
        raw_set = entry.get("set", {})
        if not isinstance(raw_set, dict):
            bad(f"steps[{i}] for {node_path!r} has a non-object 'set'")
            return None
        ok = True
        for key, raw_value in raw_set.items():
            value = _normalize_value(raw_value)
            if value is None:
                bad(f"steps[{i}] set[{key!r}] for {node_path!r} must be a number, boolean, or string")
                ok = False
            else:
                writes[key] = value
        if not ok:
            return None
        steps.append(BehaviorStep(TickStatus(status_text), repeat, writes))
    return LeafBehavior(steps=tuple(steps))


@dataclass(frozen=True)
class TraceEvent:
    tick: int
    node_path: str
    kind: str  # started | ticked | halted | finished
    status: TickStatus | None = None

    def to_json(self) -> str:
        record: dict[str, object] = {"tick": self.tick, "node": self.node_path, "event": self.kind}
        if self.status is not None:
            record["status"] = self.status.value
        return json.dumps(record, separators=(", ", ": "))


@dataclass
class ExecutionTrace:
    events: list[TraceEvent]
    final_status: TickStatus | None
    ticks: int
    max_ticks_exceeded: bool = False

    def to_jsonl(self) -> str:
        return "\n".join(event.to_json() for event in self.events) + "\n"

    def ticked_statuses(self, node_path: str) -> list[TickStatus]:
        return [e.status for e in self.events if e.node_path == node_path and e.kind == "ticked"]

    def events_at(self, tick: int) -> list[TraceEvent]:
        return [e for e in self.events if e.tick == tick]

    def count(self, node_path: str, kind: str) -> int:
        return sum(1 for e in self.events if e.node_path == node_path and e.kind == kind)


class EngineError(DiagnosticError):
    """Execution-time failure carrying a single diagnostic (E3xx/E4xx)."""

    def __init__(self, code: str, message: str, node_path: str | None = None):
        self.code = code
        self.node_path = node_path
        if node_path:
            message = f"{message} (at {node_path})"
        super().__init__([error(code, message)])


class _RuntimeNode:
    """Base runtime instance: owns activation state and the event protocol.

    A node emits `started` when first ticked, `ticked` every tick with the
    status its parent sees, and `finished` (after monitor overrides) or
    `halted` to close the activation. After finishing it returns to idle so
    a later activation starts fresh; leaf tapes persist across activations.
    """

    def __init__(self, node: TreeNode, engine: "Engine"):
        self.node = node
        self.path = node.node_path
        self.engine = engine
        self.active = False
        self.started_tick = 0
        self.children: list[_RuntimeNode] = []

    def tick(self) -> TickStatus:
        engine = self.engine
        if not self.active:
            self.active = True
            self.started_tick = engine.tick_index
            engine._emit(self.path, "started")
        status = self._tick_impl()
        if status is TickStatus.RUNNING:
            engine._emit(self.path, "ticked", status)
            return status
        final = engine.monitor.on_complete(
            self.path, status, self.started_tick, engine.tick_index, engine.blackboard
        )[0]
        engine._emit(self.path, "ticked", final)
        engine._emit(self.path, "finished", final)
        self.active = False
        self._reset()
        return final

    def halt(self) -> None:
        if not self.active:
            return
        self.engine._emit(self.path, "halted")
        self.active = False
        self._reset()
        for child in self.children:
            child.halt()

    def _tick_impl(self) -> TickStatus:
        raise NotImplementedError

    def _reset(self) -> None:
        pass


class _Sequence(_RuntimeNode):
    def __init__(self, node, engine):
        super().__init__(node, engine)
        self.index = 0

    def _tick_impl(self) -> TickStatus:
        while self.index < len(self.children):
            status = self.children[self.index].tick()
            if status is TickStatus.RUNNING:
                return status
            if status is TickStatus.FAILURE:
                return status
            self.index += 1
        return TickStatus.SUCCESS

    def _reset(self) -> None:
        self.index = 0


class _Fallback(_RuntimeNode):
    def __init__(self, node, engine):
        super().__init__(node, engine)
        self.index = 0

    def _tick_impl(self) -> TickStatus:
        while self.index < len(self.children):
            status = self.children[self.index].tick()
            if status is TickStatus.RUNNING:
                return status
            if status is TickStatus.SUCCESS:
                return status
            self.index += 1
        return TickStatus.FAILURE

    def _reset(self) -> None:
        self.index = 0


class _ReactiveSequence(_RuntimeNode):
    def _tick_impl(self) -> TickStatus:
        for i, child in enumerate(self.children):
            status = child.tick()
            if status is not TickStatus.SUCCESS:
                for later in self.children[i + 1 :]:
                    later.halt()
                return status
        return TickStatus.SUCCESS


class _ReactiveFallback(_RuntimeNode):
    def _tick_impl(self) -> TickStatus:
        for i, child in enumerate(self.children):
            status = child.tick()
            if status is not TickStatus.FAILURE:
                for later in self.children[i + 1 :]:
                    later.halt()
                return status
        return TickStatus.FAILURE


class _Parallel(_RuntimeNode):
    def __init__(self, node, engine):
        super().__init__(node, engine)
        self.completed: dict[int, TickStatus] = {}

    def _tick_impl(self) -> TickStatus:
        for i, child in enumerate(self.children):
            if i in self.completed:
                continue
            status = child.tick()
            if status is not TickStatus.RUNNING:
                self.completed[i] = status
        successes = sum(1 for s in self.completed.values() if s is TickStatus.SUCCESS)
        failures = len(self.completed) - successes
        needed = int(self.node.params["success_count"])
        if successes >= needed:
            self._halt_unfinished()
            return TickStatus.SUCCESS
        if failures > len(self.children) - needed:
            self._halt_unfinished()
            return TickStatus.FAILURE
        return TickStatus.RUNNING

    def _halt_unfinished(self) -> None:
        for i, child in enumerate(self.children):
            if i not in self.completed:
                child.halt()

    def _reset(self) -> None:
        self.completed = {}


class _Inverter(_RuntimeNode):
    def _tick_impl(self) -> TickStatus:
        status = self.children[0].tick()
        if status is TickStatus.SUCCESS:
            return TickStatus.FAILURE
        if status is TickStatus.FAILURE:
            return TickStatus.SUCCESS
        return status


class _Repeat(_RuntimeNode):
    def __init__(self, node, engine):
        super().__init__(node, engine)
        self.cycles = 0

    def _tick_impl(self) -> TickStatus:
        status = self.children[0].tick()
        if status is TickStatus.FAILURE:
            return TickStatus.FAILURE
        if status is TickStatus.SUCCESS:
            self.cycles += 1
            if self.cycles >= int(self.node.params["num_cycles"]):
                return TickStatus.SUCCESS
        return TickStatus.RUNNING

    def _reset(self) -> None:
        self.cycles = 0


class _Retry(_RuntimeNode):
    def __init__(self, node, engine):
        super().__init__(node, engine)
        self.attempts = 0

    def _tick_impl(self) -> TickStatus:
        status = self.children[0].tick()
        if status is TickStatus.SUCCESS:
            return TickStatus.SUCCESS
        if status is TickStatus.FAILURE:
            self.attempts += 1
            if self.attempts >= int(self.node.params["num_attempts"]):
                return TickStatus.FAILURE
        return TickStatus.RUNNING

    def _reset(self) -> None:
        self.attempts = 0


class _ForceSuccess(_RuntimeNode):
    def _tick_impl(self) -> TickStatus:
        status = self.children[0].tick()
        return TickStatus.SUCCESS if status in _TERMINAL else status


class _ForceFailure(_RuntimeNode):
    def _tick_impl(self) -> TickStatus:
        status = self.children[0].tick()
        return TickStatus.FAILURE if status in _TERMINAL else status


class _KeepRunningUntilFailure(_RuntimeNode):
    def _tick_impl(self) -> TickStatus:
        status = self.children[0].tick()
        if status is TickStatus.FAILURE:
            return TickStatus.FAILURE
        return TickStatus.RUNNING


class _ScriptedLeaf(_RuntimeNode):
    def __init__(self, node, engine, steps: tuple[BehaviorStep, ...]):
        super().__init__(node, engine)
        self.steps = steps
        self.pos = 0
        self.used = 0

    def _tick_impl(self) -> TickStatus:
        step = self.steps[self.pos]
        if self.used == 0 and step.writes:
            for key, value in step.writes.items():
                self.engine.blackboard.set(key, value, self.engine.tick_index)
        self.used += 1
        if self.used >= step.repeat and self.pos < len(self.steps) - 1:
            self.pos += 1
            self.used = 0
        return step.status


class _ExprCondition(_RuntimeNode):
    def __init__(self, node, engine, expr: ConditionExpr):
        super().__init__(node, engine)
        self.expr = expr

    def _tick_impl(self) -> TickStatus:
        try:
            result = condexpr.eval_expr(self.expr, self.engine.blackboard.values)
        except EvalError as exc:
            raise EngineError(
                exc.code, f"condition {self.expr.source!r}: {exc.diagnostic.message}", self.path
            ) from exc
        return TickStatus.SUCCESS if result else TickStatus.FAILURE


class _SubTreeInstance(_RuntimeNode):
    def __init__(self, node, engine, inner: _RuntimeNode):
        super().__init__(node, engine)
        self.children = [inner]

    def _tick_impl(self) -> TickStatus:
        return self.children[0].tick()


_DEFAULT_STEPS = (BehaviorStep(TickStatus.SUCCESS),)


class Engine:
    """Single-run interpreter of one model against one scenario.

    An engine instance is single-threaded; run separate instances for
    concurrent simulations. `reset()` rewinds everything except the monitor's
    requirement history, so repeated runs accumulate per-requirement records.
    """

    def __init__(self, model: BehaviorTreeModel, scenario: ScenarioSpec, monitor=None):
        if not model._path_index:
            assign_node_paths(model)
        self.model = model
        self.scenario = scenario
        if monitor is None:
            from btq.monitor import Monitor

            monitor = Monitor(model, scenario.ticks_per_second)
        self.monitor = monitor
        self.reset()

    def reset(self) -> None:
        """Start a fresh run: blackboard, tapes, trace. Monitor history stays."""
        self.blackboard = Blackboard(self.scenario.blackboard_init)
        self.events: list[TraceEvent] = []
        self.tick_index = 0
        self.finished = False
        self.final_status: TickStatus | None = None
        root_node = self.model.trees[self.model.main_tree_id]
        self._root = self._build(root_node)

    def _build(self, node: TreeNode) -> _RuntimeNode:
        kind = node.kind
        if kind in (NodeKind.ACTION, NodeKind.CONDITION):
            behavior = self.scenario.leaf_behaviors.get(node.node_path)
            if behavior is None:
                return _ScriptedLeaf(node, self, _DEFAULT_STEPS)
            if behavior.expr is not None:
                return _ExprCondition(node, self, behavior.expr)
            return _ScriptedLeaf(node, self, behavior.steps)
        if kind is NodeKind.SUBTREE_REF:
            inner = self._build(self.model.trees[node.ref_id])
            return _SubTreeInstance(node, self, inner)
        classes = {
            NodeKind.SEQUENCE: _Sequence,
            NodeKind.FALLBACK: _Fallback,
            NodeKind.REACTIVE_SEQUENCE: _ReactiveSequence,
            NodeKind.REACTIVE_FALLBACK: _ReactiveFallback,
            NodeKind.PARALLEL: _Parallel,
            NodeKind.INVERTER: _Inverter,
            NodeKind.REPEAT: _Repeat,
            NodeKind.RETRY_UNTIL_SUCCESSFUL: _Retry,
            NodeKind.FORCE_SUCCESS: _ForceSuccess,
            NodeKind.FORCE_FAILURE: _ForceFailure,
            NodeKind.KEEP_RUNNING_UNTIL_FAILURE: _KeepRunningUntilFailure,
        }
        runtime = classes[kind](node, self)
        runtime.children = [self._build(child) for child in node.children]
        return runtime

    def _emit(self, path: str, kind: str, status: TickStatus | None = None) -> None:
        self.events.append(TraceEvent(self.tick_index, path, kind, status))

    def tick_once(self) -> TickStatus:
        """Propagate one root tick. Raises EngineError E404 once finished."""
        if self.finished:
            raise EngineError("E404", "root already returned a terminal status; reset() first")
        self.tick_index += 1
        status = self._root.tick()
        if status in _TERMINAL:
            self.finished = True
            self.final_status = status
        return status

    def run(self) -> ExecutionTrace:
        """Tick until the root finishes or max_ticks is exhausted."""
        while not self.finished and self.tick_index < self.scenario.max_ticks:
            self.tick_once()
        return ExecutionTrace(
            events=self.events,
            final_status=self.final_status,
            ticks=self.tick_index,
            max_ticks_exceeded=not self.finished,
        )


def run(model: BehaviorTreeModel, scenario: ScenarioSpec) -> ExecutionTrace:
    """Convenience one-shot execution; build an Engine directly to inspect
    the monitor's records afterwards."""
    return Engine(model, scenario).run()
