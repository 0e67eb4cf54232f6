"""Independent reference interpreter used as an oracle for engine tests.

Deliberately written as one recursive function over the model with all
volatile state in dictionaries keyed by instance path, so it shares no code
or structure with `btq.engine`. It implements the documented semantics:

* sequence/fallback with memory resume at the running child;
* reactive variants re-evaluate from the first child and wipe the state of
  any later subtree the flow diverted away from;
* parallel ticks unfinished children each tick, succeeding at
  `success_count` successes and failing once success is impossible;
* repeat/retry run one cycle per tick; inverter/force/keep-running decorate
  terminal statuses;
* scripted leaves advance one tape step per tick (per runtime instance) and
  apply a step's writes when it is first consumed; tapes survive halts;
* expression conditions evaluate against the blackboard each tick.
"""

from btq.condexpr import eval_expr
from btq.engine import ScenarioSpec, TickStatus
from btq.model import BehaviorTreeModel, NodeKind, TreeNode

S = TickStatus.SUCCESS
F = TickStatus.FAILURE
R = TickStatus.RUNNING


class ReferenceInterpreter:
    def __init__(self, model: BehaviorTreeModel, scenario: ScenarioSpec):
        self.model = model
        self.scenario = scenario
        self.board = dict(scenario.blackboard_init)
        self.state: dict[tuple, dict] = {}
        self.tapes: dict[tuple, list[int]] = {}

    def run_statuses(self, limit: int | None = None) -> list[TickStatus]:
        """Per-tick root statuses until the root finishes or `limit` ticks."""
        limit = self.scenario.max_ticks if limit is None else limit
        statuses: list[TickStatus] = []
        for _ in range(limit):
            status = self.tick(self.model.trees[self.model.main_tree_id], ())
            statuses.append(status)
            if status is not R:
                break
        return statuses

    def tick(self, node: TreeNode, inst: tuple) -> TickStatus:
        key = (*inst, node.node_path)
        kind = node.kind

        if kind in (NodeKind.ACTION, NodeKind.CONDITION):
            behavior = self.scenario.leaf_behaviors.get(node.node_path)
            if behavior is None:
                return S
            if behavior.expr is not None:
                return S if eval_expr(behavior.expr, self.board) else F
            tape = self.tapes.setdefault(key, [0, 0])
            step = behavior.steps[tape[0]]
            if tape[1] == 0 and step.writes:
                self.board.update(step.writes)
            tape[1] += 1
            if tape[1] >= step.repeat and tape[0] < len(behavior.steps) - 1:
                tape[0] += 1
                tape[1] = 0
            return step.status

        if kind is NodeKind.SUBTREE_REF:
            return self.tick(self.model.trees[node.ref_id], key)

        if kind in (NodeKind.SEQUENCE, NodeKind.FALLBACK):
            stop = F if kind is NodeKind.SEQUENCE else S
            exhausted = S if kind is NodeKind.SEQUENCE else F
            st = self.state.setdefault(key, {"idx": 0})
            while st["idx"] < len(node.children):
                child_status = self.tick(node.children[st["idx"]], inst)
                if child_status is R:
                    return R
                if child_status is stop:
                    self.state.pop(key, None)
                    return stop
                st["idx"] += 1
            self.state.pop(key, None)
            return exhausted

        if kind in (NodeKind.REACTIVE_SEQUENCE, NodeKind.REACTIVE_FALLBACK):
            keep_going = S if kind is NodeKind.REACTIVE_SEQUENCE else F
            for i, child in enumerate(node.children):
                child_status = self.tick(child, inst)
                if child_status is not keep_going:
                    for later in node.children[i + 1 :]:
                        self.clear(later, inst)
                    return child_status
            return keep_going

        if kind is NodeKind.PARALLEL:
            st = self.state.setdefault(key, {"done": {}})
            for i, child in enumerate(node.children):
                if i in st["done"]:
                    continue
                child_status = self.tick(child, inst)
                if child_status is not R:
                    st["done"][i] = child_status
            wins = sum(1 for v in st["done"].values() if v is S)
            losses = len(st["done"]) - wins
            needed = int(node.params["success_count"])
            if wins >= needed or losses > len(node.children) - needed:
                for i, child in enumerate(node.children):
                    if i not in st["done"]:
                        self.clear(child, inst)
                self.state.pop(key, None)
                return S if wins >= needed else F

            return R

        child_status = self.tick(node.children[0], inst)
        if kind is NodeKind.INVERTER:
            return F if child_status is S else S if child_status is F else R
        if kind is NodeKind.FORCE_SUCCESS:
            return S if child_status is not R else R
        if kind is NodeKind.FORCE_FAILURE:
            return F if child_status is not R else R
        if kind is NodeKind.KEEP_RUNNING_UNTIL_FAILURE:
            return F if child_status is F else R
        if kind is NodeKind.REPEAT:
            st = self.state.setdefault(key, {"n": 0})
            if child_status is F:
                self.state.pop(key, None)
                return F
            if child_status is S:
                st["n"] += 1
                if st["n"] >= int(node.params["num_cycles"]):
                    self.state.pop(key, None)
                    return S
            return R
        if kind is NodeKind.RETRY_UNTIL_SUCCESSFUL:
            st = self.state.setdefault(key, {"n": 0})
            if child_status is S:
                self.state.pop(key, None)
                return S
            if child_status is F:
                st["n"] += 1
                if st["n"] >= int(node.params["num_attempts"]):
                    self.state.pop(key, None)
                    return F
            return R
        raise AssertionError(f"unhandled kind {kind}")

    def clear(self, node: TreeNode, inst: tuple) -> None:
        """Forget the volatile state of a halted subtree; tapes persist."""
        key = (*inst, node.node_path)
        self.state.pop(key, None)
        if node.kind is NodeKind.SUBTREE_REF and node.ref_id in self.model.trees:
            self.clear(self.model.trees[node.ref_id], key)
        for child in node.children:
            self.clear(child, inst)
