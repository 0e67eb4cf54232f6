"""Run-time monitoring of quality requirements.

Whenever a node with attached requirements reaches a terminal status, the
monitor evaluates each requirement's hard-constraint conditions against the
blackboard plus the builtins `elapsed_ticks`, `elapsed_sec`, and `status`
(the raw outcome, "SUCCESS" or "FAILURE"):

* failureIf is checked first; if it holds, the verdict is Violated and the
  node's outcome is forced to failure.
* otherwise successIf, if present and true, gives Satisfied and forces
  success.
* a false failureIf is benign (Satisfied); a false successIf with no
  failureIf means the requirement was not met (Violated) but does not change
  the node's outcome, since only a fired condition may override.
* requirements without conditions are recorded as Unmonitored, keeping soft
  early-design requirements visible in reports.
* a condition that cannot be evaluated (unknown key, type mismatch) marks
  the record Violated with the diagnostic attached; an uncheckable
  requirement must not silently pass.

When several requirements sit on one node, failure overrides win over
success overrides. Records for the same requirement id accumulate across
nodes and runs into a single report entry, which is how cross-cutting
requirements are followed over time.
"""

import json
from dataclasses import dataclass, field
from enum import Enum

from btq import condexpr
from btq.condexpr import EvalError, Value
from btq.diagnostics import Diagnostic
from btq.engine import Blackboard, TickStatus
from btq.model import BehaviorTreeModel, Quality, QualityRequirement


class Verdict(Enum):
    SATISFIED = "satisfied"
    VIOLATED = "violated"
    UNMONITORED = "unmonitored"


@dataclass(frozen=True)
class RequirementRecord:
    requirement_id: str
    node_path: str
    execution_index: int
    started_tick: int
    finished_tick: int
    elapsed_sec: float
    raw_status: TickStatus
    verdict: Verdict
    scope_snapshot: dict[str, Value]
    diagnostic: Diagnostic | None = None


class Monitor:
    """Owns the requirement history of the engine instance(s) feeding it."""

    def __init__(self, model: BehaviorTreeModel, ticks_per_second: float = 1.0):
        self.model = model
        self.ticks_per_second = ticks_per_second
        self.records: list[RequirementRecord] = []
        self._execution_counts: dict[tuple[str, str], int] = {}

    def on_complete(
        self,
        node_path: str,
        raw_status: TickStatus,
        started_tick: int,
        finished_tick: int,
        blackboard: Blackboard,
    ) -> tuple[TickStatus, list[RequirementRecord]]:
        """Evaluate every requirement attached at `node_path`.

        Returns the possibly overridden status plus the records created for
        this completion. Nodes without requirements pass through untouched.
        """
        node = self.model.node_by_path(node_path)
        requirement_ids = node.satisfies
        if not requirement_ids:
            return raw_status, []
        elapsed_ticks = finished_tick - started_tick + 1
        elapsed_sec = elapsed_ticks / self.ticks_per_second
        scope = blackboard.snapshot()
        scope["elapsed_ticks"] = float(elapsed_ticks)
        scope["elapsed_sec"] = elapsed_sec
        scope["status"] = raw_status.value
        new_records: list[RequirementRecord] = []
        force_failure = False
        force_success = False
        for rid in requirement_ids:
            req = self.model.requirement_registry.get(rid)
            if req is None:
                continue
            verdict, override, diagnostic = _evaluate(req, scope)
            force_failure = force_failure or override is TickStatus.FAILURE
            force_success = force_success or override is TickStatus.SUCCESS
            key = (rid, node_path)
            self._execution_counts[key] = self._execution_counts.get(key, 0) + 1
            record = RequirementRecord(
                requirement_id=rid,
                node_path=node_path,
                execution_index=self._execution_counts[key],
                started_tick=started_tick,
                finished_tick=finished_tick,
                elapsed_sec=elapsed_sec,
                raw_status=raw_status,
                verdict=verdict,
                scope_snapshot=scope,
                diagnostic=diagnostic,
            )
            new_records.append(record)
            self.records.append(record)
        if force_failure:
            return TickStatus.FAILURE, new_records
        if force_success:
            return TickStatus.SUCCESS, new_records
        return raw_status, new_records


def _evaluate(
    req: QualityRequirement, scope: dict[str, Value]
) -> tuple[Verdict, TickStatus | None, Diagnostic | None]:
    if req.failure_if is None and req.success_if is None:
        return Verdict.UNMONITORED, None, None
    try:
        if req.failure_if is not None and condexpr.eval_expr(req.failure_if, scope):
            return Verdict.VIOLATED, TickStatus.FAILURE, None
        if req.success_if is not None:
            if condexpr.eval_expr(req.success_if, scope):
                return Verdict.SATISFIED, TickStatus.SUCCESS, None
            if req.failure_if is not None:
                return Verdict.SATISFIED, None, None
            return Verdict.VIOLATED, None, None
        return Verdict.SATISFIED, None, None
    except EvalError as exc:
        return Verdict.VIOLATED, None, exc.diagnostic


@dataclass
class RequirementSummary:
    requirement_id: str
    quality: Quality | None
    description: str
    records: list[RequirementRecord]
    executions: int
    satisfied: int
    violated: int
    unmonitored: int
    min_elapsed: float | None
    max_elapsed: float | None
    mean_elapsed: float | None


@dataclass
class QualityReport:
    """Aggregated history: one entry per requirement id, plus the grouping of
    requirement ids under their quality names."""

    requirements: list[RequirementSummary]
    quality_groups: dict[str, list[str]] = field(default_factory=dict)

    def summary(self, requirement_id: str) -> RequirementSummary:
        for entry in self.requirements:
            if entry.requirement_id == requirement_id:
                return entry
        raise KeyError(requirement_id)

    @property
    def total_violations(self) -> int:
        return sum(entry.violated for entry in self.requirements)


def build_report(records: list[RequirementRecord], model: BehaviorTreeModel) -> QualityReport:
    """Aggregate records (possibly spanning several runs) into a report.

    Every requirement in the model appears even with zero records. Entries
    are ordered by requirement id; within one entry records keep
    (execution_index, arrival) order.
    """
    by_id: dict[str, list[RequirementRecord]] = {rid: [] for rid in model.requirement_registry}
    for record in records:
        by_id.setdefault(record.requirement_id, []).append(record)
    entries: list[RequirementSummary] = []
    for rid in sorted(by_id):
        recs = sorted(by_id[rid], key=lambda r: r.execution_index)
        req = model.requirement_registry.get(rid)
        elapsed = [r.elapsed_sec for r in recs]
        entries.append(
            RequirementSummary(
                requirement_id=rid,
                quality=req.quality if req else None,
                description=req.description if req else "",
                records=recs,
                executions=len(recs),
                satisfied=sum(1 for r in recs if r.verdict is Verdict.SATISFIED),
                violated=sum(1 for r in recs if r.verdict is Verdict.VIOLATED),
                unmonitored=sum(1 for r in recs if r.verdict is Verdict.UNMONITORED),
                min_elapsed=min(elapsed) if elapsed else None,
                max_elapsed=max(elapsed) if elapsed else None,
                mean_elapsed=sum(elapsed) / len(elapsed) if elapsed else None,
            )
        )
    groups: dict[str, list[str]] = {}
    for entry in entries:
        if entry.quality is not None:
            groups.setdefault(entry.quality.name, []).append(entry.requirement_id)
    return QualityReport(requirements=entries, quality_groups=dict(sorted(groups.items())))


def _record_to_json(record: RequirementRecord) -> dict:
    data = {
        "requirement_id": record.requirement_id,
        "node_path": record.node_path,
        "execution_index": record.execution_index,
        "started_tick": record.started_tick,
        "finished_tick": record.finished_tick,
        "elapsed_sec": record.elapsed_sec,
        "raw_status": record.raw_status.value,
        "verdict": record.verdict.value,
        "scope_snapshot": record.scope_snapshot,
    }
    if record.diagnostic is not None:
        data["diagnostic"] = {
            "code": record.diagnostic.code,
            "message": record.diagnostic.message,
        }
    return data


def _report_to_json(report: QualityReport) -> dict:
    return {
        "requirements": [
            {
                "id": entry.requirement_id,
                "quality": entry.quality.display() if entry.quality else None,
                "description": entry.description,
                "executions": entry.executions,
                "satisfied": entry.satisfied,
                "violated": entry.violated,
                "unmonitored": entry.unmonitored,
                "elapsed_sec": {
                    "min": entry.min_elapsed,
                    "max": entry.max_elapsed,
                    "mean": entry.mean_elapsed,
                },
                "records": [_record_to_json(r) for r in entry.records],
            }
            for entry in report.requirements
        ],
        "qualities": [
            {"name": name, "requirement_ids": ids} for name, ids in report.quality_groups.items()
        ],
    }


def _format_seconds(value: float | None) -> str:
    return "-" if value is None else f"{value:.3f}"


def render_report(report: QualityReport, format: str = "text") -> str:
    """Render the report; "text" gives an aligned table, "json" the stable
    schema documented in docs/report-schema.md."""
    if format == "json":
        return json.dumps(_report_to_json(report), indent=2) + "\n"
    if format != "text":
        raise ValueError(f"unknown report format {format!r}")
    headers = ["requirement", "quality", "exec", "sat", "viol", "unmon", "min_s", "max_s", "mean_s"]
    rows = [headers]
    for entry in report.requirements:
        rows.append(
            [
                entry.requirement_id,
                entry.quality.display() if entry.quality else "-",
                str(entry.executions),
                str(entry.satisfied),
                str(entry.violated),
                str(entry.unmonitored),
                _format_seconds(entry.min_elapsed),
                _format_seconds(entry.max_elapsed),
                _format_seconds(entry.mean_elapsed),
            ]
        )
    widths = [max(len(row[i]) for row in rows) for i in range(len(headers))]
    lines = []
    for row in rows:
        cells = [cell.ljust(widths[i]) for i, cell in enumerate(row[:2])]
        cells += [cell.rjust(widths[i + 2]) for i, cell in enumerate(row[2:])]
        lines.append("  ".join(cells).rstrip())
    return "\n".join(lines) + "\n"
