"""btq: a toolchain for behavior-tree mission models with quality annotations.

Parse `.btq` mission files into validated models, generate
BehaviorTree.CPP-compatible XML, and execute missions deterministically
against scripted scenarios while monitoring quality-requirement satisfaction.
"""

from btq.codegen import generate
from btq.condexpr import ConditionExpr, EvalError, ExprSyntaxError, eval_expr, parse_expr
from btq.diagnostics import BtqError, Diagnostic, DiagnosticError, Severity, SourceLocation
from btq.engine import (
    Blackboard,
    Engine,
    EngineError,
    ExecutionTrace,
    ScenarioSpec,
    TickStatus,
    TraceEvent,
    load_scenario,
    run,
)
from btq.model import (
    BehaviorTreeModel,
    NodeKind,
    Quality,
    QualityRequirement,
    TreeNode,
    assign_node_paths,
    models_equal,
    requirements_of,
    validate,
)
from btq.monitor import (
    Monitor,
    QualityReport,
    RequirementRecord,
    Verdict,
    build_report,
    render_report,
)
from btq.parser import check_source, format_model, parse, parse_file, tokenize

__version__ = "0.1.0"

__all__ = [
    "BehaviorTreeModel",
    "Blackboard",
    "BtqError",
    "ConditionExpr",
    "Diagnostic",
    "DiagnosticError",
    "Engine",
    "EngineError",
    "EvalError",
    "ExecutionTrace",
    "ExprSyntaxError",
    "Monitor",
    "NodeKind",
    "Quality",
    "QualityReport",
    "QualityRequirement",
    "RequirementRecord",
    "ScenarioSpec",
    "Severity",
    "SourceLocation",
    "TickStatus",
    "TraceEvent",
    "TreeNode",
    "Verdict",
    "assign_node_paths",
    "build_report",
    "check_source",
    "eval_expr",
    "format_model",
    "generate",
    "load_scenario",
    "models_equal",
    "parse",
    "parse_expr",
    "parse_file",
    "render_report",
    "requirements_of",
    "run",
    "tokenize",
    "validate",
]
