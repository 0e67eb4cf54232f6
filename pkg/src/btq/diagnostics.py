"""Diagnostic records shared across the toolchain.

Every user-facing problem is reported as a `Diagnostic` with a stable code so
that tests, scripts, and editors can match on codes instead of message text.
The full code catalog lives in `CATALOG` below and is part of the public
contract; messages may be reworded, codes may not.
"""

from dataclasses import dataclass, field
from enum import Enum


class Severity(Enum):
    ERROR = "error"
    WARNING = "warning"


#: Stable diagnostic codes. E0xx model, E1xx lexer, E2xx parser, E3xx condition
#: expressions, E4xx scenarios/execution, Wxxx warnings.
CATALOG: dict[str, str] = {
    "E001": "main tree missing from the model",
    "E002": "subtree reference does not resolve to a declared tree",
    "E003": "node child count violates its kind's arity",
    "E004": "subtree references form a cycle",
    "E005": "missing or invalid count parameter",
    "E006": "requirement id referenced but never declared",
    "E007": "conflicting redeclaration of a cross-cutting requirement",
    "E008": "requirement quality missing from the quality registry",
    "E009": "malformed identifier or empty text field",
    "E101": "mixed tabs and spaces in indentation",
    "E102": "indentation is not a multiple of the file's indent unit",
    "E103": "unterminated string literal",
    "E104": "unexpected character",
    "E105": "invalid string escape sequence",
    "E201": "tree requires exactly one root node",
    "E202": "duplicate tree id",
    "E203": "unexpected token",
    "E204": "unexpected indentation",
    "E301": "condition expression syntax error",
    "E302": "unknown identifier in condition expression",
    "E303": "condition expression type mismatch",
    "E401": "scenario names an unknown or non-leaf node path",
    "E402": "malformed scenario document",
    "E403": "leaf without behavior in strict mode",
    "E404": "tick requested after execution already finished",
    "E405": "tick budget exhausted before the root finished",
    "W001": "requirement declared but never attached to a node",
}


@dataclass(frozen=True, order=True)
class SourceLocation:
    """1-based position inside an input file; `<model>` for in-memory models."""

    file: str = "<model>"
    line: int = 1
    column: int = 1

    def __str__(self) -> str:
        return f"{self.file}:{self.line}:{self.column}"


@dataclass(frozen=True)
class Diagnostic:
    severity: Severity
    code: str
    message: str
    location: SourceLocation = field(default_factory=SourceLocation)

    def __post_init__(self) -> None:
        if self.code not in CATALOG:
            raise ValueError(f"diagnostic code {self.code!r} is not in the catalog")

    def render(self) -> str:
        return f"{self.location}: [{self.code}] {self.message}"

    @property
    def sort_key(self) -> tuple[str, int, int, str]:
        loc = self.location
        return (loc.file, loc.line, loc.column, self.code)


def error(code: str, message: str, location: SourceLocation | None = None) -> Diagnostic:
    return Diagnostic(Severity.ERROR, code, message, location or SourceLocation())


def warning(code: str, message: str, location: SourceLocation | None = None) -> Diagnostic:
    return Diagnostic(Severity.WARNING, code, message, location or SourceLocation())


def sort_diagnostics(diags: list[Diagnostic]) -> list[Diagnostic]:
    return sorted(diags, key=lambda d: d.sort_key)


def has_errors(diags: list[Diagnostic]) -> bool:
    return any(d.severity is Severity.ERROR for d in diags)


class BtqError(Exception):
    """Base class for all toolchain errors."""


class DiagnosticError(BtqError):
    """Raised when an operation fails with one or more diagnostics attached."""

    def __init__(self, diagnostics: list[Diagnostic]):
        self.diagnostics = sort_diagnostics(diagnostics)
        super().__init__("; ".join(d.render() for d in self.diagnostics))
