"""Condition mini-language used by successIf/failureIf constraints and by
expression-driven condition leaves.

Grammar (lowest precedence first)::

    expr    := and_expr ("||" and_expr)*
    and_expr:= cmp_expr ("&&" cmp_expr)*
    cmp_expr:= unary (("<" | "<=" | ">" | ">=" | "==" | "!=") unary)*
    unary   := "!" unary | atom
    atom    := NUMBER | STRING | "true" | "false" | IDENT | "(" expr ")"

All binary operators are left-associative. Values are double-precision
numbers, booleans, or text. Ordering comparisons are defined for numbers
only; `==`/`!=` additionally work between two booleans or two texts. There
is no truthiness: `&&`, `||`, and `!` demand boolean operands, and mixing
value types in a comparison is a type error rather than `false`. Both sides
of a connective are always evaluated so that a misspelled blackboard key is
reported even in a position short-circuiting would skip.
"""

import re
from dataclasses import dataclass
from typing import Mapping, Union

from btq.diagnostics import Diagnostic, DiagnosticError, SourceLocation, error

#: Runtime value of an expression operand: number, boolean, or text.
Value = Union[float, bool, str]


@dataclass(frozen=True)
class NumberLit:
    value: float


@dataclass(frozen=True)
class TextLit:
    value: str


@dataclass(frozen=True)
class BoolLit:
    value: bool


@dataclass(frozen=True)
class Name:
    ident: str


@dataclass(frozen=True)
class Compare:
    op: str
    left: "ExprNode"
    right: "ExprNode"


@dataclass(frozen=True)
class And:
    left: "ExprNode"
    right: "ExprNode"


@dataclass(frozen=True)
class Or:
    left: "ExprNode"
    right: "ExprNode"


@dataclass(frozen=True)
class Not:
    operand: "ExprNode"


ExprNode = Union[NumberLit, TextLit, BoolLit, Name, Compare, And, Or, Not]


@dataclass(frozen=True)
class ConditionExpr:
    """Parsed expression plus the exact source text it came from."""

    root: ExprNode
    source: str


class ExprSyntaxError(DiagnosticError):
    """E301 with the 1-based column of the offending token."""

    def __init__(self, message: str, column: int):
        self.column = column
        super().__init__([error("E301", message, SourceLocation("<expr>", 1, column))])


class EvalError(DiagnosticError):
    """E302 (unknown identifier) or E303 (type mismatch)."""

    def __init__(self, code: str, message: str):
        self.code = code
        self.diagnostic = error(code, message, SourceLocation("<expr>", 1, 1))
        super().__init__([self.diagnostic])


_TOKEN_RE = re.compile(
    r"""\s*(?:
        (?P<num>-?\d+(?:\.\d+)?)
      | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
      | "(?P<str>[^"]*)"
      | (?P<op><=|>=|==|!=|&&|\|\||[<>!()])
    )""",
    re.VERBOSE,
)

_CMP_OPS = ("<", "<=", ">", ">=", "==", "!=")


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    """Yield (kind, text, column) triples; kind is num/ident/str/op/end."""
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None or m.end() == pos:
            rest = text[pos:].lstrip()
            if not rest:
                break
            col = len(text) - len(rest) + 1
            raise ExprSyntaxError(f"unexpected character {rest[0]!r}", col)
        for kind in ("num", "ident", "str", "op"):
            val = m.group(kind)
            if val is not None:
                tokens.append((kind, val, m.start(kind) + 1))
                break
        pos = m.end()
    tokens.append(("end", "", len(text) + 1))
    return tokens


class _ExprParser:
    def __init__(self, text: str):
        self.text = text
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self) -> tuple[str, str, int]:
        return self.tokens[self.i]

    def advance(self) -> tuple[str, str, int]:
        tok = self.tokens[self.i]
        if tok[0] != "end":
            self.i += 1
        return tok

    def fail(self, expected: str) -> "ExprSyntaxError":
        kind, text, col = self.peek()
        got = "end of expression" if kind == "end" else repr(text)
        return ExprSyntaxError(f"expected {expected}, got {got}", col)

    def parse(self) -> ExprNode:
        node = self.or_expr()
        if self.peek()[0] != "end":
            raise self.fail("end of expression")
        return node

    def or_expr(self) -> ExprNode:
        node = self.and_expr()
        while self.peek()[1] == "||":
            self.advance()
            node = Or(node, self.and_expr())
        return node

    def and_expr(self) -> ExprNode:
        node = self.cmp_expr()
        while self.peek()[1] == "&&":
            self.advance()
            node = And(node, self.cmp_expr())
        return node

    def cmp_expr(self) -> ExprNode:
        node = self.unary()
        while self.peek()[0] == "op" and self.peek()[1] in _CMP_OPS:
            op = self.advance()[1]
            node = Compare(op, node, self.unary())
        return node

    def unary(self) -> ExprNode:
        kind, text, _ = self.peek()
        if kind == "op" and text == "!":
            self.advance()
            return Not(self.unary())
        return self.atom()

    def atom(self) -> ExprNode:
        kind, text, _ = self.peek()
        if kind == "num":
            self.advance()
            return NumberLit(float(text))
        if kind == "str":
            self.advance()
            return TextLit(text)
        if kind == "ident":
            self.advance()
            if text == "true":
                return BoolLit(True)
            if text == "false":
                return BoolLit(False)
            return Name(text)
        if kind == "op" and text == "(":
            self.advance()
            node = self.or_expr()
            if self.peek()[1] != ")":
                raise self.fail("')'")
            self.advance()
            return node
        raise self.fail("a literal, identifier, '!', or '('")


def parse_expr(text: str) -> ConditionExpr:
    """Parse `text` into a ConditionExpr. Raises ExprSyntaxError (E301)."""
    return ConditionExpr(_ExprParser(text).parse(), text)


def _type_name(value: Value) -> str:
    if isinstance(value, bool):
        return "bool"
    if isinstance(value, (int, float)):
        return "number"
    return "text"


def _compare(op: str, left: Value, right: Value) -> bool:
    lt, rt = _type_name(left), _type_name(right)
    if lt != rt:
        raise EvalError("E303", f"cannot compare {lt} with {rt} using {op!r}")
    if lt != "number" and op not in ("==", "!="):
        raise EvalError("E303", f"operator {op!r} is only defined for numbers")
    if op == "<":
        return left < right
    if op == "<=":
        return left <= right
    if op == ">":
        return left > right
    if op == ">=":
        return left >= right
    if op == "==":
        return left == right
    return left != right


def _require_bool(value: Value, context: str) -> bool:
    if not isinstance(value, bool):
        raise EvalError("E303", f"{context} requires a boolean, got {_type_name(value)}")
    return value


def _eval_node(node: ExprNode, scope: Mapping[str, Value]) -> Value:
    if isinstance(node, NumberLit):
        return node.value
    if isinstance(node, TextLit):
        return node.value
    if isinstance(node, BoolLit):
        return node.value
    if isinstance(node, Name):
        if node.ident not in scope:
            raise EvalError("E302", f"unknown identifier {node.ident!r}")
        value = scope[node.ident]
        if isinstance(value, bool):
            return value
        if isinstance(value, (int, float)):
            return float(value)
        return value
    if isinstance(node, Compare):
        return _compare(node.op, _eval_node(node.left, scope), _eval_node(node.right, scope))
    if isinstance(node, And):
        # No short-circuit: evaluate both sides so bad identifiers always surface.
        left = _require_bool(_eval_node(node.left, scope), "'&&'")
        right = _require_bool(_eval_node(node.right, scope), "'&&'")
        return left and right
    if isinstance(node, Or):
        left = _require_bool(_eval_node(node.left, scope), "'||'")
        right = _require_bool(_eval_node(node.right, scope), "'||'")
        return left or right
    if isinstance(node, Not):
        return not _require_bool(_eval_node(node.operand, scope), "'!'")
    raise TypeError(f"unknown expression node {node!r}")


def eval_expr(expr: ConditionExpr, scope: Mapping[str, Value]) -> bool:
    """Evaluate `expr` against `scope`.

    Raises EvalError E302 for identifiers missing from the scope and E303 for
    type mismatches, including a non-boolean overall result.
    """
    result = _eval_node(expr.root, scope)
    if not isinstance(result, bool):
        raise EvalError("E303", f"condition evaluates to {_type_name(result)}, not bool")
    return result
