"""Tokenizer, parser, and canonical formatter for the `.btq` mission DSL.

The language is indentation-sensitive: one indent unit is a tab, or a run of
N spaces where N is fixed by the first indented line of the file; mixing tabs
and spaces is an error. Inside a parenthesized annotation block indentation
and line breaks are insignificant, so long annotations can wrap.

Grammar (terminals quoted)::

    File        := TreeDecl+
    TreeDecl    := "BehaviorTree" "ID" "=" STRING NEWLINE INDENT Node DEDENT
    Node        := (CtrlSym | DecoKw Param* | "Action" IDENT | "Condition" IDENT
                    | "SubTree" IDENT) [Annot] NEWLINE [INDENT Node+ DEDENT]
    CtrlSym     := "->" | "?" | "=>" | "r->" | "r?"
    DecoKw      := "Inverter" | "Repeat" | "RetryUntilSuccessful" | "ForceSuccess"
                   | "ForceFailure" | "KeepRunningUntilFailure"
    Param       := IDENT "=" STRING
    Annot       := "(" ["name" "=" STRING] Param* ["satisfices" QualityRef+]
                       ["satisfies" ReqRef+] ")"
    QualityRef  := "Quality" "=" STRING ["(" ReqDecl+ ")"]
    ReqRef      := ReqDecl | "QualityReq" "ID" "=" STRING
    ReqDecl     := "QualityReq" "ID" "=" STRING "description" "=" STRING
                   ["successIf" "=" STRING] ["failureIf" "=" STRING]

Control symbols: "->" sequence, "?" fallback, "=>" parallel, and "r->"/"r?"
for the reactive variants that re-check earlier children every tick.
A requirement declared inside a quality's parentheses is linked to that
quality; a bare `QualityReq ID = "x"` under `satisfies` is a back reference
to a declaration made elsewhere, which is how one cross-cutting requirement
is shared by several nodes. Quality strings may carry a trailing facet in
angle brackets, e.g. ``"performance <time-behavior>"``.
"""

import re
from dataclasses import dataclass, replace
from enum import Enum

from btq import condexpr
from btq.condexpr import ConditionExpr, ExprSyntaxError
from btq.diagnostics import (
    Diagnostic,
    DiagnosticError,
    SourceLocation,
    error,
    has_errors,
)
from btq.model import (
    BehaviorTreeModel,
    NodeKind,
    Quality,
    QualityRequirement,
    TreeNode,
    assign_node_paths,
    validate,
)


class TokenKind(Enum):
    ARROW = "->"
    QUESTION = "?"
    PARALLEL = "=>"
    RARROW = "r->"
    RQUESTION = "r?"
    KEYWORD = "keyword"
    IDENT = "ident"
    STRING = "string"
    EQUALS = "="
    LPAREN = "("
    RPAREN = ")"
    INDENT = "indent"
    DEDENT = "dedent"
    NEWLINE = "newline"
    EOF = "eof"


@dataclass(frozen=True)
class Token:
    kind: TokenKind
    text: str
    line: int
    column: int

    @property
    def location(self) -> SourceLocation:
        return SourceLocation("<input>", self.line, self.column)


KEYWORDS = frozenset(
    {
        "BehaviorTree",
        "ID",
        "description",
        "successIf",
        "failureIf",
        "name",
        "satisfices",
        "satisfies",
        "Quality",
        "QualityReq",
        "Action",
        "Condition",
        "SubTree",
        "Inverter",
        "Repeat",
        "RetryUntilSuccessful",
        "ForceSuccess",
        "ForceFailure",
        "KeepRunningUntilFailure",
    }
)

DECORATOR_KEYWORDS = {
    "Inverter": NodeKind.INVERTER,
    "Repeat": NodeKind.REPEAT,
    "RetryUntilSuccessful": NodeKind.RETRY_UNTIL_SUCCESSFUL,
    "ForceSuccess": NodeKind.FORCE_SUCCESS,
    "ForceFailure": NodeKind.FORCE_FAILURE,
    "KeepRunningUntilFailure": NodeKind.KEEP_RUNNING_UNTIL_FAILURE,
}

CONTROL_SYMBOLS = {
    TokenKind.ARROW: NodeKind.SEQUENCE,
    TokenKind.QUESTION: NodeKind.FALLBACK,
    TokenKind.PARALLEL: NodeKind.PARALLEL,
    TokenKind.RARROW: NodeKind.REACTIVE_SEQUENCE,
    TokenKind.RQUESTION: NodeKind.REACTIVE_FALLBACK,
}

LEAF_KEYWORDS = {
    "Action": NodeKind.ACTION,
    "Condition": NodeKind.CONDITION,
    "SubTree": NodeKind.SUBTREE_REF,
}

_IDENT_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")
_ESCAPES = {"\\": "\\", '"': '"', "n": "\n", "t": "\t"}
_FACET_RE = re.compile(r"^(.*?)\s*<([^<>]+)>\s*$")


class _Lexer:
    def __init__(self, text: str, path: str):
        self.path = path
        self.lines = text.split("\n")
        self.tokens: list[Token] = []
        self.diags: list[Diagnostic] = []
        self.indent_char: str | None = None
        self.space_unit: int | None = None
        self.level = 0
        self.paren_depth = 0

    def loc(self, line: int, column: int) -> SourceLocation:
        return SourceLocation(self.path, line, column)

    def run(self) -> list[Token]:
        for lineno, raw in enumerate(self.lines, start=1):
            line = raw[:-1] if raw.endswith("\r") else raw
            self._lex_line(line, lineno)
        last = len(self.lines)
        while self.level > 0:
            self.tokens.append(Token(TokenKind.DEDENT, "", last, 1))
            self.level -= 1
        self.tokens.append(Token(TokenKind.EOF, "", last, 1))
        if self.diags:
            raise DiagnosticError(self.diags)
        return self.tokens

    def _measure_indent(self, line: str, lineno: int) -> int | None:
        i = 0
        while i < len(line) and line[i] in " \t":
            i += 1
        ws = line[:i]
        if not ws:
            return 0
        if len(set(ws)) > 1:
            self.diags.append(error("E101", "line mixes tabs and spaces", self.loc(lineno, 1)))
            return None
        ch = ws[0]
        if self.indent_char is None:
            self.indent_char = ch
            if ch == " ":
                self.space_unit = len(ws)
        elif ch != self.indent_char:
            established = "tabs" if self.indent_char == "\t" else "spaces"
            found = "tabs" if ch == "\t" else "spaces"
            self.diags.append(
                error(
                    "E101",
                    f"file is indented with {established}, found {found}",
                    self.loc(lineno, 1),
                )
            )
            return None
        if ch == "\t":
            return len(ws)
        if len(ws) % self.space_unit != 0:
            self.diags.append(
                error(
                    "E102",
                    f"indent of {len(ws)} spaces is not a multiple of the unit ({self.space_unit})",
                    self.loc(lineno, 1),
                )
            )
            return None
        return len(ws) // self.space_unit

    def _lex_line(self, line: str, lineno: int) -> None:
        stripped = line.lstrip(" \t")
        if not stripped or stripped.startswith("#"):
            return
        start = len(line) - len(stripped)
        if self.paren_depth == 0:
            new_level = self._measure_indent(line, lineno)
            if new_level is None:
                return
            while self.level < new_level:
                self.tokens.append(Token(TokenKind.INDENT, "", lineno, 1))
                self.level += 1
            while self.level > new_level:
                self.tokens.append(Token(TokenKind.DEDENT, "", lineno, 1))
                self.level -= 1
        emitted = self._scan(line, start, lineno)
        if self.paren_depth == 0 and emitted:
            self.tokens.append(Token(TokenKind.NEWLINE, "", lineno, len(line) + 1))

    def _scan(self, line: str, pos: int, lineno: int) -> bool:
        emitted = False
        n = len(line)
        while pos < n:
            ch = line[pos]
            if ch in " \t":
                pos += 1
                continue
            if ch == "#":
                break
            col = pos + 1
            if line.startswith("r->", pos):
                self.tokens.append(Token(TokenKind.RARROW, "r->", lineno, col))
                pos += 3
            elif line.startswith("r?", pos):
                self.tokens.append(Token(TokenKind.RQUESTION, "r?", lineno, col))
                pos += 2
            elif line.startswith("->", pos):
                self.tokens.append(Token(TokenKind.ARROW, "->", lineno, col))
                pos += 2
            elif line.startswith("=>", pos):
                self.tokens.append(Token(TokenKind.PARALLEL, "=>", lineno, col))
                pos += 2
            elif ch == "?":
                self.tokens.append(Token(TokenKind.QUESTION, "?", lineno, col))
                pos += 1
            elif ch == "(":
                self.tokens.append(Token(TokenKind.LPAREN, "(", lineno, col))
                self.paren_depth += 1
                pos += 1
            elif ch == ")":
                self.tokens.append(Token(TokenKind.RPAREN, ")", lineno, col))
                self.paren_depth = max(0, self.paren_depth - 1)
                pos += 1
            elif ch == "=":
                self.tokens.append(Token(TokenKind.EQUALS, "=", lineno, col))
                pos += 1
            elif ch == '"':
                value, pos = self._scan_string(line, pos, lineno)
                if value is None:
                    break
                self.tokens.append(Token(TokenKind.STRING, value, lineno, col))
            else:
                m = _IDENT_RE.match(line, pos)
                if m:
                    word = m.group()
                    kind = TokenKind.KEYWORD if word in KEYWORDS else TokenKind.IDENT
                    self.tokens.append(Token(kind, word, lineno, col))
                    pos = m.end()
                else:
                    self.diags.append(error("E104", f"unexpected character {ch!r}", self.loc(lineno, col)))
                    pos += 1
                    continue
            emitted = True
        return emitted

    def _scan_string(self, line: str, pos: int, lineno: int) -> tuple[str | None, int]:
        opening = pos + 1
        pos += 1
        out: list[str] = []
        while pos < len(line):
            ch = line[pos]
            if ch == '"':
                return "".join(out), pos + 1
            if ch == "\\":
                if pos + 1 >= len(line):
                    break
                esc = line[pos + 1]
                if esc not in _ESCAPES:
                    self.diags.append(
                        error("E105", f"unknown escape '\\{esc}'", self.loc(lineno, pos + 2))
                    )
                    return None, len(line)
                out.append(_ESCAPES[esc])
                pos += 2
                continue
            out.append(ch)
            pos += 1
        self.diags.append(error("E103", "string is not terminated", self.loc(lineno, opening)))
        return None, len(line)


def tokenize(text: str, path: str = "<input>") -> list[Token]:
    """Tokenize DSL source. INDENT/DEDENT are balanced; comments and blank
    lines produce no tokens. Raises DiagnosticError on E10x problems,
    collecting every offending line before giving up."""
    return _Lexer(text, path).run()


class _Parser:
    def __init__(self, tokens: list[Token], path: str):
        self.tokens = tokens
        self.path = path
        self.i = 0
        self.trees: dict[str, TreeNode] = {}
        self.tree_locations: dict[str, SourceLocation] = {}
        self.requirements: dict[str, QualityRequirement] = {}
        self.qualities: dict[str, Quality] = {}

    def loc(self, tok: Token) -> SourceLocation:
        return SourceLocation(self.path, tok.line, tok.column)

    def peek(self, ahead: int = 0) -> Token:
        return self.tokens[min(self.i + ahead, len(self.tokens) - 1)]

    def advance(self) -> Token:
        tok = self.tokens[self.i]
        if tok.kind is not TokenKind.EOF:
            self.i += 1
        return tok

    def fail(self, expected: str, tok: Token | None = None, code: str = "E203"):
        tok = tok or self.peek()
        shown = tok.text or tok.kind.name
        raise DiagnosticError([error(code, f"expected {expected}, got {shown!r}", self.loc(tok))])

    def expect(self, kind: TokenKind, expected: str) -> Token:
        tok = self.peek()
        if tok.kind is not kind:
            code = "E204" if tok.kind in (TokenKind.INDENT, TokenKind.DEDENT) else "E203"
            self.fail(expected, tok, code)
        return self.advance()

    def expect_keyword(self, word: str) -> Token:
        tok = self.peek()
        if tok.kind is not TokenKind.KEYWORD or tok.text != word:
            self.fail(f"keyword {word!r}", tok)
        return self.advance()

    def at_keyword(self, word: str) -> bool:
        tok = self.peek()
        return tok.kind is TokenKind.KEYWORD and tok.text == word

    def parse_file(self) -> BehaviorTreeModel:
        if self.peek().kind is TokenKind.EOF:
            self.fail("a 'BehaviorTree' declaration")
        while self.peek().kind is not TokenKind.EOF:
            self.parse_tree_decl()
        main_tree_id = next(iter(self.trees))
        model = BehaviorTreeModel(
            trees=self.trees,
            main_tree_id=main_tree_id,
            requirement_registry=self.requirements,
            quality_registry=self.qualities,
            source_file=self.path,
        )
        return model

    def parse_tree_decl(self) -> None:
        decl = self.expect_keyword("BehaviorTree")
        self.expect_keyword("ID")
        self.expect(TokenKind.EQUALS, "'='")
        tree_tok = self.expect(TokenKind.STRING, "tree id string")
        tree_id = tree_tok.text
        if tree_id in self.trees:
            raise DiagnosticError(
                [error("E202", f"tree {tree_id!r} is already declared", self.loc(tree_tok))]
            )
        self.expect(TokenKind.NEWLINE, "end of line")
        if self.peek().kind is not TokenKind.INDENT:
            raise DiagnosticError(
                [error("E201", f"tree {tree_id!r} requires exactly one root node", self.loc(decl))]
            )
        self.advance()
        root = self.parse_node()
        if self.peek().kind is not TokenKind.DEDENT:
            raise DiagnosticError(
                [
                    error(
                        "E201",
                        f"tree {tree_id!r} requires exactly one root node",
                        self.loc(self.peek()),
                    )
                ]
            )
        self.advance()
        self.trees[tree_id] = root
        self.tree_locations[tree_id] = self.loc(decl)

    def parse_node(self) -> TreeNode:
        tok = self.peek()
        node = TreeNode(kind=NodeKind.SEQUENCE, location=self.loc(tok))
        if tok.kind in CONTROL_SYMBOLS:
            node.kind = CONTROL_SYMBOLS[tok.kind]
            self.advance()
        elif tok.kind is TokenKind.KEYWORD and tok.text in DECORATOR_KEYWORDS:
            node.kind = DECORATOR_KEYWORDS[tok.text]
            self.advance()
            self.parse_params_into(node)
        elif tok.kind is TokenKind.KEYWORD and tok.text in LEAF_KEYWORDS:
            node.kind = LEAF_KEYWORDS[tok.text]
            self.advance()
            ident = self.expect(TokenKind.IDENT, "an identifier")
            node.ref_id = ident.text
        else:
            code = "E204" if tok.kind in (TokenKind.INDENT, TokenKind.DEDENT) else "E203"
            self.fail("a node: '->', '?', '=>', 'r->', 'r?', a decorator keyword, "
                      "'Action', 'Condition', or 'SubTree'", tok, code)
        if self.peek().kind is TokenKind.LPAREN:
            self.advance()
            self.parse_annotation(node)
            self.expect(TokenKind.RPAREN, "')'")
        self.expect(TokenKind.NEWLINE, "end of line")
        if self.peek().kind is TokenKind.INDENT:
            self.advance()
            while self.peek().kind is not TokenKind.DEDENT:
                node.children.append(self.parse_node())
            self.advance()
        return node

    def parse_params_into(self, node: TreeNode) -> None:
        while self.peek().kind is TokenKind.IDENT and self.peek(1).kind is TokenKind.EQUALS:
            key = self.advance().text
            self.advance()
            value = self.expect(TokenKind.STRING, "a parameter value string")
            node.params[key] = value.text

    def parse_annotation(self, node: TreeNode) -> None:
        if self.at_keyword("name"):
            self.advance()
            self.expect(TokenKind.EQUALS, "'='")
            node.display_name = self.expect(TokenKind.STRING, "a name string").text
        self.parse_params_into(node)
        if self.at_keyword("satisfices"):
            self.advance()
            if not self.at_keyword("Quality"):
                self.fail("'Quality' after 'satisfices'")
            while self.at_keyword("Quality"):
                self.parse_quality_ref(node)
        if self.at_keyword("satisfies"):
            self.advance()
            if not self.at_keyword("QualityReq"):
                self.fail("'QualityReq' after 'satisfies'")
            while self.at_keyword("QualityReq"):
                self.parse_requirement_ref(node)

    def parse_quality_ref(self, node: TreeNode) -> None:
        self.expect_keyword("Quality")
        self.expect(TokenKind.EQUALS, "'='")
        text_tok = self.expect(TokenKind.STRING, "a quality string")
        quality = split_quality(text_tok.text)
        self.qualities.setdefault(quality.name, quality)
        node.satisfices.append(quality)
        if self.peek().kind is TokenKind.LPAREN:
            self.advance()
            if not self.at_keyword("QualityReq"):
                self.fail("'QualityReq' inside a quality block")
            while self.at_keyword("QualityReq"):
                self.parse_requirement_decl(node, quality, declared=True)
            self.expect(TokenKind.RPAREN, "')'")

    def parse_requirement_ref(self, node: TreeNode) -> None:
        # Lookahead past `QualityReq ID = STRING` decides declaration vs back reference.
        self.parse_requirement_decl(node, None, declared=None)

    def parse_requirement_decl(
        self, node: TreeNode, quality: Quality | None, declared: bool | None
    ) -> None:
        self.expect_keyword("QualityReq")
        self.expect_keyword("ID")
        self.expect(TokenKind.EQUALS, "'='")
        id_tok = self.expect(TokenKind.STRING, "a requirement id string")
        is_decl = declared if declared is not None else self.at_keyword("description")
        if not is_decl:
            node.satisfies.append(id_tok.text)
            return
        self.expect_keyword("description")
        self.expect(TokenKind.EQUALS, "'='")
        description = self.expect(TokenKind.STRING, "a description string").text
        success_if = failure_if = None
        if self.at_keyword("successIf"):
            self.advance()
            self.expect(TokenKind.EQUALS, "'='")
            success_if = self.parse_condition_string("successIf")
        if self.at_keyword("failureIf"):
            self.advance()
            self.expect(TokenKind.EQUALS, "'='")
            failure_if = self.parse_condition_string("failureIf")
        req = QualityRequirement(
            id=id_tok.text,
            description=description,
            quality=quality,
            success_if=success_if,
            failure_if=failure_if,
        )
        node.declarations.append(req)
        node.satisfies.append(req.id)
        existing = self.requirements.get(req.id)
        if existing is None:
            self.requirements[req.id] = req
        elif existing.quality is None and quality is not None:
            # Cross-cutting redeclaration may supply the quality link late.
            self.requirements[req.id] = replace(existing, quality=quality)

    def parse_condition_string(self, which: str) -> ConditionExpr:
        tok = self.expect(TokenKind.STRING, f"a {which} expression string")
        try:
            return condexpr.parse_expr(tok.text)
        except ExprSyntaxError as exc:
            raise DiagnosticError(
                [
                    error(
                        "E301",
                        f"{which} expression: {exc.diagnostics[0].message} "
                        f"(column {exc.column} of the expression)",
                        self.loc(tok),
                    )
                ]
            ) from exc


def split_quality(text: str) -> Quality:
    """Split `"performance <time-behavior>"` into name and facet."""
    m = _FACET_RE.match(text)
    if m:
        return Quality(m.group(1).strip(), m.group(2))
    return Quality(text.strip() or text, None)


def check_source(text: str, path: str = "<input>") -> tuple[BehaviorTreeModel | None, list[Diagnostic]]:
    """Parse and validate, collecting diagnostics instead of raising.

    Returns (model, diagnostics); model is None when any diagnostic is an
    error. Warnings alone still yield a usable model.
    """
    try:
        tokens = tokenize(text, path)
        model = _Parser(tokens, path).parse_file()
    except DiagnosticError as exc:
        return None, exc.diagnostics
    assign_node_paths(model)
    diags = validate(model)
    if has_errors(diags):
        return None, diags
    return model, diags


def parse(text: str, path: str = "<input>") -> BehaviorTreeModel:
    """Parse DSL text into a validated model. Raises DiagnosticError carrying
    every collected diagnostic when the source or model is invalid."""
    model, diags = check_source(text, path)
    if model is None:
        raise DiagnosticError(diags)
    return model


def parse_file(path: str) -> BehaviorTreeModel:
    with open(path, encoding="utf-8") as fh:
        return parse(fh.read(), path)


_HEAD_SYMBOLS = {
    NodeKind.SEQUENCE: "->",
    NodeKind.FALLBACK: "?",
    NodeKind.PARALLEL: "=>",
    NodeKind.REACTIVE_SEQUENCE: "r->",
    NodeKind.REACTIVE_FALLBACK: "r?",
}


def _quote(text: str) -> str:
    escaped = (
        text.replace("\\", "\\\\").replace('"', '\\"').replace("\n", "\\n").replace("\t", "\\t")
    )
    return f'"{escaped}"'


def _format_requirement_decl(req: QualityRequirement) -> str:
    parts = [f"QualityReq ID = {_quote(req.id)}", f"description = {_quote(req.description)}"]
    if req.success_if is not None:
        parts.append(f"successIf = {_quote(req.success_if.source)}")
    if req.failure_if is not None:
        parts.append(f"failureIf = {_quote(req.failure_if.source)}")
    return " ".join(parts)


def _format_annotation(node: TreeNode) -> str:
    parts: list[str] = []
    if node.display_name is not None:
        parts.append(f"name = {_quote(node.display_name)}")
    if node.kind not in DECORATOR_KEYWORDS.values():
        for key in sorted(node.params):
            parts.append(f"{key} = {_quote(node.params[key])}")
    nested: dict[int, list[QualityRequirement]] = {}
    for decl in node.declarations:
        if decl.quality is None:
            continue
        for idx, quality in enumerate(node.satisfices):
            if quality == decl.quality:
                nested.setdefault(idx, []).append(decl)
                break
        else:
            raise ValueError(
                f"requirement {decl.id!r} is linked to quality {decl.quality.name!r} "
                "which its declaring node does not satisfice; not representable"
            )
    if node.satisfices:
        chunk = ["satisfices"]
        for idx, quality in enumerate(node.satisfices):
            chunk.append(f"Quality = {_quote(quality.display())}")
            if idx in nested:
                decls = " ".join(_format_requirement_decl(d) for d in nested[idx])
                chunk.append(f"({decls})")
        parts.append(" ".join(chunk))
    nested_ids = [d.id for group in nested.values() for d in group]
    clause_ids = list(node.satisfies)
    for rid in nested_ids:
        clause_ids.remove(rid)
    if clause_ids:
        declared_here = {d.id: d for d in node.declarations if d.quality is None}
        chunk = ["satisfies"]
        for rid in clause_ids:
            if rid in declared_here:
                chunk.append(_format_requirement_decl(declared_here.pop(rid)))
            else:
                chunk.append(f"QualityReq ID = {_quote(rid)}")
        parts.append(" ".join(chunk))
    return " ".join(parts)


def _format_node(node: TreeNode, depth: int, lines: list[str]) -> None:
    head = _HEAD_SYMBOLS.get(node.kind, node.kind.value)
    if node.kind.is_leaf:
        head = f"{head} {node.ref_id}"
    elif node.kind in DECORATOR_KEYWORDS.values():
        for key in sorted(node.params):
            head += f" {key} = {_quote(node.params[key])}"
    annot = _format_annotation(node)
    line = "\t" * depth + head
    if annot:
        line += f" ({annot})"
    lines.append(line)
    for child in node.children:
        _format_node(child, depth + 1, lines)


def format_model(model: BehaviorTreeModel) -> str:
    """Emit canonical DSL text; `parse(format_model(m))` reproduces `m`.

    Canonical form indents with tabs, writes each annotation on one line, and
    declares every requirement at the nodes that hold its inline declaration,
    using back references elsewhere.
    """
    lines: list[str] = []
    for idx, (tree_id, root) in enumerate(model.trees.items()):
        if idx:
            lines.append("")
        lines.append(f"BehaviorTree ID = {_quote(tree_id)}")
        _format_node(root, 1, lines)
    return "\n".join(lines) + "\n"
