import pytest
from hypothesis import given
from hypothesis import strategies as st

from btq.condexpr import (
    And,
    Compare,
    EvalError,
    ExprSyntaxError,
    Name,
    NumberLit,
    Not,
    Or,
    eval_expr,
    parse_expr,
)


def test_parse_comparison():
    expr = parse_expr("elapsed_sec > 30")
    assert expr.root == Compare(">", Name("elapsed_sec"), NumberLit(30.0))
    assert expr.source == "elapsed_sec > 30"


def test_precedence_and_binds_tighter_than_or():
    expr = parse_expr("a && b || c")
    assert expr.root == Or(And(Name("a"), Name("b")), Name("c"))


def test_not_binds_tightest():
    expr = parse_expr("!a && b")
    assert expr.root == And(Not(Name("a")), Name("b"))


def test_left_associative_chains():
    expr = parse_expr("a || b || c")
    assert expr.root == Or(Or(Name("a"), Name("b")), Name("c"))


@pytest.mark.parametrize("bad", ["a >", "", "(a", "a && ", "1 2", "a @ b", "!>"])
def test_syntax_errors(bad):
    with pytest.raises(ExprSyntaxError) as exc:
        parse_expr(bad)
    assert exc.value.diagnostics[0].code == "E301"
    assert exc.value.column >= 1


def test_boundary_is_inclusive_for_lte():
    assert eval_expr(parse_expr("elapsed_sec <= 30"), {"elapsed_sec": 30.0}) is True


def test_boundary_is_exclusive_for_gt():
    assert eval_expr(parse_expr("elapsed_sec > 30"), {"elapsed_sec": 30.0}) is False


def test_battery_threshold():
    assert eval_expr(parse_expr("battery_pct >= 3"), {"battery_pct": 2.5}) is False


def test_parenthesized_conjunction():
    assert eval_expr(parse_expr("(x > 1) && (y == 2)"), {"x": 2.0, "y": 2.0}) is True


def test_string_and_bool_literals():
    assert eval_expr(parse_expr('status == "SUCCESS"'), {"status": "SUCCESS"}) is True
    assert eval_expr(parse_expr("ready == true"), {"ready": False}) is False


def test_negative_number_literal():
    assert eval_expr(parse_expr("temp > -5"), {"temp": -2.0}) is True


def test_unknown_identifier_is_an_error_not_false():
    with pytest.raises(EvalError) as exc:
        eval_expr(parse_expr("battery < 3"), {"battery_pct": 50.0})
    assert exc.value.code == "E302"


def test_unknown_identifier_errors_even_behind_false_conjunct():
    expr = parse_expr("x > 1 && misspelled < 2")
    with pytest.raises(EvalError) as exc:
        eval_expr(expr, {"x": 0.0})
    assert exc.value.code == "E302"


@pytest.mark.parametrize(
    "source,scope",
    [
        ("x < y", {"x": 1.0, "y": "two"}),
        ('x < "2"', {"x": 1.0}),
        ("b < true", {"b": False}),
        ("x && y", {"x": 1.0, "y": True}),
        ("!x", {"x": 3.0}),
        ("x", {"x": 2.0}),
    ],
)
def test_type_mismatches(source, scope):
    with pytest.raises(EvalError) as exc:
        eval_expr(parse_expr(source), scope)
    assert exc.value.code == "E303"


def test_int_scope_values_compare_like_numbers():
    assert eval_expr(parse_expr("n == 3"), {"n": 3}) is True


@given(a=st.booleans(), b=st.booleans())
def test_de_morgan(a, b):
    scope = {"a": a, "b": b}
    assert eval_expr(parse_expr("!(a && b)"), scope) == eval_expr(parse_expr("!a || !b"), scope)
    assert eval_expr(parse_expr("!(a || b)"), scope) == eval_expr(parse_expr("!a && !b"), scope)


@given(
    x=st.floats(allow_nan=False, allow_infinity=False, width=32),
    y=st.floats(allow_nan=False, allow_infinity=False, width=32),
    p=st.booleans(),
)
def test_total_on_type_compatible_scopes(x, y, p):
    # Any well-typed scope must evaluate without raising.
    expr = parse_expr("(x < y || x >= y) && (p || !p)")
    assert eval_expr(expr, {"x": x, "y": y, "p": p}) is True


def test_purity_same_inputs_same_result():
    expr = parse_expr("a < b && !c")
    scope = {"a": 1.0, "b": 2.0, "c": False}
    assert eval_expr(expr, scope) == eval_expr(expr, scope) is True
