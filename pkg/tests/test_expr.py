import math
import random

import pytest

from dcsmooth.errors import ExpressionError
from dcsmooth.expr import (
    Bin,
    Call,
    Cmp,
    IfExpr,
    InfLit,
    Neg,
    Num,
    Var,
    compile_expression,
    evaluate,
    parse,
    pretty,
    validate,
)


# --- printing round-trips -----------------------------------------------------

def _gen_sum(rng, depth):
    """A random AST using only shapes the parser can produce: nonnegative
    number literals, comparisons only inside if, inf only as an if branch."""
    roll = rng.random()
    if depth <= 0 or roll < 0.25:
        choice = rng.random()
        if choice < 0.4:
            return Num(value=float(round(rng.uniform(0.0, 99.0), 3)))
        if choice < 0.8:
            return Var(name=rng.choice(("x", "y")))
        return Num(value=float(rng.randrange(100)))
    if roll < 0.45:
        return Bin(
            op=rng.choice(("+", "-", "*", "/", "^")),
            left=_gen_sum(rng, depth - 1),
            right=_gen_sum(rng, depth - 1),
        )
    if roll < 0.55:
        return Neg(operand=_gen_sum(rng, depth - 1))
    if roll < 0.85:
        name = rng.choice(("abs", "sqrt", "exp", "sin", "cos", "min", "max", "norm"))
        if name in ("min", "max"):
            k = rng.randrange(2, 5)
        elif name == "norm":
            k = rng.randrange(1, 3)
        else:
            k = 1
        return Call(name=name, args=tuple(_gen_sum(rng, depth - 1) for _ in range(k)))
    cond = Cmp(
        op=rng.choice(("<", "<=", ">", ">=")),
        left=_gen_sum(rng, depth - 1),
        right=_gen_sum(rng, depth - 1),
    )
    then = InfLit() if rng.random() < 0.2 else _gen_sum(rng, depth - 1)
    other = InfLit() if rng.random() < 0.2 else _gen_sum(rng, depth - 1)
    return IfExpr(cond=cond, then=then, other=other)


def test_pretty_parse_round_trip_on_random_trees():
    rng = random.Random(20260825)
    for _ in range(200):
        tree = _gen_sum(rng, rng.randrange(1, 5))
        text = pretty(tree)
        assert parse(text) == tree, text


def test_pretty_uses_minimal_parentheses():
    assert pretty(parse("(x + 1.0) * 2.0")) == "(x + 1.0) * 2.0"
    assert pretty(parse("x + 1.0 * 2.0")) == "x + 1.0 * 2.0"
    assert pretty(parse("-(x + 1.0)")) == "-(x + 1.0)"
    assert pretty(parse("x^(y + 1.0)")) == "x^(y + 1.0)"


# --- evaluation ----------------------------------------------------------------

def test_power_is_right_associative():
    assert evaluate(parse("2^3^2"), 0.0) == 512.0


def test_unary_minus_binds_below_power():
    assert evaluate(parse("-2^2"), 0.0) == -4.0


@pytest.mark.parametrize(
    "source,x,want",
    [
        ("2*x + 1", 3.0, 7.0),
        ("(abs(x) - 1)^2", -3.0, 4.0),
        ("min(1, 2, 3) + max(0, x)", 5.0, 6.0),
        ("norm(3, 4)", 0.0, 5.0),
        ("norm(x)", -2.5, 2.5),
        ("if(x <= 0, -x, x) / 2", -8.0, 4.0),
        ("10 / 4", 0.0, 2.5),
    ],
)
def test_known_values(source, x, want):
    assert evaluate(parse(source), x) == want


def test_if_branch_may_be_infinite():
    node = parse("if(x < 0, inf, x)")
    validate(node, 1)
    assert evaluate(node, -1.0) == math.inf
    assert evaluate(node, 2.0) == 2.0


def test_two_dimensional_evaluation():
    node = parse("x^2 + y^2")
    validate(node, 2)
    assert evaluate(node, 3.0, 4.0) == 25.0


def test_evaluation_never_returns_nan():
    for source, x in [("sqrt(x)", -1.0), ("1 / x", 0.0), ("exp(x)", 1e6), ("(-1.0)^0.5", 0.0)]:
        node = parse(source)
        with pytest.raises(ExpressionError):
            evaluate(node, x)


# --- located errors --------------------------------------------------------------

def _raises_at(source, position, *, dim=None):
    with pytest.raises(ExpressionError) as err:
        node = parse(source)
        if dim is not None:
            validate(node, dim)
    assert err.value.position == position, str(err.value)


def test_parse_error_positions():
    _raises_at("x + ", 4)
    _raises_at("x < 1", 2)
    _raises_at("x $ 1", 2)
    _raises_at("min(1 2)", 6)
    _raises_at("if(1, 2, 3)", 4)


def test_validation_error_positions():
    _raises_at("z + 1", 0, dim=1)
    _raises_at("y", 0, dim=1)  # y only exists in two dimensions
    _raises_at("abs(1, 2)", 0, dim=1)
    _raises_at("norm(1, 2, 3)", 0, dim=1)
    _raises_at("foo(1)", 0, dim=1)
    _raises_at("x + min(2)", 4, dim=1)


def test_inf_is_confined_to_if_branches():
    for source in ("inf + 1", "abs(inf)", "-inf", "if(x < 0, inf + 1, 0)"):
        with pytest.raises(ExpressionError, match="whole if"):
            validate(parse(source), 1)


def test_bare_function_name_is_rejected():
    _raises_at("abs + 1", 0, dim=1)


def test_message_includes_position():
    with pytest.raises(ExpressionError, match=r"at position 2"):
        parse("x < 1")


# --- compilation ------------------------------------------------------------------

def test_compile_builds_samplers_by_dimension():
    f1 = compile_expression("x^2", 1)
    assert f1(3.0) == 9.0
    f2 = compile_expression("x + y", 2)
    assert f2(1.0, 2.0) == 3.0
    with pytest.raises(ExpressionError):
        compile_expression("x + y", 1)
