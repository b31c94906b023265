"""A tiny expression language for defining grid functions on the command line.

Grammar (top level is a sum; comparisons exist only as if-conditions)::

    sum        := product (('+' | '-') product)*
    product    := unary (('*' | '/') unary)*
    unary      := '-' unary | power
    power      := atom ['^' unary]          # right-associative
    atom       := NUMBER | 'inf' | variable | call | '(' sum ')'
    call       := NAME '(' sum (',' sum)* ')'
    condition  := sum ('<' | '<=' | '>' | '>=') sum

Variables are ``x`` (and ``y`` in two dimensions).  ``inf`` may only appear as
a whole branch of ``if(cond, a, b)``; it cannot feed an operator or function.
Functions: abs, sqrt, exp, sin, cos, min, max, norm, if.  Every error carries
the character position it was raised at, and evaluation never produces NaN:
domain problems (sqrt of a negative, division by zero, overflow) raise
ExpressionError instead.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field

from .errors import ExpressionError

_TOKEN_RE = re.compile(
    r"""
    (?P<num>\d+\.\d*(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?|\d+(?:[eE][+-]?\d+)?)
  | (?P<name>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op><=|>=|<|>|[+\-*/^(),])
  | (?P<ws>\s+)
    """,
    re.VERBOSE,
)

_FUNCTIONS: dict[str, tuple[int, int]] = {
    # name -> (min arity, max arity); 0 as max means unbounded
    "abs": (1, 1),
    "sqrt": (1, 1),
    "exp": (1, 1),
    "sin": (1, 1),
    "cos": (1, 1),
    "min": (2, 0),
    "max": (2, 0),
    "norm": (1, 2),
}

_COMPARATORS = ("<=", ">=", "<", ">")


@dataclass(frozen=True)
class Token:
    kind: str  # "num" | "name" | "op" | "end"
    text: str
    pos: int


def _tokenize(source: str) -> list[Token]:
    tokens = []
    i = 0
    while i < len(source):
        m = _TOKEN_RE.match(source, i)
        if m is None:
            raise ExpressionError(f"unexpected character {source[i]!r}", position=i)
        if m.lastgroup != "ws":
            tokens.append(Token(kind=m.lastgroup, text=m.group(), pos=i))
        i = m.end()
    tokens.append(Token(kind="end", text="", pos=len(source)))
    return tokens


# ---------------------------------------------------------------------------
# AST


@dataclass(frozen=True)
class Node:
    pos: int = field(compare=False, kw_only=True, default=0)


@dataclass(frozen=True)
class Num(Node):
    value: float


@dataclass(frozen=True)
class Var(Node):
    name: str


@dataclass(frozen=True)
class InfLit(Node):
    pass


@dataclass(frozen=True)
class Neg(Node):
    operand: Node


@dataclass(frozen=True)
class Bin(Node):
    op: str
    left: Node
    right: Node


@dataclass(frozen=True)
class Cmp(Node):
    op: str
    left: Node
    right: Node


@dataclass(frozen=True)
class Call(Node):
    name: str
    args: tuple[Node, ...]


@dataclass(frozen=True)
class IfExpr(Node):
    cond: Cmp
    then: Node
    other: Node


class _Parser:
    def __init__(self, source: str):
        self.source = source
        self.tokens = _tokenize(source)
        self.i = 0

    @property
    def cur(self) -> Token:
        return self.tokens[self.i]

    def _advance(self) -> Token:
        tok = self.cur
        self.i += 1
        return tok

    def _expect_op(self, text: str) -> Token:
        tok = self.cur
        if tok.kind != "op" or tok.text != text:
            raise ExpressionError(f"expected {text!r}, found {tok.text or 'end of input'!r}", position=tok.pos)
        return self._advance()

    def parse(self) -> Node:
        node = self.sum()
        tok = self.cur
        if tok.kind == "op" and tok.text in _COMPARATORS:
            raise ExpressionError(
                "comparisons are only allowed as the condition of if(...)", position=tok.pos
            )
        if tok.kind != "end":
            raise ExpressionError(f"unexpected {tok.text!r}", position=tok.pos)
        return node

    def sum(self) -> Node:
        node = self.product()
        while self.cur.kind == "op" and self.cur.text in ("+", "-"):
            tok = self._advance()
            node = Bin(op=tok.text, left=node, right=self.product(), pos=tok.pos)
        return node

    def product(self) -> Node:
        node = self.unary()
        while self.cur.kind == "op" and self.cur.text in ("*", "/"):
            tok = self._advance()
            node = Bin(op=tok.text, left=node, right=self.unary(), pos=tok.pos)
        return node

    def unary(self) -> Node:
        if self.cur.kind == "op" and self.cur.text == "-":
            tok = self._advance()
            return Neg(operand=self.unary(), pos=tok.pos)
        return self.power()

    def power(self) -> Node:
        node = self.atom()
        if self.cur.kind == "op" and self.cur.text == "^":
            tok = self._advance()
            node = Bin(op="^", left=node, right=self.unary(), pos=tok.pos)
        return node

    def condition(self) -> Cmp:
        left = self.sum()
        tok = self.cur
        if tok.kind != "op" or tok.text not in _COMPARATORS:
            raise ExpressionError(
                "if(...) needs a comparison (<, <=, >, >=) as its first argument",
                position=tok.pos,
            )
        self._advance()
        right = self.sum()
        return Cmp(op=tok.text, left=left, right=right, pos=tok.pos)

    def atom(self) -> Node:
        tok = self.cur
        if tok.kind == "num":
            self._advance()
            return Num(value=float(tok.text), pos=tok.pos)
        if tok.kind == "name":
            self._advance()
            if tok.text == "inf":
                return InfLit(pos=tok.pos)
            if self.cur.kind == "op" and self.cur.text == "(":
                return self._call(tok)
            return Var(name=tok.text, pos=tok.pos)
        if tok.kind == "op" and tok.text == "(":
            self._advance()
            node = self.sum()
            self._expect_op(")")
            return node
        raise ExpressionError(f"expected a value, found {tok.text or 'end of input'!r}", position=tok.pos)

    def _call(self, name_tok: Token) -> Node:
        self._expect_op("(")
        if name_tok.text == "if":
            cond = self.condition()
            self._expect_op(",")
            then = self.sum()
            self._expect_op(",")
            other = self.sum()
            self._expect_op(")")
            return IfExpr(cond=cond, then=then, other=other, pos=name_tok.pos)
        args = [self.sum()]
        while self.cur.kind == "op" and self.cur.text == ",":
            self._advance()
            args.append(self.sum())
        self._expect_op(")")
        return Call(name=name_tok.text, args=tuple(args), pos=name_tok.pos)


def parse(source: str) -> Node:
    return _Parser(source).parse()


# ---------------------------------------------------------------------------
# validation

_REAL = "real"
_EXT = "ext"  # may be +inf; only legal as an if-branch or the whole expression


def _validate(node: Node, variables: frozenset[str]) -> str:
    if isinstance(node, Num):
        return _REAL
    if isinstance(node, InfLit):
        return _EXT
    if isinstance(node, Var):
        if node.name in _FUNCTIONS or node.name == "if":
            raise ExpressionError(f"{node.name} is a function and needs arguments", position=node.pos)
        if node.name not in variables:
            allowed = ", ".join(sorted(variables))
            raise ExpressionError(
                f"unknown variable {node.name!r} (allowed: {allowed})", position=node.pos
            )
        return _REAL
    if isinstance(node, Neg):
        if _validate(node.operand, variables) == _EXT:
            raise ExpressionError(
                "inf can only be used as a whole if(...) branch", position=node.operand.pos
            )
        return _REAL
    if isinstance(node, (Bin, Cmp)):
        for child in (node.left, node.right):
            if _validate(child, variables) == _EXT:
                raise ExpressionError(
                    "inf can only be used as a whole if(...) branch", position=child.pos
                )
        return _REAL
    if isinstance(node, Call):
        if node.name not in _FUNCTIONS:
            raise ExpressionError(f"unknown function {node.name!r}", position=node.pos)
        lo, hi = _FUNCTIONS[node.name]
        if len(node.args) < lo or (hi and len(node.args) > hi):
            expect = f"{lo}" if (lo == hi or not hi and lo == len(node.args)) else (f"{lo}..{hi}" if hi else f">= {lo}")
            raise ExpressionError(
                f"{node.name} takes {expect} arguments, got {len(node.args)}", position=node.pos
            )
        for child in node.args:
            if _validate(child, variables) == _EXT:
                raise ExpressionError(
                    "inf can only be used as a whole if(...) branch", position=child.pos
                )
        return _REAL
    if isinstance(node, IfExpr):
        _validate(node.cond, variables)
        t1 = _validate(node.then, variables)
        t2 = _validate(node.other, variables)
        return _EXT if _EXT in (t1, t2) else _REAL
    raise ExpressionError(f"unsupported node {type(node).__name__}", position=node.pos)


def validate(node: Node, dim: int) -> None:
    """Check variables, arities and inf placement for the given dimension."""
    variables = frozenset(("x",) if dim == 1 else ("x", "y"))
    _validate(node, variables)


# ---------------------------------------------------------------------------
# evaluation


def _eval(node: Node, env: dict[str, float]) -> float:
    if isinstance(node, Num):
        return node.value
    if isinstance(node, InfLit):
        return math.inf
    if isinstance(node, Var):
        return env[node.name]
    if isinstance(node, Neg):
        return -_eval(node.operand, env)
    if isinstance(node, Bin):
        left = _eval(node.left, env)
        right = _eval(node.right, env)
        if node.op == "+":
            return left + right
        if node.op == "-":
            return left - right
        if node.op == "*":
            return left * right
        if node.op == "/":
            if right == 0.0:
                raise ExpressionError("division by zero", position=node.pos)
            return left / right
        try:
            out = math.pow(left, right)
        except (ValueError, OverflowError) as exc:
            raise ExpressionError(f"cannot compute {left!r} ^ {right!r}: {exc}", position=node.pos) from exc
        return out
    if isinstance(node, Cmp):
        left = _eval(node.left, env)
        right = _eval(node.right, env)
        if node.op == "<":
            return 1.0 if left < right else 0.0
        if node.op == "<=":
            return 1.0 if left <= right else 0.0
        if node.op == ">":
            return 1.0 if left > right else 0.0
        return 1.0 if left >= right else 0.0
    if isinstance(node, Call):
        args = [_eval(a, env) for a in node.args]
        try:
            if node.name == "abs":
                return abs(args[0])
            if node.name == "sqrt":
                return math.sqrt(args[0])
            if node.name == "exp":
                return math.exp(args[0])
            if node.name == "sin":
                return math.sin(args[0])
            if node.name == "cos":
                return math.cos(args[0])
            if node.name == "min":
                return min(args)
            if node.name == "max":
                return max(args)
            if node.name == "norm":
                return math.hypot(*args)
        except (ValueError, OverflowError) as exc:
            raise ExpressionError(f"{node.name}{tuple(args)!r} failed: {exc}", position=node.pos) from exc
    if isinstance(node, IfExpr):
        if _eval(node.cond, env) == 1.0:
            return _eval(node.then, env)
        return _eval(node.other, env)
    raise ExpressionError(f"unsupported node {type(node).__name__}", position=node.pos)


def evaluate(node: Node, x: float, y: float | None = None) -> float:
    """Evaluate at a point; the result is a float or +inf, never NaN."""
    env = {"x": float(x)}
    if y is not None:
        env["y"] = float(y)
    out = _eval(node, env)
    if isinstance(out, float) and math.isnan(out):
        raise ExpressionError("expression produced NaN", position=node.pos)
    return float(out)


def compile_expression(source: str, dim: int):
    """Parse + validate, returning a sampler suitable for grid construction."""
    node = parse(source)
    validate(node, dim)

    if dim == 1:
        def sampler(x: float) -> float:
            return evaluate(node, x)
    else:
        def sampler(x: float, y: float) -> float:
            return evaluate(node, x, y)

    return sampler


# ---------------------------------------------------------------------------
# printing

_LEVEL_SUM = 1
_LEVEL_PRODUCT = 2
_LEVEL_UNARY = 3
_LEVEL_POWER = 4
_LEVEL_ATOM = 5


def _level(node: Node) -> int:
    if isinstance(node, (Num, Var, InfLit, Call, IfExpr)):
        return _LEVEL_ATOM
    if isinstance(node, Bin):
        if node.op in ("+", "-"):
            return _LEVEL_SUM
        if node.op in ("*", "/"):
            return _LEVEL_PRODUCT
        return _LEVEL_POWER
    if isinstance(node, Neg):
        return _LEVEL_UNARY
    return 0


def _wrap(node: Node, minimum: int) -> str:
    text = pretty(node)
    if _level(node) < minimum:
        return f"({text})"
    return text


def pretty(node: Node) -> str:
    """Render with minimal parentheses; parse(pretty(n)) equals n."""
    if isinstance(node, Num):
        return repr(node.value)
    if isinstance(node, Var):
        return node.name
    if isinstance(node, InfLit):
        return "inf"
    if isinstance(node, Neg):
        return "-" + _wrap(node.operand, _LEVEL_UNARY)
    if isinstance(node, Bin):
        if node.op in ("+", "-"):
            return f"{_wrap(node.left, _LEVEL_SUM)} {node.op} {_wrap(node.right, _LEVEL_PRODUCT)}"
        if node.op in ("*", "/"):
            return f"{_wrap(node.left, _LEVEL_PRODUCT)} {node.op} {_wrap(node.right, _LEVEL_UNARY)}"
        return f"{_wrap(node.left, _LEVEL_ATOM)}^{_wrap(node.right, _LEVEL_UNARY)}"
    if isinstance(node, Cmp):
        return f"{_wrap(node.left, _LEVEL_SUM)} {node.op} {_wrap(node.right, _LEVEL_SUM)}"
    if isinstance(node, Call):
        return f"{node.name}({', '.join(pretty(a) for a in node.args)})"
    if isinstance(node, IfExpr):
        return f"if({pretty(node.cond)}, {pretty(node.then)}, {pretty(node.other)})"
    raise ExpressionError(f"unsupported node {type(node).__name__}", position=node.pos)
