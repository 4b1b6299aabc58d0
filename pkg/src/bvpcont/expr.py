"""Coefficient expressions: parsing, printing, symbolic differentiation, evaluation.

Grammar (lowest to highest binding)::

    expr   := term (('+' | '-') term)*
    term   := unary (('*' | '/') unary)*
    unary  := '-' unary | power
    power  := atom ('^' integer)*
    atom   := number | 't' | 'eps' | func '(' expr ')' | '(' expr ')'
    func   := 'sin' | 'cos' | 'exp'

Exponents must be integer literals (optionally signed, optionally parenthesized).
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Union

import numpy as np

VARIABLES = ("t", "eps")
FUNCTIONS = ("sin", "cos", "exp")


class ExprSyntaxError(ValueError):
    def __init__(self, message: str, position: int):
        super().__init__(f"{message} at position {position}")
        self.position = position


class UnknownIdentifierError(ExprSyntaxError):
    pass


class DomainError(ArithmeticError):
    pass


# ---------------------------------------------------------------------------
# AST
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Neg:
    arg: "Expr"


@dataclass(frozen=True)
class BinOp:
    op: str  # one of + - * /
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Pow:
    base: "Expr"
    exponent: int


@dataclass(frozen=True)
class Func:
    name: str
    arg: "Expr"


Expr = Union[Num, Var, Neg, BinOp, Pow, Func]

ZERO = Num(0.0)
ONE = Num(1.0)


def free_variables(e: Expr) -> frozenset:
    if isinstance(e, Var):
        return frozenset([e.name])
    if isinstance(e, Num):
        return frozenset()
    if isinstance(e, BinOp):
        return free_variables(e.left) | free_variables(e.right)
    if isinstance(e, Pow):
        return free_variables(e.base)
    return free_variables(e.arg)


# ---------------------------------------------------------------------------
# Parsing
# ---------------------------------------------------------------------------

_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_]\w*)|(?P<op>[-+*/^()]))"
)
_INTEGER = re.compile(r"\d+$")


def _tokenize(source: str) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    while pos < len(source):
        if source[pos:].strip() == "":
            break
        m = _TOKEN.match(source, pos)
        if m is None or m.end() == pos:
            bad = pos + (len(source[pos:]) - len(source[pos:].lstrip()))
            raise ExprSyntaxError(f"unexpected character {source[bad]!r}", bad)
        kind = m.lastgroup
        tokens.append((kind, m.group(kind), m.start(kind)))
        pos = m.end()
    tokens.append(("end", "", len(source)))
    return tokens


class _Parser:
    def __init__(self, source: str):
        self.tokens = _tokenize(source)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def next(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, value: str):
        kind, text, pos = self.next()
        if text != value or kind == "end":
            found = "end of input" if kind == "end" else repr(text)
            raise ExprSyntaxError(f"expected {value!r}, found {found}", pos)

    def parse(self) -> Expr:
        e = self.expr()
        kind, text, pos = self.peek()
        if kind != "end":
            raise ExprSyntaxError(f"unexpected token {text!r}", pos)
        return e

    def expr(self) -> Expr:
        e = self.term()
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            op = self.next()[1]
            e = BinOp(op, e, self.term())
        return e

    def term(self) -> Expr:
        e = self.unary()
        while self.peek()[1] in ("*", "/") and self.peek()[0] == "op":
            op = self.next()[1]
            e = BinOp(op, e, self.unary())
        return e

    def unary(self) -> Expr:
        if self.peek()[0] == "op" and self.peek()[1] == "-":
            self.next()
            return Neg(self.unary())
        return self.power()

    def power(self) -> Expr:
        e = self.atom()
        while self.peek()[0] == "op" and self.peek()[1] == "^":
            self.next()
            e = Pow(e, self.integer())
        return e

    def integer(self) -> int:
        paren = False
        if self.peek()[1] == "(" and self.peek()[0] == "op":
            self.next()
            paren = True
        sign = 1
        if self.peek()[0] == "op" and self.peek()[1] in ("-", "+"):
            sign = -1 if self.next()[1] == "-" else 1
        kind, text, pos = self.next()
        if kind != "num" or not _INTEGER.match(text):
            raise ExprSyntaxError("exponent must be an integer literal", pos)
        if paren:
            self.expect(")")
        return sign * int(text)

    def atom(self) -> Expr:
        kind, text, pos = self.next()
        if kind == "num":
            return Num(float(text))
        if kind == "name":
            if text in VARIABLES:
                return Var(text)
            if text in FUNCTIONS:
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                return Func(text, arg)
            raise UnknownIdentifierError(f"unknown identifier {text!r}", pos)
        if kind == "op" and text == "(":
            e = self.expr()
            self.expect(")")
            return e
        found = "end of input" if kind == "end" else repr(text)
        raise ExprSyntaxError(f"unexpected {found}", pos)


def parse(source: str) -> Expr:
    """Parse an expression string into an AST (no simplification)."""
    if not isinstance(source, str) or not source.strip():
        raise ExprSyntaxError("empty expression", 0)
    return _Parser(source).parse()


def as_expr(value) -> Expr:
    """Accept an Expr, a number or an expression string."""
    if isinstance(value, (Num, Var, Neg, BinOp, Pow, Func)):
        return value
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return Num(float(value))
    return parse(str(value))


# ---------------------------------------------------------------------------
# Printing
# ---------------------------------------------------------------------------

_PREC = {"+": 1, "-": 1, "*": 2, "/": 2}
_PREC_NEG = 3
_PREC_POW = 4
_PREC_ATOM = 5


def _prec(e: Expr) -> int:
    if isinstance(e, BinOp):
        return _PREC[e.op]
    if isinstance(e, Neg):
        return _PREC_NEG
    if isinstance(e, Pow):
        return _PREC_POW
    if isinstance(e, Num) and (e.value < 0 or math.copysign(1.0, e.value) < 0):
        return _PREC_NEG
    return _PREC_ATOM


def to_string(e: Expr) -> str:
    if isinstance(e, Num):
        if not math.isfinite(e.value):
            raise ValueError(f"cannot print non-finite literal {e.value}")
        if math.copysign(1.0, e.value) < 0:
            return f"-{abs(e.value)!r}"
        return repr(e.value)
    if isinstance(e, Var):
        return e.name
    if isinstance(e, Func):
        return f"{e.name}({to_string(e.arg)})"
    if isinstance(e, Neg):
        inner = to_string(e.arg)
        if _prec(e.arg) < _PREC_NEG:
            inner = f"({inner})"
        return f"-{inner}" if not inner.startswith("-") else f"- {inner}"
    if isinstance(e, Pow):
        base = to_string(e.base)
        if _prec(e.base) <= _PREC_POW:
            base = f"({base})"
        exponent = str(e.exponent) if e.exponent >= 0 else f"({e.exponent})"
        return f"{base}^{exponent}"
    p = _PREC[e.op]
    left = to_string(e.left)
    if _prec(e.left) < p:
        left = f"({left})"
    right = to_string(e.right)
    if _prec(e.right) <= p:
        right = f"({right})"
    return f"{left} {e.op} {right}"


# ---------------------------------------------------------------------------
# Smart constructors (constant folding of literal subtrees, 0/1 identities)
# ---------------------------------------------------------------------------


def _is(e: Expr, value: float) -> bool:
    return isinstance(e, Num) and e.value == value


def neg(a: Expr) -> Expr:
    if isinstance(a, Num):
        return Num(-a.value)
    if isinstance(a, Neg):
        return a.arg
    return Neg(a)


def add(a: Expr, b: Expr) -> Expr:
    if isinstance(a, Num) and isinstance(b, Num):
        return Num(a.value + b.value)
    if _is(a, 0.0):
        return b
    if _is(b, 0.0):
        return a
    return BinOp("+", a, b)


def sub(a: Expr, b: Expr) -> Expr:
    if isinstance(a, Num) and isinstance(b, Num):
        return Num(a.value - b.value)
    if _is(b, 0.0):
        return a
    if _is(a, 0.0):
        return neg(b)
    return BinOp("-", a, b)


def mul(a: Expr, b: Expr) -> Expr:
    if isinstance(a, Num) and isinstance(b, Num):
        return Num(a.value * b.value)
    if _is(a, 0.0) or _is(b, 0.0):
        return ZERO
    if _is(a, 1.0):
        return b
    if _is(b, 1.0):
        return a
    return BinOp("*", a, b)


def div(a: Expr, b: Expr) -> Expr:
    if isinstance(a, Num) and isinstance(b, Num) and b.value != 0.0:
        return Num(a.value / b.value)
    if _is(a, 0.0) and not _is(b, 0.0):
        return ZERO
    if _is(b, 1.0):
        return a
    return BinOp("/", a, b)


def power(a: Expr, k: int) -> Expr:
    if k == 0:
        return ONE
    if k == 1:
        return a
    if isinstance(a, Num) and (a.value != 0.0 or k > 0):
        return Num(a.value**k)
    return Pow(a, k)


def func(name: str, a: Expr) -> Expr:
    if isinstance(a, Num):
        return Num(float(getattr(math, name)(a.value)))
    return Func(name, a)


# ---------------------------------------------------------------------------
# Differentiation
# ---------------------------------------------------------------------------


def differentiate(e: Expr, var: str = "t") -> Expr:
    """Exact symbolic derivative of ``e`` with respect to ``var``."""
    if var not in VARIABLES:
        raise ValueError(f"cannot differentiate with respect to {var!r}")
    return _d(e, var)


def _d(e: Expr, v: str) -> Expr:
    if isinstance(e, Num):
        return ZERO
    if isinstance(e, Var):
        return ONE if e.name == v else ZERO
    if isinstance(e, Neg):
        return neg(_d(e.arg, v))
    if isinstance(e, BinOp):
        da, db = _d(e.left, v), _d(e.right, v)
        if e.op == "+":
            return add(da, db)
        if e.op == "-":
            return sub(da, db)
        if e.op == "*":
            return add(mul(da, e.right), mul(e.left, db))
        # quotient rule; constant denominators keep the tree small
        if _is(db, 0.0):
            return div(da, e.right)
        return sub(div(da, e.right), div(mul(e.left, db), power(e.right, 2)))
    if isinstance(e, Pow):
        k = e.exponent
        if k == 0:
            return ZERO
        return mul(mul(Num(float(k)), power(e.base, k - 1)), _d(e.base, v))
    # Func
    da = _d(e.arg, v)
    if _is(da, 0.0):
        return ZERO
    if e.name == "sin":
        return mul(func("cos", e.arg), da)
    if e.name == "cos":
        return mul(neg(func("sin", e.arg)), da)
    return mul(func("exp", e.arg), da)


def nth_derivative(e: Expr, order: int, var: str = "t") -> Expr:
    for _ in range(order):
        e = differentiate(e, var)
    return e


# ---------------------------------------------------------------------------
# Evaluation
# ---------------------------------------------------------------------------


def evaluate(e: Expr, t, eps: float = 0.0):
    """Evaluate ``e`` at ``t`` (scalar or array) and ``eps``.

    Scalars give a Python float; arrays give an array of the same shape.
    Raises DomainError on division by zero or zero raised to a negative power.
    """
    scalar = np.ndim(t) == 0
    tt = np.asarray(t, dtype=float)
    with np.errstate(over="ignore", invalid="ignore"):
        out = _eval(e, tt, float(eps))
    out = np.broadcast_to(out, tt.shape)
    if scalar:
        return float(out)
    return np.array(out)


def _eval(e: Expr, t, eps):
    if isinstance(e, Num):
        return e.value
    if isinstance(e, Var):
        return t if e.name == "t" else eps
    if isinstance(e, Neg):
        return -_eval(e.arg, t, eps)
    if isinstance(e, BinOp):
        a = _eval(e.left, t, eps)
        b = _eval(e.right, t, eps)
        if e.op == "+":
            return a + b
        if e.op == "-":
            return a - b
        if e.op == "*":
            return a * b
        if np.any(np.asarray(b) == 0):
            raise DomainError(f"division by zero in {to_string(e)}")
        return np.true_divide(a, b)
    if isinstance(e, Pow):
        a = _eval(e.base, t, eps)
        if e.exponent < 0:
            if np.any(np.asarray(a) == 0):
                raise DomainError(f"zero to a negative power in {to_string(e)}")
            return 1.0 / np.power(a, -e.exponent)
        return np.power(a, e.exponent)
    a = _eval(e.arg, t, eps)
    return getattr(np, e.name)(a)
