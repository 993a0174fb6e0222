"""Coefficient expressions in the variables ``t`` and ``x``.

A tiny expression language for the coefficient functions of the operator:
numeric literals, the variables ``t`` and ``x``, ``+ - * /``, ``^`` with a
non-negative integer literal exponent, and the functions ``sin``, ``cos``,
``exp`` and ``tanh``.

Expressions are immutable trees. They evaluate on scalars or numpy arrays
and differentiate exactly; the only simplification performed is constant
folding and the obvious identities with 0 and 1.

    >>> e = parse_expr("x^2 - 1")
    >>> eval_expr(e, 0.0, 2.0)
    3.0
    >>> str(diff_expr(e, "x"))
    '2*x'
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Union

import numpy as np

__all__ = [
    "Expr",
    "Const",
    "Var",
    "Unary",
    "Binary",
    "Pow",
    "ExprSyntaxError",
    "ExprEvalError",
    "parse_expr",
    "eval_expr",
    "diff_expr",
    "as_expr",
    "ZERO",
    "ONE",
]

VARIABLES = ("t", "x")
FUNCTIONS = ("sin", "cos", "exp", "tanh")

_NUMPY_FUNCS = {"sin": np.sin, "cos": np.cos, "exp": np.exp, "tanh": np.tanh}


class ExprSyntaxError(ValueError):
    """Malformed formula; ``offset`` is the byte offset of the offending token."""

    def __init__(self, message, offset, src=""):
        super().__init__(f"{message} at offset {offset}")
        self.offset = offset
        self.src = src


class ExprEvalError(ArithmeticError):
    """Non-finite value while evaluating a formula."""

    def __init__(self, expr, t, x):
        super().__init__(f"non-finite value of {expr} at t={t!r}, x={x!r}")
        self.expr = expr
        self.t = t
        self.x = x


class Expr:
    """Base class of expression nodes.

    Arithmetic operators build new nodes through the folding constructors,
    so ``a + b`` never produces ``0 + b``.
    """

    __slots__ = ()

    def __add__(self, other):
        return add(self, as_expr(other))

    def __radd__(self, other):
        return add(as_expr(other), self)

    def __sub__(self, other):
        return sub(self, as_expr(other))

    def __rsub__(self, other):
        return sub(as_expr(other), self)

    def __mul__(self, other):
        return mul(self, as_expr(other))

    def __rmul__(self, other):
        return mul(as_expr(other), self)

    def __truediv__(self, other):
        return div(self, as_expr(other))

    def __rtruediv__(self, other):
        return div(as_expr(other), self)

    def __neg__(self):
        return neg(self)

    def __pow__(self, n):
        return power(self, n)

    def __call__(self, t=0.0, x=0.0):
        return eval_expr(self, t, x)

    def is_const(self, value=None):
        if not isinstance(self, Const):
            return False
        return value is None or self.value == value

    def free_vars(self):
        """Set of variable names the expression depends on."""
        if isinstance(self, Var):
            return {self.name}
        if isinstance(self, Const):
            return set()
        if isinstance(self, Unary):
            return self.arg.free_vars()
        if isinstance(self, Pow):
            return self.base.free_vars()
        return self.left.free_vars() | self.right.free_vars()

    def __str__(self):
        return _to_str(self, 0)


@dataclass(frozen=True, eq=True, repr=True)
class Const(Expr):
    value: float

    __slots__ = ("value",)


@dataclass(frozen=True, eq=True, repr=True)
class Var(Expr):
    name: str

    __slots__ = ("name",)


@dataclass(frozen=True, eq=True, repr=True)
class Unary(Expr):
    op: str  # "neg" or a function name
    arg: Expr

    __slots__ = ("op", "arg")


@dataclass(frozen=True, eq=True, repr=True)
class Binary(Expr):
    op: str  # one of + - * /
    left: Expr
    right: Expr

    __slots__ = ("op", "left", "right")


@dataclass(frozen=True, eq=True, repr=True)
class Pow(Expr):
    base: Expr
    exponent: int

    __slots__ = ("base", "exponent")

    def __post_init__(self):
        if not isinstance(self.exponent, int) or self.exponent < 0:
            raise ValueError("exponent must be a non-negative integer")


ZERO = Const(0.0)
ONE = Const(1.0)


def as_expr(value) -> Expr:
    if isinstance(value, Expr):
        return value
    if isinstance(value, str):
        return parse_expr(value)
    return Const(float(value))


# ---------------------------------------------------------------------------
# folding constructors

def _fold(value):
    return Const(float(value)) if math.isfinite(value) else None


def add(a: Expr, b: Expr) -> Expr:
    if a.is_const(0.0):
        return b
    if b.is_const(0.0):
        return a
    if isinstance(a, Const) and isinstance(b, Const):
        folded = _fold(a.value + b.value)
        if folded is not None:
            return folded
    if isinstance(b, Unary) and b.op == "neg":
        return sub(a, b.arg)
    return Binary("+", a, b)


def sub(a: Expr, b: Expr) -> Expr:
    if b.is_const(0.0):
        return a
    if a.is_const(0.0):
        return neg(b)
    if isinstance(a, Const) and isinstance(b, Const):
        folded = _fold(a.value - b.value)
        if folded is not None:
            return folded
    if isinstance(b, Unary) and b.op == "neg":
        return add(a, b.arg)
    return Binary("-", a, b)


def mul(a: Expr, b: Expr) -> Expr:
    if a.is_const(0.0) or b.is_const(0.0):
        return ZERO
    if a.is_const(1.0):
        return b
    if b.is_const(1.0):
        return a
    if a.is_const(-1.0):
        return neg(b)
    if b.is_const(-1.0):
        return neg(a)
    if isinstance(a, Const) and isinstance(b, Const):
        folded = _fold(a.value * b.value)
        if folded is not None:
            return folded
    # keep numeric factors in front: 2*x rather than x*2
    if isinstance(b, Const) and not isinstance(a, Const):
        a, b = b, a
    if isinstance(a, Const) and isinstance(b, Binary) and b.op == "*" and isinstance(b.left, Const):
        return mul(mul(a, b.left), b.right)
    return Binary("*", a, b)


def div(a: Expr, b: Expr) -> Expr:
    if b.is_const(1.0):
        return a
    if a.is_const(0.0) and not b.is_const(0.0):
        return ZERO
    if isinstance(a, Const) and isinstance(b, Const) and b.value != 0.0:
        folded = _fold(a.value / b.value)
        if folded is not None:
            return folded
    return Binary("/", a, b)


def neg(a: Expr) -> Expr:
    if isinstance(a, Const):
        return Const(-a.value) if a.value != 0.0 else ZERO
    if isinstance(a, Unary) and a.op == "neg":
        return a.arg
    return Unary("neg", a)


def power(a: Expr, n: int) -> Expr:
    if n == 0:
        return ONE
    if n == 1:
        return a
    if isinstance(a, Const):
        folded = _fold(a.value ** n)
        if folded is not None:
            return folded
    if isinstance(a, Pow):
        return Pow(a.base, a.exponent * n)
    return Pow(a, n)


# ---------------------------------------------------------------------------
# parsing

_TOKEN = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<name>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op>[-+*/^()])
    """,
    re.VERBOSE,
)


def _tokenize(src):
    pos = 0
    tokens = []
    while pos < len(src):
        m = _TOKEN.match(src, pos)
        if m is None:
            raise ExprSyntaxError(f"unexpected character {src[pos]!r}", _byte_offset(src, pos), src)
        kind = m.lastgroup
        if kind != "ws":
            tokens.append((kind, m.group(), _byte_offset(src, pos)))
        pos = m.end()
    tokens.append(("end", "", _byte_offset(src, len(src))))
    return tokens


def _byte_offset(src, pos):
    return len(src[:pos].encode("utf-8"))


class _Parser:
    # expr   := term (('+'|'-') term)*
    # term   := unary (('*'|'/') unary)*
    # unary  := '-' unary | '+' unary | power
    # power  := atom ('^' INT)*
    # atom   := NUM | VAR | FUNC '(' expr ')' | '(' expr ')'

    def __init__(self, src):
        self.src = src
        self.tokens = _tokenize(src)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def error(self, message, tok=None):
        tok = tok or self.peek()
        raise ExprSyntaxError(message, tok[2], self.src)

    def expect(self, text):
        tok = self.peek()
        if tok[1] != text:
            self.error(f"expected {text!r}")
        return self.take()

    def parse(self):
        if self.peek()[0] == "end":
            self.error("empty expression")
        node = self.expr()
        if self.peek()[0] != "end":
            self.error(f"unexpected {self.peek()[1]!r}")
        return node

    def expr(self):
        node = self.term()
        while self.peek()[1] in ("+", "-"):
            op = self.take()[1]
            rhs = self.term()
            node = Binary(op, node, rhs)
        return node

    def term(self):
        node = self.unary()
        while self.peek()[1] in ("*", "/"):
            op = self.take()[1]
            rhs = self.unary()
            node = Binary(op, node, rhs)
        return node

    def unary(self):
        if self.peek()[1] == "-":
            self.take()
            return Unary("neg", self.unary())
        if self.peek()[1] == "+":
            self.take()
            return self.unary()
        return self.power()

    def power(self):
        node = self.atom()
        while self.peek()[1] == "^":
            self.take()
            tok = self.peek()
            if tok[0] != "num" or not tok[1].isdigit():
                self.error("exponent must be a non-negative integer literal")
            self.take()
            node = Pow(node, int(tok[1]))
        return node

    def atom(self):
        tok = self.peek()
        kind, text, _ = tok
        if kind == "num":
            self.take()
            return Const(float(text))
        if kind == "name":
            self.take()
            if text in VARIABLES:
                return Var(text)
            if text in FUNCTIONS:
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                return Unary(text, arg)
            self.error(f"unknown identifier {text!r}", tok)
        if text == "(":
            self.take()
            node = self.expr()
            self.expect(")")
            return node
        if kind == "end":
            self.error("unexpected end of input")
        self.error(f"unexpected {text!r}")


def parse_expr(src: str) -> Expr:
    """Parse a formula in ``t`` and ``x``.

    Precedence, from tightest: ``^``, unary minus, ``* /``, ``+ -``; binary
    operators associate to the left. Raises :class:`ExprSyntaxError` carrying
    the byte offset of the offending token, also for unknown identifiers.
    """
    return _Parser(src).parse()


# ---------------------------------------------------------------------------
# evaluation

Number = Union[float, np.ndarray]


def _eval(e, t, x):
    if isinstance(e, Const):
        return e.value
    if isinstance(e, Var):
        return t if e.name == "t" else x
    if isinstance(e, Unary):
        v = _eval(e.arg, t, x)
        if e.op == "neg":
            return -v
        return _NUMPY_FUNCS[e.op](v)
    if isinstance(e, Pow):
        return _eval(e.base, t, x) ** e.exponent
    a = _eval(e.left, t, x)
    b = _eval(e.right, t, x)
    if e.op == "+":
        return a + b
    if e.op == "-":
        return a - b
    if e.op == "*":
        return a * b
    return a / b


def eval_expr(e: Expr, t: Number = 0.0, x: Number = 0.0) -> Number:
    """Evaluate ``e`` at ``(t, x)``; numpy arrays broadcast.

    Raises :class:`ExprEvalError` (with the first offending point) if any
    value is non-finite.
    """
    scalar = np.ndim(t) == 0 and np.ndim(x) == 0
    with np.errstate(all="ignore"):
        if scalar:
            tt, xx = float(t), float(x)
            try:
                value = float(_eval(e, np.float64(tt), np.float64(xx)))
            except (ZeroDivisionError, OverflowError):
                value = math.nan
            if not math.isfinite(value):
                raise ExprEvalError(e, tt, xx)
            return value
        tt, xx = np.broadcast_arrays(np.asarray(t, dtype=float), np.asarray(x, dtype=float))
        value = np.broadcast_to(np.asarray(_eval(e, tt, xx), dtype=float), tt.shape)
    bad = ~np.isfinite(value)
    if bad.any():
        idx = np.unravel_index(np.argmax(bad), bad.shape)
        raise ExprEvalError(e, float(tt[idx]), float(xx[idx]))
    return np.array(value)


# ---------------------------------------------------------------------------
# differentiation

def diff_expr(e: Expr, var: str) -> Expr:
    """Exact derivative of ``e`` with respect to ``var`` (``"t"`` or ``"x"``)."""
    if var not in VARIABLES:
        raise ValueError(f"unknown variable {var!r}")
    return _diff(e, var)


def _diff(e, v):
    if isinstance(e, Const):
        return ZERO
    if isinstance(e, Var):
        return ONE if e.name == v else ZERO
    if isinstance(e, Unary):
        da = _diff(e.arg, v)
        if e.op == "neg":
            return neg(da)
        if da.is_const(0.0):
            return ZERO
        if e.op == "sin":
            outer = Unary("cos", e.arg)
        elif e.op == "cos":
            outer = neg(Unary("sin", e.arg))
        elif e.op == "exp":
            outer = e
        else:  # tanh' = 1 - tanh^2
            outer = sub(ONE, power(e, 2))
        return mul(outer, da)
    if isinstance(e, Pow):
        db = _diff(e.base, v)
        if e.exponent == 0 or db.is_const(0.0):
            return ZERO
        return mul(mul(Const(float(e.exponent)), power(e.base, e.exponent - 1)), db)
    a, b = e.left, e.right
    da, db = _diff(a, v), _diff(b, v)
    if e.op == "+":
        return add(da, db)
    if e.op == "-":
        return sub(da, db)
    if e.op == "*":
        return add(mul(da, b), mul(a, db))
    # quotient rule
    num = sub(mul(da, b), mul(a, db))
    return div(num, power(b, 2))


# ---------------------------------------------------------------------------
# printing

_PREC = {"+": 1, "-": 1, "*": 2, "/": 2, "neg": 3, "^": 4}


def _fmt_const(value):
    if value == int(value) and abs(value) < 1e15:
        return str(int(value))
    return repr(value)


def _to_str(e, parent_prec):
    if isinstance(e, Const):
        s = _fmt_const(abs(e.value))
        if e.value < 0 or (e.value == 0 and math.copysign(1.0, e.value) < 0):
            s = "-" + s
            return f"({s})" if parent_prec > 0 else s
        return s
    if isinstance(e, Var):
        return e.name
    if isinstance(e, Unary):
        if e.op == "neg":
            s = "-" + _to_str(e.arg, _PREC["neg"])
            return f"({s})" if parent_prec > _PREC["neg"] or parent_prec > 0 else s
        return f"{e.op}({_to_str(e.arg, 0)})"
    if isinstance(e, Pow):
        return f"{_to_str(e.base, _PREC['^'] + 1)}^{e.exponent}"
    prec = _PREC[e.op]
    left = _to_str(e.left, prec)
    # left associativity: right operand of - and / needs parentheses at equal precedence
    right = _to_str(e.right, prec + 1)
    s = f"{left} {e.op} {right}" if prec == 1 else f"{left}*{right}" if e.op == "*" else f"{left}/{right}"
    return f"({s})" if prec < parent_prec else s
