"""Scalar coordinate expressions with exact forward-mode derivative jets.

Grammar (recursive descent, standard precedence ^ > unary - > *,/ > +,-):

    expr   := term (('+'|'-') term)*
    term   := unary (('*'|'/') unary)*
    unary  := '-' unary | factor
    factor := base ('^' int)?
    base   := number | ident | func '(' expr ')' | '(' expr ')'
    func   := 'exp' | 'sin' | 'cos' | 'ln'
    ident  := 'x1' .. 'x<dim>'

Evaluation produces a ``Jet`` carrying the value together with the gradient,
Hessian and symmetric third-derivative array (order <= 3), computed by jet
arithmetic rather than finite differencing.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass

import numpy as np

FUNCTIONS = ("exp", "sin", "cos", "ln")


class ParseError(ValueError):
    """Syntax or identifier error, carrying the offset into the source text."""

    def __init__(self, message: str, position: int):
        super().__init__(f"{message} (at offset {position})")
        self.position = position


class EvalError(ValueError):
    """Domain error while evaluating an expression (division by zero, ln <= 0)."""


# ---------------------------------------------------------------------------
# Jets


def _sym_lone(m: np.ndarray) -> np.ndarray:
    # Symmetrize a (..., i, j | k) product term over the three placements of
    # the lone derivative index; input is symmetric in its first two axes.
    return m + np.einsum("...ikj->...ijk", m) + np.einsum("...jki->...ijk", m)


@dataclass(frozen=True)
class Jet:
    """Value plus derivatives up to the carried order at one point."""

    value: float
    grad: np.ndarray | None = None
    hess: np.ndarray | None = None
    third: np.ndarray | None = None

    @property
    def order(self) -> int:
        return sum(x is not None for x in (self.grad, self.hess, self.third))

    @staticmethod
    def constant(value: float, dim: int, order: int) -> "Jet":
        parts = [np.zeros((dim,) * k) for k in range(1, order + 1)]
        return Jet(float(value), *parts)

    @staticmethod
    def variable(value: float, index: int, dim: int, order: int) -> "Jet":
        jet = Jet.constant(value, dim, order)
        if order >= 1:
            jet.grad[index] = 1.0
        return jet

    def __add__(self, other: "Jet") -> "Jet":
        return _zip_jets(self, other, lambda a, b: a + b)

    def __sub__(self, other: "Jet") -> "Jet":
        return _zip_jets(self, other, lambda a, b: a - b)

    def __neg__(self) -> "Jet":
        parts = [None if p is None else -p for p in (self.grad, self.hess, self.third)]
        return Jet(-self.value, *parts)

    def __mul__(self, other: "Jet") -> "Jet":
        order = min(self.order, other.order)
        a, b = self, other
        value = a.value * b.value
        grad = hess = third = None
        if order >= 1:
            grad = a.grad * b.value + a.value * b.grad
        if order >= 2:
            cross = np.outer(a.grad, b.grad)
            hess = a.hess * b.value + a.value * b.hess + cross + cross.T
        if order >= 3:
            third = (
                a.third * b.value
                + a.value * b.third
                + _sym_lone(a.hess[:, :, None] * b.grad[None, None, :])
                + _sym_lone(b.hess[:, :, None] * a.grad[None, None, :])
            )
        return Jet(value, grad, hess, third)

    def __truediv__(self, other: "Jet") -> "Jet":
        if other.value == 0.0:
            raise EvalError("division by zero")
        return self * other._compose(
            1.0 / other.value,
            -1.0 / other.value**2,
            2.0 / other.value**3,
            -6.0 / other.value**4,
        )

    def _compose(self, f0: float, f1: float, f2: float, f3: float) -> "Jet":
        # Chain rule for a scalar function with derivative values f0..f3 at
        # self.value.
        order = self.order
        value = f0
        grad = hess = third = None
        if order >= 1:
            grad = f1 * self.grad
        if order >= 2:
            hess = f2 * np.outer(self.grad, self.grad) + f1 * self.hess
        if order >= 3:
            g = self.grad
            third = (
                f3 * g[:, None, None] * g[None, :, None] * g[None, None, :]
                + f2 * _sym_lone(self.hess[:, :, None] * g[None, None, :])
                + f1 * self.third
            )
        return Jet(value, grad, hess, third)

    def exp(self) -> "Jet":
        e = math.exp(self.value)
        return self._compose(e, e, e, e)

    def sin(self) -> "Jet":
        s, c = math.sin(self.value), math.cos(self.value)
        return self._compose(s, c, -s, -c)

    def cos(self) -> "Jet":
        s, c = math.sin(self.value), math.cos(self.value)
        return self._compose(c, -s, -c, s)

    def ln(self) -> "Jet":
        if self.value <= 0.0:
            raise EvalError("ln of non-positive value")
        v = self.value
        return self._compose(math.log(v), 1.0 / v, -1.0 / v**2, 2.0 / v**3)

    def powi(self, k: int) -> "Jet":
        if k == 0:
            dim = 0 if self.grad is None else self.grad.shape[0]
            return Jet.constant(1.0, dim, self.order)
        v = self.value
        if v == 0.0 and k < 0:
            raise EvalError("division by zero")

        def d(exponent: int) -> float:
            if v == 0.0:
                return 0.0 if exponent > 0 else (1.0 if exponent == 0 else math.inf)
            return float(v**exponent)

        return self._compose(
            d(k),
            k * d(k - 1),
            k * (k - 1) * d(k - 2),
            k * (k - 1) * (k - 2) * d(k - 3),
        )


def _zip_jets(a: Jet, b: Jet, op) -> Jet:
    order = min(a.order, b.order)
    parts_a = (a.grad, a.hess, a.third)
    parts_b = (b.grad, b.hess, b.third)
    parts = [op(parts_a[k], parts_b[k]) if k < order else None for k in range(3)]
    return Jet(op(a.value, b.value), *parts)


# ---------------------------------------------------------------------------
# Expression trees


class ScalarExpr:
    """Immutable expression node; subclasses implement _eval and _fmt."""

    def eval_jet(self, point: np.ndarray, order: int = 3) -> Jet:
        if not 0 <= order <= 3:
            raise ValueError("jet order must be between 0 and 3")
        point = np.asarray(point, dtype=float)
        return self._eval(point, order)

    def __call__(self, point: np.ndarray) -> float:
        return self.eval_jet(point, order=0).value

    def _eval(self, point: np.ndarray, order: int) -> Jet:
        raise NotImplementedError

    def __str__(self) -> str:
        return self._fmt(0)

    def _fmt(self, parent_prec: int) -> str:
        raise NotImplementedError


def _wrap(text: str, prec: int, parent_prec: int) -> str:
    return f"({text})" if prec < parent_prec else text


@dataclass(frozen=True)
class Const(ScalarExpr):
    value: float

    def _eval(self, point, order):
        return Jet.constant(self.value, point.shape[0], order)

    def _fmt(self, parent_prec):
        v = self.value
        text = str(int(v)) if float(v).is_integer() and abs(v) < 1e15 else repr(float(v))
        if v < 0:
            return _wrap(text, 3, parent_prec)
        return text


@dataclass(frozen=True)
class Var(ScalarExpr):
    index: int  # zero-based; prints as x<index+1>

    def _eval(self, point, order):
        if self.index >= point.shape[0]:
            raise EvalError(f"coordinate x{self.index + 1} out of range for point")
        return Jet.variable(point[self.index], self.index, point.shape[0], order)

    def _fmt(self, parent_prec):
        return f"x{self.index + 1}"


@dataclass(frozen=True)
class Binary(ScalarExpr):
    op: str
    left: ScalarExpr
    right: ScalarExpr

    _PREC = {"+": 1, "-": 1, "*": 2, "/": 2}

    def _eval(self, point, order):
        a = self.left._eval(point, order)
        b = self.right._eval(point, order)
        if self.op == "+":
            return a + b
        if self.op == "-":
            return a - b
        if self.op == "*":
            return a * b
        return a / b

    def _fmt(self, parent_prec):
        prec = self._PREC[self.op]
        left = self.left._fmt(prec)
        # Subtraction and division do not associate on the right.
        right = self.right._fmt(prec + (1 if self.op in "-/" else 0))
        return _wrap(f"{left} {self.op} {right}", prec, parent_prec)


@dataclass(frozen=True)
class Neg(ScalarExpr):
    operand: ScalarExpr

    def _eval(self, point, order):
        return -self.operand._eval(point, order)

    def _fmt(self, parent_prec):
        return _wrap(f"-{self.operand._fmt(3)}", 3, parent_prec)


@dataclass(frozen=True)
class Pow(ScalarExpr):
    base: ScalarExpr
    exponent: int

    def _eval(self, point, order):
        return self.base._eval(point, order).powi(self.exponent)

    def _fmt(self, parent_prec):
        return _wrap(f"{self.base._fmt(5)}^{self.exponent}", 4, parent_prec)


@dataclass(frozen=True)
class Func(ScalarExpr):
    name: str
    argument: ScalarExpr

    def _eval(self, point, order):
        return getattr(self.argument._eval(point, order), self.name)()

    def _fmt(self, parent_prec):
        return f"{self.name}({self.argument._fmt(0)})"


# ---------------------------------------------------------------------------
# Parser

_TOKEN_RE = re.compile(
    r"\s*(?:(?P<number>\d+(?:\.\d+)?(?:[eE][+-]?\d+)?)|(?P<ident>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>[-+*/^()]))"
)


class _Parser:
    def __init__(self, src: str, dim: int | None):
        self.src = src
        self.dim = dim
        self.pos = 0

    def error(self, message: str, position: int | None = None):
        raise ParseError(message, self.pos if position is None else position)

    def peek(self) -> tuple[str, str, int, int]:
        m = _TOKEN_RE.match(self.src, self.pos)
        if m is None:
            stripped = self.src[self.pos :].lstrip()
            if not stripped:
                return ("eof", "", len(self.src), len(self.src))
            at = self.pos + (len(self.src[self.pos :]) - len(stripped))
            self.error(f"unexpected character {stripped[0]!r}", at)
        kind = m.lastgroup or "op"
        return (kind, m.group(kind), m.start(kind), m.end())

    def take(self) -> tuple[str, str, int]:
        kind, text, start, end = self.peek()
        self.pos = end
        return (kind, text, start)

    def expect_op(self, op: str):
        kind, text, _, _ = self.peek()
        if kind != "op" or text != op:
            self.error(f"expected {op!r}")
        self.take()

    def parse(self) -> ScalarExpr:
        node = self.expr()
        kind, text, _, _ = self.peek()
        if kind != "eof":
            self.error(f"unexpected trailing input {text!r}")
        return node

    def expr(self) -> ScalarExpr:
        node = self.term()
        while True:
            kind, text, _, _ = self.peek()
            if kind == "op" and text in "+-":
                self.take()
                node = Binary(text, node, self.term())
            else:
                return node

    def term(self) -> ScalarExpr:
        node = self.unary()
        while True:
            kind, text, _, _ = self.peek()
            if kind == "op" and text in "*/":
                self.take()
                node = Binary(text, node, self.unary())
            else:
                return node

    def unary(self) -> ScalarExpr:
        kind, text, _, _ = self.peek()
        if kind == "op" and text == "-":
            self.take()
            return Neg(self.unary())
        return self.factor()

    def factor(self) -> ScalarExpr:
        node = self.base()
        kind, text, _, _ = self.peek()
        if kind == "op" and text == "^":
            self.take()
            node = Pow(node, self.int_literal())
        return node

    def int_literal(self) -> int:
        sign = 1
        kind, text, _, _ = self.peek()
        if kind == "op" and text == "-":
            self.take()
            sign = -1
        kind, text, start, _ = self.peek()
        if kind != "number" or any(c in text for c in ".eE"):
            self.error("expected integer exponent", start)
        self.take()
        return sign * int(text)

    def base(self) -> ScalarExpr:
        kind, text, start = self.take()
        if kind == "number":
            return Const(float(text))
        if kind == "ident":
            if text in FUNCTIONS:
                self.expect_op("(")
                arg = self.expr()
                self.expect_op(")")
                return Func(text, arg)
            m = re.fullmatch(r"x(\d+)", text)
            if m is None:
                self.error(f"unknown identifier {text!r}", start)
            index = int(m.group(1))
            if index < 1 or (self.dim is not None and index > self.dim):
                self.error(f"coordinate {text!r} out of range", start)
            return Var(index - 1)
        if kind == "op" and text == "(":
            node = self.expr()
            self.expect_op(")")
            return node
        if kind == "eof":
            self.error("unexpected end of input")
        self.error(f"unexpected token {text!r}", start)


def parse_expr(src: str, dim: int | None = None) -> ScalarExpr:
    """Parse an expression; identifiers are limited to x1..x<dim> when given."""
    if not src or not src.strip():
        raise ParseError("empty expression", 0)
    return _Parser(src, dim).parse()


def eval_jet(expr: ScalarExpr, point: np.ndarray, order: int = 3) -> Jet:
    """Evaluate with exact derivatives up to ``order`` (0..3)."""
    return expr.eval_jet(point, order)
