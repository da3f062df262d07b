"""Chart-function expressions and second-order jet arithmetic.

Grammar (whitespace-insensitive)::

    expr     := term (("+" | "-") term)*
    term     := unary (("*" | "/") unary)*
    unary    := ("-" | "+") unary | power
    power    := primary ("^" unary)?          # right associative
    primary  := NUMBER | VAR | FUNC "(" expr ")" | "(" expr ")"
    VAR      := "x" DIGITS                    # x1 .. xD
    FUNC     := "sin" | "cos" | "exp" | "log" | "sqrt"
    NUMBER   := decimal or scientific literal, e.g. 2, 0.5, 1e-3

Exponents must be constant sub-expressions; they are folded to a float at
parse time.  Binding strength is ``^`` > unary minus > ``* /`` > ``+ -``, so
``-x1^2`` parses as ``-(x1^2)``.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Union

import numpy as np

__all__ = [
    "Expression",
    "Const",
    "Var",
    "Unary",
    "Binary",
    "Pow",
    "ExpressionError",
    "ExpressionSyntaxError",
    "UnknownIdentifierError",
    "VariableIndexError",
    "ExpressionDomainError",
    "Jet2",
    "ComplexJet2",
    "parse",
    "to_string",
    "eval_jet2",
    "eval_value",
    "diff",
    "variables",
]

FUNCTIONS = ("sin", "cos", "exp", "log", "sqrt")


class ExpressionError(ValueError):
    pass


class ExpressionSyntaxError(ExpressionError):
    def __init__(self, message: str, position: int, source: str = ""):
        self.position = position
        self.source = source
        super().__init__(f"{message} at position {position}")


class UnknownIdentifierError(ExpressionSyntaxError):
    pass


class VariableIndexError(ExpressionSyntaxError):
    pass


class ExpressionDomainError(ArithmeticError):
    """Raised when an expression is evaluated outside its domain."""

    def __init__(self, message: str, node: "Expression"):
        self.node = node
        super().__init__(f"{message} in '{to_string(node)}'")


# ---------------------------------------------------------------------------
# expression tree
# ---------------------------------------------------------------------------
@dataclass(frozen=True)
class Const:
    value: float


@dataclass(frozen=True)
class Var:
    index: int  # 1-based, as written in the source


@dataclass(frozen=True)
class Unary:
    op: str  # "neg" or one of FUNCTIONS
    arg: "Expression"


@dataclass(frozen=True)
class Binary:
    op: str  # "+", "-", "*", "/"
    left: "Expression"
    right: "Expression"


@dataclass(frozen=True)
class Pow:
    base: "Expression"
    exponent: float


Expression = Union[Const, Var, Unary, Binary, Pow]


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------
_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)|(?P<id>[A-Za-z_]\w*)|(?P<op>[-+*/^()]))"
)


def _tokenize(src: str):
    tokens = []
    pos = 0
    while pos < len(src):
        if src[pos:].strip() == "":
            break
        m = _TOKEN.match(src, pos)
        if m is None or m.end() == pos:
            bad = pos + (len(src[pos:]) - len(src[pos:].lstrip()))
            raise ExpressionSyntaxError(f"unexpected character {src[bad]!r}", bad, src)
        kind = m.lastgroup
        start = m.start(kind)
        tokens.append((kind, m.group(kind), start))
        pos = m.end()
    tokens.append(("end", "", len(src)))
    return tokens


class _Parser:
    def __init__(self, src: str, dim: int):
        self.src = src
        self.dim = dim
        self.tokens = _tokenize(src)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, value):
        kind, val, pos = self.take()
        if val != value or kind != "op":
            found = "end of input" if kind == "end" else repr(val)
            raise ExpressionSyntaxError(f"expected {value!r}, found {found}", pos, self.src)

    def parse(self) -> Expression:
        node = self.expr()
        kind, val, pos = self.peek()
        if kind != "end":
            raise ExpressionSyntaxError(f"unexpected token {val!r}", pos, self.src)
        return node

    def expr(self):
        node = self.term()
        while self.peek()[0] == "op" and self.peek()[1] in "+-":
            op = self.take()[1]
            node = Binary(op, node, self.term())
        return node

    def term(self):
        node = self.unary()
        while self.peek()[0] == "op" and self.peek()[1] in "*/":
            op = self.take()[1]
            node = Binary(op, node, self.unary())
        return node

    def unary(self):
        kind, val, _ = self.peek()
        if kind == "op" and val == "-":
            self.take()
            return Unary("neg", self.unary())
        if kind == "op" and val == "+":
            self.take()
            return self.unary()
        return self.power()

    def power(self):
        base = self.primary()
        kind, val, pos = self.peek()
        if kind == "op" and val == "^":
            self.take()
            exp_pos = self.peek()[2]
            exponent = self.unary()
            if variables(exponent):
                raise ExpressionSyntaxError("exponent must be constant", exp_pos, self.src)
            return Pow(base, float(eval_value(exponent, np.zeros(0))))
        return base

    def primary(self):
        kind, val, pos = self.take()
        if kind == "num":
            return Const(float(val))
        if kind == "id":
            m = re.fullmatch(r"x(\d+)", val)
            if m:
                idx = int(m.group(1))
                if not 1 <= idx <= self.dim:
                    raise VariableIndexError(
                        f"variable {val} out of range for dimension {self.dim}", pos, self.src
                    )
                return Var(idx)
            if val in FUNCTIONS:
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                return Unary(val, arg)
            raise UnknownIdentifierError(f"unknown identifier {val!r}", pos, self.src)
        if kind == "op" and val == "(":
            node = self.expr()
            self.expect(")")
            return node
        found = "end of input" if kind == "end" else repr(val)
        raise ExpressionSyntaxError(f"unexpected {found}", pos, self.src)


def parse(source: str, dim: int) -> Expression:
    """Parse ``source`` into an expression over the variables x1..x{dim}."""
    if dim < 1:
        raise ValueError("dim must be >= 1")
    if not isinstance(source, str) or not source.strip():
        raise ExpressionSyntaxError("empty expression", 0, str(source))
    return _Parser(source, dim).parse()


def variables(e: Expression) -> set:
    if isinstance(e, Var):
        return {e.index}
    if isinstance(e, Const):
        return set()
    if isinstance(e, Unary):
        return variables(e.arg)
    if isinstance(e, Pow):
        return variables(e.base)
    return variables(e.left) | variables(e.right)


# ---------------------------------------------------------------------------
# printer
# ---------------------------------------------------------------------------
_PREC = {"+": 1, "-": 1, "*": 2, "/": 2}


def _prec(e: Expression) -> int:
    if isinstance(e, Binary):
        return _PREC[e.op]
    if isinstance(e, Unary) and e.op == "neg":
        return 3
    if isinstance(e, Pow):
        return 4
    return 5


def to_string(e: Expression) -> str:
    """Render an expression so that ``parse(to_string(e)) == e``."""
    if isinstance(e, Const):
        return repr(float(e.value))
    if isinstance(e, Var):
        return f"x{e.index}"
    if isinstance(e, Unary):
        if e.op == "neg":
            inner = to_string(e.arg)
            return f"-{inner}" if _prec(e.arg) >= 3 else f"-({inner})"
        return f"{e.op}({to_string(e.arg)})"
    if isinstance(e, Pow):
        base = to_string(e.base)
        if _prec(e.base) <= 4:
            base = f"({base})"
        return f"{base}^({e.exponent!r})"
    p = _PREC[e.op]
    left = to_string(e.left)
    if _prec(e.left) < p:
        left = f"({left})"
    right = to_string(e.right)
    # left-associative: the right operand needs brackets at equal precedence
    if _prec(e.right) <= p:
        right = f"({right})"
    return f"{left} {e.op} {right}"


# ---------------------------------------------------------------------------
# jets
# ---------------------------------------------------------------------------
class Jet2:
    """Value, gradient and Hessian of a scalar at a point."""

    __slots__ = ("value", "grad", "hess")

    def __init__(self, value, grad, hess, symmetrize: bool = True):
        self.value = float(value)
        self.grad = np.asarray(grad, dtype=float)
        hess = np.asarray(hess, dtype=float)
        self.hess = 0.5 * (hess + hess.T) if symmetrize else hess

    @classmethod
    def _raw(cls, value, grad, hess) -> "Jet2":
        obj = cls.__new__(cls)
        obj.value = value
        obj.grad = grad
        obj.hess = hess
        return obj

    @classmethod
    def constant(cls, c: float, dim: int) -> "Jet2":
        return cls._raw(float(c), np.zeros(dim), np.zeros((dim, dim)))

    @classmethod
    def variable(cls, index: int, x) -> "Jet2":
        dim = len(x)
        g = np.zeros(dim)
        g[index] = 1.0
        return cls._raw(float(x[index]), g, np.zeros((dim, dim)))

    @property
    def dim(self) -> int:
        return self.grad.shape[0]

    def __repr__(self):
        return f"Jet2(value={self.value!r}, grad={self.grad!r}, hess={self.hess!r})"

    def _lift(self, other) -> "Jet2":
        if isinstance(other, Jet2):
            return other
        return Jet2.constant(other, self.dim)

    def __add__(self, other):
        o = self._lift(other)
        return Jet2._raw(self.value + o.value, self.grad + o.grad, self.hess + o.hess)

    __radd__ = __add__

    def __sub__(self, other):
        o = self._lift(other)
        return Jet2._raw(self.value - o.value, self.grad - o.grad, self.hess - o.hess)

    def __rsub__(self, other):
        return self._lift(other) - self

    def __neg__(self):
        return Jet2._raw(-self.value, -self.grad, -self.hess)

    def __mul__(self, other):
        o = self._lift(other)
        a, b = self.value, o.value
        cross = np.outer(self.grad, o.grad)
        return Jet2._raw(
            a * b,
            a * o.grad + b * self.grad,
            a * o.hess + b * self.hess + cross + cross.T,
        )

    __rmul__ = __mul__

    def __truediv__(self, other):
        return self * self._lift(other).reciprocal()

    def __rtruediv__(self, other):
        return self._lift(other) * self.reciprocal()

    def chain(self, f0: float, f1: float, f2: float) -> "Jet2":
        """Compose with a univariate function whose derivatives at the value are f1, f2."""
        return Jet2._raw(f0, f1 * self.grad, f1 * self.hess + f2 * np.outer(self.grad, self.grad))

    def reciprocal(self) -> "Jet2":
        v = self.value
        if v == 0.0:
            raise ZeroDivisionError("reciprocal of zero jet")
        return self.chain(1.0 / v, -1.0 / v**2, 2.0 / v**3)

    def __pow__(self, k: float) -> "Jet2":
        v = self.value
        k = float(k)
        if k == 0.0:
            return Jet2.constant(1.0, self.dim)
        if k == 1.0:
            return self
        if not k.is_integer() and v <= 0.0:
            raise ValueError("non-integer power of a non-positive value")
        if k.is_integer():
            ki = int(k)
            if v == 0.0 and ki < 0:
                raise ZeroDivisionError("negative power of zero")
            f0 = v**ki
            f1 = ki * v ** (ki - 1) if ki != 1 else 1.0
            f2 = ki * (ki - 1) * v ** (ki - 2) if ki not in (0, 1) else 0.0
            return self.chain(f0, f1, f2)
        return self.chain(v**k, k * v ** (k - 1), k * (k - 1) * v ** (k - 2))


class ComplexJet2:
    """A complex scalar jet stored as real and imaginary :class:`Jet2` parts."""

    __slots__ = ("re", "im")

    def __init__(self, re: Jet2, im: Jet2 | None = None):
        self.re = re
        self.im = im if im is not None else Jet2.constant(0.0, re.dim)

    @property
    def value(self) -> complex:
        return complex(self.re.value, self.im.value)

    @property
    def grad(self) -> np.ndarray:
        return self.re.grad + 1j * self.im.grad

    @property
    def hess(self) -> np.ndarray:
        return self.re.hess + 1j * self.im.hess

    def _lift(self, other) -> "ComplexJet2":
        if isinstance(other, ComplexJet2):
            return other
        if isinstance(other, Jet2):
            return ComplexJet2(other)
        c = complex(other)
        d = self.re.dim
        return ComplexJet2(Jet2.constant(c.real, d), Jet2.constant(c.imag, d))

    def __add__(self, other):
        o = self._lift(other)
        return ComplexJet2(self.re + o.re, self.im + o.im)

    __radd__ = __add__

    def __sub__(self, other):
        o = self._lift(other)
        return ComplexJet2(self.re - o.re, self.im - o.im)

    def __neg__(self):
        return ComplexJet2(-self.re, -self.im)

    def __mul__(self, other):
        o = self._lift(other)
        return ComplexJet2(self.re * o.re - self.im * o.im, self.re * o.im + self.im * o.re)

    __rmul__ = __mul__

    def conj(self) -> "ComplexJet2":
        return ComplexJet2(self.re, -self.im)

    def abs2(self) -> Jet2:
        return self.re * self.re + self.im * self.im

    def __truediv__(self, other):
        o = self._lift(other)
        denom = o.abs2().reciprocal()
        num = self * o.conj()
        return ComplexJet2(num.re * denom, num.im * denom)


def _unary_jet(op: str, a: Jet2, node) -> Jet2:
    v = a.value
    if op == "neg":
        return -a
    if op == "sin":
        s, c = math.sin(v), math.cos(v)
        return a.chain(s, c, -s)
    if op == "cos":
        s, c = math.sin(v), math.cos(v)
        return a.chain(c, -s, -c)
    if op == "exp":
        ev = math.exp(v)
        return a.chain(ev, ev, ev)
    if op == "log":
        if v <= 0.0:
            raise ExpressionDomainError(f"log of non-positive value {v:g}", node)
        return a.chain(math.log(v), 1.0 / v, -1.0 / v**2)
    if op == "sqrt":
        if v <= 0.0:
            raise ExpressionDomainError(f"sqrt at non-positive value {v:g}", node)
        r = math.sqrt(v)
        return a.chain(r, 0.5 / r, -0.25 / (r * v))
    raise ValueError(f"unknown unary op {op}")


def eval_jet2(e: Expression, x) -> Jet2:
    """Value, gradient and Hessian of ``e`` at the chart point ``x``."""
    x = np.asarray(x, dtype=float)
    jet = _eval(e, x)
    return Jet2(jet.value, jet.grad, jet.hess)


def _eval(e, x) -> Jet2:
    if isinstance(e, Const):
        return Jet2.constant(e.value, len(x))
    if isinstance(e, Var):
        if e.index > len(x):
            raise ExpressionDomainError("variable index exceeds point dimension", e)
        return Jet2.variable(e.index - 1, x)
    if isinstance(e, Unary):
        return _unary_jet(e.op, _eval(e.arg, x), e)
    if isinstance(e, Pow):
        base = _eval(e.base, x)
        try:
            return base ** e.exponent
        except (ValueError, ZeroDivisionError) as exc:
            raise ExpressionDomainError(str(exc), e) from None
    left = _eval(e.left, x)
    right = _eval(e.right, x)
    if e.op == "+":
        return left + right
    if e.op == "-":
        return left - right
    if e.op == "*":
        return left * right
    if right.value == 0.0:
        raise ExpressionDomainError("division by zero", e)
    return left / right


def eval_value(e: Expression, x) -> float:
    """Plain value of ``e`` at ``x`` (no derivatives)."""
    if isinstance(e, Const):
        return e.value
    if isinstance(e, Var):
        return float(x[e.index - 1])
    if isinstance(e, Unary):
        v = eval_value(e.arg, x)
        if e.op == "neg":
            return -v
        if e.op == "log" and v <= 0.0:
            raise ExpressionDomainError(f"log of non-positive value {v:g}", e)
        if e.op == "sqrt" and v < 0.0:
            raise ExpressionDomainError(f"sqrt of negative value {v:g}", e)
        return getattr(math, e.op)(v)
    if isinstance(e, Pow):
        v = eval_value(e.base, x)
        k = e.exponent
        if not float(k).is_integer() and v < 0.0:
            raise ExpressionDomainError("non-integer power of a negative value", e)
        if v == 0.0 and k < 0:
            raise ExpressionDomainError("negative power of zero", e)
        return v**k
    a = eval_value(e.left, x)
    b = eval_value(e.right, x)
    if e.op == "+":
        return a + b
    if e.op == "-":
        return a - b
    if e.op == "*":
        return a * b
    if b == 0.0:
        raise ExpressionDomainError("division by zero", e)
    return a / b


# ---------------------------------------------------------------------------
# derivative trees (used where a third derivative of map components is needed)
# ---------------------------------------------------------------------------
_ZERO = Const(0.0)
_ONE = Const(1.0)


def _is_zero(e) -> bool:
    return isinstance(e, Const) and e.value == 0.0


def _mul(a, b):
    if _is_zero(a) or _is_zero(b):
        return _ZERO
    if a == _ONE:
        return b
    if b == _ONE:
        return a
    return Binary("*", a, b)


def _add(a, b):
    if _is_zero(a):
        return b
    if _is_zero(b):
        return a
    return Binary("+", a, b)


def _sub(a, b):
    if _is_zero(b):
        return a
    if _is_zero(a):
        return Unary("neg", b)
    return Binary("-", a, b)


def diff(e: Expression, index: int) -> Expression:
    """Partial derivative of ``e`` with respect to x{index} (1-based), as a tree."""
    if isinstance(e, Const):
        return _ZERO
    if isinstance(e, Var):
        return _ONE if e.index == index else _ZERO
    if isinstance(e, Unary):
        da = diff(e.arg, index)
        if _is_zero(da):
            return _ZERO
        a = e.arg
        if e.op == "neg":
            return Unary("neg", da)
        if e.op == "sin":
            return _mul(Unary("cos", a), da)
        if e.op == "cos":
            return Unary("neg", _mul(Unary("sin", a), da))
        if e.op == "exp":
            return _mul(e, da)
        if e.op == "log":
            return Binary("/", da, a)
        if e.op == "sqrt":
            return Binary("/", da, _mul(Const(2.0), e))
        raise ValueError(e.op)
    if isinstance(e, Pow):
        da = diff(e.base, index)
        if _is_zero(da):
            return _ZERO
        k = e.exponent
        lower = e.base if k - 1.0 == 1.0 else Pow(e.base, k - 1.0)
        return _mul(_mul(Const(k), lower), da)
    da, db = diff(e.left, index), diff(e.right, index)
    if e.op == "+":
        return _add(da, db)
    if e.op == "-":
        return _sub(da, db)
    if e.op == "*":
        return _add(_mul(da, e.right), _mul(e.left, db))
    # quotient rule: (da - (a/b) db) / b
    if _is_zero(db):
        return Binary("/", da, e.right) if not _is_zero(da) else _ZERO
    return Binary("/", _sub(da, _mul(e, db)), e.right)
