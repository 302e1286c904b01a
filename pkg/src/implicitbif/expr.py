"""Arithmetic expressions in the variables ``x``, ``y`` and ``alpha``.

Grammar (loosest to tightest binding)::

    expr  := term (('+' | '-') term)*
    term  := unary (('*' | '/') unary)*
    unary := '-' unary | power
    power := atom ('^' unary)?          # right-associative
    atom  := NUMBER | VAR | FUNC '(' expr ')' | '(' expr ')'

Expressions are immutable trees. ``differentiate`` returns exact symbolic
derivatives with light simplification (constant folding and removal of
additive/multiplicative identities). ``compile_expr`` turns a tree into a
fast Python callable with the same floating-point semantics as
``evaluate``.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Callable, Mapping, Union

from .errors import EvaluationDomainError, ExpressionSyntaxError, UnknownIdentifierError

VARIABLES = ("x", "y", "alpha")
FUNCTIONS = ("sin", "cos", "exp", "ln")

# integer exponents up to this size are evaluated by repeated multiplication
MAX_INT_POWER = 64

_PREC_ADD = 1
_PREC_MUL = 2
_PREC_NEG = 3
_PREC_POW = 4
_PREC_ATOM = 5


@dataclass(frozen=True)
class Num:
    value: float

    def __str__(self):
        return to_text(self)


@dataclass(frozen=True)
class Var:
    name: str

    def __str__(self):
        return to_text(self)


@dataclass(frozen=True)
class Neg:
    arg: "Expression"

    def __str__(self):
        return to_text(self)


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Expression"
    right: "Expression"

    def __str__(self):
        return to_text(self)


@dataclass(frozen=True)
class Call:
    func: str
    arg: "Expression"

    def __str__(self):
        return to_text(self)


Expression = Union[Num, Var, Neg, BinOp, Call]


# ---------------------------------------------------------------------------
# parsing

_TOKEN_RE = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<ident>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>[-+*/^()]))"
)


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens = []  # (kind, value, char_offset)
        pos = 0
        while pos < len(text):
            if text[pos:].strip() == "":
                break
            m = _TOKEN_RE.match(text, pos)
            if m is None or m.end() == pos:
                start = pos + len(text[pos:]) - len(text[pos:].lstrip())
                raise ExpressionSyntaxError(
                    f"unexpected character {text[start]!r}", self._byte(start))
            kind = m.lastgroup
            self.tokens.append((kind, m.group(kind), m.start(kind)))
            pos = m.end()
        self.i = 0

    def _byte(self, char_offset):
        return len(self.text[:char_offset].encode("utf-8"))

    def peek(self):
        if self.i < len(self.tokens):
            return self.tokens[self.i]
        return ("eof", None, len(self.text))

    def advance(self):
        tok = self.peek()
        self.i += 1
        return tok

    def fail(self, tok, what=None):
        kind, value, off = tok
        if kind == "eof":
            msg = "unexpected end of input"
        else:
            msg = f"unexpected token {value!r}"
        if what:
            msg += f", expected {what}"
        raise ExpressionSyntaxError(msg, self._byte(off))

    def expect_op(self, op):
        tok = self.advance()
        if tok[0] != "op" or tok[1] != op:
            self.fail(tok, repr(op))

    def parse(self):
        e = self.expr()
        tok = self.peek()
        if tok[0] != "eof":
            self.fail(tok)
        return e

    def expr(self):
        e = self.term()
        while self.peek()[0] == "op" and self.peek()[1] in "+-":
            op = self.advance()[1]
            e = BinOp(op, e, self.term())
        return e

    def term(self):
        e = self.unary()
        while self.peek()[0] == "op" and self.peek()[1] in "*/":
            op = self.advance()[1]
            e = BinOp(op, e, self.unary())
        return e

    def unary(self):
        if self.peek()[:2] == ("op", "-"):
            self.advance()
            return Neg(self.unary())
        return self.power()

    def power(self):
        base = self.atom()
        if self.peek()[:2] == ("op", "^"):
            self.advance()
            return BinOp("^", base, self.unary())
        return base

    def atom(self):
        tok = self.advance()
        kind, value, off = tok
        if kind == "num":
            v = float(value)
            if not math.isfinite(v):
                raise ExpressionSyntaxError("non-finite literal", self._byte(off))
            return Num(v)
        if kind == "ident":
            if value in VARIABLES:
                return Var(value)
            if value in FUNCTIONS:
                self.expect_op("(")
                arg = self.expr()
                self.expect_op(")")
                return Call(value, arg)
            raise UnknownIdentifierError(f"unknown identifier {value!r}", self._byte(off))
        if tok[:2] == ("op", "("):
            e = self.expr()
            self.expect_op(")")
            return e
        self.fail(tok, "number, variable, function or '('")


def parse(text: str) -> Expression:
    """Parse ``text`` into an expression tree.

    Raises:
        ExpressionSyntaxError: malformed input; ``offset`` locates the failure.
        UnknownIdentifierError: identifier that is neither a variable nor a function.
    """
    if not text or not text.strip():
        raise ExpressionSyntaxError("empty expression", 0)
    return _Parser(text).parse()


# ---------------------------------------------------------------------------
# serialization


def _fmt_number(v: float) -> str:
    if v == 0.0 and math.copysign(1.0, v) < 0:
        return "(-0.0)"
    if v.is_integer() and abs(v) < 1e15:
        s = str(int(v))
    else:
        s = repr(v)
    return f"({s})" if v < 0 else s


def _prec(e) -> int:
    if isinstance(e, BinOp):
        return {"+": _PREC_ADD, "-": _PREC_ADD, "*": _PREC_MUL, "/": _PREC_MUL, "^": _PREC_POW}[e.op]
    if isinstance(e, Neg):
        return _PREC_NEG
    return _PREC_ATOM


def to_text(e: Expression) -> str:
    """Canonical text form; ``parse(to_text(e))`` rebuilds the same tree shape."""
    if isinstance(e, Num):
        return _fmt_number(e.value)
    if isinstance(e, Var):
        return e.name
    if isinstance(e, Call):
        return f"{e.func}({to_text(e.arg)})"
    if isinstance(e, Neg):
        inner = to_text(e.arg)
        return f"-({inner})" if _prec(e.arg) < _PREC_NEG else f"-{inner}"
    p = _prec(e)
    left, right = to_text(e.left), to_text(e.right)
    if e.op == "^":
        if _prec(e.left) <= _PREC_POW:
            left = f"({left})"
        if _prec(e.right) < _PREC_NEG:
            right = f"({right})"
        return f"{left}^{right}"
    if _prec(e.left) < p:
        left = f"({left})"
    if _prec(e.right) <= p:
        right = f"({right})"
    return f"{left} {e.op} {right}"


# ---------------------------------------------------------------------------
# evaluation


def _div(a, b):
    if b == 0.0:
        raise EvaluationDomainError("division by zero")
    return a / b


def _ipow(base, n):
    if n == 0:
        return 1.0
    k = abs(n)
    r = base
    for _ in range(k - 1):
        r = r * base
    if n < 0:
        if r == 0.0:
            raise EvaluationDomainError("zero raised to a negative power")
        return 1.0 / r
    return r


def _pow(base, expo):
    if expo.is_integer() and abs(expo) <= MAX_INT_POWER:
        return _ipow(base, int(expo))
    if base > 0.0:
        try:
            return math.pow(base, expo)
        except OverflowError:
            raise EvaluationDomainError("overflow in power") from None
    if base == 0.0:
        if expo > 0.0:
            return 0.0
        raise EvaluationDomainError("zero raised to a non-positive power")
    if expo.is_integer():
        return math.pow(base, expo)
    raise EvaluationDomainError("negative base with non-integer exponent")


def _ln(a):
    if a <= 0.0:
        raise EvaluationDomainError("ln of non-positive argument")
    return math.log(a)


def _exp(a):
    try:
        return math.exp(a)
    except OverflowError:
        raise EvaluationDomainError("overflow in exp") from None


_FUNC_IMPL = {"sin": math.sin, "cos": math.cos, "exp": _exp, "ln": _ln}


def evaluate(e: Expression, bindings: Mapping[str, float]) -> float:
    """Evaluate ``e`` with IEEE double arithmetic.

    Raises:
        EvaluationDomainError: ln of a non-positive number, division by zero,
            zero to a negative power, overflow in exp.
    """
    if isinstance(e, Num):
        return e.value
    if isinstance(e, Var):
        return float(bindings[e.name])
    if isinstance(e, Neg):
        return -evaluate(e.arg, bindings)
    if isinstance(e, Call):
        return _FUNC_IMPL[e.func](evaluate(e.arg, bindings))
    a = evaluate(e.left, bindings)
    if e.op == "^":
        if _is_small_int(e.right):
            return _ipow(a, int(e.right.value))
        return _pow(a, evaluate(e.right, bindings))
    b = evaluate(e.right, bindings)
    if e.op == "+":
        return a + b
    if e.op == "-":
        return a - b
    if e.op == "*":
        return a * b
    return _div(a, b)


def _is_small_int(e) -> bool:
    return isinstance(e, Num) and e.value.is_integer() and abs(e.value) <= MAX_INT_POWER


def _py_source(e) -> str:
    if isinstance(e, Num):
        return repr(e.value)
    if isinstance(e, Var):
        return e.name
    if isinstance(e, Neg):
        return f"(-{_py_source(e.arg)})"
    if isinstance(e, Call):
        return f"_{e.func}({_py_source(e.arg)})"
    a = _py_source(e.left)
    if e.op == "^":
        if _is_small_int(e.right):
            n = int(e.right.value)
            if isinstance(e.left, Var) and 0 < n <= 8:
                return "(" + "*".join([a] * n) + ")"
            return f"_ipow({a}, {n})"
        return f"_pow({a}, {_py_source(e.right)})"
    b = _py_source(e.right)
    if e.op == "/":
        return f"_div({a}, {b})"
    return f"({a} {e.op} {b})"


_COMPILE_NS = {
    "_div": _div, "_ipow": _ipow, "_pow": _pow,
    "_sin": math.sin, "_cos": math.cos, "_exp": _exp, "_ln": _ln,
}


def compile_expr(e: Expression) -> Callable[[float, float, float], float]:
    """Return ``f(x, y, alpha)`` computing exactly what ``evaluate`` computes."""
    src = f"lambda x, y, alpha: float({_py_source(e)})"
    return eval(compile(src, "<expr>", "eval"), dict(_COMPILE_NS))


# ---------------------------------------------------------------------------
# symbolic differentiation

ZERO = Num(0.0)
ONE = Num(1.0)


def _is(e, v) -> bool:
    return isinstance(e, Num) and e.value == v


def _fold(fn, *args):
    try:
        v = fn(*args)
    except (EvaluationDomainError, ValueError, OverflowError):
        return None
    return Num(v) if math.isfinite(v) else None


def neg(a):
    if isinstance(a, Num):
        return Num(-a.value)
    if isinstance(a, Neg):
        return a.arg
    return Neg(a)


def add(a, b):
    if isinstance(a, Num) and isinstance(b, Num):
        return Num(a.value + b.value)
    if _is(a, 0.0):
        return b
    if _is(b, 0.0):
        return a
    return BinOp("+", a, b)


def sub(a, b):
    if isinstance(a, Num) and isinstance(b, Num):
        return Num(a.value - b.value)
    if _is(b, 0.0):
        return a
    if _is(a, 0.0):
        return neg(b)
    return BinOp("-", a, b)


def mul(a, b):
    if isinstance(a, Num) and isinstance(b, Num):
        return Num(a.value * b.value)
    if _is(a, 0.0) or _is(b, 0.0):
        return ZERO
    if _is(a, 1.0):
        return b
    if _is(b, 1.0):
        return a
    if _is(a, -1.0):
        return neg(b)
    if _is(b, -1.0):
        return neg(a)
    return BinOp("*", a, b)


def div(a, b):
    if isinstance(a, Num) and isinstance(b, Num):
        folded = _fold(_div, a.value, b.value)
        if folded is not None:
            return folded
    if _is(a, 0.0) and not _is(b, 0.0):
        return ZERO
    if _is(b, 1.0):
        return a
    return BinOp("/", a, b)


def power(a, b):
    if _is(b, 1.0):
        return a
    if _is(b, 0.0):
        return ONE
    if isinstance(a, Num) and isinstance(b, Num):
        folded = _fold(_pow, a.value, b.value)
        if folded is not None:
            return folded
    return BinOp("^", a, b)


def call(func, a):
    if isinstance(a, Num):
        folded = _fold(_FUNC_IMPL[func], a.value)
        if folded is not None:
            return folded
    return Call(func, a)


def differentiate(e: Expression, var: str) -> Expression:
    """Exact derivative of ``e`` with respect to ``var``."""
    if var not in VARIABLES:
        raise ValueError(f"unknown variable {var!r}")
    return _d(e, var)


def _d(e, v):
    if isinstance(e, Num):
        return ZERO
    if isinstance(e, Var):
        return ONE if e.name == v else ZERO
    if isinstance(e, Neg):
        return neg(_d(e.arg, v))
    if isinstance(e, Call):
        da = _d(e.arg, v)
        if _is(da, 0.0):
            return ZERO
        a = e.arg
        if e.func == "sin":
            return mul(call("cos", a), da)
        if e.func == "cos":
            return neg(mul(call("sin", a), da))
        if e.func == "exp":
            return mul(call("exp", a), da)
        return div(da, a)
    a, b = e.left, e.right
    if e.op in "+-":
        da, db = _d(a, v), _d(b, v)
        return add(da, db) if e.op == "+" else sub(da, db)
    if e.op == "*":
        return add(mul(_d(a, v), b), mul(a, _d(b, v)))
    if e.op == "/":
        da, db = _d(a, v), _d(b, v)
        return sub(div(da, b), div(mul(a, db), power(b, Num(2.0))))
    # power
    if isinstance(b, Num) and b.value.is_integer():
        da = _d(a, v)
        return mul(mul(b, power(a, Num(b.value - 1.0))), da)
    # a^b = exp(b ln a)  =>  a^b (b' ln a + b a'/a)
    da, db = _d(a, v), _d(b, v)
    inner = add(mul(db, call("ln", a)), div(mul(b, da), a))
    return mul(e, inner)


# ---------------------------------------------------------------------------
# utilities


def variables(e: Expression) -> frozenset:
    if isinstance(e, Num):
        return frozenset()
    if isinstance(e, Var):
        return frozenset([e.name])
    if isinstance(e, (Neg, Call)):
        return variables(e.arg)
    return variables(e.left) | variables(e.right)


def substitute(e: Expression, mapping: Mapping[str, Expression]) -> Expression:
    """Replace variables by expressions (simultaneously)."""
    if isinstance(e, Num):
        return e
    if isinstance(e, Var):
        return mapping.get(e.name, e)
    if isinstance(e, Neg):
        return Neg(substitute(e.arg, mapping))
    if isinstance(e, Call):
        return Call(e.func, substitute(e.arg, mapping))
    return BinOp(e.op, substitute(e.left, mapping), substitute(e.right, mapping))
