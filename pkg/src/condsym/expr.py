"""Immutable symbolic expressions over a small variable alphabet.

Trees are built from numeric literals (exact rationals or floats), variables,
the unary functions sin/cos/exp/log/sqrt plus negation, and the binary
operations + - * / ^.  Nodes are hashable and compare structurally.  All
operations here are pure; the light folding done by the smart constructors
(constant folding, 0/1 absorption) is the only rewriting applied implicitly.

Two evaluators are provided: ``evaluate`` is the strict scalar one that
reports domain errors together with the offending subexpression, and
``compile_fn`` builds a fast numpy-compatible closure for grid work where
non-finite values are filtered by the caller.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterable, Mapping, Sequence, Union

import numpy as np

Number = Union[int, float, Fraction]

DEFAULT_VARIABLES = frozenset({"y", "z", "u", "omega", "phi", "t", "x"})
FUNCTION_NAMES = ("sin", "cos", "exp", "log", "sqrt")

_IDENT_RE = re.compile(r"[A-Za-z][A-Za-z0-9_]*\Z")


class ExprError(Exception):
    """Base class for expression-level failures."""


class EvalDomainError(ExprError):
    """Evaluation left the real domain (division by zero, log(<=0), ...)."""

    def __init__(self, message: str, subexpr: "Expr"):
        super().__init__(f"{message} in '{subexpr}'")
        self.subexpr = subexpr


class UnboundVariableError(ExprError):
    def __init__(self, name: str):
        super().__init__(f"no value bound for variable '{name}'")
        self.name = name


@dataclass(frozen=True, slots=True, repr=False)
class Expr:
    """Base node.  Arithmetic operators build lightly folded trees."""

    def __repr__(self) -> str:
        return to_string(self)

    __str__ = __repr__

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

    def __pow__(self, other):
        return pow_(self, as_expr(other))

    def __rpow__(self, other):
        return pow_(as_expr(other), self)

    def __neg__(self):
        return neg(self)


@dataclass(frozen=True, slots=True, repr=False)
class Num(Expr):
    """Numeric literal.  Exact ``Fraction`` or 64-bit float, never negative;
    negative constants are represented as ``neg`` of a literal so that
    printing and re-parsing round-trip structurally."""

    value: Union[Fraction, float]

    def __post_init__(self):
        v = self.value
        if isinstance(v, int):
            v = Fraction(v)
            object.__setattr__(self, "value", v)
        if isinstance(v, Fraction):
            if v < 0:
                raise ValueError("literal nodes are non-negative; wrap in neg")
            return
        if isinstance(v, float):
            if not math.isfinite(v):
                raise ValueError("literal nodes must be finite")
            if v < 0:
                raise ValueError("literal nodes are non-negative; wrap in neg")
            if v == 0.0:
                object.__setattr__(self, "value", 0.0)  # normalize -0.0
            return
        raise TypeError(f"unsupported literal type {type(v).__name__}")


@dataclass(frozen=True, slots=True, repr=False)
class Var(Expr):
    name: str

    def __post_init__(self):
        if not _IDENT_RE.match(self.name):
            raise ValueError(f"invalid variable name {self.name!r}")


@dataclass(frozen=True, slots=True, repr=False)
class Unary(Expr):
    """Unary node; ``fn`` is one of sin, cos, exp, log, sqrt, neg."""

    fn: str
    arg: Expr

    def __post_init__(self):
        if self.fn not in ("sin", "cos", "exp", "log", "sqrt", "neg"):
            raise ValueError(f"unknown unary function {self.fn!r}")


@dataclass(frozen=True, slots=True, repr=False)
class BinOp(Expr):
    op: str
    lhs: Expr
    rhs: Expr

    def __post_init__(self):
        if self.op not in "+-*/^":
            raise ValueError(f"unknown operator {self.op!r}")


ZERO = Num(Fraction(0))
ONE = Num(Fraction(1))


def var(name: str) -> Var:
    return Var(name)


def as_expr(v) -> Expr:
    if isinstance(v, Expr):
        return v
    if isinstance(v, (int, float, Fraction)):
        return num(v)
    raise TypeError(f"cannot interpret {type(v).__name__} as an expression")


def num(v: Number) -> Expr:
    """Literal constructor; negative values come back as neg(<literal>)."""
    if isinstance(v, (int, Fraction)):
        f = Fraction(v)
        return Unary("neg", Num(-f)) if f < 0 else Num(f)
    if isinstance(v, float):
        return Unary("neg", Num(-v)) if v < 0 else Num(v)
    raise TypeError(f"unsupported numeric type {type(v).__name__}")


def _is_lit(e: Expr, value) -> bool:
    return isinstance(e, Num) and e.value == value


def _lit_value(e: Expr):
    """Numeric value of a literal or negated literal, else None."""
    if isinstance(e, Num):
        return e.value
    if isinstance(e, Unary) and e.fn == "neg" and isinstance(e.arg, Num):
        return -e.arg.value
    return None


def _fold(value) -> Expr:
    if isinstance(value, Fraction):
        return num(value)
    if isinstance(value, float) and math.isfinite(value):
        return num(value)
    raise OverflowError


# Smart constructors.  They fold literal arithmetic (exactly for rationals,
# except that quotients and powers stay symbolic unless the result is an
# integer, so no non-integral Fraction literal is ever materialized) and
# absorb 0/1.  Parsed trees never pass through them; see parser.parse.

def add(a: Expr, b: Expr) -> Expr:
    va, vb = _lit_value(a), _lit_value(b)
    if va is not None and vb is not None:
        try:
            return _fold(va + vb)
        except OverflowError:
            pass
    if _is_lit(a, 0):
        return b
    if _is_lit(b, 0):
        return a
    return BinOp("+", a, b)


def sub(a: Expr, b: Expr) -> Expr:
    va, vb = _lit_value(a), _lit_value(b)
    if va is not None and vb is not None:
        try:
            return _fold(va - vb)
        except OverflowError:
            pass
    if _is_lit(b, 0):
        return a
    if _is_lit(a, 0):
        return neg(b)
    if a == b:
        return ZERO
    return BinOp("-", a, b)


def mul(a: Expr, b: Expr) -> Expr:
    sign = 1
    if isinstance(a, Unary) and a.fn == "neg":
        sign, a = -sign, a.arg
    if isinstance(b, Unary) and b.fn == "neg":
        sign, b = -sign, b.arg
    out = _mul_pos(a, b)
    return out if sign > 0 else neg(out)


def _mul_pos(a: Expr, b: Expr) -> Expr:
    if isinstance(a, Num) and isinstance(b, Num):
        try:
            return _fold(a.value * b.value)
        except OverflowError:
            pass
    if _is_lit(a, 0) or _is_lit(b, 0):
        return ZERO
    if _is_lit(a, 1):
        return b
    if _is_lit(b, 1):
        return a
    if isinstance(b, Num) and not isinstance(a, Num):
        a, b = b, a  # constants read better on the left
    return BinOp("*", a, b)


def div(a: Expr, b: Expr) -> Expr:
    sign = 1
    if isinstance(a, Unary) and a.fn == "neg":
        sign, a = -sign, a.arg
    if isinstance(b, Unary) and b.fn == "neg":
        sign, b = -sign, b.arg
    out = _div_pos(a, b)
    return out if sign > 0 else neg(out)


def _div_pos(a: Expr, b: Expr) -> Expr:
    if isinstance(b, Num) and b.value != 0:
        if isinstance(a, Num):
            if isinstance(a.value, Fraction) and isinstance(b.value, Fraction):
                q = a.value / b.value
                if q.denominator == 1:
                    return num(q)
            else:
                try:
                    return _fold(float(a.value) / float(b.value))
                except OverflowError:
                    pass
        if b.value == 1:
            return a
    if _is_lit(a, 0) and not _is_lit(b, 0):
        return ZERO
    return BinOp("/", a, b)


def pow_(a: Expr, b: Expr) -> Expr:
    if _is_lit(b, 1):
        return a
    if _is_lit(b, 0):
        return ONE
    if _is_lit(a, 1):
        return ONE
    vb = _lit_value(b)
    if isinstance(a, Num) and vb is not None:
        n = _as_int(vb)
        if n is not None and abs(n) <= 64:
            if isinstance(a.value, Fraction):
                if not (a.value == 0 and n < 0):
                    q = a.value ** n
                    if q.denominator == 1 and q.numerator.bit_length() <= 64:
                        return num(q)
            else:
                try:
                    return _fold(math.pow(float(a.value), n))
                except (OverflowError, ValueError):
                    pass
    return BinOp("^", a, b)


def _as_int(v):
    if isinstance(v, Fraction) and v.denominator == 1:
        return int(v)
    if isinstance(v, float) and v.is_integer() and abs(v) < 2**53:
        return int(v)
    return None


def neg(a: Expr) -> Expr:
    if _is_lit(a, 0):
        return ZERO
    if isinstance(a, Unary) and a.fn == "neg":
        return a.arg
    return Unary("neg", a)


def sin(a: Expr) -> Expr:
    if _is_lit(a, 0):
        return ZERO
    return Unary("sin", a)


def cos(a: Expr) -> Expr:
    if _is_lit(a, 0):
        return ONE
    return Unary("cos", a)


def exp(a: Expr) -> Expr:
    if _is_lit(a, 0):
        return ONE
    return Unary("exp", a)


def log(a: Expr) -> Expr:
    if _is_lit(a, 1):
        return ZERO
    return Unary("log", a)


def sqrt(a: Expr) -> Expr:
    if _is_lit(a, 0):
        return ZERO
    if _is_lit(a, 1):
        return ONE
    if isinstance(a, Num) and isinstance(a.value, Fraction):
        r = _exact_sqrt(a.value)
        if r is not None:
            return num(r)
    return Unary("sqrt", a)


def _exact_sqrt(q: Fraction):
    if q < 0:
        return None
    pn, pd = math.isqrt(q.numerator), math.isqrt(q.denominator)
    if pn * pn == q.numerator and pd * pd == q.denominator:
        return Fraction(pn, pd)
    return None


def free_variables(e: Expr) -> frozenset:
    out = set()
    stack = [e]
    while stack:
        n = stack.pop()
        if isinstance(n, Var):
            out.add(n.name)
        elif isinstance(n, Unary):
            stack.append(n.arg)
        elif isinstance(n, BinOp):
            stack.append(n.lhs)
            stack.append(n.rhs)
    return frozenset(out)


def substitute(e: Expr, name, replacement: Expr) -> Expr:
    """Replace every occurrence of a variable, preserving structure."""
    target = name.name if isinstance(name, Var) else str(name)
    replacement = as_expr(replacement)

    def walk(n: Expr) -> Expr:
        if isinstance(n, Var):
            return replacement if n.name == target else n
        if isinstance(n, Unary):
            a = walk(n.arg)
            return n if a is n.arg else Unary(n.fn, a)
        if isinstance(n, BinOp):
            l, r = walk(n.lhs), walk(n.rhs)
            return n if (l is n.lhs and r is n.rhs) else BinOp(n.op, l, r)
        return n

    return walk(e)


def rename_variables(e: Expr, mapping: Mapping[str, str]) -> Expr:
    """Simultaneous variable renaming (safe for swaps like y <-> z)."""

    def walk(n: Expr) -> Expr:
        if isinstance(n, Var):
            new = mapping.get(n.name, n.name)
            return n if new == n.name else Var(new)
        if isinstance(n, Unary):
            a = walk(n.arg)
            return n if a is n.arg else Unary(n.fn, a)
        if isinstance(n, BinOp):
            l, r = walk(n.lhs), walk(n.rhs)
            return n if (l is n.lhs and r is n.rhs) else BinOp(n.op, l, r)
        return n

    return walk(e)


def differentiate(e: Expr, v) -> Expr:
    """Partial derivative with respect to a variable.

    Integer exponents use the power rule n*b^(n-1)*b' (valid for negative
    bases); non-integer or symbolic exponents use the general rule through
    log, which restricts the base to positive values.
    """
    name = v.name if isinstance(v, Var) else str(v)

    def d(n: Expr) -> Expr:
        if isinstance(n, Num):
            return ZERO
        if isinstance(n, Var):
            return ONE if n.name == name else ZERO
        if isinstance(n, Unary):
            da = d(n.arg)
            if n.fn == "neg":
                return neg(da)
            if n.fn == "sin":
                return mul(cos(n.arg), da)
            if n.fn == "cos":
                return neg(mul(sin(n.arg), da))
            if n.fn == "exp":
                return mul(n, da)
            if n.fn == "log":
                return div(da, n.arg)
            return div(da, mul(num(2), n))  # sqrt
        assert isinstance(n, BinOp)
        if n.op == "+":
            return add(d(n.lhs), d(n.rhs))
        if n.op == "-":
            return sub(d(n.lhs), d(n.rhs))
        if n.op == "*":
            return add(mul(d(n.lhs), n.rhs), mul(n.lhs, d(n.rhs)))
        if n.op == "/":
            return div(sub(mul(d(n.lhs), n.rhs), mul(n.lhs, d(n.rhs))),
                       pow_(n.rhs, num(2)))
        # power
        vb = _lit_value(n.rhs)
        k = _as_int(vb) if vb is not None else None
        if k is not None:
            return mul(mul(num(k), pow_(n.lhs, num(k - 1))), d(n.lhs))
        return mul(n, add(mul(d(n.rhs), log(n.lhs)),
                          div(mul(n.rhs, d(n.lhs)), n.lhs)))

    return d(e)


def evaluate(e: Expr, bindings: Mapping[str, float]) -> float:
    """Strict scalar evaluation in 64-bit floats.

    Raises EvalDomainError naming the offending subexpression instead of
    returning non-finite values, and UnboundVariableError for missing
    bindings.
    """
    return _eval(e, bindings, None)


def evaluate_with_scale(e: Expr, bindings: Mapping[str, float]):
    """Like evaluate, but also returns the largest intermediate magnitude
    met during the walk (used for scale-relative zero testing)."""
    box = [0.0]
    v = _eval(e, bindings, box)
    return v, box[0]


def _eval(e: Expr, b: Mapping[str, float], scale) -> float:
    if isinstance(e, Num):
        v = float(e.value)
    elif isinstance(e, Var):
        try:
            v = float(b[e.name])
        except KeyError:
            raise UnboundVariableError(e.name) from None
    elif isinstance(e, Unary):
        a = _eval(e.arg, b, scale)
        if e.fn == "neg":
            v = -a
        elif e.fn == "sin":
            v = math.sin(a)
        elif e.fn == "cos":
            v = math.cos(a)
        elif e.fn == "exp":
            try:
                v = math.exp(a)
            except OverflowError:
                raise EvalDomainError("overflow", e) from None
        elif e.fn == "log":
            if a <= 0.0:
                raise EvalDomainError("log of a non-positive value", e)
            v = math.log(a)
        else:
            if a < 0.0:
                raise EvalDomainError("square root of a negative value", e)
            v = math.sqrt(a)
    else:
        l = _eval(e.lhs, b, scale)
        r = _eval(e.rhs, b, scale)
        if e.op == "+":
            v = l + r
        elif e.op == "-":
            v = l - r
        elif e.op == "*":
            v = l * r
        elif e.op == "/":
            if r == 0.0:
                raise EvalDomainError("division by zero", e)
            v = l / r
        else:
            try:
                v = math.pow(l, r)
            except (ValueError, OverflowError):
                raise EvalDomainError("invalid power", e) from None
    if not math.isfinite(v):
        raise EvalDomainError("non-finite value", e)
    if scale is not None and abs(v) > scale[0]:
        scale[0] = abs(v)
    return v


_NP_UNARY = {"sin": np.sin, "cos": np.cos, "exp": np.exp,
             "log": np.log, "sqrt": np.sqrt}


def compile_fn(e: Expr, names: Sequence[str]) -> Callable:
    """Compile to a closure over positional arguments (scalars or arrays).

    Warnings are suppressed; domain violations surface as nan/inf in the
    result, which grid-level callers check for.
    """
    missing = free_variables(e) - set(names)
    if missing:
        raise ValueError(f"unbound variables in compiled expression: {sorted(missing)}")
    index = {n: i for i, n in enumerate(names)}
    f = _compile(e, index)

    def call(*args):
        vals = tuple(np.float64(a) if isinstance(a, (int, float)) else
                     np.asarray(a, dtype=float) for a in args)
        with np.errstate(all="ignore"):
            return f(vals)

    return call


def _compile(e: Expr, index):
    if isinstance(e, Num):
        c = float(e.value)
        return lambda v: c
    if isinstance(e, Var):
        i = index[e.name]
        return lambda v: v[i]
    if isinstance(e, Unary):
        g = _compile(e.arg, index)
        if e.fn == "neg":
            return lambda v: -g(v)
        fn = _NP_UNARY[e.fn]
        return lambda v: fn(g(v))
    gl = _compile(e.lhs, index)
    gr = _compile(e.rhs, index)
    op = e.op
    if op == "+":
        return lambda v: gl(v) + gr(v)
    if op == "-":
        return lambda v: gl(v) - gr(v)
    if op == "*":
        return lambda v: gl(v) * gr(v)
    if op == "/":
        return lambda v: gl(v) / gr(v)
    k = _as_int(_lit_value(e.rhs)) if _lit_value(e.rhs) is not None else None
    if k is not None:
        return lambda v: gl(v) ** k
    return lambda v: np.power(gl(v), gr(v))


# Printing.  Minimal-parenthesis form by default; full_parens wraps every
# operation so reports stay trivially reparseable.

_PREC_ADD, _PREC_MUL, _PREC_NEG, _PREC_POW, _PREC_ATOM = 10, 20, 25, 30, 100


def to_string(e: Expr, full_parens: bool = False) -> str:
    return _fmt(e, 0, full_parens)


def _fmt(e: Expr, ctx: int, full: bool) -> str:
    if isinstance(e, Num):
        v = e.value
        if isinstance(v, Fraction):
            if v.denominator == 1:
                return str(v.numerator)
            s = f"{v.numerator}/{v.denominator}"
            return f"({s})" if (full or ctx > _PREC_MUL) else s
        return repr(v)
    if isinstance(e, Var):
        return e.name
    if isinstance(e, Unary):
        if e.fn == "neg":
            s = "-" + _fmt(e.arg, _PREC_POW, full)
            return f"({s})" if (full or ctx > _PREC_NEG) else s
        return f"{e.fn}({_fmt(e.arg, 0, full)})"
    op = e.op
    if op in "+-":
        s = f"{_fmt(e.lhs, _PREC_ADD, full)} {op} {_fmt(e.rhs, _PREC_ADD + 1, full)}"
        return f"({s})" if (full or ctx > _PREC_ADD) else s
    if op in "*/":
        s = f"{_fmt(e.lhs, _PREC_MUL, full)}{op}{_fmt(e.rhs, _PREC_MUL + 1, full)}"
        return f"({s})" if (full or ctx > _PREC_MUL) else s
    s = f"{_fmt(e.lhs, _PREC_POW + 1, full)}^{_fmt(e.rhs, _PREC_POW, full)}"
    return f"({s})" if (full or ctx > _PREC_POW) else s


# Simplification: best-effort local rewriting.  Constant folding, 0/1
# absorption, like-term collection on flattened sums, exponent collection on
# flattened products, log/exp cancellation.  Output order is deterministic
# (factors and terms sort by their printed form, constants last in sums).

def simplify(e: Expr) -> Expr:
    if isinstance(e, (Num, Var)):
        return e
    if isinstance(e, Unary):
        a = simplify(e.arg)
        if e.fn == "neg":
            return neg(a)
        if e.fn == "log" and isinstance(a, Unary) and a.fn == "exp":
            return a.arg
        if e.fn == "exp" and isinstance(a, Unary) and a.fn == "log":
            return a.arg
        return {"sin": sin, "cos": cos, "exp": exp, "log": log, "sqrt": sqrt}[e.fn](a)
    l, r = simplify(e.lhs), simplify(e.rhs)
    if e.op in "+-":
        return _collect_sum(BinOp(e.op, l, r))
    if e.op in "*/":
        return _collect_product(BinOp(e.op, l, r))
    if isinstance(l, BinOp) and l.op == "^":
        a, b = _as_int_or_none(l.rhs), _as_int_or_none(r)
        if a is not None and b is not None:
            return pow_(l.lhs, num(a * b))
    return pow_(l, r)


def _as_int_or_none(e: Expr):
    v = _lit_value(e)
    return None if v is None else _as_int(v)


def _split_coeff(t: Expr):
    """Peel a leading numeric coefficient off a canonical product."""
    if isinstance(t, Num):
        return t.value, ONE
    if isinstance(t, BinOp) and t.op == "*" and isinstance(t.lhs, Num):
        return t.lhs.value, t.rhs
    if isinstance(t, BinOp) and t.op == "/" and isinstance(t.rhs, Num) and t.rhs.value != 0:
        c, core = _split_coeff(t.lhs)
        if isinstance(c, Fraction) and isinstance(t.rhs.value, Fraction):
            return c / t.rhs.value, core
        return float(c) / float(t.rhs.value), core
    return Fraction(1), t


def _collect_sum(e: Expr) -> Expr:
    terms: list = []

    def walk(n: Expr, sgn: int):
        if isinstance(n, BinOp) and n.op == "+":
            walk(n.lhs, sgn)
            walk(n.rhs, sgn)
        elif isinstance(n, BinOp) and n.op == "-":
            walk(n.lhs, sgn)
            walk(n.rhs, -sgn)
        elif isinstance(n, Unary) and n.fn == "neg":
            walk(n.arg, -sgn)
        else:
            terms.append((sgn, n))

    walk(e, 1)
    combined: dict = {}
    order: list = []
    const = Fraction(0)
    const_f = None
    for sgn, t in terms:
        c, core = _split_coeff(t)
        if sgn < 0:
            c = -c
        if core == ONE:
            if isinstance(c, Fraction) and const_f is None:
                const += c
            else:
                const_f = (const_f or 0.0) + float(c)
            continue
        key = to_string(core)
        if key not in combined:
            combined[key] = [c, core]
            order.append(key)
        else:
            old = combined[key][0]
            if isinstance(old, Fraction) and isinstance(c, Fraction):
                combined[key][0] = old + c
            else:
                combined[key][0] = float(old) + float(c)

    out = None
    for key in sorted(order):
        c, core = combined[key]
        if c == 0:
            continue
        negative = c < 0
        mag = -c if negative else c
        term = _coeff_times(mag, core)
        if out is None:
            out = neg(term) if negative else term
        else:
            out = BinOp("-" if negative else "+", out, term)
    total_const = float(const) + const_f if const_f is not None else const
    if total_const != 0 or out is None:
        cterm = num(abs(total_const))
        negative = total_const < 0
        if out is None:
            out = neg(cterm) if negative else cterm
        else:
            out = BinOp("-" if negative else "+", out, cterm)
    return out


def _coeff_times(c, core: Expr) -> Expr:
    if c == 1:
        return core
    if isinstance(c, Fraction):
        if c.denominator == 1:
            return mul(num(c.numerator), core)
        return div(mul(num(c.numerator), core), num(c.denominator))
    return mul(num(c), core)


def _collect_product(e: Expr) -> Expr:
    factors: list = []
    coeff = [Fraction(1), None]  # exact part, float part
    bad = [False]

    def push_coeff(value, invert: bool):
        if value == 0 and invert:
            bad[0] = True
            return
        if isinstance(value, Fraction):
            coeff[0] = coeff[0] / value if invert else coeff[0] * value
        else:
            f = coeff[1] if coeff[1] is not None else 1.0
            coeff[1] = f / float(value) if invert else f * float(value)

    def walk(n: Expr, invert: bool):
        if isinstance(n, BinOp) and n.op == "*":
            walk(n.lhs, invert)
            walk(n.rhs, invert)
        elif isinstance(n, BinOp) and n.op == "/":
            walk(n.lhs, invert)
            walk(n.rhs, not invert)
        elif isinstance(n, Unary) and n.fn == "neg":
            push_coeff(Fraction(-1), False)
            walk(n.arg, invert)
        elif isinstance(n, Num):
            push_coeff(n.value, invert)
        else:
            expo = Fraction(1)
            base = n
            if isinstance(n, BinOp) and n.op == "^":
                ev = _lit_value(n.rhs)
                if ev is not None:
                    base, expo = n.lhs, ev
            if invert:
                expo = -expo
            factors.append((base, expo))

    walk(e, False)
    if bad[0]:
        return e
    if coeff[0] == 0:
        return ZERO

    merged: dict = {}
    for base, expo in factors:
        key = to_string(base)
        if key not in merged:
            merged[key] = [base, expo]
        else:
            old = merged[key][1]
            if isinstance(old, Fraction) and isinstance(expo, Fraction):
                merged[key][1] = old + expo
            else:
                merged[key][1] = float(old) + float(expo)

    top: list = []
    bottom: list = []
    for key in sorted(merged):
        base, expo = merged[key]
        if expo == 0:
            continue
        if expo > 0:
            top.append(pow_(base, num(expo)))
        else:
            bottom.append(pow_(base, num(-expo)))

    c = coeff[0]
    if coeff[1] is not None:
        cf = float(c) * coeff[1]
        negative = cf < 0
        cnum, cden = abs(cf), None
    else:
        negative = c < 0
        cnum, cden = abs(c).numerator, abs(c).denominator

    numer = None
    if isinstance(cnum, float):
        if cnum != 1.0 or not top:
            numer = num(cnum)
    elif cnum != 1 or not top:
        numer = num(cnum)
    for f in top:
        numer = f if numer is None else mul(numer, f)

    denom = None
    if cden not in (None, 1):
        denom = num(cden)
    for f in bottom:
        denom = f if denom is None else mul(denom, f)

    out = numer if denom is None else div(numer, denom)
    return neg(out) if negative else out
