"""Q-conditional symmetry operators and determining-equation residuals for
the hyperbolic equation u_yz = f(y, z, u).

An operator Q = a*d_y + b*d_z + c*d_u imposes the side condition
Qu = a*u_y + b*u_z - c = 0.  After normalization the condition reads
u_y + K*u_z = L with K = b/a, L = c/a, and the classification splits on
whether K vanishes identically.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Optional, Tuple

from .expr import (Expr, ZERO, differentiate, div, free_variables, mul,
                   rename_variables, simplify, sub, to_string)
from .sampling import DEFAULT_SPEC, SamplingSpec, ZeroVerdict, is_zero


class DetsysError(Exception):
    pass


class ZeroOperatorError(DetsysError):
    pass


class NormalizationError(DetsysError):
    pass


class DegenerateKError(DetsysError):
    pass


class DegenerateLError(DetsysError):
    pass


class Case(Enum):
    CASE1 = "case1"
    CASE2 = "case2"
    CASE3 = "case3"


@dataclass(frozen=True)
class QOperator:
    """Coefficients of Q = a*d_y + b*d_z + c*d_u, expressions in (y, z, u)."""

    a: Expr
    b: Expr
    c: Expr


@dataclass(frozen=True)
class NormalizedOperator:
    """Normalized side condition u_y + K*u_z = L.

    ``swapped`` records that y and z were renamed to reach this form (the
    a == 0, b != 0 branch); expressions are already written in the renamed
    variables.  Case 3 (a == b == 0) stores the bare constraint c in L.
    """

    case: Case
    K: Expr
    L: Expr
    swapped: bool = False


@dataclass(frozen=True)
class NamedResidual:
    name: str
    expr: Expr


@dataclass(frozen=True)
class Case1Pair:
    """First-order pair u_y = rhs_y, u_z = rhs_z equivalent to Case 1, plus
    the cross-derivative compatibility residual D_z(rhs_y) - D_y(rhs_z)."""

    rhs_y: Expr
    rhs_z: Expr
    compatibility: Expr


def _d(e: Expr, *names: str) -> Expr:
    for n in names:
        e = differentiate(e, n)
    return e


def _check_vars(e: Expr, allowed, what: str):
    extra = free_variables(e) - allowed
    if extra:
        raise ValueError(f"{what} may depend only on {sorted(allowed)}; "
                         f"found {sorted(extra)}")


def swap_yz(e: Expr) -> Expr:
    return rename_variables(e, {"y": "z", "z": "y"})


def normalize_operator(q: QOperator,
                       spec: SamplingSpec = DEFAULT_SPEC) -> NormalizedOperator:
    """Scale Q to the canonical side-condition form and tag the case.

    a != 0 divides by a (Case 2 when K = b/a is nonzero, Case 1 otherwise);
    a == 0, b != 0 renames y <-> z and reduces to Case 1 with L = c/b;
    a == b == 0 with c != 0 is the trivial Case 3.  The identically-zero
    operator is rejected.
    """
    for coeff, nm in ((q.a, "a"), (q.b, "b"), (q.c, "c")):
        _check_vars(coeff, {"y", "z", "u"}, f"operator coefficient {nm}")

    va = is_zero(q.a, spec)
    if va.kind == "inconclusive":
        raise NormalizationError("cannot decide whether a vanishes; sampling inconclusive")
    if va.kind == "nonzero":
        K = simplify(div(q.b, q.a))
        L = simplify(div(q.c, q.a))
        vk = is_zero(K, spec)
        if vk.kind == "inconclusive":
            raise NormalizationError("cannot decide whether K = b/a vanishes")
        if vk.kind == "nonzero":
            return NormalizedOperator(Case.CASE2, K, L)
        return NormalizedOperator(Case.CASE1, ZERO, L)

    vb = is_zero(q.b, spec)
    if vb.kind == "inconclusive":
        raise NormalizationError("cannot decide whether b vanishes; sampling inconclusive")
    if vb.kind == "nonzero":
        L = simplify(swap_yz(div(q.c, q.b)))
        return NormalizedOperator(Case.CASE1, ZERO, L, swapped=True)

    vc = is_zero(q.c, spec)
    if vc.kind == "zero":
        raise ZeroOperatorError("operator is identically zero")
    return NormalizedOperator(Case.CASE3, ZERO, simplify(q.c))


def residuals_case2(K: Expr, L: Expr, f: Expr,
                    spec: SamplingSpec = DEFAULT_SPEC) -> Tuple[NamedResidual, ...]:
    """Determining-equation residuals for the side condition u_y + K*u_z = L
    with K not identically zero:

        det_eq1: -K_u^2 + K_uu*K
        det_eq2: -K*L_uu + K_u*K_y/K + K_u^2*L/K + K_u*(L_u - K_z)
                 - K_uy - L*K_uu + K*K_zu
        det_eq3: L_uy - L_uz*K + L_uu*L - L_u*K_y/K + K_y*K_z/K - K_yz
                 - 3*K_u*f - (K_u*L/K)*(L_u - K_z) + K_u*L_z - K_zu*L
        det_eq4: -f_y - K*f_z - L*f_u + L_yz + L_uz*L + L_u*f
                 - (K_y/K)*(L_z - f) - K_z*f - (K_u*L/K)*(L_z - f)
    """
    _check_vars(K, {"y", "z", "u"}, "K")
    _check_vars(L, {"y", "z", "u"}, "L")
    _check_vars(f, {"y", "z", "u"}, "f")
    vk = is_zero(K, spec)
    if vk.kind != "nonzero":
        raise DegenerateKError("Case 2 residuals need K not identically zero; "
                               "route K == 0 through residuals_case1")

    Ku, Ky, Kz = _d(K, "u"), _d(K, "y"), _d(K, "z")
    Kuu, Kuy, Kzu, Kyz = _d(K, "u", "u"), _d(K, "u", "y"), _d(K, "z", "u"), _d(K, "y", "z")
    Lu, Ly, Lz = _d(L, "u"), _d(L, "y"), _d(L, "z")
    Luu, Luy, Luz, Lyz = _d(L, "u", "u"), _d(L, "u", "y"), _d(L, "u", "z"), _d(L, "y", "z")
    fy, fz, fu = _d(f, "y"), _d(f, "z"), _d(f, "u")

    r1 = -Ku ** 2 + Kuu * K
    r2 = (-K * Luu + Ku * Ky / K + Ku ** 2 * L / K + Ku * (Lu - Kz)
          - Kuy - L * Kuu + K * Kzu)
    r3 = (Luy - Luz * K + Luu * L - Lu * Ky / K + Ky * Kz / K - Kyz
          - 3 * Ku * f - (Ku * L / K) * (Lu - Kz) + Ku * Lz - Kzu * L)
    r4 = (-fy - K * fz - L * fu + Lyz + Luz * L + Lu * f
          - (Ky / K) * (Lz - f) - Kz * f - (Ku * L / K) * (Lz - f))

    return (NamedResidual("det_eq1", r1), NamedResidual("det_eq2", r2),
            NamedResidual("det_eq3", r3), NamedResidual("det_eq4", r4))


def residuals_case1(L: Expr, f: Expr) -> Tuple[NamedResidual, ...]:
    """Determining-equation residuals for the side condition u_y = L:

        case1_eq1: L_uy + L_uu*L
        case1_eq2: -f_y - L*f_u + L_yz + L_uz*L + L_u*f
    """
    _check_vars(L, {"y", "z", "u"}, "L")
    _check_vars(f, {"y", "z", "u"}, "f")
    Lu = _d(L, "u")
    r1 = _d(L, "u", "y") + _d(L, "u", "u") * L
    r2 = (-_d(f, "y") - L * _d(f, "u") + _d(L, "y", "z")
          + _d(L, "u", "z") * L + Lu * f)
    return (NamedResidual("case1_eq1", r1), NamedResidual("case1_eq2", r2))


def case1_pair(L: Expr, f: Expr,
               spec: SamplingSpec = DEFAULT_SPEC) -> Case1Pair:
    """Rewrite {u_yz = f, u_y = L} as the first-order pair

        u_y = L,   u_z = (f - L_z) / L_u

    which needs L_u not identically zero.  The compatibility residual is
    D_z(L) - D_y(M) with total derivatives taken along the pair itself
    (u_y -> L, u_z -> M).
    """
    Lu = _d(L, "u")
    if not is_zero(Lu, spec).kind == "nonzero":
        raise DegenerateLError("first-order pair needs L_u not identically zero")
    M = simplify(div(sub(f, _d(L, "z")), Lu))
    compat = simplify(_d(L, "z") + Lu * M - _d(M, "y") - _d(M, "u") * L)
    return Case1Pair(L, M, compat)


def case22_check(s: Expr, d: Expr) -> Tuple[Expr, Expr, Expr]:
    """Constraints and right-hand side for the exponential family
    K = exp(u), L = s(y,z)*exp(u) + d(y,z):

        C1 = 2*s_yz - s*d_z + 2*s_y*s - d_zz
        C2 = -s_yy + 2*d_yz + s_y*d - 2*d_z*d
        f  = (s_y + d_z) / 3

    Returns (C1, C2, f).
    """
    _check_vars(s, {"y", "z"}, "s")
    _check_vars(d, {"y", "z"}, "d")
    c1 = 2 * _d(s, "y", "z") - s * _d(d, "z") + 2 * _d(s, "y") * s - _d(d, "z", "z")
    c2 = -_d(s, "y", "y") + 2 * _d(d, "y", "z") + _d(s, "y") * d - 2 * _d(d, "z") * d
    f = (_d(s, "y") + _d(d, "z")) / 3
    return c1, c2, simplify(f)


def check_residuals(residuals, spec: SamplingSpec = DEFAULT_SPEC):
    """Run is_zero over named residuals; returns [(name, ZeroVerdict)]."""
    return [(r.name, is_zero(r.expr, spec)) for r in residuals]
