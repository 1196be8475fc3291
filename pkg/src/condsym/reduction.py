"""Similarity reduction u = sigma(y,z) * phi(omega) for operators built from
a generating function T(y, z).

With k = T_y/T_z and s = T_yz/T_z the operator Q = d_y + k*d_z + s*u*d_u
admits the ansatz once an invariant omega (constant along the
characteristics dz/dy = k) and a modulation sigma solving
T_y*sigma_z + T_z*sigma_y = sigma*T_yz are known.  sigma is fixed by
sigma^2 = T_z/omega_z = -T_y/omega_y on a domain where that ratio is
positive.  Substituting the ansatz into u_yz = f with

    f = (T_y*T_z / sigma^3) * Phi(omega, u/sigma) + (sigma_yz/sigma) * u

collapses the equation to the ordinary differential equation
phi'' = -Phi(omega, phi); the phi' coefficient vanishes through the
identity omega_y*sigma_z + omega_z*sigma_y + sigma*omega_yz = 0.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources
from typing import Callable, List, Optional, Sequence, Tuple, Union

import numpy as np

from .expr import (Expr, compile_fn, differentiate, div, free_variables, mul,
                   neg, simplify, sqrt, sub, substitute, to_string, var)
from .parser import parse
from .sampling import DEFAULT_SPEC, SamplingSpec, ZeroVerdict, is_zero, sample_values


class ReductionError(Exception):
    pass


class DegenerateTError(ReductionError):
    pass


class CatalogMissError(ReductionError):
    pass


class SigmaSignError(ReductionError):
    """T_z/omega_z is negative on the working domain; flip omega."""


class InconsistentInvariantError(ReductionError):
    pass


class CharacteristicEscapeError(ReductionError):
    def __init__(self, points):
        shown = ", ".join(f"({p[0]:.6g}, {p[1]:.6g})" for p in points[:8])
        more = "" if len(points) <= 8 else f" and {len(points) - 8} more"
        super().__init__(f"characteristic left the domain box before reaching "
                         f"the reference section from: {shown}{more}")
        self.points = points


@dataclass(frozen=True)
class CatalogFamily:
    name: str
    T: Expr
    omega: Expr
    y_ref: float
    domain: dict
    note: str = ""


def catalog_families() -> Tuple[CatalogFamily, ...]:
    text = resources.files("condsym").joinpath("data/catalog.json").read_text()
    out = []
    for row in json.loads(text)["families"]:
        out.append(CatalogFamily(row["name"], parse(row["T"]),
                                 parse(row["omega"]), float(row["y_ref"]),
                                 row["domain"], row.get("note", "")))
    return tuple(out)


def _catalog_match(T: Expr, spec: SamplingSpec) -> Optional[CatalogFamily]:
    for fam in catalog_families():
        if is_zero(sub(T, fam.T), spec).is_zero:
            return fam
    return None


def derive_k_s(T: Expr, spec: SamplingSpec = DEFAULT_SPEC) -> Tuple[Expr, Expr]:
    """k = T_y/T_z and s = T_yz/T_z; rejects T with T_y or T_z identically
    zero (the construction needs a genuine two-direction operator)."""
    extra = free_variables(T) - {"y", "z"}
    if extra:
        raise ValueError(f"T may depend only on y and z; found {sorted(extra)}")
    Ty, Tz = differentiate(T, "y"), differentiate(T, "z")
    if not is_zero(Tz, spec).kind == "nonzero":
        raise DegenerateTError("T_z vanishes identically; k = T_y/T_z is undefined")
    if not is_zero(Ty, spec).kind == "nonzero":
        raise DegenerateTError("T_y vanishes identically; the operator would have K = 0")
    k = simplify(div(Ty, Tz))
    s = simplify(div(differentiate(Ty, "z"), Tz))
    return k, s


class NumericInvariant:
    """Invariant handle that labels points by tracing the characteristic
    dz/dy = k(y, z) to the reference section y = y_ref with fixed-step RK4
    (the final step is shortened to land exactly on the section).

    For catalog T the label is passed through the family's own section map
    omega(y_ref, .) so numeric labels agree with the closed form; otherwise
    the z-value at the section is the label.
    """

    def __init__(self, T: Expr, k: Expr, y_ref: float, domain_box,
                 step: float = 1e-3,
                 section_map: Optional[Callable] = None,
                 name: str = ""):
        self.T = T
        self.k = k
        self.y_ref = float(y_ref)
        self.step = float(step)
        self.section_map = section_map
        self.name = name
        (ylo, yhi), (zlo, zhi) = domain_box
        pad = 4.0 * max(zhi - zlo, 1.0)
        self._y_hull = (min(ylo, self.y_ref), max(yhi, self.y_ref))
        self._z_hull = (zlo - pad, zhi + pad)
        self._k_fn = compile_fn(k, ("y", "z"))

    def label(self, y: float, z: float) -> float:
        out = self.label_grid([y], [z])
        return float(out[0, 0])

    def label_grid(self, ys: Sequence[float], zs: Sequence[float]) -> np.ndarray:
        """Labels for the tensor grid ys x zs, shaped (len(ys), len(zs)).
        Columns share a starting y, so each row of points integrates as one
        vectorized trajectory."""
        ys = np.asarray(ys, dtype=float)
        zs = np.asarray(zs, dtype=float)
        out = np.empty((ys.size, zs.size))
        for i, y0 in enumerate(ys):
            out[i, :] = self._trace(float(y0), zs.copy())
        if self.section_map is not None:
            out = self.section_map(out)
        return out

    def _trace(self, y0: float, z: np.ndarray) -> np.ndarray:
        span = self.y_ref - y0
        if span == 0.0:
            self._guard(y0, z, y0, z)
            return z
        n_full = int(abs(span) / self.step)
        h = self.step if span > 0 else -self.step
        y = y0
        kf = self._k_fn
        for i in range(n_full):
            k1 = kf(y, z)
            k2 = kf(y + 0.5 * h, z + 0.5 * h * k1)
            k3 = kf(y + 0.5 * h, z + 0.5 * h * k2)
            k4 = kf(y + h, z + h * k3)
            z = z + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            y = y0 + (i + 1) * h
            self._guard(y0, z, y, z)
        hl = self.y_ref - y
        if hl != 0.0:
            k1 = kf(y, z)
            k2 = kf(y + 0.5 * hl, z + 0.5 * hl * k1)
            k3 = kf(y + 0.5 * hl, z + 0.5 * hl * k2)
            k4 = kf(y + hl, z + hl * k3)
            z = z + (hl / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            self._guard(y0, z, self.y_ref, z)
        return z

    def _guard(self, y0, z0, y, z):
        zlo, zhi = self._z_hull
        bad = ~np.isfinite(z) | (z < zlo) | (z > zhi)
        if np.any(bad):
            idx = np.nonzero(bad)[0]
            pts = [(y0, float(np.asarray(z0)[j])) for j in idx[:16]]
            raise CharacteristicEscapeError(pts)

    def __repr__(self):
        return f"NumericInvariant(T={self.T}, y_ref={self.y_ref})"


OmegaLike = Union[Expr, NumericInvariant]


def invariant_omega(T: Expr, mode: str = "catalog", *,
                    domain_box=None, y_ref: Optional[float] = None,
                    step: float = 1e-3,
                    spec: SamplingSpec = DEFAULT_SPEC) -> OmegaLike:
    """Invariant of the characteristic field of T.

    catalog mode returns the closed-form omega of a recognized family and
    raises CatalogMissError otherwise.  numeric mode returns a
    NumericInvariant; when T is recognized, its reference section and
    section map are taken from the catalog so labels match the closed form.
    """
    if mode not in ("catalog", "numeric"):
        raise ValueError(f"unknown invariant mode {mode!r}")
    fam = _catalog_match(T, spec)
    if mode == "catalog":
        if fam is None:
            raise CatalogMissError(
                f"no catalog invariant for T = {T}; use numeric mode")
        return fam.omega

    k, _ = derive_k_s(T, spec)
    if fam is not None:
        ref = fam.y_ref if y_ref is None else y_ref
        box = domain_box or (tuple(fam.domain["y"]), tuple(fam.domain["z"]))
        omega_fn = compile_fn(fam.omega, ("y", "z"))
        # omega is constant along characteristics, so evaluating the closed
        # form on the section reproduces it for any reference line.
        section = lambda zstar: omega_fn(ref, zstar)
        return NumericInvariant(T, k, ref, box, step, section, fam.name)
    ref = 1.0 if y_ref is None else y_ref
    box = domain_box or ((0.5, 2.0), (0.5, 2.0))
    return NumericInvariant(T, k, ref, box, step)


def sigma_from(T: Expr, omega: Expr,
               spec: SamplingSpec = DEFAULT_SPEC) -> Expr:
    """Modulation sigma = sqrt(T_z/omega_z).

    Checks the two defining ratios agree (T_z/omega_z = -T_y/omega_y), that
    the ratio is positive on the working domain (otherwise the caller should
    flip omega), and that the transport relation
    T_y*sigma_z + T_z*sigma_y = sigma*T_yz holds.
    """
    if not isinstance(omega, Expr):
        raise TypeError("sigma_from needs a closed-form omega")
    Ty, Tz = differentiate(T, "y"), differentiate(T, "z")
    wy, wz = differentiate(omega, "y"), differentiate(omega, "z")
    ratio = simplify(div(Tz, wz))
    agreement = is_zero(simplify(div(Tz, wz) + div(Ty, wy)), spec)
    if not agreement.is_zero:
        raise InconsistentInvariantError(
            "T_z/omega_z and -T_y/omega_y disagree; omega is not an invariant of T")
    values = sample_values(ratio, spec)
    if not values:
        raise InconsistentInvariantError("sigma^2 could not be sampled on the domain")
    if min(values) <= 0.0:
        raise SigmaSignError(
            "T_z/omega_z is not positive on the working domain; use -omega")
    sigma = simplify(sqrt(ratio))
    transport = Ty * differentiate(sigma, "z") + Tz * differentiate(sigma, "y") \
        - sigma * differentiate(Ty, "z")
    if not is_zero(transport, spec).is_zero:
        raise InconsistentInvariantError("sigma fails its transport relation")
    return sigma


@dataclass
class Reduction:
    """Bundle of reduction data for one T (and optionally one Phi)."""

    T: Expr
    k: Expr
    s: Expr
    omega: OmegaLike
    sigma: Expr
    Phi: Optional[Expr] = None
    f: Optional[Expr] = None

    @property
    def L(self) -> Expr:
        return mul(self.s, var("u"))


def build_reduction(T: Expr, spec: SamplingSpec = DEFAULT_SPEC) -> Reduction:
    k, s = derive_k_s(T, spec)
    omega = invariant_omega(T, "catalog", spec=spec)
    sigma = sigma_from(T, omega, spec)
    return Reduction(T, k, s, omega, sigma)


def synthesize_reduction(T: Expr, Phi: Expr,
                         spec: SamplingSpec = DEFAULT_SPEC) -> Reduction:
    """Reduction plus reducible right-hand side

        f = (T_y*T_z/sigma^3) * Phi(omega, u/sigma) + (sigma_yz/sigma) * u
    """
    extra = free_variables(Phi) - {"omega", "phi"}
    if extra:
        raise ValueError(f"Phi may depend only on omega and phi; found {sorted(extra)}")
    rd = build_reduction(T, spec)
    u = var("u")
    Ty, Tz = differentiate(T, "y"), differentiate(T, "z")
    core = substitute(substitute(Phi, "omega", rd.omega), "phi", div(u, rd.sigma))
    sigma_yz = differentiate(differentiate(rd.sigma, "y"), "z")
    f = simplify((Ty * Tz / rd.sigma ** 3) * core + (sigma_yz / rd.sigma) * u)
    rd.Phi = Phi
    rd.f = f
    return rd


def synthesize_f(T: Expr, Phi: Expr, spec: SamplingSpec = DEFAULT_SPEC) -> Expr:
    return synthesize_reduction(T, Phi, spec).f


@dataclass(frozen=True)
class ReducedODE:
    """phi'' = -Phi(omega, phi), with the intermediate reduced form kept for
    display."""

    Phi: Expr
    second_derivative: Expr
    intermediate: str

    def __call__(self, omega_value: float, phi_value: float) -> float:
        return float(self._fn(omega_value, phi_value))


def reduced_ode(Phi: Expr, reduction: Optional[Reduction] = None) -> ReducedODE:
    """Right-hand side of the reduced equation phi'' = -Phi(omega, phi).

    The intermediate form records how the ansatz collapses the original
    equation before the identities remove the phi' term.
    """
    extra = free_variables(Phi) - {"omega", "phi"}
    if extra:
        raise ValueError(f"Phi may depend only on omega and phi; found {sorted(extra)}")
    second = simplify(neg(Phi))
    inter = ("sigma_yz*phi + phi'*(omega_y*sigma_z + omega_z*sigma_y + "
             "sigma*omega_yz) + phi''*sigma*omega_y*omega_z = f")
    if reduction is not None and isinstance(reduction.omega, Expr):
        sig, om = reduction.sigma, reduction.omega
        syz = to_string(simplify(differentiate(differentiate(sig, "y"), "z")))
        coeff = to_string(simplify(mul(sig, mul(differentiate(om, "y"),
                                                differentiate(om, "z")))))
        inter = f"({syz})*phi + phi'*0 + phi''*({coeff}) = f"
    ode = ReducedODE(Phi, second, inter)
    object.__setattr__(ode, "_fn", compile_fn(second, ("omega", "phi")))
    return ode


def reduction_identity_residual(sigma: Expr, omega: Expr) -> Expr:
    """Residual of the phi'-elimination identity
    omega_y*sigma_z + omega_z*sigma_y + sigma*omega_yz."""
    wy, wz = differentiate(omega, "y"), differentiate(omega, "z")
    return (wy * differentiate(sigma, "z") + wz * differentiate(sigma, "y")
            + sigma * differentiate(wy, "z"))


def phi_only_criterion(sigma: Expr, k: Expr,
                       spec: SamplingSpec = DEFAULT_SPEC) -> ZeroVerdict:
    """Whether the plain ansatz u = phi(omega) works, i.e. sigma is itself a
    function of omega: sigma_y - k*sigma_z must vanish."""
    return is_zero(differentiate(sigma, "y") - k * differentiate(sigma, "z"), spec)
