"""Grids, the reduced-ODE integrator, lifting, and residual certification.

The reduced equation phi'' = -Phi(omega, phi) is integrated with a fixed
step classical Runge-Kutta scheme from the initial section omega0 outward
in both directions until the requested span is covered; values between
nodes come from cubic Hermite interpolation, whose O(h^4) error matches the
integrator.  Lifted candidates u = sigma*phi(omega) are certified against
u_yz = f(y,z,u) with the second-order cross stencil

    u_yz ~ [u(y+h,z+h) - u(y+h,z-h) - u(y-h,z+h) + u(y-h,z-h)] / (4 h^2)

and against the side condition u_y + K*u_z = L with central differences.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, List, Optional, Sequence, Tuple, Union

import numpy as np

from .expr import Expr, compile_fn, substitute, var

_WAVE_VARS = ("y", "z", "u")


class NumericsError(Exception):
    pass


class BlowUpError(NumericsError):
    pass


class SpanExceededError(NumericsError):
    def __init__(self, message, points=None):
        super().__init__(message)
        self.points = points or []


@dataclass(frozen=True)
class Grid:
    """Uniform tensor grid on [y0,y1] x [z0,z1]; at least 5 nodes per axis
    so the interior stencils have room."""

    y_range: Tuple[float, float]
    z_range: Tuple[float, float]
    n_y: int = 50
    n_z: int = 50

    def __post_init__(self):
        if self.n_y < 5 or self.n_z < 5:
            raise ValueError("grids need at least 5 nodes per axis")
        if not (self.y_range[0] < self.y_range[1] and self.z_range[0] < self.z_range[1]):
            raise ValueError("grid ranges must be increasing")

    @property
    def ys(self) -> np.ndarray:
        return np.linspace(self.y_range[0], self.y_range[1], self.n_y)

    @property
    def zs(self) -> np.ndarray:
        return np.linspace(self.z_range[0], self.z_range[1], self.n_z)

    @property
    def spacing(self) -> Tuple[float, float]:
        return ((self.y_range[1] - self.y_range[0]) / (self.n_y - 1),
                (self.z_range[1] - self.z_range[0]) / (self.n_z - 1))

    def mesh(self):
        return np.meshgrid(self.ys, self.zs, indexing="ij")


@dataclass
class SolutionField:
    """Sampled scalar field over a grid, row-major in y."""

    grid: Grid
    values: np.ndarray
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (self.grid.n_y, self.grid.n_z):
            raise ValueError(f"values shape {self.values.shape} does not match grid "
                             f"({self.grid.n_y}, {self.grid.n_z})")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("solution fields must be finite everywhere")

    def to_text(self) -> str:
        g = self.grid
        head = (f"{g.y_range[0]!r} {g.y_range[1]!r} {g.n_y} "
                f"{g.z_range[0]!r} {g.z_range[1]!r} {g.n_z}")
        rows = [" ".join(repr(float(v)) for v in row) for row in self.values]
        return "\n".join([head] + rows) + "\n"

    def save(self, path) -> None:
        Path(path).write_text(self.to_text())

    @classmethod
    def from_text(cls, text: str) -> "SolutionField":
        lines = [ln for ln in text.splitlines() if ln.strip()]
        y0, y1, ny, z0, z1, nz = lines[0].split()
        grid = Grid((float(y0), float(y1)), (float(z0), float(z1)), int(ny), int(nz))
        values = np.array([[float(v) for v in ln.split()] for ln in lines[1:]])
        return cls(grid, values)

    @classmethod
    def load(cls, path) -> "SolutionField":
        return cls.from_text(Path(path).read_text())


@dataclass(frozen=True)
class ResidualEntry:
    name: str
    max_abs: float
    tolerance: float
    passed: bool
    witness: Optional[dict] = None


@dataclass
class Report:
    """Residual maxima with tolerances and witness points of the maxima.

    ``fields`` optionally holds the full residual arrays (for rendering);
    it is never serialized.
    """

    entries: List[ResidualEntry]
    meta: dict = field(default_factory=dict)
    fields: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(e.passed for e in self.entries)


@dataclass
class PhiSolution:
    """Dense output of the reduced ODE: nodes (omega, phi, phi') ascending,
    cubic Hermite interpolation in between."""

    ws: np.ndarray
    phis: np.ndarray
    dphis: np.ndarray
    omega0: float
    step: float

    def span(self) -> Tuple[float, float]:
        return float(self.ws[0]), float(self.ws[-1])

    def __call__(self, w):
        scalar = np.isscalar(w)
        w = np.asarray(w, dtype=float)
        lo, hi = self.ws[0], self.ws[-1]
        slack = 1e-9 * max(1.0, hi - lo)
        if np.any(w < lo - slack) or np.any(w > hi + slack):
            bad = w[(w < lo - slack) | (w > hi + slack)]
            raise SpanExceededError(
                f"omega value {float(np.ravel(bad)[0]):.6g} outside the integrated "
                f"span [{lo:.6g}, {hi:.6g}]")
        w = np.clip(w, lo, hi)
        if self.ws.size == 1:
            out = np.full_like(w, self.phis[0])
            return float(out) if scalar else out
        i = np.clip(np.searchsorted(self.ws, w, side="right") - 1, 0, self.ws.size - 2)
        w0, w1 = self.ws[i], self.ws[i + 1]
        dw = w1 - w0
        t = (w - w0) / dw
        t2, t3 = t * t, t * t * t
        h00 = 2 * t3 - 3 * t2 + 1
        h10 = t3 - 2 * t2 + t
        h01 = -2 * t3 + 3 * t2
        h11 = t3 - t2
        out = (h00 * self.phis[i] + h10 * dw * self.dphis[i]
               + h01 * self.phis[i + 1] + h11 * dw * self.dphis[i + 1])
        return float(out) if scalar else out


_BLOWUP = 1e12


def solve_reduced_ode(Phi, omega0: float, phi0: float, dphi0: float,
                      step: float = 1e-3,
                      span: Tuple[float, float] = None) -> PhiSolution:
    """Integrate phi'' = -Phi(omega, phi) from initial data at omega0 until
    the span is covered (the span is widened to include omega0)."""
    if span is None:
        raise ValueError("an integration span is required")
    if step <= 0:
        raise ValueError("step must be positive")
    rhs = compile_fn(Phi, ("omega", "phi")) if isinstance(Phi, Expr) else Phi
    lo, hi = min(span[0], omega0), max(span[1], omega0)

    fwd = _march(rhs, omega0, phi0, dphi0, hi, step)
    bwd = _march(rhs, omega0, phi0, dphi0, lo, step)
    ws = np.concatenate([bwd[0][::-1], [omega0], fwd[0]])
    ps = np.concatenate([bwd[1][::-1], [phi0], fwd[1]])
    ds = np.concatenate([bwd[2][::-1], [dphi0], fwd[2]])
    return PhiSolution(ws, ps, ds, omega0, step)


def _march(rhs, w0, p0, d0, target, step):
    ws, ps, ds = [], [], []
    span = target - w0
    if span == 0.0:
        return np.array(ws), np.array(ps), np.array(ds)
    h = step if span > 0 else -step
    n_full = int(abs(span) / step)
    w, p, d = w0, p0, d0
    for i in range(n_full):
        p, d = _rk4_step(rhs, w, p, d, h)
        w = w0 + (i + 1) * h
        _ode_guard(w, p, d)
        ws.append(w)
        ps.append(p)
        ds.append(d)
    hl = target - w
    if abs(hl) > 1e-15 * max(1.0, abs(target)):
        p, d = _rk4_step(rhs, w, p, d, hl)
        _ode_guard(target, p, d)
        ws.append(target)
        ps.append(p)
        ds.append(d)
    return np.array(ws), np.array(ps), np.array(ds)


def _rk4_step(rhs, w, p, d, h):
    def f(wi, pi, di):
        return di, -float(rhs(wi, pi))

    k1p, k1d = f(w, p, d)
    k2p, k2d = f(w + 0.5 * h, p + 0.5 * h * k1p, d + 0.5 * h * k1d)
    k3p, k3d = f(w + 0.5 * h, p + 0.5 * h * k2p, d + 0.5 * h * k2d)
    k4p, k4d = f(w + h, p + h * k3p, d + h * k3d)
    return (p + (h / 6.0) * (k1p + 2 * k2p + 2 * k3p + k4p),
            d + (h / 6.0) * (k1d + 2 * k2d + 2 * k3d + k4d))


def _ode_guard(w, p, d):
    if not (np.isfinite(p) and np.isfinite(d)):
        raise NumericsError(f"reduced ODE produced a non-finite state near omega = {w:.6g}")
    if abs(p) > _BLOWUP:
        raise BlowUpError(f"|phi| exceeded {_BLOWUP:.0e} near omega = {w:.6g}")


def lift_solution(rd, phi: Callable, grid: Grid) -> SolutionField:
    """Assemble u[i][j] = sigma(y_i, z_j) * phi(omega(y_i, z_j)).

    ``phi`` is any callable (a PhiSolution or a closed form); ``rd`` carries
    sigma and omega.  Out-of-span omega values and non-finite results raise
    with the offending nodes listed.
    """
    Y, Z = grid.mesh()
    sig = _eval_grid(rd.sigma, Y, Z)
    om = _eval_grid(rd.omega, Y, Z)
    bad = ~np.isfinite(om) | ~np.isfinite(sig)
    if np.any(bad):
        raise NumericsError(f"sigma/omega not finite at {_list_nodes(Y, Z, bad)}")
    try:
        ph = phi(om)
    except SpanExceededError:
        lo, hi = phi.span()
        bad = (om < lo) | (om > hi)
        raise SpanExceededError(
            f"omega leaves the integrated span [{lo:.6g}, {hi:.6g}] at "
            f"{_list_nodes(Y, Z, bad)}",
            points=_nodes(Y, Z, bad)) from None
    u = np.broadcast_to(np.asarray(sig * ph, dtype=float), Y.shape).copy()
    if not np.all(np.isfinite(u)):
        bad = ~np.isfinite(u)
        raise NumericsError(f"lift produced non-finite values at {_list_nodes(Y, Z, bad)}")
    prov = {"ansatz": "u = sigma(y,z)*phi(omega(y,z))",
            "T": str(getattr(rd, "T", "")),
            "sigma": str(rd.sigma), "omega": str(rd.omega)}
    return SolutionField(grid, u, prov)


def _eval_grid(obj, Y, Z):
    if isinstance(obj, Expr):
        return compile_fn(obj, ("y", "z"))(Y, Z)
    if hasattr(obj, "label_grid"):
        return obj.label_grid(Y[:, 0], Z[0, :])
    return obj(Y, Z)


def _nodes(Y, Z, mask):
    ii, jj = np.nonzero(mask)
    return [(float(Y[i, j]), float(Z[i, j])) for i, j in zip(ii[:16], jj[:16])]


def _list_nodes(Y, Z, mask):
    pts = _nodes(Y, Z, mask)
    n = int(np.count_nonzero(mask))
    head = ", ".join(f"({y:.6g}, {z:.6g})" for y, z in pts[:6])
    return f"{n} nodes ({head}{', ...' if n > 6 else ''})"


def mixed_residual(u, f, grid: Grid, h: float = 1e-3,
                   operator: Optional[Tuple[Expr, Expr]] = None,
                   pde_tol: float = 1e-5, side_tol: float = 1e-5,
                   collect_fields: bool = False) -> Report:
    """Certify a candidate solution of u_yz = f(y, z, u).

    ``u`` is either a closed form (Expr in y, z, or a callable on arrays),
    evaluated on the h-offset cross stencil at every grid node, or a
    SolutionField, in which case the grid spacing itself is the stencil
    width and only interior nodes are scanned.  ``operator`` adds the side
    condition residual |u_y + K*u_z - L| for (K, L).
    """
    f_fn = compile_fn(f, _WAVE_VARS) if isinstance(f, Expr) else f
    entries = []
    if isinstance(u, SolutionField):
        vals = u.values
        if u.grid != grid:
            raise ValueError("field grid does not match the requested grid")
        hy, hz = grid.spacing
        Y, Z = grid.mesh()
        Yi, Zi = Y[1:-1, 1:-1], Z[1:-1, 1:-1]
        Ui = vals[1:-1, 1:-1]
        uyz = (vals[2:, 2:] - vals[2:, :-2] - vals[:-2, 2:] + vals[:-2, :-2]) / (4 * hy * hz)
        uy = (vals[2:, 1:-1] - vals[:-2, 1:-1]) / (2 * hy)
        uz = (vals[1:-1, 2:] - vals[1:-1, :-2]) / (2 * hz)
        used_h = (hy, hz)
    else:
        u_fn = compile_fn(u, ("y", "z")) if isinstance(u, Expr) else u
        Y, Z = grid.mesh()
        Yi, Zi = Y, Z
        stencil = {}
        for dy in (-1, 0, 1):
            for dz in (-1, 0, 1):
                v = np.asarray(u_fn(Y + dy * h, Z + dz * h), dtype=float)
                if not np.all(np.isfinite(v)):
                    raise NumericsError("non-finite stencil value while sampling u")
                stencil[(dy, dz)] = v
        Ui = stencil[(0, 0)]
        uyz = (stencil[(1, 1)] - stencil[(1, -1)] - stencil[(-1, 1)]
               + stencil[(-1, -1)]) / (4 * h * h)
        uy = (stencil[(1, 0)] - stencil[(-1, 0)]) / (2 * h)
        uz = (stencil[(0, 1)] - stencil[(0, -1)]) / (2 * h)
        used_h = (h, h)

    F = np.asarray(f_fn(Yi, Zi, Ui), dtype=float)
    if not np.all(np.isfinite(F)):
        raise NumericsError("non-finite right-hand side value on the grid")
    P = np.abs(uyz - F)
    entries.append(_entry("pde_residual", P, Yi, Zi, pde_tol))
    fields = {"pde_residual": P} if collect_fields else {}

    if operator is not None:
        K, L = operator
        K_fn = compile_fn(K, _WAVE_VARS) if isinstance(K, Expr) else K
        L_fn = compile_fn(L, _WAVE_VARS) if isinstance(L, Expr) else L
        S = np.abs(uy + np.asarray(K_fn(Yi, Zi, Ui)) * uz - np.asarray(L_fn(Yi, Zi, Ui)))
        if not np.all(np.isfinite(S)):
            raise NumericsError("non-finite side-condition value on the grid")
        entries.append(_entry("side_condition", S, Yi, Zi, side_tol))
        if collect_fields:
            fields["side_condition"] = S

    meta = {"grid": {"y": list(grid.y_range), "z": list(grid.z_range),
                     "n_y": grid.n_y, "n_z": grid.n_z},
            "stencil_h": list(used_h),
            "nodes_scanned": int(Yi.size)}
    return Report(entries, meta, fields)


def _entry(name, R, Y, Z, tol) -> ResidualEntry:
    flat = int(np.argmax(R))
    i, j = np.unravel_index(flat, R.shape)
    mx = float(R[i, j])
    return ResidualEntry(name, mx, tol, mx < tol,
                         {"y": float(Y[i, j]), "z": float(Z[i, j])})


# Conic change of variables: y = (t+x)/2, z = (t-x)/2 turns the wave
# operator u_tt - u_xx into exactly u_yz (no scale factor).

def to_conic(point: Tuple[float, float]) -> Tuple[float, float]:
    t, x = point
    return ((t + x) / 2.0, (t - x) / 2.0)


def to_physical(point: Tuple[float, float]) -> Tuple[float, float]:
    y, z = point
    return (y + z, y - z)


def transform_rhs(e: Expr, direction: str) -> Expr:
    """Carry a right-hand side across the conic change of variables.

    "to_conic" rewrites F(t, x, u) as f(y, z, u) = F(y+z, y-z, u);
    "to_physical" rewrites f(y, z, u) as F(t, x, u) = f((t+x)/2, (t-x)/2, u).
    """
    y_, z_, t_, x_ = var("y"), var("z"), var("t"), var("x")
    if direction == "to_conic":
        return substitute(substitute(e, "t", y_ + z_), "x", y_ - z_)
    if direction == "to_physical":
        return substitute(substitute(e, "y", (t_ + x_) / 2), "z", (t_ - x_) / 2)
    raise ValueError(f"unknown direction {direction!r}")
