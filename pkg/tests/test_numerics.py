"""Reduced-ODE integration, dense output, lifting, residual certification,
and the conic change of variables."""

import math
import random

import numpy as np
import pytest

from condsym import (
    BlowUpError, Grid, SolutionField, SpanExceededError, differentiate,
    evaluate, is_zero, num, parse, simplify, solve_reduced_ode, sub,
    substitute, synthesize_reduction, lift_solution, mixed_residual,
    to_conic, to_physical, transform_rhs, var,
)


# ----------------------------------------------------------------- the ODE

def test_ode_cosine_oracle():
    # phi'' = -phi, phi(0) = 1, phi'(0) = 0  ->  cos
    sol = solve_reduced_ode(parse("phi"), 0.0, 1.0, 0.0, span=(-1.5, 1.5))
    for w in np.linspace(-1.5, 1.5, 41):
        assert sol(w) == pytest.approx(math.cos(w), abs=1e-10)


def test_ode_linear_is_exact():
    # phi'' = 0 integrates exactly up to rounding
    sol = solve_reduced_ode(num(0), 0.0, 1.0, 2.0, span=(-2.0, 3.0))
    for w in (-2.0, -0.337, 0.0, 1.25, 3.0):
        assert sol(w) == pytest.approx(1.0 + 2.0 * w, abs=1e-11)


def test_ode_reciprocal_oracle():
    # phi'' = 2*phi^3 with phi(1) = 1, phi'(1) = -1  ->  1/omega
    sol = solve_reduced_ode(parse("-2*phi^3"), 1.0, 1.0, -1.0, span=(0.5, 2.0))
    for w in np.linspace(0.5, 2.0, 31):
        assert sol(w) == pytest.approx(1.0 / w, abs=1e-9)


def test_ode_dense_output_between_nodes():
    sol = solve_reduced_ode(parse("phi"), 0.0, 1.0, 0.0, span=(0.0, 2.0))
    rng = random.Random(3)
    pts = np.array([rng.uniform(0.0, 2.0) for _ in range(500)])
    assert np.max(np.abs(sol(pts) - np.cos(pts))) < 1e-9


def test_ode_blow_up_guard():
    # phi'' = +phi grows like cosh and exceeds the guard before omega = 30
    with pytest.raises(BlowUpError):
        solve_reduced_ode(parse("-phi"), 0.0, 1.0, 0.0, span=(0.0, 30.0))


def test_ode_span_exceeded():
    sol = solve_reduced_ode(parse("phi"), 0.0, 1.0, 0.0, span=(0.0, 1.0))
    with pytest.raises(SpanExceededError):
        sol(1.5)
    with pytest.raises(SpanExceededError):
        sol(np.array([0.5, -0.2]))


def test_ode_argument_validation():
    with pytest.raises(ValueError):
        solve_reduced_ode(parse("phi"), 0.0, 1.0, 0.0)
    with pytest.raises(ValueError):
        solve_reduced_ode(parse("phi"), 0.0, 1.0, 0.0, step=0.0, span=(0, 1))


# ------------------------------------------------------------------ lifting

def test_lift_translation_against_closed_form():
    rd = synthesize_reduction(parse("y+z"), parse("phi"))
    grid = Grid((0.0, 1.0), (0.0, 1.0), 20, 20)
    field = lift_solution(rd, np.cos, grid)
    Y, Z = grid.mesh()
    assert np.max(np.abs(field.values - np.cos(Z - Y))) < 1e-12


def test_lift_product_against_closed_form():
    rd = synthesize_reduction(parse("y*z"), parse("-2*phi^3"))
    grid = Grid((1.0, 2.0), (1.0, 2.0), 20, 20)
    field = lift_solution(rd, lambda w: 1.0 / w, grid)
    Y, Z = grid.mesh()
    assert np.max(np.abs(field.values - Y**2 / Z)) < 1e-12


def test_lift_reports_out_of_span_nodes():
    rd = synthesize_reduction(parse("y+z"), parse("phi"))
    sol = solve_reduced_ode(parse("phi"), 0.0, 1.0, 0.0, span=(-0.2, 0.2))
    grid = Grid((0.0, 1.0), (0.0, 1.0), 10, 10)
    with pytest.raises(SpanExceededError) as exc:
        lift_solution(rd, sol, grid)
    assert exc.value.points


# ------------------------------------------------------------- certification

def test_mixed_residual_exponential_solution():
    # u = exp(y+z) solves u_yz = u and u_y = u
    rep = mixed_residual(parse("exp(y+z)"), var("u"),
                         Grid((0.0, 1.0), (0.0, 1.0), 50, 50),
                         operator=(num(0), var("u")))
    assert rep.passed
    names = [e.name for e in rep.entries]
    assert names == ["pde_residual", "side_condition"]
    assert all(e.max_abs < 1e-5 for e in rep.entries)


def test_mixed_residual_rational_solution():
    # u = y^2/z solves u_yz = -2*y/z^2
    rep = mixed_residual(parse("y^2/z"), parse("-2*y/z^2"),
                         Grid((1.0, 2.0), (1.0, 2.0), 50, 50))
    assert rep.passed and rep.entries[0].max_abs < 1e-5


def test_mixed_residual_catches_wrong_candidate():
    # u = y*z has u_yz = 1, not 0
    rep = mixed_residual(parse("y*z"), num(0),
                         Grid((0.0, 1.0), (0.0, 1.0), 20, 20))
    assert not rep.passed
    entry = rep.entries[0]
    assert entry.max_abs == pytest.approx(1.0, abs=1e-6)
    assert entry.witness is not None and set(entry.witness) == {"y", "z"}


def test_mixed_residual_side_condition_discriminates():
    # u = exp(y+z) satisfies u_y + u_z = 2u but not u_y + u_z = u
    grid = Grid((0.0, 1.0), (0.0, 1.0), 20, 20)
    good = mixed_residual(parse("exp(y+z)"), var("u"), grid,
                          operator=(num(1), parse("2*u")))
    assert good.passed
    bad = mixed_residual(parse("exp(y+z)"), var("u"), grid,
                         operator=(num(1), var("u")))
    assert [e.passed for e in bad.entries] == [True, False]


def test_stencil_observed_order():
    # the cross stencil is second order: halving h cuts the truncation
    # error by about 4 for smooth u
    rng = random.Random(11)
    grid = Grid((0.5, 1.5), (0.5, 1.5), 12, 12)
    checked = 0
    for _ in range(12):
        a = rng.uniform(0.3, 1.2)
        b = rng.uniform(0.3, 1.2)
        c = rng.uniform(0.0, 1.0)
        u = parse(f"sin({a!r}*y + {b!r}*z + {c!r}) + exp({a!r}*y - {b!r}*z)")
        f = simplify(differentiate(differentiate(u, "y"), "z"))
        e1 = mixed_residual(u, f, grid, h=1e-2).entries[0].max_abs
        e2 = mixed_residual(u, f, grid, h=5e-3).entries[0].max_abs
        if e2 < 1e-10:
            continue
        order = math.log2(e1 / e2)
        assert order > 1.9, (a, b, c, order)
        checked += 1
    assert checked >= 8


def test_mixed_residual_field_mode():
    grid = Grid((0.0, 1.0), (0.0, 1.0), 60, 60)
    Y, Z = grid.mesh()
    field = SolutionField(grid, np.exp(Y + Z))
    rep = mixed_residual(field, var("u"), grid, pde_tol=1e-2,
                         operator=(num(0), var("u")), side_tol=1e-2)
    # grid-spacing stencil: coarser, but clearly second-order small
    assert rep.passed
    assert rep.meta["nodes_scanned"] == 58 * 58


def test_mixed_residual_field_grid_mismatch():
    grid = Grid((0.0, 1.0), (0.0, 1.0), 10, 10)
    other = Grid((0.0, 2.0), (0.0, 1.0), 10, 10)
    field = SolutionField(grid, np.ones((10, 10)))
    with pytest.raises(ValueError):
        mixed_residual(field, num(0), other)


# ------------------------------------------------------------ field storage

def test_solution_field_text_round_trip():
    grid = Grid((0.25, 1.75), (0.5, 3.5), 7, 5)
    rng = np.random.default_rng(5)
    field = SolutionField(grid, rng.normal(size=(7, 5)))
    back = SolutionField.from_text(field.to_text())
    assert back.grid == grid
    assert np.array_equal(back.values, field.values)


def test_solution_field_save_load(tmp_path):
    grid = Grid((0.0, 1.0), (0.0, 1.0), 5, 5)
    field = SolutionField(grid, np.full((5, 5), 2.5))
    path = tmp_path / "field.txt"
    field.save(path)
    assert SolutionField.load(path).values[3, 3] == 2.5


def test_solution_field_rejects_bad_values():
    grid = Grid((0.0, 1.0), (0.0, 1.0), 5, 5)
    with pytest.raises(ValueError):
        SolutionField(grid, np.ones((4, 5)))
    bad = np.ones((5, 5)); bad[2, 2] = np.nan
    with pytest.raises(ValueError):
        SolutionField(grid, bad)


def test_grid_validation():
    with pytest.raises(ValueError):
        Grid((0.0, 1.0), (0.0, 1.0), 4, 10)
    with pytest.raises(ValueError):
        Grid((1.0, 0.0), (0.0, 1.0), 10, 10)
    g = Grid((0.0, 1.0), (0.0, 2.0), 11, 21)
    assert g.spacing == (0.1, 0.1)


# ------------------------------------------------------------------- conic

def test_conic_point_transforms_are_inverse_on_dyadics():
    # dyadic coordinates keep the halving exact in floating point
    for t in (0.0, 1.0, 3 / 64, -17 / 64, 5.25):
        for x in (0.0, -1.0, 9 / 64, 2.5):
            assert to_conic(to_physical((t, x))) == (t, x)
            assert to_physical(to_conic((t, x))) == (t, x)


def test_conic_transform_has_no_scale_factor():
    # u_tt - u_xx = F becomes exactly u_yz = f with y=(t+x)/2, z=(t-x)/2:
    # check on U(t,x) = t^3 + t*x^2 where U_tt - U_xx = 4t
    U = parse("t^3 + t*x^2")
    F = simplify(sub(differentiate(differentiate(U, "t"), "t"),
                     differentiate(differentiate(U, "x"), "x")))
    assert is_zero(sub(F, parse("4*t"))).kind == "zero"
    V = substitute(substitute(U, "t", parse("y+z")), "x", parse("y-z"))
    Vyz = differentiate(differentiate(V, "y"), "z")
    assert is_zero(sub(Vyz, transform_rhs(F, "to_conic"))).kind == "zero"


def test_transform_rhs_round_trip():
    f = parse("-2*y/z^2")
    back = transform_rhs(transform_rhs(f, "to_physical"), "to_conic")
    assert is_zero(sub(back, f)).kind == "zero"
    with pytest.raises(ValueError):
        transform_rhs(f, "sideways")


def test_transported_solution_satisfies_physical_equation():
    # u = y^2/z solves u_yz = -2y/z^2; its physical form
    # U = ((t+x)/2)^2 / ((t-x)/2) must satisfy U_tt - U_xx = F with
    # F = transform_rhs(f).  Checked with a plain 1-D stencil oracle.
    u = parse("y^2/z")
    U = substitute(substitute(u, "y", parse("(t+x)/2")), "z", parse("(t-x)/2"))
    F = transform_rhs(parse("-2*y/z^2"), "to_physical")
    h = 1e-4
    for t, x in ((2.0, 0.5), (3.0, -0.25), (2.5, 1.0)):
        def val(tt, xx):
            return evaluate(U, {"t": tt, "x": xx})
        utt = (val(t + h, x) - 2 * val(t, x) + val(t - h, x)) / h**2
        uxx = (val(t, x + h) - 2 * val(t, x) + val(t, x - h)) / h**2
        rhs = evaluate(F, {"t": t, "x": x})
        assert utt - uxx == pytest.approx(rhs, abs=1e-4)
