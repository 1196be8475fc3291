"""End-to-end acceptance checks.

Each test exercises one advertised guarantee at its stated tolerance and
prints a single PASS/FAIL line (visible under ``pytest -s``).  Tolerances
here are contractual; do not loosen them.
"""

import json
import math
import random
import time

import numpy as np

from condsym import (
    EvalDomainError, Grid, add, case1_pair, case22_check, catalog_families,
    check_residuals, compile_fn, differentiate, div, evaluate,
    evaluate_with_scale, exp, free_variables, invariant_omega, is_zero,
    lift_solution, mixed_residual, mul, num, parse, phi_only_criterion,
    pow_, residuals_case1, residuals_case2, sub, synthesize_reduction, var,
    DEFAULT_SPEC,
)
from condsym.cli import main as cli_main

from randexpr import random_expr, random_point

SPEC = DEFAULT_SPEC.replace(n_samples=100, tolerance=1e-8, seed=42,
                            default_range=(0.5, 2.0))


def _report(capsys, argv):
    rc = cli_main(argv + ["--format", "json"])
    out = capsys.readouterr().out
    return rc, json.loads(out)


def _line(tag, ok, detail=""):
    print(f"{'PASS' if ok else 'FAIL'}  {tag}{'  (' + detail + ')' if detail else ''}")


def test_criterion_1_translation_end_to_end(capsys):
    t0 = time.perf_counter()
    rc, report = _report(capsys, [
        "verify", "--T", "y+z", "--Phi", "phi",
        "--omega0", "0", "--phi0", "1", "--dphi0", "0",
        "--grid-y", "0", "1", "--grid-z", "0", "1", "--ny", "50", "--nz", "50",
        "--ode-step", "1e-3", "--stencil-h", "1e-3"])
    elapsed = time.perf_counter() - t0
    res = {r["name"]: r["max_abs"] for r in report["residuals"]}

    # exact-solution oracle: the lifted candidate must be cos(z - y)
    rd = synthesize_reduction(parse("y+z"), parse("phi"), SPEC)
    grid = Grid((0.0, 1.0), (0.0, 1.0), 50, 50)
    field = lift_solution(rd, np.cos, grid)
    Y, Z = grid.mesh()
    oracle_err = float(np.max(np.abs(field.values - np.cos(Z - Y))))

    ok = (rc == 0 and res["pde_residual"] < 1e-5
          and res["side_condition"] < 1e-5
          and oracle_err < 1e-9 and elapsed < 5.0)
    with capsys.disabled():
        _line("criterion 1: T=y+z, Phi=phi verify (f=u, oracle cos(z-y))", ok,
              f"pde={res['pde_residual']:.2e} side={res['side_condition']:.2e} "
              f"t={elapsed:.2f}s")
    assert ok, (rc, res, oracle_err, elapsed)


def test_criterion_2_product_end_to_end(capsys):
    rc, report = _report(capsys, [
        "verify", "--T", "y*z", "--Phi", "-2*phi^3",
        "--omega0", "1", "--phi0", "1", "--dphi0", "-1",
        "--grid-y", "1", "2", "--grid-z", "1", "2", "--ny", "50", "--nz", "50",
        "--ode-step", "1e-3", "--stencil-h", "1e-3"])
    res = {r["name"]: r["max_abs"] for r in report["residuals"]}
    art = report["artifacts"]

    same_f = is_zero(sub(parse(art["f"]), parse("-2*z*u^3/y^5")), SPEC).kind == "zero"
    same_sigma = is_zero(sub(parse(art["sigma"]), var("y")), SPEC).kind == "zero"
    same_omega = is_zero(sub(parse(art["omega"]), parse("z/y")), SPEC).kind == "zero"

    rd = synthesize_reduction(parse("y*z"), parse("-2*phi^3"), SPEC)
    grid = Grid((1.0, 2.0), (1.0, 2.0), 50, 50)
    field = lift_solution(rd, lambda w: 1.0 / w, grid)
    Y, Z = grid.mesh()
    oracle_err = float(np.max(np.abs(field.values - Y**2 / Z)))

    ok = (rc == 0 and res["pde_residual"] < 1e-5
          and res["side_condition"] < 1e-5
          and same_f and same_sigma and same_omega and oracle_err < 1e-9)
    with capsys.disabled():
        _line("criterion 2: T=y*z, Phi=-2*phi^3 verify (f=-2*z*u^3/y^5, "
              "oracle y^2/z)", ok,
              f"pde={res['pde_residual']:.2e} side={res['side_condition']:.2e}")
    assert ok, (rc, res, same_f, same_sigma, same_omega, oracle_err)


def test_criterion_3_determining_equation_suite(capsys):
    t0 = time.perf_counter()
    failures = []
    for Ts in ("y+z", "y*z", "y+z^2"):
        for Ps in ("phi", "sin(phi)", "-2*phi^3"):
            rd = synthesize_reduction(parse(Ts), parse(Ps), SPEC)
            for name, zv in check_residuals(
                    residuals_case2(rd.k, rd.L, rd.f, SPEC), SPEC):
                if zv.kind != "zero":
                    failures.append((Ts, Ps, name, zv.kind, zv.max_abs))
    elapsed = time.perf_counter() - t0
    ok = not failures and elapsed < 10.0
    with capsys.disabled():
        _line("criterion 3: det_eq1..4 pass for catalog T x Phi "
              "(eps=1e-8, 100 samples, seed 42)", ok,
              f"t={elapsed:.2f}s")
    assert ok, (failures, elapsed)


def test_criterion_4_structural_identities(capsys):
    failures = []
    for fam in catalog_families():
        T, omega = fam.T, fam.omega
        rd = synthesize_reduction(T, parse("phi"), SPEC)
        sigma = rd.sigma
        Ty, Tz = differentiate(T, "y"), differentiate(T, "z")
        wy, wz = differentiate(omega, "y"), differentiate(omega, "z")
        checks = {
            "omega_eq": Ty * wz + Tz * wy,
            "sigma_eq": Ty * differentiate(sigma, "z")
                        + Tz * differentiate(sigma, "y")
                        - sigma * differentiate(Ty, "z"),
            "sigma_sq_z": pow_(sigma, num(2)) - div(Tz, wz),
            "sigma_sq_y": pow_(sigma, num(2)) + div(Ty, wy),
            "no_phi_prime": wy * differentiate(sigma, "z")
                            + wz * differentiate(sigma, "y")
                            + sigma * differentiate(wy, "z"),
        }
        for name, e in checks.items():
            if is_zero(e, SPEC).kind != "zero":
                failures.append((fam.name, name))

    crit_pass = phi_only_criterion(
        *(lambda rd: (rd.sigma, rd.k))(synthesize_reduction(parse("y+z"), parse("phi"), SPEC)),
        SPEC).kind == "zero"
    crit_fail = phi_only_criterion(
        *(lambda rd: (rd.sigma, rd.k))(synthesize_reduction(parse("y*z"), parse("phi"), SPEC)),
        SPEC).kind == "nonzero"

    ok = not failures and crit_pass and crit_fail
    with capsys.disabled():
        _line("criterion 4: structural identities per catalog T; phi-only "
              "passes y+z / fails y*z", ok)
    assert ok, (failures, crit_pass, crit_fail)


def test_criterion_5_case1_family(capsys):
    u = var("u")
    good = all(zv.kind == "zero" for _, zv in
               check_residuals(residuals_case1(u, u), SPEC))
    compat = is_zero(case1_pair(u, u, SPEC).compatibility, SPEC).kind == "zero"

    rep = mixed_residual(parse("exp(y+z)"), u,
                         Grid((0.0, 1.0), (0.0, 1.0), 50, 50),
                         operator=(num(0), u))
    numeric_ok = all(e.max_abs < 1e-5 for e in rep.entries)

    checks = dict(check_residuals(residuals_case1(u, parse("y*u")), SPEC))
    bad = checks["case1_eq2"]
    fails_with_witness = bad.kind == "nonzero" and bad.witness is not None

    ok = good and compat and numeric_ok and fails_with_witness
    with capsys.disabled():
        _line("criterion 5: (L=u, f=u) passes + exp(y+z) residuals < 1e-5; "
              "(L=u, f=y*u) fails with witness", ok,
              f"pde={rep.entries[0].max_abs:.2e} side={rep.entries[1].max_abs:.2e}")
    assert ok, (good, compat, [e.max_abs for e in rep.entries], bad)


def test_criterion_6_case22_family(capsys):
    c1, c2, f = case22_check(num(1), num(1))
    const_ok = (is_zero(c1, SPEC).kind == "zero"
                and is_zero(c2, SPEC).kind == "zero")

    K = exp(var("u"))
    L = add(exp(var("u")), num(1))
    triple_ok = all(zv.kind == "zero" for _, zv in
                    check_residuals(residuals_case2(K, L, num(0), SPEC), SPEC))

    c1b, _, _ = case22_check(var("y"), num(0))
    vb = is_zero(c1b, SPEC)
    fails_with_witness = vb.kind == "nonzero" and vb.witness is not None

    ok = const_ok and triple_ok and fails_with_witness
    with capsys.disabled():
        _line("criterion 6: (s,d)=(1,1) passes C1,C2; triple (exp(u), "
              "exp(u)+1, 0) passes det eqs; (s=y,d=0) fails C1 with witness",
              ok)
    assert ok, (const_ok, triple_ok, vb)


def test_criterion_7_cas_soundness(capsys):
    rng = random.Random(20240811)
    h = 1e-4
    worst = 0.0
    checked = 0
    bad = None
    for _ in range(1000):
        e = random_expr(rng, ("y", "z", "u"), depth=5)
        names = sorted(free_variables(e))
        if not names:
            continue
        name = rng.choice(names)
        d = differentiate(e, name)
        for _ in range(5):
            pt = random_point(rng, ("y", "z", "u"))
            try:
                sym, scale = evaluate_with_scale(d, pt)
                up = dict(pt); up[name] += h
                dn = dict(pt); dn[name] -= h
                fd = (evaluate(e, up) - evaluate(e, dn)) / (2 * h)
            except EvalDomainError:
                continue
            if scale > 1e6 or abs(fd) > 1e6:
                continue
            rel = abs(sym - fd) / max(1.0, abs(sym), abs(fd))
            checked += 1
            if rel > worst:
                worst, bad = rel, (e, name, pt)
    fd_ok = worst < 1e-5 and checked > 3000

    commute_failures = 0
    for _ in range(100):
        e = random_expr(rng, ("y", "z"), depth=4)
        dyz = differentiate(differentiate(e, "y"), "z")
        dzy = differentiate(differentiate(e, "z"), "y")
        if is_zero(sub(dyz, dzy), SPEC).kind == "nonzero":
            commute_failures += 1
    commute_ok = commute_failures == 0

    ok = fd_ok and commute_ok
    with capsys.disabled():
        _line("criterion 7: derivative vs finite difference on 1000 random "
              "expressions; mixed partials commute on 100", ok,
              f"worst rel={worst:.2e} over {checked} points")
    assert ok, (worst, checked, commute_failures, bad)


def test_criterion_8_numeric_omega_agreement(capsys):
    ys = np.linspace(0.5, 2.0, 25)
    zs = np.linspace(0.5, 2.0, 25)
    Y, Z = np.meshgrid(ys, zs, indexing="ij")
    worst = {}
    for fam in catalog_families():
        inv = invariant_omega(fam.T, "numeric", spec=SPEC)
        closed = compile_fn(fam.omega, ("y", "z"))(Y, Z)
        worst[fam.name] = float(np.max(np.abs(inv.label_grid(ys, zs) - closed)))
    ok = all(err < 1e-6 for err in worst.values())
    with capsys.disabled():
        _line("criterion 8: numeric characteristic labels match catalog "
              "omega within 1e-6 on [0.5,2]^2", ok,
              " ".join(f"{k}={v:.1e}" for k, v in worst.items()))
    assert ok, worst
