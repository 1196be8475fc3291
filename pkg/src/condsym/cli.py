"""Command-line front end.

Subcommands mirror the library pipeline: ``classify`` normalizes an
operator and checks the matching determining equations, ``case1`` and
``case22`` check the two linear-side-condition families, ``reduce`` builds
(k, s, omega, sigma) from a generating function T, ``synthesize``
additionally assembles the reducible right-hand side f, and ``verify``
solves the reduced ODE, lifts the profile, and certifies the candidate
against the PDE and the side condition on a grid.

Exit codes: 0 when every check passes, 1 when a residual fails (or a
domain/degeneracy error is recorded in the report), 2 for usage or parse
errors.  Reports print as "key: value" text or as canonical JSON (sorted
keys, no whitespace), so identical invocations are byte-identical.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import detsys
from . import reduction as red
from .expr import Expr, ExprError, compile_fn, exp, mul, add, simplify, to_string, var
from .parser import parse
from .sampling import DEFAULT_SPEC, SamplingSpec, ZeroVerdict, is_zero
from .numerics import (Grid, NumericsError, lift_solution, mixed_residual,
                       solve_reduced_ode)


class UsageError(Exception):
    pass


_KINDWORD = {"zero": "pass", "nonzero": "fail", "inconclusive": "inconclusive"}

# Domain/degeneracy failures land inside the report with exit 1; the
# identically-zero operator is a usage error (exit 2) and is re-raised.
_DEGENERACIES = (detsys.DetsysError, red.ReductionError, NumericsError)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="condsym",
        description="Conditional-symmetry classification, reduction, and "
                    "verification for u_yz = f(y, z, u).")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--samples", type=int, default=100,
                       help="sample count for symbolic zero tests (default 100)")
        p.add_argument("--eps", type=float, default=1e-8,
                       help="zero-test tolerance (default 1e-8)")
        p.add_argument("--seed", type=int, default=None,
                       help="sampling seed (default 42; CONDSYM_SEED overrides)")
        p.add_argument("--range", nargs=2, type=float, default=None,
                       metavar=("LO", "HI"), help="sampling range for all variables")
        p.add_argument("--format", choices=("text", "json"), default="text")
        p.add_argument("--output", default=None, metavar="PATH",
                       help="write the report here instead of stdout")

    p = sub.add_parser("classify", help="normalize Q = a*d_y + b*d_z + c*d_u "
                                        "and check the determining equations")
    p.add_argument("--a", required=True)
    p.add_argument("--b", required=True)
    p.add_argument("--c", required=True)
    p.add_argument("--f", required=True)
    common(p)

    p = sub.add_parser("case1", help="check the side condition u_y = L against f")
    p.add_argument("--L", required=True)
    p.add_argument("--f", required=True)
    common(p)

    p = sub.add_parser("case22", help="check the exponential family "
                                      "K = exp(u), L = s*exp(u) + d")
    p.add_argument("--s", required=True)
    p.add_argument("--d", required=True)
    common(p)

    p = sub.add_parser("reduce", help="build k, s, omega, sigma from T")
    p.add_argument("--T", required=True)
    common(p)

    p = sub.add_parser("synthesize", help="build the reduction and the "
                                          "reducible right-hand side f")
    p.add_argument("--T", required=True)
    p.add_argument("--Phi", required=True)
    common(p)

    p = sub.add_parser("verify", help="solve the reduced ODE, lift, and "
                                      "certify the candidate solution")
    p.add_argument("--T", required=True)
    p.add_argument("--Phi", required=True)
    p.add_argument("--omega0", type=float, required=True)
    p.add_argument("--phi0", type=float, required=True)
    p.add_argument("--dphi0", type=float, required=True)
    p.add_argument("--grid-y", nargs=2, type=float, default=(0.0, 1.0),
                   metavar=("LO", "HI"))
    p.add_argument("--grid-z", nargs=2, type=float, default=(0.0, 1.0),
                   metavar=("LO", "HI"))
    p.add_argument("--ny", type=int, default=50)
    p.add_argument("--nz", type=int, default=50)
    p.add_argument("--ode-step", type=float, default=1e-3)
    p.add_argument("--stencil-h", type=float, default=1e-3)
    p.add_argument("--pde-tol", type=float, default=1e-5)
    p.add_argument("--side-tol", type=float, default=1e-5)
    p.add_argument("--report-dir", default=None, metavar="DIR",
                   help="write report.json, the sampled field, and figures here")
    p.add_argument("--export-field", default=None, metavar="PATH",
                   help="write the lifted solution field as delimited text")
    common(p)

    return parser


def _spec_from(args) -> SamplingSpec:
    seed = args.seed
    if seed is None:
        env = os.environ.get("CONDSYM_SEED")
        if env is not None:
            try:
                seed = int(env)
            except ValueError:
                raise UsageError(f"CONDSYM_SEED must be an integer, got {env!r}")
        else:
            seed = 42
    kw = {"n_samples": args.samples, "tolerance": args.eps, "seed": seed}
    if args.range is not None:
        lo, hi = args.range
        if not lo < hi:
            raise UsageError("--range needs LO < HI")
        kw["default_range"] = (lo, hi)
    return DEFAULT_SPEC.replace(**kw)


def _parse_expr(text: str, flag: str) -> Expr:
    try:
        return parse(text)
    except ExprError as err:
        raise UsageError(f"{flag}: {err}") from None


def _spec_inputs(spec: SamplingSpec) -> dict:
    return {"samples": spec.n_samples, "eps": spec.tolerance, "seed": spec.seed,
            "range": list(spec.default_range)}


def _base(command: str, inputs: dict) -> dict:
    return {"command": command, "inputs": inputs, "residuals": [], "artifacts": {}}


def _guarded(report: dict, work) -> None:
    try:
        work()
    except detsys.ZeroOperatorError:
        raise
    except _DEGENERACIES as err:
        report["error"] = f"{type(err).__name__}: {err}"


def _exit_code(report: dict) -> int:
    if "error" in report:
        return 1
    if any(r["verdict"] != "pass" for r in report["residuals"]):
        return 1
    return 0


def _sym_entry(name: str, zv: ZeroVerdict, eps: float) -> dict:
    ent = {"name": name, "max_abs": float(zv.max_abs),
           "tolerance": float(eps), "verdict": _KINDWORD[zv.kind]}
    if zv.kind == "nonzero" and zv.witness is not None:
        ent["witness"] = {k: float(v) for k, v in zv.witness.items()}
    return ent


def _num_entry(e) -> dict:
    ent = {"name": e.name, "max_abs": float(e.max_abs),
           "tolerance": float(e.tolerance),
           "verdict": "pass" if e.passed else "fail"}
    if e.witness is not None:
        ent["witness"] = {k: float(v) for k, v in e.witness.items()}
    return ent


def _pp(e: Expr) -> str:
    return to_string(e, full_parens=True)


def _cmd_classify(args, spec) -> dict:
    a = _parse_expr(args.a, "--a")
    b = _parse_expr(args.b, "--b")
    c = _parse_expr(args.c, "--c")
    f = _parse_expr(args.f, "--f")
    report = _base("classify", {"a": args.a, "b": args.b, "c": args.c,
                                "f": args.f, **_spec_inputs(spec)})

    def work():
        norm = detsys.normalize_operator(detsys.QOperator(a, b, c), spec)
        art = report["artifacts"]
        art["case"] = norm.case.value
        art["swapped"] = norm.swapped
        if norm.case is detsys.Case.CASE3:
            # Q = c*d_u: the side condition is the algebraic constraint c = 0
            # and no differential residuals apply.
            art["constraint"] = _pp(norm.L)
            return
        art["K"] = _pp(norm.K)
        art["L"] = _pp(norm.L)
        if norm.case is detsys.Case.CASE2:
            res = detsys.residuals_case2(norm.K, norm.L, f, spec)
        else:
            # the y <-> z rename that normalized the operator must be applied
            # to f as well; u_yz = f maps onto itself with swapped arguments
            f_eff = detsys.swap_yz(f) if norm.swapped else f
            res = detsys.residuals_case1(norm.L, f_eff)
        for name, zv in detsys.check_residuals(res, spec):
            report["residuals"].append(_sym_entry(name, zv, spec.tolerance))

    _guarded(report, work)
    report["exit"] = _exit_code(report)
    return report


def _cmd_case1(args, spec) -> dict:
    L = _parse_expr(args.L, "--L")
    f = _parse_expr(args.f, "--f")
    report = _base("case1", {"L": args.L, "f": args.f, **_spec_inputs(spec)})

    def work():
        for name, zv in detsys.check_residuals(detsys.residuals_case1(L, f), spec):
            report["residuals"].append(_sym_entry(name, zv, spec.tolerance))
        pair = detsys.case1_pair(L, f, spec)
        art = report["artifacts"]
        art["rhs_y"] = _pp(pair.rhs_y)
        art["rhs_z"] = _pp(pair.rhs_z)
        art["compatibility_expr"] = _pp(pair.compatibility)
        report["residuals"].append(
            _sym_entry("compatibility", is_zero(pair.compatibility, spec),
                       spec.tolerance))

    _guarded(report, work)
    report["exit"] = _exit_code(report)
    return report


def _cmd_case22(args, spec) -> dict:
    s = _parse_expr(args.s, "--s")
    d = _parse_expr(args.d, "--d")
    report = _base("case22", {"s": args.s, "d": args.d, **_spec_inputs(spec)})

    def work():
        c1, c2, f = detsys.case22_check(s, d)
        u = var("u")
        art = report["artifacts"]
        art["K"] = _pp(exp(u))
        art["L"] = _pp(simplify(add(mul(s, exp(u)), d)))
        art["f"] = _pp(f)
        report["residuals"].append(_sym_entry("C1", is_zero(c1, spec), spec.tolerance))
        report["residuals"].append(_sym_entry("C2", is_zero(c2, spec), spec.tolerance))

    _guarded(report, work)
    report["exit"] = _exit_code(report)
    return report


def _structural_entries(T: Expr, rd: red.Reduction, spec) -> list:
    """The defining identities of the reduction: omega invariance, the sigma
    transport relation, both quotient forms of sigma^2, and the identity
    that removes the phi' term."""
    from .expr import differentiate as D, div, pow_, num
    Ty, Tz = D(T, "y"), D(T, "z")
    wy, wz = D(rd.omega, "y"), D(rd.omega, "z")
    sg = rd.sigma
    checks = [
        ("omega_equation", Ty * wz + Tz * wy),
        ("sigma_transport", Ty * D(sg, "z") + Tz * D(sg, "y") - sg * D(Ty, "z")),
        ("sigma_square_z", pow_(sg, num(2)) - div(Tz, wz)),
        ("sigma_square_y", pow_(sg, num(2)) + div(Ty, wy)),
        ("no_phi_prime", red.reduction_identity_residual(sg, rd.omega)),
    ]
    return [_sym_entry(name, is_zero(e, spec), spec.tolerance)
            for name, e in checks]


def _reduction_artifacts(rd: red.Reduction) -> dict:
    return {"k": _pp(rd.k), "s": _pp(rd.s), "L": _pp(rd.L),
            "omega": _pp(rd.omega) if isinstance(rd.omega, Expr) else repr(rd.omega),
            "sigma": _pp(rd.sigma)}


def _cmd_reduce(args, spec) -> dict:
    T = _parse_expr(args.T, "--T")
    report = _base("reduce", {"T": args.T, **_spec_inputs(spec)})

    def work():
        rd = red.build_reduction(T, spec)
        report["artifacts"].update(_reduction_artifacts(rd))
        report["artifacts"]["phi_only"] = _KINDWORD[
            red.phi_only_criterion(rd.sigma, rd.k, spec).kind]
        report["residuals"].extend(_structural_entries(T, rd, spec))

    _guarded(report, work)
    report["exit"] = _exit_code(report)
    return report


def _cmd_synthesize(args, spec) -> dict:
    T = _parse_expr(args.T, "--T")
    Phi = _parse_expr(args.Phi, "--Phi")
    report = _base("synthesize", {"T": args.T, "Phi": args.Phi,
                                  **_spec_inputs(spec)})

    def work():
        rd = red.synthesize_reduction(T, Phi, spec)
        ode = red.reduced_ode(Phi, rd)
        art = report["artifacts"]
        art.update(_reduction_artifacts(rd))
        art["f"] = _pp(rd.f)
        art["ode"] = f"phi'' = {to_string(ode.second_derivative)}"
        res = detsys.residuals_case2(rd.k, rd.L, rd.f, spec)
        for name, zv in detsys.check_residuals(res, spec):
            report["residuals"].append(_sym_entry(name, zv, spec.tolerance))

    _guarded(report, work)
    report["exit"] = _exit_code(report)
    return report


def _cmd_verify(args, spec) -> dict:
    T = _parse_expr(args.T, "--T")
    Phi = _parse_expr(args.Phi, "--Phi")
    inputs = {"T": args.T, "Phi": args.Phi, "omega0": args.omega0,
              "phi0": args.phi0, "dphi0": args.dphi0,
              "grid_y": list(args.grid_y), "grid_z": list(args.grid_z),
              "n_y": args.ny, "n_z": args.nz, "ode_step": args.ode_step,
              "stencil_h": args.stencil_h, "pde_tol": args.pde_tol,
              "side_tol": args.side_tol, **_spec_inputs(spec)}
    report = _base("verify", inputs)

    def work():
        rd = red.synthesize_reduction(T, Phi, spec)
        ode = red.reduced_ode(Phi, rd)
        art = report["artifacts"]
        art.update(_reduction_artifacts(rd))
        art["f"] = _pp(rd.f)
        art["ode"] = f"phi'' = {to_string(ode.second_derivative)}"
        art["phi_only"] = _KINDWORD[
            red.phi_only_criterion(rd.sigma, rd.k, spec).kind]

        grid = Grid(tuple(args.grid_y), tuple(args.grid_z), args.ny, args.nz)
        h = args.stencil_h
        om_fn = compile_fn(rd.omega, ("y", "z"))
        sig_fn = compile_fn(rd.sigma, ("y", "z"))
        Y, Z = grid.mesh()
        # the stencil samples u at node +- h, so the ODE must cover omega
        # over the padded grid, hulled with the initial section
        lo = hi = float(args.omega0)
        for dy in (-h, 0.0, h):
            for dz in (-h, 0.0, h):
                om = np.asarray(om_fn(Y + dy, Z + dz), dtype=float)
                if not np.all(np.isfinite(om)):
                    raise NumericsError("omega is not finite over the grid")
                lo, hi = min(lo, float(om.min())), max(hi, float(om.max()))
        phi = solve_reduced_ode(Phi, args.omega0, args.phi0, args.dphi0,
                                step=args.ode_step, span=(lo, hi))
        art["omega_span"] = [lo, hi]

        def u_fn(Yv, Zv):
            return (np.asarray(sig_fn(Yv, Zv), dtype=float)
                    * phi(np.asarray(om_fn(Yv, Zv), dtype=float)))

        rep = mixed_residual(u_fn, rd.f, grid, h=h, operator=(rd.k, rd.L),
                             pde_tol=args.pde_tol, side_tol=args.side_tol,
                             collect_fields=bool(args.report_dir))
        report["residuals"] = [_num_entry(e) for e in rep.entries]

        field = None
        if args.export_field or args.report_dir:
            field = lift_solution(rd, phi, grid)
        if args.export_field:
            field.save(args.export_field)
        if args.report_dir:
            from .figures import render_verify_figures
            outdir = Path(args.report_dir)
            outdir.mkdir(parents=True, exist_ok=True)
            field.save(outdir / "field.txt")
            figs = render_verify_figures(outdir, field,
                                         rep.fields["pde_residual"],
                                         rep.fields.get("side_condition"), phi)
            art["files"] = sorted(["report.json", "field.txt"]
                                  + [Path(p).name for p in figs])

    _guarded(report, work)
    report["exit"] = _exit_code(report)
    if args.report_dir:
        outdir = Path(args.report_dir)
        outdir.mkdir(parents=True, exist_ok=True)
        (outdir / "report.json").write_text(to_json(report) + "\n")
    return report


_HANDLERS = {"classify": _cmd_classify, "case1": _cmd_case1,
             "case22": _cmd_case22, "reduce": _cmd_reduce,
             "synthesize": _cmd_synthesize, "verify": _cmd_verify}


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def to_json(report: dict) -> str:
    """Canonical JSON: sorted keys, no whitespace, plain Python scalars."""
    return json.dumps(_jsonable(report), sort_keys=True, separators=(",", ":"))


def _fmt_value(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (list, tuple)):
        return " ".join(_fmt_value(x) for x in v)
    if isinstance(v, float):
        return repr(v)
    return str(v)


def render_text(report: dict) -> str:
    lines = [f"command: {report['command']}"]
    for k in sorted(report["inputs"]):
        lines.append(f"input {k}: {_fmt_value(report['inputs'][k])}")
    for k in sorted(report["artifacts"]):
        lines.append(f"{k}: {_fmt_value(report['artifacts'][k])}")
    for r in report["residuals"]:
        extra = ""
        if "witness" in r:
            pt = " ".join(f"{k}={v:.6g}" for k, v in sorted(r["witness"].items()))
            extra = f"  witness {pt}"
        lines.append(f"residual {r['name']}: {r['verdict'].upper()}"
                     f"  max_abs={r['max_abs']:.6g}"
                     f"  tol={r['tolerance']:.6g}{extra}")
    if "error" in report:
        lines.append(f"error: {report['error']}")
    lines.append(f"exit: {report['exit']}")
    return "\n".join(lines) + "\n"


def _emit(report: dict, args) -> None:
    text = to_json(report) + "\n" if args.format == "json" else render_text(report)
    if args.output:
        Path(args.output).write_text(text)
    else:
        sys.stdout.write(text)


# expression arguments may start with a minus sign; fold them into
# --flag=value form so argparse does not read them as options
_EXPR_FLAGS = {"--a", "--b", "--c", "--f", "--L", "--s", "--d", "--T", "--Phi"}


def _fold_expr_flags(argv):
    out, i = [], 0
    while i < len(argv):
        tok = argv[i]
        if tok in _EXPR_FLAGS and i + 1 < len(argv):
            out.append(f"{tok}={argv[i + 1]}")
            i += 2
        else:
            out.append(tok)
            i += 1
    return out


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(_fold_expr_flags(
            sys.argv[1:] if argv is None else list(argv)))
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        spec = _spec_from(args)
        report = _HANDLERS[args.command](args, spec)
    except (UsageError, ExprError, detsys.ZeroOperatorError, ValueError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    _emit(report, args)
    return int(report["exit"])


if __name__ == "__main__":
    sys.exit(main())
