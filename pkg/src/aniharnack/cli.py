"""Command line entry point (``aniharnack <command> ...``)."""

from __future__ import annotations

import argparse
import csv
import sys
from typing import List, Optional

import numpy as np

from aniharnack import barrier, calculus, geometry, harness, paraboloid, solver
from aniharnack.errors import ExperimentError, InfeasibleError, UsageError
from aniharnack.exponents import CONDITION_NAMES, ExponentData, check_condition, parse_exponents
from aniharnack.grid import Field, Grid, read_field_csv, write_field_csv


def _floats(text: str) -> List[float]:
    return [float(t) for t in text.split(",") if t.strip()]


def _exponents(args) -> ExponentData:
    return ExponentData(parse_exponents(args.p), args.lam, args.Lam)


def _add_exponent_args(sp, required=True):
    sp.add_argument("--p", required=required, help="comma-separated exponents, ascending")
    sp.add_argument("--lambda", dest="lam", type=float, default=1.0)
    sp.add_argument("--Lambda", dest="Lam", type=float, default=1.0)


def cmd_check_exponents(args) -> int:
    e = _exponents(args)
    names = CONDITION_NAMES if args.which == "all" else [args.which]
    for name in names:
        if name.endswith("pwcond") and args.q is None:
            continue
        print(check_condition(e, name, args.q).as_csv())
    return 0


def cmd_pucci(args) -> int:
    M = calculus.parse_matrix(args.matrix)
    if args.sign != "both":
        print(repr(calculus.pucci(args.sign, M, args.lam, args.Lam)))
        return 0
    for sign in ("plus", "minus"):
        print(f"{sign},{calculus.pucci(sign, M, args.lam, args.Lam)!r}")
    return 0


def cmd_cube(args) -> int:
    e = _exponents(args)
    cube = geometry.IntrinsicCube(e, args.r, args.M, a=args.a)
    print("axis,half_width")
    for i, w in enumerate(cube.half_widths):
        print(f"{i + 1},{float(w)!r}")
    return 0


def _write_rows(path, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["key", "value"])
        for k, v in rows:
            w.writerow([k, v if isinstance(v, str) else repr(float(v))])


def _read_rows(path):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if rows and rows[0] == ["key", "value"]:
        rows = rows[1:]
    return [(k, v) for k, v in rows]


def cmd_barrier_solve(args) -> int:
    e = _exponents(args)
    try:
        P = barrier.solve_barrier_params(e)
    except InfeasibleError as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return 1
    rows = P.as_rows() + [(f"p_{i + 1}", v) for i, v in enumerate(e.p)] + [("lambda", e.lam), ("Lambda", e.Lam)]
    if args.out:
        _write_rows(args.out, rows)
    else:
        for k, v in rows:
            print(f"{k},{v!r}")
    bad = barrier.invariant_violations(P)
    for msg in bad:
        print(f"invariant violated: {msg}", file=sys.stderr)
    return 1 if bad else 0


def cmd_barrier_certify(args) -> int:
    rows = _read_rows(args.params)
    table = dict(rows)
    if args.p:
        e = _exponents(args)
    else:
        n = sum(1 for k in table if k.startswith("p_"))
        if n == 0:
            raise UsageError("params file has no p_i rows; pass --p")
        e = ExponentData(tuple(float(table[f"p_{i + 1}"]) for i in range(n)),
                         float(table.get("lambda", 1.0)), float(table.get("Lambda", 1.0)))
    P = barrier.BarrierParams.from_rows([(k, v) for k, v in rows if not k.startswith("p_") and "ambda" not in k], e)
    mu = P.delta * e.Lam / args.R if args.mu is None else args.mu
    cert = barrier.certify_subsolution(P, args.R, mu, args.sampler, args.samples, args.seed, args.spot_checks)
    print(cert.summary())
    return 0 if cert.passed else 1


def _load_boundary(spec: str, grid: Grid, box) -> Field:
    kind, _, rest = spec.partition(":")
    if kind == "file":
        f = read_field_csv(rest, box[0], box[1])
        if f.grid.dims != grid.dims:
            raise UsageError(f"boundary file has dims {f.grid.dims}, grid has {grid.dims}")
        return Field(grid, f.values)
    if kind == "const":
        return Field(grid, np.full(grid.dims, float(rest)))
    raise UsageError("boundary must be file:PATH or const:VALUE")


def cmd_solve(args) -> int:
    e = _exponents(args)
    lo, hi = _floats(args.box)
    grid = Grid.box([lo] * e.n, [hi] * e.n, args.grid)
    b = _load_boundary(args.boundary, grid, (lo, hi))
    spec = solver.ProblemSpec(e, b, args.f, args.operator)
    u = solver.relax_solve(spec, args.tol, args.max_iter)
    write_field_csv(u, args.out)
    print(f"iterations={u.meta['iterations']} residual={u.meta['residual']:.3e}")
    return 0


def cmd_paraboloid(args) -> int:
    lo, hi = _floats(args.box)
    with open(args.field) as fh:
        n = len(fh.readline().split(",")) - 1
    e = ExponentData(parse_exponents(args.p) if args.p else (2.0,) * n, args.lam, args.Lam)
    u = read_field_csv(args.field, [lo] * e.n, [hi] * e.n)
    res = paraboloid.basic_measure_experiment(u, args.eps, args.M0, args.A, e)
    print("delta_observed,r0,K,touch_count")
    print(res.as_csv())
    if not res.contained:
        print("touching set escapes {u < M0}", file=sys.stderr)
        return 1
    return 0


def cmd_harnack(args) -> int:
    e = _exponents(args)
    cfg = harness.ExperimentConfig(e, args.grid, args.scenario, args.seed, args.out, args.r)
    ledger = harness.ConstantsLedger()
    failures = []
    res, u = harness.harnack_experiment(cfg, ledger)
    ledger.notes.append(f"scenario={args.scenario} grid={args.grid} r={args.r} solver_residual={u.meta['residual']:.3e}")

    w = cfg.half_width
    try:
        ledger.holder_alpha_observed = harness.holder_estimate(u, np.zeros(e.n), [w / 16, w / 8, w / 4, w / 2])
    except ExperimentError as exc:
        ledger.notes.append(f"holder: {exc}")

    fractions: List[float] = []
    m0_eff = res.u0
    try:
        fractions = harness.levelset_decay_experiment(u, m0_eff, args.L1, args.kmax, e)
        ledger.decay_ratios = fractions
        ledger.notes.append(f"level sets measured at L1^k u(0), L1={args.L1}")
        if any(b > a for a, b in zip(fractions, fractions[1:])):
            failures.append("level-set fractions increase with k")
    except ExperimentError as exc:
        ledger.notes.append(f"levelset: {exc}")

    r0 = args.M0 ** (-(e.pn - e.p1)) * args.A ** (-e.pn)
    try:
        P = barrier.solve_barrier_params(e)
        ledger.update_doubling(barrier.doubling_constants(P, r0))
    except InfeasibleError as exc:
        ledger.notes.append(f"barrier: {exc}")

    try:
        bm = paraboloid.basic_measure_experiment(u, 0.1, args.M0, args.A, e)
        ledger.delta_observed = bm.delta_observed if bm.delta_observed > 0 else None
        if not bm.contained:
            failures.append("touching set escapes {u < M0}")
    except ExperimentError as exc:
        ledger.notes.append(f"paraboloid: {exc}")

    failures += ledger.violations()
    report = [
        f"exponents={e.p} lambda={e.lam} Lambda={e.Lam}",
        f"u(0)={res.u0!r} sup={res.sup_value!r} inf={res.inf_value!r}",
        f"C_upper={res.C_upper!r} C_lower={res.C_lower!r} C0_observed={ledger.C0_observed!r}",
        f"clipped={res.clipped}",
    ] + [f"FAIL {m}" for m in failures] + [("status=fail" if failures else "status=ok")]
    ledger_csv = "key,value\n" + "".join(f"{k},{_csv_cell(v)}\n" for k, v in ledger.as_rows())
    frac_csv = "k,fraction\n" + "".join(f"{k + 1},{f!r}\n" for k, f in enumerate(fractions))
    harness.write_run(args.out, {"ledger.csv": ledger_csv, "fractions.csv": frac_csv,
                                 "report.txt": "\n".join(report) + "\n"})
    print("\n".join(report))
    return 1 if failures else 0


def _csv_cell(v: str) -> str:
    return f'"{v}"' if ("," in v or '"' in v) else v


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="aniharnack", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("check-exponents", help="evaluate the exponent conditions")
    _add_exponent_args(sp)
    sp.add_argument("--condition", "--which", dest="which", default="pcond", choices=list(CONDITION_NAMES) + ["pcond", "optpcond", "ppcond", "pwcond", "all"])
    sp.add_argument("--q", type=float, default=None, help="integrability exponent for pwcond")
    sp.set_defaults(func=cmd_check_exponents)

    sp = sub.add_parser("pucci", help="Pucci extremal operators of a symmetric matrix")
    sp.add_argument("--matrix", required=True, help='rows separated by ";", e.g. "2,0;0,-1"')
    sp.add_argument("--lambda", dest="lam", type=float, default=1.0)
    sp.add_argument("--Lambda", dest="Lam", type=float, default=1.0)
    sp.add_argument("--sign", default="both", choices=["plus", "minus", "both"])
    sp.set_defaults(func=cmd_pucci)

    sp = sub.add_parser("cube", help="half-widths of an intrinsic cube")
    _add_exponent_args(sp)
    sp.add_argument("--r", type=float, required=True)
    sp.add_argument("--M", type=float, required=True)
    sp.add_argument("--a", type=float, default=1.0)
    sp.set_defaults(func=cmd_cube)

    bp = sub.add_parser("barrier", help="barrier parameters and certificates")
    bsub = bp.add_subparsers(dest="barrier_command", required=True)
    sp = bsub.add_parser("solve")
    _add_exponent_args(sp)
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_barrier_solve)
    sp = bsub.add_parser("certify")
    sp.add_argument("--params", required=True)
    _add_exponent_args(sp, required=False)
    sp.add_argument("--R", type=float, default=10.0)
    sp.add_argument("--mu", type=float, default=None, help="default delta*Lambda/R")
    sp.add_argument("--samples", type=int, default=10_000)
    sp.add_argument("--sampler", default="random", choices=["random", "grid"])
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--spot-checks", type=int, default=10)
    sp.set_defaults(func=cmd_barrier_certify)

    sp = sub.add_parser("paraboloid", help="basic measure estimate on a field CSV")
    sp.add_argument("--field", required=True)
    sp.add_argument("--M0", type=float, default=16.0)
    sp.add_argument("--eps", type=float, default=0.1)
    sp.add_argument("--A", type=float, default=None, help="default 64n+1")
    sp.add_argument("--box", default="-1,1")
    _add_exponent_args(sp, required=False)
    sp.set_defaults(func=cmd_paraboloid)

    sp = sub.add_parser("solve", help="relaxation solve of a Dirichlet problem")
    _add_exponent_args(sp)
    sp.add_argument("--grid", type=int, default=65)
    sp.add_argument("--box", default="-1,1")
    sp.add_argument("--boundary", required=True, help="file:PATH (field CSV) or const:VALUE")
    sp.add_argument("--f", type=float, default=0.0)
    sp.add_argument("--operator", default="pi_laplacian", choices=solver.OPERATORS)
    sp.add_argument("--tol", type=float, default=1e-8)
    sp.add_argument("--max-iter", type=int, default=2_000_000)
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_solve)

    sp = sub.add_parser("harnack", help="run one Harnack scenario into a run directory")
    _add_exponent_args(sp)
    sp.add_argument("--scenario", default="spike", choices=harness.SCENARIOS)
    sp.add_argument("--grid", type=int, default=65)
    sp.add_argument("--r", type=float, default=0.5)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--L1", type=float, default=1.25)
    sp.add_argument("--kmax", type=int, default=6)
    sp.add_argument("--M0", type=float, default=16.0)
    sp.add_argument("--A", type=float, default=8.0)
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_harnack)
    return ap


def main(argv: Optional[List[str]] = None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        return int(args.func(args))
    except (UsageError, ExperimentError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
