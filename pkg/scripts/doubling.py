"""Barrier comparison on a spike solution built to satisfy the doubling hypothesis."""

import argparse

from aniharnack.barrier import doubling_constants, solve_barrier_params
from aniharnack.exponents import ExponentData, parse_exponents
from aniharnack.geometry import IntrinsicCube
from aniharnack.harness import ConstantsLedger, doubling_experiment, spike_problem
from aniharnack.solver import relax_solve


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--p", default="2,2", help="anisotropic choices give astronomically small m0")
    ap.add_argument("--grid", type=int, default=65)
    ap.add_argument("--r0", type=float, default=1 / 16)
    args = ap.parse_args()
    e = ExponentData(parse_exponents(args.p))
    P = solve_barrier_params(e)
    dc = doubling_constants(P, args.r0)
    ledger = ConstantsLedger()
    ledger.update_doubling(dc)
    print(f"m0={dc.m0!r} R1={dc.R1!r} L0={dc.L0!r} eps0={dc.eps0!r} mu0={dc.mu0!r}")
    outer = IntrinsicCube(e, dc.R1, dc.m0)
    inner = IntrinsicCube(e, args.r0, dc.L0 * dc.m0)
    spec = spike_problem(e, outer.half_widths, args.grid, inner, 2 * dc.L0 * dc.m0)
    u = relax_solve(spec, tol=1e-6 * dc.L0)
    rep = doubling_experiment(u, P, ledger, args.r0)
    print(f"barrier_slack={rep.barrier_slack:.4g} at {rep.worst_node}")
    print(f"conclusion_slack={rep.conclusion_slack:.4g}")
    print(f"comparison={rep.comparison_holds} conclusion={rep.conclusion_holds} "
          f"implication={rep.implication_holds}")


if __name__ == "__main__":
    main()
