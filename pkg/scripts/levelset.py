"""Level-set decay of the spike solution, normalised so u(0) = m0."""

import argparse

from aniharnack.exponents import ExponentData, parse_exponents
from aniharnack.grid import Field
from aniharnack.harness import ExperimentConfig, decay_fit, levelset_decay_experiment, solve_scenario


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--p", default="2,2")
    ap.add_argument("--grids", default="65,129")
    ap.add_argument("--m0", type=float, default=0.5)
    ap.add_argument("--L1", type=float, default=1.25)
    ap.add_argument("--kmax", type=int, default=6)
    args = ap.parse_args()
    e = ExponentData(parse_exponents(args.p))
    for N in map(int, args.grids.split(",")):
        u = solve_scenario(ExperimentConfig(e, N, "spike"))
        u = Field(u.grid, u.values * args.m0 / u.value_at_node([0.0] * e.n))
        fr = levelset_decay_experiment(u, args.m0, args.L1, args.kmax, e)
        slope, r2 = decay_fit(fr)
        print(f"N={N} fractions=" + ",".join(f"{f:.4f}" for f in fr) + f" slope={slope:.3f} R2={r2:.3f}")


if __name__ == "__main__":
    main()
