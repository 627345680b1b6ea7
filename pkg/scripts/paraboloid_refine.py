"""Sliding-paraboloid measure on the spike solution under grid refinement."""

import argparse

import numpy as np

from aniharnack.exponents import ExponentData, parse_exponents
from aniharnack.grid import Field
from aniharnack.harness import ExperimentConfig, solve_scenario
from aniharnack.paraboloid import basic_measure_experiment


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--grids", default="65,129,257")
    ap.add_argument("--M0", type=float, default=16.0)
    ap.add_argument("--A", type=float, default=8.0)
    ap.add_argument("--eps", type=float, default=0.1)
    args = ap.parse_args()
    e = ExponentData(parse_exponents("2,2"))
    half = 1.0 / args.A  # K_r0(1) for p = (2, 2)
    print("N,delta_observed,touch_count,vertex_count,contained,jacobian_bound")
    for N in map(int, args.grids.split(",")):
        u = solve_scenario(ExperimentConfig(e, N, "spike"))
        inner = np.all(np.abs(u.grid.points()) <= half * (1 + 1e-12), axis=1).reshape(u.grid.dims)
        u = Field(u.grid, u.values / u.values[inner].min())
        res = basic_measure_experiment(u, args.eps, args.M0, args.A, e)
        print(f"{N},{res.delta_observed:.5f},{res.touch_count},{res.vertex_count},"
              f"{res.contained},{res.jacobian_bound:.3f}")


if __name__ == "__main__":
    main()
