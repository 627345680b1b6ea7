"""Harnack ratio of the explicit six-dimensional solution blows up under refinement."""

import argparse

from aniharnack.harness import counterexample_ratios


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--grids", default="16,32,64,128")
    ap.add_argument("--n", type=int, default=6)
    args = ap.parse_args()
    print("N,sup,inf,ratio")
    for N, sup, inf, ratio in counterexample_ratios([int(v) for v in args.grids.split(",")], args.n):
        print(f"{N},{sup:.6g},{inf:.6g},{ratio:.6g}")


if __name__ == "__main__":
    main()
