"""Sweep the finite-difference step on a design and compare against dual numbers.

Prints one row per step: absolute and relative error of the naive second
difference, and the wall-time ratio to the dual evaluation.
"""
import argparse

from spherical4r import cli
from spherical4r.objectives import table1


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("design", nargs="?", default="table2")
    ap.add_argument("--samples", type=int, default=100)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    design = cli._load(args.design, table1())

    print(f"{'h':>8} {'fd_abs':>10} {'fd_rel':>10} {'dual_rel':>10} {'t_fd/t_dual':>12}")
    for h in (1e-2, 1e-3, 1e-4, 1e-5, 1e-6, 1e-7):
        r = cli.fd_report(design, args.samples, h, seed=args.seed)
        print(
            f"{h:8.0e} {r['fd_abs_error']:10.2e} {r['fd_rel_error']:10.2e} "
            f"{r['dual_d2_rel_error']:10.2e} {r['time_ratio_fd_over_dual']:12.2f}"
        )


if __name__ == "__main__":
    main()
