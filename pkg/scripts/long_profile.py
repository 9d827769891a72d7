"""Long synthesis profile: 10000 generations for several seeds (hours on one core)."""
import argparse
import time

from spherical4r.objectives import DesignSpace, WeightedObjective, table1
from spherical4r.optimizer import DEConfig, run


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seeds", type=int, nargs="+", default=[1, 2, 3])
    ap.add_argument("--generations", type=int, default=10_000)
    ap.add_argument("--w-cm", type=float, default=0.001)
    args = ap.parse_args()

    space, path = DesignSpace(), table1()
    lo, hi = space.bounds()
    obj = WeightedObjective(space, path, 1.0, args.w_cm)
    for seed in args.seeds:
        t0 = time.perf_counter()
        res = run(DEConfig(lo, hi, generations=args.generations, seed=seed), obj)
        met = obj.metrics(res.x[None])
        print(
            f"seed {seed}: f_path {float(met.f_path[0]):.3e}  f_cm {float(met.f_cm[0]):.3e}  "
            f"({time.perf_counter() - t0:.0f} s)",
            flush=True,
        )


if __name__ == "__main__":
    main()
