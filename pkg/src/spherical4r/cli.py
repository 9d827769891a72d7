"""Command-line front end: ``spherical4r {synth,evaluate,traj,energy,fdcheck}``."""
from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
import time
from dataclasses import asdict, dataclass, fields
from pathlib import Path

import numpy as np

from spherical4r import __version__
from spherical4r import dual3 as d3
from spherical4r.designs import DesignFileError, bundled_design, design_to_dict, load_design
from spherical4r.dual3 import DomainError
from spherical4r.energy import (
    PhysicalModel,
    cycle_energy,
    energy_profile,
    net_cycle_work,
    pe_variation,
    reduction_summary,
    shaking_force_profile,
    shaking_force_reduction,
)
from spherical4r.geom import SingularityError
from spherical4r.mechanism import InfeasibleConfiguration, com_state, trajectory
from spherical4r.objectives import (
    DesignSpace,
    TargetPath,
    WeightedObjective,
    design_metrics,
    table1,
    theta_schedule,
)
from spherical4r.optimizer import DEConfig, run

log = logging.getLogger("spherical4r")

EXIT_OK, EXIT_CONFIG, EXIT_INFEASIBLE, EXIT_NUMERIC = 0, 2, 3, 4
TASKS = ("synth", "evaluate", "traj", "energy", "fdcheck")


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    task: str = "synth"
    points: str | None = None  # None: the bundled 64-point path
    design: str | None = None
    compare: str | None = None
    out: str = "out"
    seed: int = 1
    pop_size: int = 50
    generations: int = 2000
    cr: float = 0.9
    dither_lo: float = 0.5
    dither_hi: float = 1.0
    w_path: float = 1.0
    w_cm: float = 0.001
    extensions: bool = True
    include_coupler_triangle: bool = False
    planar_pivots: bool = False
    branch: str = "minus"
    theta_dot: float = 1.0
    radius: float = 1.0
    phys_radius: float = 0.23
    density: float = 1.0
    gravity: float = 9.81
    samples_per_link: int = 64
    grid_n: int = 2048
    h: float = 1e-6
    samples: int = 100
    fd_seed: int = 0

    def validate(self) -> None:
        if self.task not in TASKS:
            raise ConfigError(f"unknown task {self.task!r}")
        if self.branch not in ("plus", "minus"):
            raise ConfigError("branch must be 'plus' or 'minus'")
        if self.pop_size < 4:
            raise ConfigError("pop_size must be at least 4")
        if self.generations < 0:
            raise ConfigError("generations must be non-negative")
        if not 0.0 <= self.cr <= 1.0:
            raise ConfigError("cr must lie in [0, 1]")
        if not 0.0 < self.dither_lo <= self.dither_hi:
            raise ConfigError("dither range must satisfy 0 < lo <= hi")
        if self.w_path < 0 or self.w_cm < 0 or (self.w_path == 0 and self.w_cm == 0):
            raise ConfigError("weights must be non-negative and not both zero")
        if self.grid_n < 2 or self.samples < 1 or self.h <= 0:
            raise ConfigError("grid_n >= 2, samples >= 1 and h > 0 are required")
        if self.samples_per_link < 8:
            raise ConfigError("samples_per_link must be at least 8")
        for name in ("theta_dot", "radius", "phys_radius", "density"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be positive")
        if self.points is not None and not Path(self.points).is_file():
            raise ConfigError(f"points file {self.points} does not exist")
        for name in ("design", "compare"):
            ref = getattr(self, name)
            if ref is not None and ref not in ("table2", "unconstrained") and not Path(ref).is_file():
                raise ConfigError(f"{name} file {ref} does not exist")
        if self.task in ("evaluate", "traj", "energy", "fdcheck") and self.design is None:
            raise ConfigError(f"task {self.task} needs a design file")

    def resolved(self) -> dict:
        # where results are written does not affect them
        d = asdict(self)
        d.pop("out")
        return d

    def physical(self) -> PhysicalModel:
        return PhysicalModel(
            radius=self.phys_radius,
            density=self.density,
            g=self.gravity,
            theta_dot=self.theta_dot,
            samples_per_link=self.samples_per_link,
        )

    def space(self) -> DesignSpace:
        return DesignSpace(
            extensions=self.extensions,
            planar_pivots=self.planar_pivots,
            branch=self.branch,
            include_coupler_triangle=self.include_coupler_triangle,
        )

    def target(self) -> TargetPath:
        try:
            return table1() if self.points is None else TargetPath.load(self.points)
        except (OSError, ValueError, KeyError) as exc:
            raise ConfigError(f"cannot load target points: {exc}") from exc


_FIELDS = {f.name: f for f in fields(RunConfig)}


def config_from_mapping(data: dict) -> RunConfig:
    unknown = sorted(set(data) - set(_FIELDS))
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
    kw = {}
    for k, v in data.items():
        default = getattr(RunConfig, k, None)
        try:
            if isinstance(default, bool):
                if not isinstance(v, bool):
                    raise TypeError
                kw[k] = v
            elif isinstance(default, int):
                kw[k] = int(v)
            elif isinstance(default, float):
                kw[k] = float(v)
            else:
                kw[k] = v if v is None else str(v)
        except (TypeError, ValueError):
            raise ConfigError(f"bad value for {k}: {v!r}") from None
    return RunConfig(**kw)


def _parse_weights(text: str) -> tuple[float, float]:
    try:
        a, b = (float(s) for s in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError("weights must be 'w_path,w_cm'") from None
    return a, b


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="spherical4r", description=__doc__)
    p.add_argument("task", choices=TASKS)
    p.add_argument("design", nargs="?", help="design JSON, or 'table2' / 'unconstrained'")
    p.add_argument("--config", help="JSON file with RunConfig keys; flags override it")
    p.add_argument("--seed", type=int)
    p.add_argument("--points", help="target path, CSV (x,y,z) or JSON")
    p.add_argument("--out", help="output directory")
    p.add_argument("--weights", type=_parse_weights, help="w_path,w_cm")
    p.add_argument("--branch", choices=("plus", "minus"))
    p.add_argument("--planar-pivots", action="store_true", default=None)
    p.add_argument("--no-extensions", action="store_true", default=None)
    p.add_argument("--generations", type=int)
    p.add_argument("--pop", type=int)
    p.add_argument("--cr", type=float)
    p.add_argument("--compare", help="second design for the energy task (the unbalanced one)")
    p.add_argument("--grid-n", type=int)
    p.add_argument("--h", type=float, help="finite-difference step for fdcheck")
    p.add_argument("--samples", type=int, help="input angles sampled by fdcheck")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def resolve_config(args: argparse.Namespace) -> RunConfig:
    data = {}
    if args.config:
        try:
            data = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
    data["task"] = args.task
    overrides = {
        "design": args.design,
        "seed": args.seed,
        "points": args.points,
        "out": args.out,
        "branch": args.branch,
        "generations": args.generations,
        "pop_size": args.pop,
        "cr": args.cr,
        "compare": args.compare,
        "grid_n": args.grid_n,
        "h": args.h,
        "samples": args.samples,
        "planar_pivots": args.planar_pivots,
    }
    data.update({k: v for k, v in overrides.items() if v is not None})
    if args.no_extensions:
        data["extensions"] = False
    if args.weights is not None:
        data["w_path"], data["w_cm"] = args.weights
    cfg = config_from_mapping(data)
    cfg.validate()
    return cfg


# -- serialisation --------------------------------------------------------------


def _num(v):
    # json writes floats with repr, the shortest string that round-trips exactly
    if isinstance(v, (np.floating, float)):
        v = float(v)
        return v if np.isfinite(v) else None
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, np.bool_):
        return bool(v)
    if isinstance(v, np.ndarray):
        return [_num(x) for x in v.tolist()]
    if isinstance(v, (list, tuple)):
        return [_num(x) for x in v]
    if isinstance(v, dict):
        return {k: _num(x) for k, x in v.items()}
    return v


def dump_json(doc: dict, file: Path) -> None:
    file.write_text(json.dumps(_num(doc), indent=2, sort_keys=True) + "\n")


def _fmt(v) -> str:
    return "" if v is None else format(float(v), ".17g")


def write_trajectory_csv(records, file: Path) -> None:
    with open(file, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["theta", "feasible", "phi", "gx", "gy", "gz", "cx", "cy", "cz", "vx", "vy", "vz", "ax", "ay", "az"])
        for r in records:
            row = [_fmt(r.theta), int(r.feasible), _fmt(r.phi)]
            for vec in (r.r_gen, r.r_cm, r.v_cm, r.a_cm):
                row += [""] * 3 if vec is None else [_fmt(x) for x in vec]
            w.writerow(row)


def trajectory_rows(records) -> list[dict]:
    out = []
    for r in records:
        row = {"theta": r.theta, "feasible": r.feasible}
        if r.feasible:
            row.update(phi=r.phi, r_gen=r.r_gen, r_cm=r.r_cm, v_cm=r.v_cm, a_cm=r.a_cm)
        out.append(row)
    return out


def energy_summary(design, phys: PhysicalModel, grid_n: int) -> dict:
    g, m = design.geometry, design.mass
    try:
        return {
            "grid_n": grid_n,
            "cycle_energy": cycle_energy(g, m, phys, grid_n),
            "net_cycle_work": net_cycle_work(g, m, phys, grid_n),
            "pe_variation": pe_variation(g, m, phys, grid_n),
        }
    except InfeasibleConfiguration as exc:
        return {"grid_n": grid_n, "error": str(exc)}


# -- tasks ------------------------------------------------------------------------


def _load(ref: str, path: TargetPath):
    if ref in ("table2", "unconstrained") and not Path(ref).is_file():
        return bundled_design(ref, path)
    return load_design(ref, path)


def _out_dir(cfg: RunConfig) -> Path:
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def synthesise(cfg: RunConfig) -> tuple[dict, list]:
    """Run DE on the weighted objective; return the result document and trajectory."""
    path = cfg.target()
    space = cfg.space()
    obj = WeightedObjective(space, path, cfg.w_path, cfg.w_cm, cfg.theta_dot, cfg.radius)
    lo, hi = space.bounds()
    de = DEConfig(lo, hi, cfg.pop_size, cfg.generations, cfg.cr, cfg.dither_lo, cfg.dither_hi, cfg.seed)
    res = run(de, obj)
    design = space.decode(res.x)
    # same (1, D) batch shape the optimizer used, so the stored values replay bit-exactly
    met = obj.metrics(res.x[None, :])
    thetas = theta_schedule(design.theta1, path.n)
    records = trajectory(thetas, design.geometry, design.mass, cfg.theta_dot, 0.0, cfg.radius)
    doc = {
        "version": __version__,
        "config": cfg.resolved(),
        "design_space": list(space.names),
        "design_vector": res.x,
        "design": design_to_dict(design),
        "objective": res.f,
        "f_path": float(met.f_path[0]),
        "f_cm": float(met.f_cm[0]),
        "infeasible_fraction": float(met.infeasible_fraction[0]),
        "feasible": bool(met.infeasible_fraction[0] == 0.0),
        "trajectory": trajectory_rows(records),
        "energy": energy_summary(design, cfg.physical(), cfg.grid_n),
        "run_log": {"best_f": res.log.best_f, "evaluations": res.log.evaluations[-1], "digest": res.log.digest()},
    }
    return doc, records


def cmd_synth(cfg: RunConfig) -> int:
    doc, records = synthesise(cfg)
    out = _out_dir(cfg)
    dump_json(doc, out / "result.json")
    write_trajectory_csv(records, out / "trajectory.csv")
    print(f"f_path {doc['f_path']:.6g}  f_cm {doc['f_cm']:.6g}  -> {out / 'result.json'}")
    if doc["infeasible_fraction"] == 1.0:
        print("best design is infeasible at every prescribed angle", file=sys.stderr)
        return EXIT_INFEASIBLE
    return EXIT_OK


def evaluate_design(cfg: RunConfig) -> dict:
    path = cfg.target()
    design = _load(cfg.design, path)
    met = design_metrics(design, path, cfg.theta_dot, cfg.radius)
    thetas = theta_schedule(design.theta1, path.n)
    _, ok, _ = com_state(d3.seed(thetas), design.geometry, design.mass)
    return {
        "design": design_to_dict(design),
        "f_path": float(met.f_path),
        "f_cm": float(met.f_cm),
        "feasible": [bool(v) for v in ok],
    }


def cmd_evaluate(cfg: RunConfig) -> int:
    rep = evaluate_design(cfg)
    print(f"theta1 {rep['design']['theta1']:.6f}")
    print(f"f_path {rep['f_path']:.6g}")
    print(f"f_cm   {rep['f_cm']:.6g}")
    feas = "".join("." if f else "x" for f in rep["feasible"])
    print(f"feasible {sum(rep['feasible'])}/{len(feas)}  {feas}")
    dump_json(rep, _out_dir(cfg) / "evaluation.json")
    return EXIT_OK if all(rep["feasible"]) else EXIT_INFEASIBLE


def cmd_traj(cfg: RunConfig) -> int:
    path = cfg.target()
    design = _load(cfg.design, path)
    thetas = design.theta1 + 2.0 * np.pi * np.arange(cfg.grid_n) / cfg.grid_n
    records = trajectory(thetas, design.geometry, design.mass, cfg.theta_dot, 0.0, cfg.radius)
    file = _out_dir(cfg) / "trajectory.csv"
    write_trajectory_csv(records, file)
    bad = sum(not r.feasible for r in records)
    print(f"{len(records)} rows, {bad} infeasible -> {file}")
    return EXIT_OK if bad == 0 else EXIT_INFEASIBLE


def _write_rows(file: Path, header, rows) -> None:
    with open(file, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


def energy_report(cfg: RunConfig) -> dict:
    path = cfg.target()
    phys = cfg.physical()
    design = _load(cfg.design, path)
    out = _out_dir(cfg)
    theta = 2.0 * np.pi * np.arange(cfg.grid_n) / cfg.grid_n
    prof = energy_profile(design.geometry, design.mass, phys, theta)
    _write_rows(out / "energy.csv", ["theta", "U", "K", "dU", "dK", "power"], prof.rows())
    rep = {"design": energy_summary(design, phys, cfg.grid_n)}
    if cfg.compare is not None:
        other = _load(cfg.compare, path)
        rep["compare"] = energy_summary(other, phys, cfg.grid_n)
        f_b = shaking_force_profile(design.geometry, design.mass, phys, theta)
        f_nb = shaking_force_profile(other.geometry, other.mass, phys, theta)
        red = shaking_force_reduction(f_nb, f_b)
        _write_rows(out / "shaking_force.csv", ["theta", "F_unbalanced", "F_balanced", "reduction"], zip(theta, f_nb, f_b, red))
        rep["shaking_force_reduction"] = reduction_summary(red)
        pe_b, pe_nb = rep["design"]["pe_variation"], rep["compare"]["pe_variation"]
        rep["pe_variation_reduction"] = 1.0 - pe_b / pe_nb
        rep["delta_energy"] = rep["compare"]["cycle_energy"] - rep["design"]["cycle_energy"]
    dump_json(rep, out / "energy.json")
    return rep


def cmd_energy(cfg: RunConfig) -> int:
    rep = energy_report(cfg)
    print(f"cycle energy {rep['design']['cycle_energy']:.6g} J  PE variation {rep['design']['pe_variation']:.6g} J")
    if "shaking_force_reduction" in rep:
        s = rep["shaking_force_reduction"]
        print(f"shaking force reduction mean {s['mean']:.3f}  min {s['min']:.3f}  max {s['max']:.3f}")
        print(f"PE variation reduction {rep['pe_variation_reduction']:.3f}  delta E {rep['delta_energy']:.6g} J")
    return EXIT_OK


# -- finite differences versus dual numbers ----------------------------------------


def _com(theta, design) -> np.ndarray:
    com, ok, _ = com_state(d3.const(np.asarray(theta, float)), design.geometry, design.mass)
    return com.val, ok


def naive_second_difference(design, theta: np.ndarray, h: float) -> np.ndarray:
    """Central second difference of the centre of mass with step ``h``."""
    fp, _ = _com(theta + h, design)
    f0, _ = _com(theta, design)
    fm, _ = _com(theta - h, design)
    return (fp - 2.0 * f0 + fm) / (h * h)


def central_first_difference(design, theta: np.ndarray, h: float) -> np.ndarray:
    fp, _ = _com(theta + h, design)
    fm, _ = _com(theta - h, design)
    return (fp - fm) / (2.0 * h)


def richardson(fn, design, theta: np.ndarray, h0: float = 0.05, levels: int = 5) -> np.ndarray:
    """Richardson-extrapolated limit of an even-order central difference ``fn``."""
    table = [fn(design, theta, h0 / 2**k) for k in range(levels)]
    for j in range(1, levels):
        factor = 4.0**j
        table = [(factor * table[k + 1] - table[k]) / (factor - 1.0) for k in range(len(table) - 1)]
    return table[0]


def feasible_samples(design, n: int, seed: int = 0, margin: float = 0.05) -> np.ndarray:
    """``n`` random input angles whose neighbourhood of half-width ``margin`` is feasible."""
    rng = np.random.Generator(np.random.PCG64(seed))
    out = []
    while len(out) < n:
        th = rng.uniform(0.0, 2.0 * np.pi, 4 * n)
        probe = th[:, None] + np.linspace(-margin, margin, 9)
        _, ok = _com(probe, design)
        out.extend(th[np.all(ok, axis=1)].tolist())
        if not np.any(ok):
            raise InfeasibleConfiguration("design is infeasible almost everywhere")
    return np.array(out[:n])


def fd_report(design, n: int, h: float, seed: int = 0) -> dict:
    theta = feasible_samples(design, n, seed)
    ref1 = richardson(central_first_difference, design, theta)
    ref2 = richardson(naive_second_difference, design, theta)
    t0 = time.perf_counter()
    com, _, _ = com_state(d3.seed(theta), design.geometry, design.mass)
    t_dual = time.perf_counter() - t0
    t0 = time.perf_counter()
    fd2 = naive_second_difference(design, theta, h)
    t_fd = time.perf_counter() - t0
    scale2 = np.max(np.abs(ref2))
    return {
        "h": h,
        "samples": n,
        "fd_abs_error": float(np.max(np.abs(fd2 - ref2))),
        "fd_rel_error": float(np.max(np.abs(fd2 - ref2)) / scale2),
        "dual_d1_abs_error": float(np.max(np.abs(com.d1 - ref1))),
        "dual_d2_abs_error": float(np.max(np.abs(com.d2 - ref2))),
        "dual_d2_rel_error": float(np.max(np.abs(com.d2 - ref2)) / scale2),
        "time_dual": t_dual,
        "time_fd": t_fd,
        "time_ratio_fd_over_dual": t_fd / t_dual if t_dual > 0 else None,
    }


def cmd_fdcheck(cfg: RunConfig) -> int:
    design = _load(cfg.design, cfg.target())
    rep = fd_report(design, cfg.samples, cfg.h, cfg.fd_seed)
    for k, v in rep.items():
        print(f"{k:24s} {v:.6g}" if isinstance(v, float) else f"{k:24s} {v}")
    dump_json(rep, _out_dir(cfg) / "fdcheck.json")
    return EXIT_OK


COMMANDS = {
    "synth": cmd_synth,
    "evaluate": cmd_evaluate,
    "traj": cmd_traj,
    "energy": cmd_energy,
    "fdcheck": cmd_fdcheck,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        cfg = resolve_config(args)
        return COMMANDS[cfg.task](cfg)
    except (ConfigError, DesignFileError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except InfeasibleConfiguration as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (DomainError, SingularityError, FloatingPointError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
