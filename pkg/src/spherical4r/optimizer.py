"""Differential Evolution, DE/rand/1/bin with per-generation dither."""
from __future__ import annotations

import hashlib
import logging
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class DEConfig:
    bounds_lo: np.ndarray
    bounds_hi: np.ndarray
    pop_size: int = 50
    generations: int = 2000
    cr: float = 0.9
    dither_lo: float = 0.5
    dither_hi: float = 1.0
    seed: int = 1
    # components wrapped modulo their range instead of clamped (angles)
    periodic: tuple | None = None

    def __post_init__(self):
        lo = np.asarray(self.bounds_lo, dtype=float)
        hi = np.asarray(self.bounds_hi, dtype=float)
        object.__setattr__(self, "bounds_lo", lo)
        object.__setattr__(self, "bounds_hi", hi)
        if lo.shape != hi.shape or lo.ndim != 1:
            raise ValueError("bounds must be 1-D arrays of equal length")
        if np.any(hi < lo):
            raise ValueError("upper bounds must not be below lower bounds")
        if self.pop_size < 4:
            raise ValueError("population needs at least 4 individuals")
        if not 0.0 <= self.cr <= 1.0:
            raise ValueError("crossover probability must lie in [0, 1]")
        if not 0.0 < self.dither_lo <= self.dither_hi:
            raise ValueError("dither range must satisfy 0 < lo <= hi")
        if self.generations < 0:
            raise ValueError("generations must be non-negative")
        if self.periodic is not None and len(self.periodic) != len(lo):
            raise ValueError("periodic mask must match the dimension")

    @property
    def dim(self) -> int:
        return len(self.bounds_lo)


@dataclass
class RunLog:
    best_f: list[float] = field(default_factory=list)
    best_x: list[np.ndarray] = field(default_factory=list)
    evaluations: list[int] = field(default_factory=list)

    def record(self, f: float, x: np.ndarray, evals: int) -> None:
        self.best_f.append(float(f))
        self.best_x.append(np.array(x, copy=True))
        self.evaluations.append(int(evals))

    def digest(self) -> str:
        h = hashlib.sha256()
        h.update(np.asarray(self.best_f, dtype=float).tobytes())
        h.update(np.asarray(self.best_x, dtype=float).tobytes())
        h.update(np.asarray(self.evaluations, dtype=np.int64).tobytes())
        return h.hexdigest()


@dataclass
class DEResult:
    x: np.ndarray
    f: float
    population: np.ndarray
    fitness: np.ndarray
    log: RunLog


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


def init_population(cfg: DEConfig, rng: np.random.Generator) -> np.ndarray:
    u = rng.random((cfg.pop_size, cfg.dim))
    return u * (cfg.bounds_hi - cfg.bounds_lo) + cfg.bounds_lo


def repair(x: np.ndarray, cfg: DEConfig) -> np.ndarray:
    """Bring trial vectors back into the box: wrap periodic components, clamp the rest."""
    lo, hi = cfg.bounds_lo, cfg.bounds_hi
    out = np.clip(x, lo, hi)
    if cfg.periodic is not None:
        per = np.asarray(cfg.periodic, dtype=bool)
        span = np.where(hi > lo, hi - lo, 1.0)
        wrapped = lo + np.mod(x - lo, span)
        out = np.where(per, wrapped, out)
    return out


def pick_indices(m: int, i: int, rng: np.random.Generator) -> tuple[int, int, int]:
    """Three mutually distinct indices, all different from ``i`` (rejection sampling)."""
    chosen: list[int] = []
    while len(chosen) < 3:
        r = int(rng.integers(m))
        if r != i and r not in chosen:
            chosen.append(r)
    return chosen[0], chosen[1], chosen[2]


def mutate(pop: np.ndarray, idx: tuple[int, int, int], F: float) -> np.ndarray:
    r0, r1, r2 = idx
    return pop[r0] + F * (pop[r1] - pop[r2])


def crossover(target: np.ndarray, mutant: np.ndarray, cr: float, u: np.ndarray, j_rand: int) -> np.ndarray:
    """Binomial crossover given the uniform draws ``u`` and the forced index ``j_rand``."""
    take = u <= cr
    take[j_rand] = True
    return np.where(take, mutant, target)


def select(target, trial, f_target: float, f_trial: float):
    """Trial replaces target when it is no worse (ties favour the trial)."""
    if f_trial <= f_target:
        return trial, f_trial
    return target, f_target


def _evaluate(objective, x: np.ndarray, batch: bool) -> np.ndarray:
    if batch:
        return np.asarray(objective(x), dtype=float).reshape(len(x))
    return np.array([float(objective(row)) for row in x])


def run(
    cfg: DEConfig,
    objective: Callable,
    batch: bool = True,
    callback: Callable[[int, float], None] | None = None,
) -> DEResult:
    """Minimise ``objective`` over the box given by ``cfg``.

    With ``batch`` the objective receives an ``(m, D)`` array per generation.
    All random numbers of a generation are drawn before any evaluation, so the
    run is reproducible from the seed alone.
    """
    rng = make_rng(cfg.seed)
    m, dim = cfg.pop_size, cfg.dim
    pop = init_population(cfg, rng)
    fit = _evaluate(objective, pop, batch)
    evals = m
    log = RunLog()
    best = int(np.argmin(fit))
    log.record(fit[best], pop[best], evals)

    for gen in range(1, cfg.generations + 1):
        F = float(rng.uniform(cfg.dither_lo, cfg.dither_hi))
        trials = np.empty_like(pop)
        for i in range(m):
            idx = pick_indices(m, i, rng)
            j_rand = int(rng.integers(dim))
            u = rng.random(dim)
            trials[i] = crossover(pop[i], mutate(pop, idx, F), cfg.cr, u, j_rand)
        trials = repair(trials, cfg)
        f_trials = _evaluate(objective, trials, batch)
        evals += m
        better = f_trials <= fit
        pop[better] = trials[better]
        fit[better] = f_trials[better]
        best = int(np.argmin(fit))
        log.record(fit[best], pop[best], evals)
        if callback is not None:
            callback(gen, float(fit[best]))
        if gen % 500 == 0:
            logger.info("generation %d: best %.6g", gen, fit[best])

    return DEResult(pop[best].copy(), float(fit[best]), pop, fit, log)
