"""Path and centre-of-mass-acceleration objectives for prescribed-timing synthesis."""
from __future__ import annotations

import csv
import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from spherical4r import dual3 as d3
from spherical4r.mechanism import Geometry, MassModel, com_state

PENALTY = 1e6
TWO_PI = 2.0 * np.pi
ALPHA_MARGIN = 0.05
THREADS_ENV = "SPHERICAL4R_THREADS"
CHUNK = 10  # fixed chunk size keeps array shapes, hence results, independent of thread count


@dataclass(frozen=True)
class TargetPath:
    points: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != 3 or len(pts) < 1:
            raise ValueError("target path must be an (n, 3) array with n >= 1")
        norms = np.linalg.norm(pts, axis=1)
        if np.any(np.abs(norms - 1.0) > 1e-4):
            bad = int(np.argmax(np.abs(norms - 1.0)))
            raise ValueError(f"target point {bad + 1} is not on the unit sphere (norm {norms[bad]:.6f})")
        object.__setattr__(self, "points", pts)

    @property
    def n(self) -> int:
        return len(self.points)

    @classmethod
    def from_csv(cls, path) -> "TargetPath":
        with open(path, newline="") as fh:
            rows = [r for r in csv.reader(fh) if r and not r[0].startswith("#")]
        if rows and not _is_number(rows[0][0]):
            rows = rows[1:]
        return cls(np.array([[float(v) for v in r[:3]] for r in rows]))

    @classmethod
    def from_json(cls, path) -> "TargetPath":
        with open(path) as fh:
            data = json.load(fh)
        if isinstance(data, dict):
            data = data["points"]
        return cls(np.array(data, dtype=float))

    @classmethod
    def load(cls, path) -> "TargetPath":
        path = Path(path)
        if path.suffix.lower() == ".json":
            return cls.from_json(path)
        return cls.from_csv(path)


def _is_number(s: str) -> bool:
    try:
        float(s)
    except ValueError:
        return False
    return True


def data_path(name: str) -> Path:
    return Path(str(resources.files("spherical4r") / "data" / name))


def table1() -> TargetPath:
    """The bundled 64-point prescribed-timing target path."""
    return TargetPath.from_csv(data_path("table1.csv"))


def theta_schedule(theta1, n: int, offsets=None) -> np.ndarray:
    """Input angles for the target points; uniform over one revolution by default."""
    if n < 1:
        raise ValueError("need at least one point")
    if offsets is None:
        offsets = TWO_PI * np.arange(n) / n
    offsets = np.asarray(offsets, dtype=float)
    if offsets.shape != (n,):
        raise ValueError(f"expected {n} angle offsets, got shape {offsets.shape}")
    return np.asarray(theta1, dtype=float)[..., None] + offsets


# -- design vectors -----------------------------------------------------------

GEOM_NAMES = ("phi1", "eta1", "psi", "beta", "gamma", "alpha1", "alpha2", "alpha3", "alpha4")
PLANAR_NAMES = ("phi1", "phi4", "beta", "gamma", "alpha1", "alpha2", "alpha3")
EXT_NAMES = ("e1", "e2", "e3", "e4")


@dataclass(frozen=True)
class Design:
    """A fully specified mechanism: input angle of the first point, geometry, masses."""

    theta1: float
    geometry: Geometry
    mass: MassModel = field(default_factory=MassModel)


def _bound(name: str) -> tuple[float, float]:
    if name == "eta1":
        return 0.0, np.pi
    if name.startswith("alpha"):
        return ALPHA_MARGIN, np.pi - ALPHA_MARGIN
    return 0.0, TWO_PI


@dataclass(frozen=True)
class DesignSpace:
    """Layout and bounds of the flat optimizer vector.

    Standard layout: ``theta1, phi1, eta1, psi, beta, gamma, alpha1..alpha4``
    (D = 10), followed by ``e1..e4`` when ``extensions`` is set (D = 14).
    With ``planar_pivots`` both frame pivots lie on the equator and ``eta1``,
    ``psi``, ``alpha4`` are replaced by the azimuth ``phi4`` of the second pivot.
    """

    extensions: bool = True
    planar_pivots: bool = False
    branch: str = "minus"
    include_coupler_triangle: bool = False
    extension_map: dict | None = None

    @property
    def names(self) -> tuple[str, ...]:
        geom = PLANAR_NAMES if self.planar_pivots else GEOM_NAMES
        return ("theta1",) + geom + (EXT_NAMES if self.extensions else ())

    @property
    def dim(self) -> int:
        return len(self.names)

    def bounds(self) -> tuple[np.ndarray, np.ndarray]:
        lo, hi = zip(*(_bound(n) for n in self.names))
        return np.array(lo), np.array(hi)

    def _mass(self, **ext) -> MassModel:
        kw = {} if self.extension_map is None else {"extension_map": dict(self.extension_map)}
        return MassModel(include_coupler_triangle=self.include_coupler_triangle, **ext, **kw)

    def decode(self, x: np.ndarray) -> Design:
        """Map vector(s) to a :class:`Design`; a 2-D input gives batched ``(m, 1)`` fields."""
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.dim:
            raise ValueError(f"expected {self.dim} components, got {x.shape[-1]}")
        cols = {n: x[..., i, None] if x.ndim == 2 else float(x[i]) for i, n in enumerate(self.names)}
        if self.planar_pivots:
            geom = planar_geometry(cols["phi1"], cols["phi4"], cols, self.branch)
        else:
            geom = Geometry(**{n: cols[n] for n in GEOM_NAMES}, branch=self.branch)
        ext = {n: cols[n] for n in EXT_NAMES} if self.extensions else {}
        theta1 = x[..., 0] if x.ndim == 2 else cols["theta1"]
        return Design(theta1, geom, self._mass(**ext))

    def encode(self, design: Design) -> np.ndarray:
        g, m = design.geometry, design.mass
        vals = {"theta1": design.theta1, **{n: getattr(g, n) for n in GEOM_NAMES}, **m.extensions()}
        if self.planar_pivots:
            vals["phi4"] = float(np.mod(g.phi1 + (g.alpha4 if np.cos(g.psi) > 0 else -g.alpha4), TWO_PI))
        return np.array([float(vals[n]) for n in self.names])


def planar_geometry(phi1, phi4, cols: dict, branch: str) -> Geometry:
    """Geometry with both pivots on the equator at azimuths ``phi1`` and ``phi4``."""
    delta = np.mod(np.asarray(phi4, float) - phi1, TWO_PI)
    major = delta > np.pi
    alpha4 = np.where(major, TWO_PI - delta, delta)
    psi = np.where(major, np.pi, 0.0)
    # coincident pivots make the frame link degenerate; keep it tiny but non-zero
    alpha4 = np.maximum(alpha4, 1e-9)
    if np.ndim(alpha4) == 0:
        alpha4, psi = float(alpha4), float(psi)
    return Geometry(
        phi1=phi1,
        eta1=np.pi / 2,
        psi=psi,
        alpha1=cols["alpha1"],
        alpha2=cols["alpha2"],
        alpha3=cols["alpha3"],
        alpha4=alpha4,
        beta=cols["beta"],
        gamma=cols["gamma"],
        branch=branch,
    )


# -- objectives ---------------------------------------------------------------


@dataclass
class Metrics:
    f_path: np.ndarray
    f_cm: np.ndarray
    infeasible_fraction: np.ndarray


def _rms_in_order(sq: np.ndarray) -> np.ndarray:
    # sequential sum over points in index order, for bit reproducibility
    acc = np.zeros(sq.shape[:-1])
    for i in range(sq.shape[-1]):
        acc = acc + sq[..., i]
    return np.sqrt(acc / sq.shape[-1])


def design_metrics(
    design: Design,
    path: TargetPath,
    theta_dot: float = 1.0,
    radius: float = 1.0,
    offsets=None,
) -> Metrics:
    """Structural error and RMS centre-of-mass acceleration at the prescribed angles.

    Infeasible angles contribute zero to the RMS sums and ``PENALTY`` times the
    infeasible fraction is added to each objective.
    """
    thetas = theta_schedule(design.theta1, path.n, offsets)
    com, ok, st = com_state(d3.seed(thetas), design.geometry, design.mass)
    err = np.sum((st.r_gen.val - path.points) ** 2, axis=-1)
    acc = radius * theta_dot * theta_dot * com.d2
    acc2 = np.sum(acc * acc, axis=-1)
    err = np.where(ok, err, 0.0)
    acc2 = np.where(ok, acc2, 0.0)
    frac = 1.0 - np.mean(ok, axis=-1)
    pen = PENALTY * frac
    return Metrics(_rms_in_order(err) + pen, _rms_in_order(acc2) + pen, frac)


def f_path(design: Design, path: TargetPath, offsets=None):
    return design_metrics(design, path, offsets=offsets).f_path


def f_cm(design: Design, path: TargetPath, theta_dot: float = 1.0, radius: float = 1.0, offsets=None):
    return design_metrics(design, path, theta_dot, radius, offsets).f_cm


def weighted(
    design: Design,
    path: TargetPath,
    w_path: float = 1.0,
    w_cm: float = 0.001,
    theta_dot: float = 1.0,
    radius: float = 1.0,
    offsets=None,
):
    if w_path < 0 or w_cm < 0 or (w_path == 0 and w_cm == 0):
        raise ValueError("weights must be non-negative and not both zero")
    m = design_metrics(design, path, theta_dot, radius, offsets)
    return w_path * m.f_path + w_cm * m.f_cm


def thread_count() -> int:
    try:
        return max(1, int(os.environ.get(THREADS_ENV, "1")))
    except ValueError:
        return 1


@dataclass
class WeightedObjective:
    """Population-level weighted-sum objective over a :class:`DesignSpace`.

    Called with an ``(m, D)`` array, returns ``m`` objective values. Rows are
    evaluated in fixed-size chunks (optionally on a thread pool), so the result
    does not depend on the number of threads.

    The default ``w_cm`` reflects the ratio of the two objectives at good
    designs (path error ~1e-5, ACoM ~1e-2). With much larger weights the
    ACoM term, which the extensions can drive to zero for almost any
    geometry, dominates the early generations and the population settles in
    a poor path basin.
    """

    space: DesignSpace
    path: TargetPath
    w_path: float = 1.0
    w_cm: float = 0.001
    theta_dot: float = 1.0
    radius: float = 1.0
    offsets: np.ndarray | None = None
    threads: int | None = None

    def __post_init__(self):
        if self.w_path < 0 or self.w_cm < 0 or (self.w_path == 0 and self.w_cm == 0):
            raise ValueError("weights must be non-negative and not both zero")

    def metrics(self, x: np.ndarray) -> Metrics:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        return design_metrics(self.space.decode(x), self.path, self.theta_dot, self.radius, self.offsets)

    def _chunk(self, x: np.ndarray) -> np.ndarray:
        m = self.metrics(x)
        return self.w_path * m.f_path + self.w_cm * m.f_cm

    def __call__(self, x: np.ndarray) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        chunks = [x[i : i + CHUNK] for i in range(0, len(x), CHUNK)]
        threads = self.threads or thread_count()
        if threads > 1 and len(chunks) > 1:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                parts = list(pool.map(self._chunk, chunks))
        else:
            parts = [self._chunk(c) for c in chunks]
        return np.concatenate(parts)
