"""Work-energy bookkeeping for balanced and unbalanced designs.

Energies are computed for homogeneous thin links of linear density
``density`` (kg/m) lying on spheres of physical radius ``radius``. Losses
(friction, deformation, motor) are not modelled: the cycle energy is the
mechanical part only.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from spherical4r import dual3 as d3
from spherical4r.dual3 import Dual3
from spherical4r.geom import dot, expand, rotate
from spherical4r.mechanism import (
    Geometry,
    InfeasibleConfiguration,
    MassModel,
    arc_com_axis,
    kinematic_state,
    mass_arcs,
)

TWO_PI = 2.0 * np.pi


@dataclass(frozen=True)
class PhysicalModel:
    radius: float = 0.23
    density: float = 1.0
    g: float = 9.81
    theta_dot: float = 1.0
    samples_per_link: int = 64
    # optional per-link radii, keys "input", "coupler", "output", "triangle"
    link_radii: dict | None = field(default=None)

    def __post_init__(self):
        if self.radius <= 0 or self.density <= 0:
            raise ValueError("radius and density must be positive")
        if self.samples_per_link < 8:
            raise ValueError("samples_per_link must be at least 8")

    def radius_of(self, link: str) -> float:
        if self.link_radii is None:
            return self.radius
        return float(self.link_radii.get(link, self.radius))


PROTOTYPE_LINK_RADII = {"input": 0.250, "coupler": 0.235, "output": 0.210, "triangle": 0.255}


@dataclass
class EnergyProfile:
    theta: np.ndarray
    U: np.ndarray
    K: np.ndarray
    dU: np.ndarray
    dK: np.ndarray

    @property
    def power_density(self) -> np.ndarray:
        """``|U' + K'|`` on the grid (J/rad)."""
        return np.abs(self.dU + self.dK)

    def rows(self):
        for row in zip(self.theta, self.U, self.K, self.dU, self.dK, self.power_density):
            yield tuple(float(v) for v in row)


def _arcs(theta: Dual3, g: Geometry, m: MassModel):
    st = kinematic_state(theta, g)
    arcs, ok = mass_arcs(st, g, m)
    return arcs, ok


def total_mass(g: Geometry, m: MassModel, phys: PhysicalModel) -> float:
    arcs, _ = _arcs(d3.const(0.0), g, m)
    return float(sum(phys.density * phys.radius_of(a.link) * np.mean(a.length) for a in arcs))


def _physical_com_moment(arcs, phys: PhysicalModel) -> tuple[Dual3, object]:
    """``sum_k m_k rho_k r_k`` (kg m, dual) and the total mass."""
    acc = None
    mass = 0.0
    for a in arcs:
        rho = phys.radius_of(a.link)
        mk = phys.density * rho * np.asarray(a.length, float)
        term = arc_com_axis(a.start, a.axis, a.length) * np.asarray(mk * rho)[..., None]
        acc = term if acc is None else acc + term
        mass = mass + mk
    return acc, mass


def _independent(theta) -> Dual3:
    # real input angles are the independent variable, not constants
    return theta if isinstance(theta, Dual3) else d3.seed(theta)


def _require(ok) -> None:
    if not np.all(ok):
        raise InfeasibleConfiguration("configuration infeasible at some input angles")


def potential(theta, g: Geometry, m: MassModel, phys: PhysicalModel) -> Dual3:
    """Gravitational potential energy ``M g z_cm`` (J); ``d1`` is dU/dtheta."""
    theta = _independent(theta)
    arcs, ok = _arcs(theta, g, m)
    _require(ok)
    moment, _ = _physical_com_moment(arcs, phys)
    return moment[..., 2] * phys.g


def _arc_samples(a, n: int) -> Dual3:
    frac = (np.arange(n) + 0.5) / n
    t = np.asarray(a.length, float)[..., None] * frac
    start = Dual3(a.start.val[..., None, :], a.start.d1[..., None, :], a.start.d2[..., None, :])
    axis = Dual3(a.axis.val[..., None, :], a.axis.d1[..., None, :], a.axis.d2[..., None, :])
    return rotate(t, axis, start)


def kinetic(theta, g: Geometry, m: MassModel, phys: PhysicalModel) -> Dual3:
    """Kinetic energy (J) at constant input speed, by midpoint sampling of every arc.

    ``d1`` is dK/dtheta. The second-derivative channel would need third
    derivatives of the positions and is returned as NaN.
    """
    theta = _independent(theta)
    arcs, ok = _arcs(theta, g, m)
    _require(ok)
    n = phys.samples_per_link
    K = 0.0
    dK = 0.0
    for a in arcs:
        rho = phys.radius_of(a.link)
        p = _arc_samples(a, n)
        dm = phys.density * rho * np.asarray(a.length, float) / n
        # |dp/dtheta|^2 and its theta-derivative 2 dp . d2p
        speed2 = np.sum(p.d1 * p.d1, axis=-1)
        dspeed2 = 2.0 * np.sum(p.d1 * p.d2, axis=-1)
        c = 0.5 * phys.theta_dot**2 * rho * rho * np.asarray(dm)[..., None]
        K = K + np.sum(c * speed2, axis=-1)
        dK = dK + np.sum(c * dspeed2, axis=-1)
    return Dual3(K, dK, np.full(np.shape(K), np.nan))


def _grid(grid_n: int, origin: float = 0.0) -> np.ndarray:
    return origin + TWO_PI * np.arange(grid_n) / grid_n


def _infeasible_ranges(theta: np.ndarray, ok: np.ndarray) -> list[tuple[float, float]]:
    out = []
    start = None
    for th, good in zip(theta, ok):
        if not good and start is None:
            start = th
        if good and start is not None:
            out.append((float(start), float(prev)))
            start = None
        prev = th
    if start is not None:
        out.append((float(start), float(theta[-1])))
    return out


def energy_profile(g: Geometry, m: MassModel, phys: PhysicalModel, theta) -> EnergyProfile:
    theta = np.asarray(theta, dtype=float)
    st = kinematic_state(d3.seed(theta), g)
    _, ok = mass_arcs(st, g, m)
    if not np.all(ok):
        ranges = ", ".join(f"[{a:.4f}, {b:.4f}]" for a, b in _infeasible_ranges(theta, ok))
        raise InfeasibleConfiguration(f"infeasible input angles: {ranges}")
    U = potential(d3.seed(theta), g, m, phys)
    K = kinetic(d3.seed(theta), g, m, phys)
    return EnergyProfile(theta, U.val, K.val, U.d1, K.d1)


def _periodic_trapezoid(y: np.ndarray) -> float:
    # composite trapezoid over one period of a uniform periodic grid
    acc = 0.0
    for v in y:
        acc += float(v)
    return acc * TWO_PI / len(y)


def cycle_energy(g: Geometry, m: MassModel, phys: PhysicalModel, grid_n: int = 2048, origin: float = 0.0) -> float:
    """Mechanical energy drawn per cycle, ``int |U' + K'| dtheta`` (J)."""
    prof = energy_profile(g, m, phys, _grid(grid_n, origin))
    return _periodic_trapezoid(prof.power_density)


def net_cycle_work(g: Geometry, m: MassModel, phys: PhysicalModel, grid_n: int = 2048) -> float:
    """``int (U' + K') dtheta`` over a cycle; zero for a periodic motion."""
    prof = energy_profile(g, m, phys, _grid(grid_n))
    return _periodic_trapezoid(prof.dU + prof.dK)


def delta_energy(
    nb: tuple[Geometry, MassModel],
    b: tuple[Geometry, MassModel],
    phys: PhysicalModel,
    grid_n: int = 2048,
) -> float:
    """``E_NB - E_B`` with the unmodelled losses assumed equal for both designs."""
    p_nb = energy_profile(*nb, phys, _grid(grid_n))
    p_b = energy_profile(*b, phys, _grid(grid_n))
    return _periodic_trapezoid(p_nb.power_density - p_b.power_density)


def pe_variation(g: Geometry, m: MassModel, phys: PhysicalModel, grid_n: int = 2048) -> float:
    """Total variation of the potential energy over a cycle, ``int |U'| dtheta``."""
    theta = _grid(grid_n)
    U = potential(d3.seed(theta), g, m, phys)
    return _periodic_trapezoid(np.abs(U.d1))


def shaking_force_profile(g: Geometry, m: MassModel, phys: PhysicalModel, theta) -> np.ndarray:
    """Magnitude of total mass times centre-of-mass acceleration (N), constant input speed."""
    theta = np.asarray(theta, dtype=float)
    st = kinematic_state(d3.seed(theta), g)
    arcs, ok = mass_arcs(st, g, m)
    _require(ok)
    moment, _ = _physical_com_moment(arcs, phys)
    acc = phys.theta_dot**2 * moment.d2
    return np.linalg.norm(acc, axis=-1)


def shaking_force_reduction(f_nb: np.ndarray, f_b: np.ndarray) -> np.ndarray:
    """Pointwise fractional reduction ``1 - F_B / F_NB``."""
    return 1.0 - np.asarray(f_b) / np.asarray(f_nb)


def reduction_summary(red: np.ndarray) -> dict[str, float]:
    return {"mean": float(np.mean(red)), "min": float(np.min(red)), "max": float(np.max(red))}
