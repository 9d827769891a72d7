"""Spherical 4R kinematics, link centres of mass and centre-of-mass acceleration.

Every routine accepts batched inputs: ``theta`` may be a :class:`Dual3` of any
shape and the :class:`Geometry` fields may be arrays that broadcast against it
(the optimizer evaluates a whole population at once with geometry fields of
shape ``(m, 1)`` and ``theta`` of shape ``(m, n)``).

Frame convention: ``x1 = (sin eta1 cos phi1, sin eta1 sin phi1, cos eta1)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Literal, NamedTuple

import numpy as np

from spherical4r import dual3 as d3
from spherical4r.dual3 import Dual3, lift
from spherical4r.geom import (
    SingularityError,
    cross_unit_dual,
    cross_unit_masked,
    rotate,
    scale,
    vconst,
)

Branch = Literal["plus", "minus"]
POLE_TOL = 1e-9
DISC_TOL = 1e-14


class InfeasibleConfiguration(ValueError):
    """The loop cannot close at the requested input angle."""


@dataclass(frozen=True)
class Geometry:
    phi1: float
    eta1: float
    psi: float
    alpha1: float
    alpha2: float
    alpha3: float
    alpha4: float
    beta: float
    gamma: float
    branch: Branch = "plus"

    def __post_init__(self):
        if self.branch not in ("plus", "minus"):
            raise ValueError(f"branch must be 'plus' or 'minus', got {self.branch!r}")

    @property
    def sign(self) -> float:
        return 1.0 if self.branch == "plus" else -1.0


# Which link end each extension continues. "fitted" best matches the known
# acceleration figures of both bundled designs among the one-extension-per-end
# assignments; "sequential" is the naive e1..e4 reading of the link order.
EXTENSION_MAPS = {
    "fitted": {
        "e1": ("output", "proximal"),
        "e2": ("input", "proximal"),
        "e3": ("input", "distal"),
        "e4": ("output", "distal"),
    },
    "sequential": {
        "e1": ("input", "proximal"),
        "e2": ("input", "distal"),
        "e3": ("output", "proximal"),
        "e4": ("output", "distal"),
    },
}
DEFAULT_EXTENSION_MAP = EXTENSION_MAPS["fitted"]


@dataclass(frozen=True)
class MassModel:
    e1: float = 0.0
    e2: float = 0.0
    e3: float = 0.0
    e4: float = 0.0
    include_coupler_triangle: bool = False
    density: float = 1.0
    extension_map: dict = field(default_factory=lambda: dict(DEFAULT_EXTENSION_MAP))

    def __post_init__(self):
        if np.any(np.asarray(self.density) <= 0):
            raise ValueError("density must be positive")
        for k in ("e1", "e2", "e3", "e4"):
            if np.any(np.asarray(getattr(self, k)) < 0):
                raise ValueError(f"{k} must be non-negative")

    def extensions(self) -> dict[str, float]:
        return {k: getattr(self, k) for k in ("e1", "e2", "e3", "e4")}

    def bare(self) -> "MassModel":
        return replace(self, e1=0.0, e2=0.0, e3=0.0, e4=0.0)


class Frame(NamedTuple):
    x1: np.ndarray
    n14: np.ndarray
    x4: np.ndarray


class State(NamedTuple):
    """Kinematic snapshot; vector fields are dual vectors, ``feasible`` a bool mask."""

    x1: Dual3
    x4: Dual3
    n14: Dual3
    r2: Dual3
    r3: Dual3
    phi: Dual3
    r_gen: Dual3
    closes: np.ndarray
    feasible: np.ndarray


class Arc(NamedTuple):
    """Geodesic arc starting at ``start``, sweeping ``length`` about ``axis``."""

    start: Dual3
    axis: Dual3
    length: object  # float array; weight of the arc in the mass average
    link: str

    @property
    def end(self) -> Dual3:
        return rotate(self.length, self.axis, self.start)


@dataclass
class TrajectoryRecord:
    theta: float
    feasible: bool
    phi: float | None = None
    r_gen: np.ndarray | None = None
    r_cm: np.ndarray | None = None
    v_cm: np.ndarray | None = None
    a_cm: np.ndarray | None = None


# -- frame --------------------------------------------------------------------


def _rotate_np(nu, w, v):
    nu = np.asarray(nu, dtype=float)[..., None]
    c, s = np.cos(nu), np.sin(nu)
    wv = np.sum(w * v, axis=-1, keepdims=True)
    return v * c + np.cross(w, v) * s + w * wv * (1.0 - c)


def _unit_np(v):
    return v / np.linalg.norm(v, axis=-1, keepdims=True)


def frame(g: Geometry) -> Frame:
    """Fixed pivots ``x1``, ``x4`` and the frame-plane normal ``n14``."""
    phi1, eta1 = np.asarray(g.phi1, float), np.asarray(g.eta1, float)
    x1 = np.stack(
        np.broadcast_arrays(np.sin(eta1) * np.cos(phi1), np.sin(eta1) * np.sin(phi1), np.cos(eta1)),
        axis=-1,
    )
    t1 = np.cross(np.array([0.0, 0.0, 1.0]), x1)
    t14 = _rotate_np(g.psi, x1, t1)
    nrm = np.cross(x1, t14)
    # at the poles k x x1 vanishes; fall back to the permuted basis {k, i, j}
    near_pole = np.linalg.norm(nrm, axis=-1) < POLE_TOL
    if np.any(near_pole):
        t1_alt = np.cross(np.array([0.0, 1.0, 0.0]), x1)
        t14_alt = _rotate_np(g.psi, x1, t1_alt)
        nrm = np.where(near_pole[..., None], np.cross(x1, t14_alt), nrm)
    n14 = _unit_np(nrm)
    x4 = _rotate_np(g.alpha4, n14, x1)
    return Frame(x1, n14, x4)


# -- kinematics ---------------------------------------------------------------


def _abc(theta: Dual3, g: Geometry):
    s1, c1 = np.sin(g.alpha1), np.cos(g.alpha1)
    s3, c3 = np.sin(g.alpha3), np.cos(g.alpha3)
    s4, c4 = np.sin(g.alpha4), np.cos(g.alpha4)
    sth, cth = d3.sincos(theta)
    a = sth * (s1 * s3)
    b = cth * (-s1 * s3 * c4) + c1 * s3 * s4
    c = cth * (s1 * c3 * s4) + (c1 * c3 * c4 - np.cos(g.alpha2))
    return a, b, c


def _output_angle_masked(theta: Dual3, g: Geometry) -> tuple[Dual3, np.ndarray]:
    a, b, c = _abc(theta, g)
    disc = a * a + b * b - c * c
    ok = disc.val > DISC_TOL
    disc = Dual3(np.where(ok, disc.val, 1.0), disc.d1, disc.d2)
    num = -a + d3.sqrt(disc) * g.sign
    den = c - b
    rr = num.val * num.val + den.val * den.val
    ok &= rr > 0.0
    num = Dual3(np.where(ok, num.val, 1.0), num.d1, num.d2)
    # 2*atan2 equals 2*atan(num/den) modulo 2*pi and stays smooth where den = 0
    return d3.atan2(num, den) * 2.0, ok


def _wrap(phi):
    return np.pi - np.mod(np.pi - phi, 2.0 * np.pi)


def output_angle(theta, g: Geometry):
    """Output-link angle for input angle ``theta``, wrapped to (-pi, pi]."""
    phi, ok = _output_angle_masked(Dual3.const(theta), g)
    if not np.all(ok):
        raise InfeasibleConfiguration("loop closure has no real solution at this input angle")
    out = _wrap(phi.val)
    return float(out) if out.ndim == 0 else out


def output_angle_dual(theta: Dual3, g: Geometry) -> Dual3:
    phi, ok = _output_angle_masked(theta, g)
    if not np.all(ok):
        raise InfeasibleConfiguration("loop closure has no real solution at this input angle")
    return Dual3(_wrap(phi.val), phi.d1, phi.d2)


def _joints(theta: Dual3, g: Geometry):
    x1, n14, x4 = (vconst(v) for v in frame(g))
    r2 = rotate(theta, x1, rotate(np.asarray(g.alpha1, float), n14, x1))
    phi, ok = _output_angle_masked(theta, g)
    r3 = rotate(phi, -x4, rotate(np.asarray(g.alpha3, float), -n14, x4))
    return x1, n14, x4, r2, r3, phi, ok


def kinematic_state(theta, g: Geometry) -> State:
    """All joint and coupler positions; infeasible entries are masked, not raised."""
    theta = lift(theta)
    x1, n14, x4, r2, r3, phi, closes = _joints(theta, g)
    n23, bad = cross_unit_masked(r2, r3)
    ok = closes & ~bad
    beta = np.asarray(g.beta, float)
    gamma = np.asarray(g.gamma, float)
    rcp_b = rotate(beta, n23, r2)
    rcp_bg = rotate(beta + gamma, n23, r2)
    r_gen = rotate(np.pi / 2, rcp_b, rcp_bg)
    return State(x1, x4, n14, r2, r3, phi, r_gen, closes, ok)


def _require(ok: np.ndarray) -> None:
    if not np.all(ok):
        raise InfeasibleConfiguration("configuration infeasible at some input angles")


def input_joint(theta, g: Geometry) -> Dual3:
    """Moving joint of the input link, ``R(theta, x1) R(alpha1, n14) x1``."""
    theta = lift(theta)
    _, _, _, r2, *_ = _joints(theta, g)
    return r2


def output_joint(theta, g: Geometry) -> Dual3:
    """Moving joint of the output link, with the output angle carried in dual form."""
    theta = lift(theta)
    *_, r3, _, ok = _joints(theta, g)
    _require(ok)
    return r3


def coupler_point(theta, g: Geometry) -> Dual3:
    st = kinematic_state(theta, g)
    _require(st.closes)
    if not np.all(st.feasible):
        raise SingularityError("coupler joints are parallel")
    return st.r_gen


# -- centres of mass ----------------------------------------------------------


def _sinc_half(alpha):
    # (2/alpha) sin(alpha/2), equal to 1 in the limit alpha -> 0
    return np.sinc(np.asarray(alpha, dtype=float) / (2.0 * np.pi))


def arc_com_axis(start: Dual3, axis: Dual3, length) -> Dual3:
    """Centre of mass of the arc obtained by sweeping ``start`` by ``length`` about ``axis``.

    Valid for any length in [0, 2*pi); the axis must be orthogonal to ``start``.
    """
    if isinstance(length, Dual3):
        f = d3.compose(
            lambda a: _sinc_half(a),
            _dsinc_half,
            _d2sinc_half,
            length,
        )
        return scale(f, rotate(length * 0.5, axis, start))
    length = np.asarray(length, dtype=float)
    return scale(_sinc_half(length), rotate(length * 0.5, axis, start))


def _dsinc_half(a):
    # d/da [2 sin(a/2)/a]
    return np.cos(a / 2.0) / a - 2.0 * np.sin(a / 2.0) / (a * a)


def _d2sinc_half(a):
    return -np.sin(a / 2.0) / (2.0 * a) - 2.0 * np.cos(a / 2.0) / (a * a) + 4.0 * np.sin(a / 2.0) / a**3


def arc_com(p1: Dual3, p2: Dual3, alpha) -> Dual3:
    """Centre of mass of a homogeneous geodesic link from ``p1`` towards ``p2``.

    The rotation axis is ``p1 x p2`` normalised, so ``alpha`` is the (minor)
    arc between the endpoints. Use :func:`arc_com_axis` for arcs beyond pi.
    """
    a = alpha.val if isinstance(alpha, Dual3) else np.asarray(alpha, float)
    if np.any(a <= 0.0) or np.any(a >= 2 * np.pi):
        raise ValueError("arc angle must lie in (0, 2*pi)")
    axis = cross_unit_dual(lift(p1), lift(p2))
    return arc_com_axis(lift(p1), axis, alpha)


def _link_endpoints(st: State, link: str):
    if link == "input":
        return st.x1, st.r2
    if link == "coupler":
        return st.r2, st.r3
    if link == "output":
        return st.x4, st.r3
    raise ValueError(f"unknown link {link!r}")


def _link_axis(st: State, link: str) -> tuple[Dual3, np.ndarray]:
    p, q = _link_endpoints(st, link)
    return cross_unit_masked(p, q)


def extension_geometry(link: str, endpoint: str, e, st: State) -> Arc:
    """Great-circle continuation of ``link`` beyond one of its joints.

    ``proximal`` is the frame pivot for the input/output links (``r2`` for the
    coupler); ``distal`` is the moving joint (``r3`` for the coupler).
    """
    if np.any(np.asarray(e) < 0):
        raise ValueError("extension length must be non-negative")
    p, q = _link_endpoints(st, link)
    axis, _ = _link_axis(st, link)
    if endpoint == "proximal":
        return Arc(p, -axis, np.asarray(e, float), link)
    if endpoint == "distal":
        return Arc(q, axis, np.asarray(e, float), link)
    raise ValueError(f"unknown endpoint {endpoint!r}")


_LINK_ALPHA = {"input": "alpha1", "coupler": "alpha2", "output": "alpha3"}


def mass_arcs(st: State, g: Geometry, m: MassModel) -> tuple[list[Arc], np.ndarray]:
    """Every homogeneous arc contributing mass, plus a validity mask."""
    ok = st.feasible.copy()
    arcs = []
    axes = {}
    for link in ("input", "coupler", "output"):
        axis, bad = _link_axis(st, link)
        ok &= ~bad
        axes[link] = axis
        start, _ = _link_endpoints(st, link)
        arcs.append(Arc(start, axis, np.asarray(getattr(g, _LINK_ALPHA[link]), float), link))
    for name, e in m.extensions().items():
        link, endpoint = m.extension_map[name]
        arcs.append(extension_geometry(link, endpoint, e, st))
    if m.include_coupler_triangle:
        for p in (st.r2, st.r3):
            c = np.clip(np.sum(p.val * st.r_gen.val, axis=-1), -1.0, 1.0)
            length = np.arccos(c)
            axis, bad = cross_unit_masked(p, st.r_gen)
            length = np.where(bad, 0.0, length)
            arcs.append(Arc(p, axis, length, "triangle"))
    return arcs, ok


def _weighted_com(arcs: list[Arc], weights: list) -> Dual3:
    total = 0.0
    acc = None
    for arc, w in zip(arcs, weights):
        term = scale(w, arc_com_axis(arc.start, arc.axis, arc.length))
        acc = term if acc is None else acc + term
        total = total + w
    return scale(1.0 / np.asarray(total), acc)


def com_state(theta, g: Geometry, m: MassModel) -> tuple[Dual3, np.ndarray, State]:
    """Length-weighted centre of mass (unit-sphere scale) with a validity mask."""
    st = kinematic_state(theta, g)
    arcs, ok = mass_arcs(st, g, m)
    com = _weighted_com(arcs, [a.length for a in arcs])
    return com, ok, st


def mechanism_com(theta, g: Geometry, m: MassModel) -> Dual3:
    com, ok, _ = com_state(theta, g, m)
    _require(ok)
    return com


def acceleration_from_com(com: Dual3, theta_dot, theta_ddot=0.0, radius=1.0) -> np.ndarray:
    td = np.asarray(theta_dot, float)[..., None]
    tdd = np.asarray(theta_ddot, float)[..., None]
    return np.asarray(radius, float) * (tdd * com.d1 + td * td * com.d2)


def acom(theta, theta_dot, theta_ddot, g: Geometry, m: MassModel, radius: float = 1.0) -> np.ndarray:
    """Acceleration of the centre of mass, scaled to physical units by ``radius``."""
    com = mechanism_com(d3.seed(theta), g, m)
    return acceleration_from_com(com, theta_dot, theta_ddot, radius)


def trajectory(
    thetas,
    g: Geometry,
    m: MassModel,
    theta_dot: float = 1.0,
    theta_ddot: float = 0.0,
    radius: float = 1.0,
) -> list[TrajectoryRecord]:
    thetas = np.asarray(thetas, dtype=float)
    com, ok, st = com_state(d3.seed(thetas), g, m)
    phi = _wrap(st.phi.val)
    vel = radius * theta_dot * com.d1
    acc = acceleration_from_com(com, theta_dot, theta_ddot, radius)
    out = []
    for i, th in enumerate(thetas):
        if not ok[i]:
            out.append(TrajectoryRecord(float(th), False))
            continue
        out.append(
            TrajectoryRecord(
                float(th),
                True,
                float(phi[i]),
                st.r_gen.val[i].copy(),
                radius * com.val[i],
                vel[i].copy(),
                acc[i].copy(),
            )
        )
    return out


def recover_alpha4_psi(x1, x4) -> tuple[float, float]:
    """Arc ``alpha4`` and twist ``psi`` placing the second pivot at ``x4``.

    ``x4`` need not be exactly unit (tabulated data are rounded); it is
    normalised first.
    """
    x1 = _unit_np(np.asarray(x1, dtype=float))
    x4 = _unit_np(np.asarray(x4, dtype=float))
    alpha4 = float(np.arccos(np.clip(x1 @ x4, -1.0, 1.0)))
    t1 = np.cross([0.0, 0.0, 1.0], x1)
    if np.linalg.norm(t1) < POLE_TOL:
        t1 = np.cross([0.0, 1.0, 0.0], x1)
    t1 = _unit_np(t1)
    # x4 = cos(a4) x1 + sin(a4) R(psi, x1) t1
    u = x4 - np.cos(alpha4) * x1
    psi = float(np.arctan2(u @ np.cross(x1, t1), u @ t1))
    return alpha4, psi


def pivot_angles(x1) -> tuple[float, float]:
    """Azimuth and polar angle of a pivot direction."""
    x1 = _unit_np(np.asarray(x1, dtype=float))
    return float(np.arctan2(x1[1], x1[0])), float(np.arccos(np.clip(x1[2], -1.0, 1.0)))
