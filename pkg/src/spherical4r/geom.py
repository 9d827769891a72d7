"""Real and dual 3-vector algebra on the unit sphere.

Dual vectors are :class:`~spherical4r.dual3.Dual3` objects whose channels end
in an axis of length 3; dual matrices end in ``(3, 3)``.  Leading axes are
batch axes and broadcast freely.
"""
from __future__ import annotations

import numpy as np

from spherical4r.dual3 import Dual3, lift, sincos

UNIT_TOL = 1e-9
PARALLEL_TOL = 1e-9

DualVec3 = Dual3
DualMat3 = Dual3


class ContractError(ValueError):
    """An argument violates a geometric precondition (e.g. non-unit axis)."""


class SingularityError(ArithmeticError):
    """Two directions are (anti)parallel so their normal is undefined."""


def spherical_point(azimuth: float, polar: float) -> np.ndarray:
    """Unit vector with the given azimuth and polar angle measured from +z."""
    return np.array(
        [np.sin(polar) * np.cos(azimuth), np.sin(polar) * np.sin(azimuth), np.cos(polar)]
    )


def _cross_np(a, b):
    a0, a1, a2 = a[..., 0], a[..., 1], a[..., 2]
    b0, b1, b2 = b[..., 0], b[..., 1], b[..., 2]
    return np.stack([a1 * b2 - a2 * b1, a2 * b0 - a0 * b2, a0 * b1 - a1 * b0], axis=-1)


def rot(nu: float, w) -> np.ndarray:
    """Active rotation matrix of angle ``nu`` about the unit axis ``w`` (Rodrigues)."""
    w = np.asarray(w, dtype=float)
    if abs(np.linalg.norm(w) - 1.0) > UNIT_TOL:
        raise ContractError(f"rotation axis must be unit, got norm {np.linalg.norm(w)}")
    k = np.array([[0.0, -w[2], w[1]], [w[2], 0.0, -w[0]], [-w[1], w[0], 0.0]])
    return np.cos(nu) * np.eye(3) + np.sin(nu) * k + (1.0 - np.cos(nu)) * np.outer(w, w)


# -- dual vector helpers ----------------------------------------------------


def vconst(v) -> DualVec3:
    return Dual3.const(np.asarray(v, dtype=float))


def expand(s: Dual3) -> Dual3:
    """Append a length-1 axis so a dual scalar broadcasts against dual vectors."""
    return Dual3(s.val[..., None], s.d1[..., None], s.d2[..., None])


def scale(s, v: DualVec3) -> DualVec3:
    if isinstance(s, Dual3):
        return expand(s) * v
    return v * np.asarray(s, dtype=float)[..., None]


def dot(a: DualVec3, b: DualVec3) -> Dual3:
    a, b = lift(a), lift(b)
    a0, a1, a2 = a.val, a.d1, a.d2
    b0, b1, b2 = b.val, b.d1, b.d2
    return Dual3(
        np.sum(a0 * b0, axis=-1),
        np.sum(a1 * b0 + a0 * b1, axis=-1),
        np.sum(a2 * b0 + 2.0 * a1 * b1 + a0 * b2, axis=-1),
    )


def cross(a: DualVec3, b: DualVec3) -> DualVec3:
    a, b = lift(a), lift(b)
    a0, a1, a2 = a.val, a.d1, a.d2
    b0, b1, b2 = b.val, b.d1, b.d2
    return Dual3(
        _cross_np(a0, b0),
        _cross_np(a1, b0) + _cross_np(a0, b1),
        _cross_np(a2, b0) + 2.0 * _cross_np(a1, b1) + _cross_np(a0, b2),
    )


def unit_masked(v: DualVec3, tol: float = PARALLEL_TOL) -> tuple[DualVec3, np.ndarray]:
    """Normalize ``v``; entries with value norm below ``tol`` are flagged.

    Flagged entries are normalized as if their norm were 1 so the batch stays
    finite; callers must treat them as invalid.
    """
    n2 = np.sum(v.val * v.val, axis=-1)
    bad = n2 < tol * tol
    q = v.val
    # derivatives of the squared norm
    n2d1 = 2.0 * np.sum(q * v.d1, axis=-1)
    n2d2 = 2.0 * np.sum(v.d1 * v.d1 + q * v.d2, axis=-1)
    n2 = np.where(bad, 1.0, n2)
    inv = 1.0 / np.sqrt(n2)
    # inv = n2^(-1/2): chain rule through n2
    i1 = -0.5 * inv / n2
    i2 = 0.75 * inv / (n2 * n2)
    s = Dual3(inv, i1 * n2d1, i2 * n2d1 * n2d1 + i1 * n2d2)
    return scale(s, v), bad


def unit(v: DualVec3) -> DualVec3:
    out, bad = unit_masked(v)
    if np.any(bad):
        raise SingularityError("cannot normalize a zero vector")
    return out


def cross_unit_masked(a: DualVec3, b: DualVec3, tol: float = PARALLEL_TOL):
    return unit_masked(cross(a, b), tol)


def cross_unit_dual(a: DualVec3, b: DualVec3) -> DualVec3:
    """Unit normal ``(a x b)/|a x b|`` in dual arithmetic."""
    out, bad = cross_unit_masked(a, b)
    if np.any(bad):
        raise SingularityError("near-parallel vectors: cross product vanishes")
    return out


def rotate(nu, w: DualVec3, v: DualVec3) -> DualVec3:
    """Rotate ``v`` by angle ``nu`` about the unit axis ``w`` (Rodrigues, vector form).

    Equivalent to ``matvec_dual(rot_dual(nu, w), v)`` without building the matrix.
    """
    nu, w, v = lift(nu), lift(w), lift(v)
    s, c = sincos(nu)
    s, c = expand(s), expand(c)
    wv = expand(dot(w, v))
    return v * c + cross(w, v) * s + w * (wv * (1.0 - c))


def rot_dual(nu, w: DualVec3) -> DualMat3:
    """Dual lift of the Rodrigues rotation matrix; entries end in axes ``(3, 3)``."""
    nu, w = lift(nu), lift(w)
    if np.any(np.abs(np.linalg.norm(w.val, axis=-1) - 1.0) > UNIT_TOL):
        raise ContractError("rotation axis must be unit")
    s, c = sincos(nu)
    omc = 1.0 - c
    wx, wy, wz = w[..., 0], w[..., 1], w[..., 2]
    rows = [
        [c + wx * wx * omc, wx * wy * omc - wz * s, wx * wz * omc + wy * s],
        [wy * wx * omc + wz * s, c + wy * wy * omc, wy * wz * omc - wx * s],
        [wz * wx * omc - wy * s, wz * wy * omc + wx * s, c + wz * wz * omc],
    ]

    shape = np.broadcast_shapes(nu.shape, w.shape[:-1])

    def stack(ch):
        return np.stack(
            [np.stack([np.broadcast_to(getattr(e, ch), shape) for e in row], -1) for row in rows],
            -2,
        )

    return Dual3(stack("val"), stack("d1"), stack("d2"))


def matvec_dual(m: DualMat3, v: DualVec3) -> DualVec3:
    """Dual matrix times dual vector, Leibniz rule applied row by row."""
    m, v = lift(m), lift(v)

    def mv(a, b):
        return np.einsum("...ij,...j->...i", a, b)

    return Dual3(
        mv(m.val, v.val),
        mv(m.d1, v.val) + mv(m.val, v.d1),
        mv(m.d2, v.val) + 2.0 * mv(m.d1, v.d1) + mv(m.val, v.d2),
    )
