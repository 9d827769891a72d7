"""Second-order forward-mode dual numbers.

A :class:`Dual3` carries ``[f, f', f'']`` with respect to one scalar variable.
Each channel is a numpy array (or a 0-d scalar), so a single ``Dual3`` can hold
a whole batch of samples; vector quantities use a trailing axis of length 3
(see :mod:`spherical4r.geom`).
"""
from __future__ import annotations

from typing import Callable

import numpy as np


class DomainError(ValueError):
    """Raised when a dual operation is evaluated outside its domain."""


def _arr(x) -> np.ndarray:
    return np.asarray(x, dtype=float)


class Dual3:
    """Triple ``[val, d1, d2]`` propagated exactly through the chain rule."""

    __slots__ = ("val", "d1", "d2")
    __array_ufunc__ = None  # make numpy defer to the reflected Dual3 operators

    def __init__(self, val, d1=0.0, d2=0.0):
        self.val = _arr(val)
        self.d1 = _arr(d1)
        self.d2 = _arr(d2)

    @classmethod
    def const(cls, c) -> "Dual3":
        c = _arr(c)
        z = np.zeros_like(c)
        return cls(c, z, z)

    @property
    def shape(self) -> tuple:
        return np.broadcast_shapes(self.val.shape, self.d1.shape, self.d2.shape)

    def __getitem__(self, idx) -> "Dual3":
        v, a, b = np.broadcast_arrays(self.val, self.d1, self.d2)
        return Dual3(v[idx], a[idx], b[idx])

    def __iter__(self):
        raise TypeError("Dual3 is not iterable; index explicitly")

    def as_tuple(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        return self.val, self.d1, self.d2

    def __repr__(self) -> str:
        return f"Dual3({self.val!r}, {self.d1!r}, {self.d2!r})"

    # -- arithmetic ---------------------------------------------------------

    def __neg__(self) -> "Dual3":
        return Dual3(-self.val, -self.d1, -self.d2)

    def __pos__(self) -> "Dual3":
        return self

    def __add__(self, other) -> "Dual3":
        if isinstance(other, Dual3):
            return Dual3(self.val + other.val, self.d1 + other.d1, self.d2 + other.d2)
        return Dual3(self.val + other, self.d1, self.d2)

    __radd__ = __add__

    def __sub__(self, other) -> "Dual3":
        if isinstance(other, Dual3):
            return Dual3(self.val - other.val, self.d1 - other.d1, self.d2 - other.d2)
        return Dual3(self.val - other, self.d1, self.d2)

    def __rsub__(self, other) -> "Dual3":
        return Dual3(other - self.val, -self.d1, -self.d2)

    def __mul__(self, other) -> "Dual3":
        if isinstance(other, Dual3):
            a0, a1, a2 = self.val, self.d1, self.d2
            b0, b1, b2 = other.val, other.d1, other.d2
            # symmetric grouping keeps a*b and b*a bit-identical
            return Dual3(a0 * b0, a1 * b0 + a0 * b1, (a2 * b0 + a0 * b2) + 2.0 * a1 * b1)
        return Dual3(self.val * other, self.d1 * other, self.d2 * other)

    __rmul__ = __mul__

    def __truediv__(self, other) -> "Dual3":
        if isinstance(other, Dual3):
            return self * reciprocal(other)
        other = _arr(other)
        if np.any(other == 0.0):
            raise DomainError("division by zero")
        return Dual3(self.val / other, self.d1 / other, self.d2 / other)

    def __rtruediv__(self, other) -> "Dual3":
        return reciprocal(self) * other

    def __pow__(self, p) -> "Dual3":
        if isinstance(p, Dual3):
            return exp(p * log(self))
        p = float(p)
        if p == 2.0:
            return self * self
        x = self.val
        if p != int(p) and np.any(x <= 0.0):
            raise DomainError("non-integer power of a non-positive value")
        if p < 0 and np.any(x == 0.0):
            raise DomainError("negative power of zero")
        return compose(
            lambda u: u**p,
            lambda u: p * u ** (p - 1),
            lambda u: p * (p - 1) * u ** (p - 2),
            self,
        )


def seed(x) -> Dual3:
    """Lift the independent variable: ``[x, 1, 0]``."""
    x = _arr(x)
    return Dual3(x, np.ones_like(x), np.zeros_like(x))


def const(c) -> Dual3:
    return Dual3.const(c)


def lift(x) -> Dual3:
    return x if isinstance(x, Dual3) else Dual3.const(x)


def arith(a: Dual3, b: Dual3, op: str) -> Dual3:
    """Binary arithmetic by name (``add``, ``sub``, ``mul``, ``div``)."""
    if op == "add":
        return a + b
    if op == "sub":
        return a - b
    if op == "mul":
        return a * b
    if op == "div":
        return a / b
    raise ValueError(f"unknown op {op!r}")


def compose(
    f: Callable[[np.ndarray], np.ndarray],
    df: Callable[[np.ndarray], np.ndarray],
    d2f: Callable[[np.ndarray], np.ndarray],
    g: Dual3,
) -> Dual3:
    """Apply a scalar function with known first and second derivatives to ``g``.

    Returns ``[f(g0), f'(g0) g1, f''(g0) g1^2 + f'(g0) g2]``.
    """
    g0, g1, g2 = g.val, g.d1, g.d2
    f1 = df(g0)
    return Dual3(f(g0), f1 * g1, d2f(g0) * g1 * g1 + f1 * g2)


def _check(mask, msg: str) -> None:
    if np.any(mask):
        raise DomainError(msg)


def reciprocal(g: Dual3) -> Dual3:
    _check(g.val == 0.0, "division by zero")
    return compose(lambda u: 1.0 / u, lambda u: -1.0 / (u * u), lambda u: 2.0 / (u * u * u), g)


def sin(g: Dual3) -> Dual3:
    return compose(np.sin, np.cos, lambda u: -np.sin(u), g)


def cos(g: Dual3) -> Dual3:
    return compose(np.cos, lambda u: -np.sin(u), lambda u: -np.cos(u), g)


def sincos(g: Dual3) -> tuple[Dual3, Dual3]:
    """``(sin g, cos g)`` sharing the two transcendental evaluations."""
    s, c = np.sin(g.val), np.cos(g.val)
    g1sq = g.d1 * g.d1
    return (
        Dual3(s, c * g.d1, -s * g1sq + c * g.d2),
        Dual3(c, -s * g.d1, -c * g1sq - s * g.d2),
    )


def tan(g: Dual3) -> Dual3:
    _check(np.cos(g.val) == 0.0, "tan at a pole")

    def d1(u):
        return 1.0 / np.cos(u) ** 2

    return compose(np.tan, d1, lambda u: 2.0 * np.tan(u) * d1(u), g)


def asin(g: Dual3) -> Dual3:
    _check(np.abs(g.val) >= 1.0, "asin outside (-1, 1)")
    return compose(
        np.arcsin,
        lambda u: 1.0 / np.sqrt(1.0 - u * u),
        lambda u: u / (1.0 - u * u) ** 1.5,
        g,
    )


def acos(g: Dual3) -> Dual3:
    _check(np.abs(g.val) >= 1.0, "acos outside (-1, 1)")
    return compose(
        np.arccos,
        lambda u: -1.0 / np.sqrt(1.0 - u * u),
        lambda u: -u / (1.0 - u * u) ** 1.5,
        g,
    )


def atan(g: Dual3) -> Dual3:
    return compose(
        np.arctan,
        lambda u: 1.0 / (1.0 + u * u),
        lambda u: -2.0 * u / (1.0 + u * u) ** 2,
        g,
    )


def atan2(y: Dual3, x: Dual3) -> Dual3:
    """Two-argument arctangent, differentiated through both arguments."""
    y, x = lift(y), lift(x)
    r2 = x.val * x.val + y.val * y.val
    _check(r2 == 0.0, "atan2 at (0, 0)")
    num = x.val * y.d1 - y.val * x.d1
    dnum = x.val * y.d2 - y.val * x.d2
    dr2 = 2.0 * (x.val * x.d1 + y.val * y.d1)
    return Dual3(np.arctan2(y.val, x.val), num / r2, (dnum * r2 - num * dr2) / (r2 * r2))


def sqrt(g: Dual3) -> Dual3:
    _check(g.val <= 0.0, "sqrt of a non-positive value")
    s = np.sqrt(g.val)
    return Dual3(s, 0.5 * g.d1 / s, 0.5 * g.d2 / s - 0.25 * g.d1 * g.d1 / (s * g.val))


def exp(g: Dual3) -> Dual3:
    return compose(np.exp, np.exp, np.exp, g)


def log(g: Dual3) -> Dual3:
    _check(g.val <= 0.0, "log of a non-positive value")
    return compose(np.log, lambda u: 1.0 / u, lambda u: -1.0 / (u * u), g)


def absolute(g: Dual3) -> Dual3:
    _check(g.val == 0.0, "abs is not differentiable at 0")
    s = np.sign(g.val)
    return Dual3(np.abs(g.val), s * g.d1, s * g.d2)


ELEMENTARY: dict[str, Callable[..., Dual3]] = {
    "sin": sin,
    "cos": cos,
    "tan": tan,
    "asin": asin,
    "acos": acos,
    "atan": atan,
    "atan2": atan2,
    "sqrt": sqrt,
    "exp": exp,
    "log": log,
    "abs": absolute,
}


def elementary(name: str, *args: Dual3) -> Dual3:
    try:
        fn = ELEMENTARY[name]
    except KeyError:
        raise ValueError(f"unknown elementary function {name!r}") from None
    return fn(*args)


def is_finite(g: Dual3) -> bool:
    return bool(np.all(np.isfinite(g.val)) and np.all(np.isfinite(g.d1)) and np.all(np.isfinite(g.d2)))
