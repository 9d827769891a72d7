"""Independent numerical oracles shared by the test modules."""
import numpy as np


def central1(f, x, h):
    return (f(x + h) - f(x - h)) / (2.0 * h)


def central2(f, x, h):
    return (f(x + h) - 2.0 * f(x) + f(x - h)) / (h * h)


def richardson(stencil, f, x, h0=0.05, levels=5):
    """Extrapolate an O(h^2) central stencil to h -> 0 (error O(h0^(2 levels)))."""
    table = [stencil(f, x, h0 / 2**k) for k in range(levels)]
    for j in range(1, levels):
        c = 4.0**j
        table = [(c * table[k + 1] - table[k]) / (c - 1.0) for k in range(len(table) - 1)]
    return table[0]


def arc_average(p1, axis, alpha, n=100_000):
    """Mean of ``n`` equally spaced (midpoint) points on the arc from ``p1`` about ``axis``."""
    t = (np.arange(n) + 0.5) / n * alpha
    p1, axis = np.asarray(p1, float), np.asarray(axis, float)
    c, s = np.cos(t)[:, None], np.sin(t)[:, None]
    pts = p1 * c + np.cross(axis, p1) * s + axis * np.dot(axis, p1) * (1 - c)
    return pts.mean(axis=0)


def bisect(f, a, b, tol=1e-15, maxit=200):
    fa = f(a)
    for _ in range(maxit):
        m = 0.5 * (a + b)
        fm = f(m)
        if fa * fm <= 0:
            b = m
        else:
            a, fa = m, fm
        if b - a < tol:
            break
    return 0.5 * (a + b)


def random_geometry(rng, branch="plus"):
    from spherical4r.mechanism import Geometry

    a = rng.uniform(0.3, np.pi - 0.3, 4)
    return Geometry(
        phi1=rng.uniform(0, 2 * np.pi),
        eta1=rng.uniform(0.2, np.pi - 0.2),
        psi=rng.uniform(0, 2 * np.pi),
        alpha1=a[0],
        alpha2=a[1],
        alpha3=a[2],
        alpha4=a[3],
        beta=rng.uniform(-np.pi, np.pi),
        gamma=rng.uniform(-np.pi, np.pi),
        branch=branch,
    )


def feasible_geometry(rng, branch="plus", min_fraction=0.3, n=256):
    """Random geometry that closes on at least ``min_fraction`` of a uniform sweep."""
    from spherical4r import dual3 as d3
    from spherical4r.mechanism import kinematic_state

    theta = 2 * np.pi * np.arange(n) / n
    while True:
        g = random_geometry(rng, branch)
        ok = kinematic_state(d3.const(theta), g).feasible
        if ok.mean() >= min_fraction:
            return g, theta[ok]
