"""Design files: JSON load/save, pivot recovery and input-angle fitting."""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np
from scipy.optimize import minimize_scalar

from spherical4r.mechanism import (
    EXTENSION_MAPS,
    Geometry,
    MassModel,
    pivot_angles,
    recover_alpha4_psi,
)
from spherical4r.objectives import Design, TargetPath, data_path, design_metrics, table1

GEOMETRY_KEYS = ("phi1", "eta1", "psi", "alpha1", "alpha2", "alpha3", "alpha4", "beta", "gamma")


class DesignFileError(ValueError):
    pass


def _geometry_fields(d: dict) -> dict:
    out = {}
    if "x1" in d:
        out["phi1"], out["eta1"] = pivot_angles(d["x1"])
    if "x4" in d:
        if "x1" not in d:
            raise DesignFileError("x4 given without x1")
        out["alpha4"], out["psi"] = recover_alpha4_psi(d["x1"], d["x4"])
    for k in GEOMETRY_KEYS:
        if k in d:
            out[k] = float(d[k])
    missing = [k for k in GEOMETRY_KEYS if k not in out]
    if missing:
        raise DesignFileError(f"design is missing {', '.join(missing)}")
    return out


def _mass_model(d: dict) -> MassModel:
    ext_map = d.get("extension_map", "fitted")
    if isinstance(ext_map, str):
        try:
            ext_map = EXTENSION_MAPS[ext_map]
        except KeyError:
            raise DesignFileError(f"unknown extension map {ext_map!r}") from None
    ext_map = {k: tuple(v) for k, v in ext_map.items()}
    return MassModel(
        **{k: float(d.get(k, 0.0)) for k in ("e1", "e2", "e3", "e4")},
        include_coupler_triangle=bool(d.get("include_coupler_triangle", False)),
        extension_map=ext_map,
    )


def design_from_dict(d: dict, path: TargetPath | None = None) -> Design:
    """Build a design; ``theta1`` is fitted against ``path`` when the dict lacks it."""
    geom = Geometry(**_geometry_fields(d), branch=d.get("branch", "minus"))
    mass = _mass_model(d)
    if "theta1" in d and d["theta1"] is not None:
        return Design(float(d["theta1"]), geom, mass)
    if path is None:
        raise DesignFileError("design has no theta1 and no target path to fit it against")
    return Design(fit_theta1(geom, mass, path), geom, mass)


def design_to_dict(design: Design) -> dict:
    g, m = design.geometry, design.mass
    out = {"theta1": float(design.theta1)}
    out.update({k: float(getattr(g, k)) for k in GEOMETRY_KEYS})
    out["branch"] = g.branch
    out.update({k: float(v) for k, v in m.extensions().items()})
    out["include_coupler_triangle"] = bool(m.include_coupler_triangle)
    out["extension_map"] = {k: list(v) for k, v in m.extension_map.items()}
    return out


def load_design(file, path: TargetPath | None = None) -> Design:
    try:
        with open(file) as fh:
            d = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise DesignFileError(f"cannot read design file {file}: {exc}") from exc
    if "design" in d and isinstance(d["design"], dict):  # a synthesis result document
        d = d["design"]
    return design_from_dict(d, path)


def save_design(design: Design, file) -> None:
    Path(file).write_text(json.dumps(design_to_dict(design), indent=2) + "\n")


def bundled_design(name: str, path: TargetPath | None = None) -> Design:
    """``table2`` (the constructed mechanism) or ``unconstrained`` (the free-pivot optimum).

    The input angle is fitted against ``path``, the bundled target by default.
    """
    return load_design(data_path(f"{name}.json"), table1() if path is None else path)


def fit_theta1(geom: Geometry, mass: MassModel, path: TargetPath, scan: int = 720) -> float:
    """Input angle of the first target point minimising the structural error.

    A uniform scan locates the basin, then a golden-section search refines it.
    """

    def err(t):
        return float(design_metrics(Design(t, geom, mass), path).f_path)

    grid = 2.0 * np.pi * np.arange(scan) / scan
    vals = [err(t) for t in grid]
    i = int(np.argmin(vals))
    step = grid[1] - grid[0]
    try:
        res = minimize_scalar(err, bracket=(grid[i] - step, grid[i], grid[i] + step), method="golden", tol=1e-10)
    except ValueError:  # flat or non-bracketing neighbourhood
        return float(grid[i])
    t = res.x if res.fun <= vals[i] else grid[i]
    return float(np.mod(t, 2.0 * np.pi))
