"""JSON run configurations.

Field names::

    name, description
    interval        [a, b]
    orders          {"r": .., "n": .., "m": ..}
    coefficients    {"K": [K_0, ..., K_{r-1}], "f": [...]}   K_i is an m x m array of strings
    boundary        {"q": [...], "multipoint": {...}} or {"q": [...], "canonical": {...}, "limit": {...}}
    limit           optional eps = 0 replacements {"K": .., "f": .., "q": ..}
    schedule        {"k_min": 3, "k_max": 12} or {"eps": [...]}
    tolerances      {"solver": 1e-10, "convergence": 1e-3}
    grid            number of uniform panels
    output          {"dir": "..."}
    exact           optional closed-form solution, m strings in t (and eps)

A multipoint block is ``{"groups": [group_0, group_1, ...], "limits": [...]}``
where every term is ``{"point": "...", "coeffs": {"l": matrix}}`` and group 0
holds the points without a limit. A canonical block is ``{"betas": [...],
"jumps": [{"point", "matrix"}], "densities": [{"lo", "hi", "matrix"}]}``.
"""

from __future__ import annotations

import json
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import expr as ex
from .boundary import (
    CanonicalBoundaryFamily,
    CanonicalSpec,
    MultipointBoundaryOperator,
    MultipointTerm,
    _expr_matrix,
)
from .function_space import DEFAULT_RESOLUTION, Interval
from .limits import CONVERGENCE_TOL, ProblemFamily, build_family
from .solver import DEFAULT_TOL


class ConfigError(ValueError):
    pass


def _require(d: dict, key: str, where: str):
    if key not in d:
        raise ConfigError(f"missing field {where}.{key}" if where else f"missing field {key}")
    return d[key]


def _term(d: dict) -> MultipointTerm:
    try:
        return MultipointTerm.build(_require(d, "point", "term"),
                                    {int(l): mat for l, mat in _require(d, "coeffs", "term").items()})
    except ex.ExprSyntaxError as err:
        raise ConfigError(f"bad expression in boundary term: {err}") from err


def _canonical_spec(d: dict) -> CanonicalSpec:
    betas = tuple(_expr_matrix(b) for b in _require(d, "betas", "canonical"))
    jumps = tuple((ex.as_expr(j["point"]), _expr_matrix(j["matrix"])) for j in d.get("jumps", ()))
    dens = tuple((ex.as_expr(p["lo"]), ex.as_expr(p["hi"]),
                  tuple(ex.as_expr(e) for e in np.asarray(p["matrix"], dtype=object).reshape(-1)))
                 for p in d.get("densities", ()))
    return CanonicalSpec(betas, jumps, dens)


def _schedule(d: dict | None) -> tuple:
    if d is None:
        return tuple(2.0**-k for k in range(3, 13))
    if "eps" in d:
        return tuple(float(e) for e in d["eps"])
    return tuple(2.0**-k for k in range(int(d.get("k_min", 3)), int(d.get("k_max", 12)) + 1))


def family_from_dict(cfg: dict) -> ProblemFamily:
    """Build a ProblemFamily from a parsed configuration document."""
    try:
        name = cfg.get("name", "config")
        interval = Interval(*map(float, _require(cfg, "interval", "")))
        orders = _require(cfg, "orders", "")
        r, n, m = int(_require(orders, "r", "orders")), int(_require(orders, "n", "orders")), int(_require(orders, "m", "orders"))
        coeffs = _require(cfg, "coefficients", "")
        K = _require(coeffs, "K", "coefficients")
        f = _require(coeffs, "f", "coefficients")
        bnd = _require(cfg, "boundary", "")
        q = _require(bnd, "q", "boundary")
        if "multipoint" in bnd:
            mp = bnd["multipoint"]
            groups = tuple(tuple(_term(t) for t in g) for g in _require(mp, "groups", "multipoint"))
            limits = mp.get("limits")
            limits = None if limits is None else tuple(_term(t) for t in limits)
            boundary = MultipointBoundaryOperator(interval, n, r, m, groups, limits)
        elif "canonical" in bnd:
            limit = bnd.get("limit")
            resolution = int(cfg.get("grid", DEFAULT_RESOLUTION))
            boundary = CanonicalBoundaryFamily(interval, n, r, m, _canonical_spec(bnd["canonical"]),
                                               None if limit is None else _canonical_spec(limit), resolution)
        else:
            raise ConfigError("boundary needs a 'multipoint' or 'canonical' block")
        lim = cfg.get("limit", {})
        tol = cfg.get("tolerances", {})
        return build_family(
            name, interval, r, n, m, K, f, q, boundary,
            limit_K=lim.get("K"), limit_f=lim.get("f"), limit_q=lim.get("q"),
            schedule=_schedule(cfg.get("schedule")),
            tol=float(tol.get("solver", DEFAULT_TOL)),
            convergence_tol=float(tol.get("convergence", CONVERGENCE_TOL)),
            resolution=int(cfg.get("grid", DEFAULT_RESOLUTION)),
            exact=cfg.get("exact"),
            description=cfg.get("description", ""),
        )
    except ConfigError:
        raise
    except (ex.ExprSyntaxError, ValueError, TypeError, KeyError) as err:
        raise ConfigError(f"invalid configuration: {err}") from err


def load_config(path: str | Path) -> dict:
    try:
        return json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as err:
        raise ConfigError(f"cannot read {path}: {err}") from err


def with_overrides(family: ProblemFamily, tol: float | None = None, grid: int | None = None) -> ProblemFamily:
    changes = {}
    if tol is not None:
        changes["tol"] = float(tol)
    if grid is not None:
        changes["resolution"] = int(grid)
        if isinstance(family.boundary, CanonicalBoundaryFamily):
            changes["boundary"] = replace(family.boundary, resolution=int(grid))
    return replace(family, **changes) if changes else family
