"""Smooth functions on [a, b], sampled derivative tracks and C^(l) norms.

The C^(l) norm of a vector or matrix function is the sum over its components
of ``sum_{j<=l} max_t |x_c^(j)(t)|``; maxima are taken on a grid.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import ceil
from typing import Callable, Sequence

import numpy as np

from . import expr as ex

DEFAULT_RESOLUTION = 4096
GRID_ATOL = 1e-12


class OrderExceededError(ValueError):
    pass


class ShapeMismatchError(ValueError):
    pass


class OffGridError(ValueError):
    pass


@dataclass(frozen=True)
class Interval:
    a: float
    b: float

    def __post_init__(self):
        if not (np.isfinite(self.a) and np.isfinite(self.b) and self.a < self.b):
            raise ValueError(f"invalid interval [{self.a}, {self.b}]")

    @property
    def length(self) -> float:
        return self.b - self.a

    def uniform(self, panels: int = DEFAULT_RESOLUTION) -> np.ndarray:
        if panels < 1:
            raise ValueError("resolution must be positive")
        return np.linspace(self.a, self.b, panels + 1)

    def contains(self, t: float, atol: float = GRID_ATOL) -> bool:
        return self.a - atol <= t <= self.b + atol


def make_grid(interval: Interval, panels: int = DEFAULT_RESOLUTION,
              special_points: Sequence[float] = ()) -> np.ndarray:
    """Uniform grid with extra points inserted; near-coincident points are snapped."""
    grid = interval.uniform(panels)
    snap = 1e-10 * interval.length
    extra = []
    for p in special_points:
        p = float(p)
        if not interval.contains(p, snap):
            raise ValueError(f"point {p} lies outside [{interval.a}, {interval.b}]")
        p = min(max(p, interval.a), interval.b)
        i = int(np.argmin(np.abs(grid - p)))
        if abs(grid[i] - p) <= snap:
            if i not in (0, len(grid) - 1):
                grid[i] = p
        else:
            extra.append(p)
    if extra:
        grid = np.union1d(grid, np.array(extra))
    return grid


def quadrature_panels(length: float, interval: Interval, resolution: int) -> int:
    panels = max(2, int(ceil(resolution * length / interval.length)))
    return panels + panels % 2


class SmoothFunction:
    """A map [a, b] -> C^shape with derivatives up to ``order``.

    ``evaluator(t, j)`` receives a 1-D array of points and returns an array of
    shape ``(len(t),) + shape`` holding the j-th derivative.
    """

    def __init__(self, shape: tuple, order: int, evaluator: Callable, interval: Interval | None = None):
        self.shape = tuple(shape)
        self.order = int(order)
        self.evaluator = evaluator
        self.interval = interval

    def derivs(self, t, j: int = 0) -> np.ndarray:
        if j > self.order:
            raise OrderExceededError(f"derivative of order {j} requested, only {self.order} available")
        tt = np.atleast_1d(np.asarray(t, dtype=float))
        out = np.asarray(self.evaluator(tt, j))
        return np.broadcast_to(out, tt.shape + self.shape)

    def __call__(self, t, j: int = 0) -> np.ndarray:
        out = self.derivs(t, j)
        return out[0] if np.ndim(t) == 0 else out

    def sample(self, grid: np.ndarray, order: int | None = None) -> "SampledFunction":
        order = self.order if order is None else order
        vals = np.stack([self.derivs(grid, j) for j in range(order + 1)], axis=1)
        return SampledFunction(np.asarray(grid, dtype=float), vals)

    def scaled(self, c: float) -> "SmoothFunction":
        return SmoothFunction(self.shape, self.order, _Scaled(self.evaluator, c), self.interval)

    def quadrature_nodes(self, lo: float, hi: float, interval: Interval,
                         resolution: int = DEFAULT_RESOLUTION) -> np.ndarray:
        return np.linspace(lo, hi, quadrature_panels(hi - lo, interval, resolution) + 1)


class SmoothMatrixFunction(SmoothFunction):
    def __init__(self, rows: int, cols: int, order: int, evaluator: Callable, interval: Interval | None = None):
        super().__init__((rows, cols), order, evaluator, interval)

    @property
    def rows(self) -> int:
        return self.shape[0]

    @property
    def cols(self) -> int:
        return self.shape[1]


@dataclass(frozen=True)
class _Scaled:
    inner: Callable
    c: float

    def __call__(self, t, j):
        return self.c * np.asarray(self.inner(t, j))


@dataclass
class ExprEvaluator:
    """Entrywise evaluator for a flat tuple of expressions, eps bound."""

    exprs: tuple
    shape: tuple
    eps: float
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def derivative_exprs(self, j: int) -> tuple:
        if j not in self._cache:
            if j == 0:
                self._cache[0] = tuple(self.exprs)
            else:
                self._cache[j] = tuple(ex.differentiate(e, "t") for e in self.derivative_exprs(j - 1))
        return self._cache[j]

    def __call__(self, t, j):
        cols = [ex.evaluate(e, t, self.eps) for e in self.derivative_exprs(j)]
        return np.stack(cols, axis=-1).reshape(np.shape(t) + self.shape)

    def __getstate__(self):
        return {"exprs": self.exprs, "shape": self.shape, "eps": self.eps, "_cache": {}}


def expr_function(exprs, shape: tuple, eps: float = 0.0, order: int = 8,
                  interval: Interval | None = None) -> SmoothFunction:
    """Build a SmoothFunction from nested lists of expressions (strings or Expr)."""
    flat = tuple(ex.as_expr(e) for e in np.asarray(exprs, dtype=object).reshape(-1))
    if int(np.prod(shape)) != len(flat):
        raise ShapeMismatchError(f"{len(flat)} expressions do not fill shape {shape}")
    evaluator = ExprEvaluator(flat, tuple(shape), float(eps))
    if len(shape) == 2:
        return SmoothMatrixFunction(shape[0], shape[1], order, evaluator, interval)
    return SmoothFunction(shape, order, evaluator, interval)


def constant_function(value, order: int = 8, interval: Interval | None = None) -> SmoothFunction:
    value = np.asarray(value)
    return SmoothFunction(value.shape, order, _Constant(value), interval)


@dataclass(frozen=True)
class _Constant:
    value: np.ndarray

    def __call__(self, t, j):
        v = self.value if j == 0 else np.zeros_like(self.value)
        return np.broadcast_to(v, np.shape(t) + v.shape)


class SampledFunction:
    """Derivative tracks 0..l on a strictly increasing grid.

    ``values`` has shape ``(len(grid), l + 1) + shape``.
    """

    def __init__(self, grid: np.ndarray, values: np.ndarray):
        grid = np.asarray(grid, dtype=float)
        values = np.asarray(values)
        if grid.ndim != 1 or len(grid) < 2 or np.any(np.diff(grid) <= 0):
            raise ValueError("grid must be strictly increasing with at least two points")
        if values.shape[0] != len(grid) or values.ndim < 2:
            raise ShapeMismatchError("values do not match grid")
        if not np.all(np.isfinite(values)):
            raise ValueError("sampled values must be finite")
        self.grid = grid
        self.values = values

    @property
    def order(self) -> int:
        return self.values.shape[1] - 1

    @property
    def shape(self) -> tuple:
        return self.values.shape[2:]

    def indices(self, t) -> np.ndarray:
        tt = np.atleast_1d(np.asarray(t, dtype=float))
        idx = np.clip(np.searchsorted(self.grid, tt), 0, len(self.grid) - 1)
        left = np.clip(idx - 1, 0, len(self.grid) - 1)
        pick = np.where(np.abs(self.grid[left] - tt) < np.abs(self.grid[idx] - tt), left, idx)
        scale = max(1.0, abs(self.grid[0]), abs(self.grid[-1]))
        bad = np.abs(self.grid[pick] - tt) > GRID_ATOL * scale * 100
        if np.any(bad):
            raise OffGridError(f"points {tt[bad]} are not grid points")
        return pick

    def derivs(self, t, j: int = 0) -> np.ndarray:
        if j > self.order:
            raise OrderExceededError(f"derivative of order {j} requested, only {self.order} available")
        return self.values[self.indices(t), j]

    def __call__(self, t, j: int = 0):
        out = self.derivs(t, j)
        return out[0] if np.ndim(t) == 0 else out

    def quadrature_nodes(self, lo: float, hi: float, interval: Interval | None = None,
                         resolution: int | None = None) -> np.ndarray:
        i0, i1 = self.indices([lo, hi])
        return self.grid[i0:i1 + 1]

    def restrict(self, points) -> "SampledFunction":
        idx = self.indices(points)
        return SampledFunction(self.grid[idx], self.values[idx])

    def sample(self, grid: np.ndarray, order: int | None = None) -> "SampledFunction":
        order = self.order if order is None else order
        if order > self.order:
            raise OrderExceededError(f"derivative of order {order} requested, only {self.order} available")
        idx = self.indices(grid)
        return SampledFunction(self.grid[idx], self.values[idx, :order + 1])

    def __sub__(self, other: "SampledFunction") -> "SampledFunction":
        return SampledFunction(self.grid, self.values - other.sample(self.grid, self.order).values)


def _as_sampled(x, order: int, interval: Interval | None, resolution: int) -> SampledFunction:
    if isinstance(x, SampledFunction):
        if order > x.order:
            raise OrderExceededError(f"norm of order {order} requested, only {x.order} derivatives available")
        return x
    if order > x.order:
        raise OrderExceededError(f"norm of order {order} requested, only {x.order} derivatives available")
    interval = interval or x.interval
    if interval is None:
        raise ValueError("an interval is required to sample a smooth function")
    if resolution < 2:
        raise ValueError("resolution must be at least 2")
    return x.sample(interval.uniform(resolution), order)


def _norm_of_tracks(values: np.ndarray, order: int) -> float:
    # values: (G, l+1, *shape); sum over components of sum_j max_t |x_c^(j)|
    v = np.abs(values[:, : order + 1])
    return float(v.max(axis=0).sum())


def ck_norm(x, order: int, interval: Interval | None = None, resolution: int = DEFAULT_RESOLUTION) -> float:
    """C^(order) norm of a smooth or sampled function on a grid."""
    s = _as_sampled(x, order, interval, resolution)
    return _norm_of_tracks(s.values, order)


def ck_distance(x, y, order: int, interval: Interval | None = None,
                resolution: int = DEFAULT_RESOLUTION) -> float:
    """C^(order) norm of x - y.

    Sampled arguments are compared on their common grid points; a smooth
    argument is evaluated on the other argument's grid.
    """
    if tuple(x.shape) != tuple(y.shape):
        raise ShapeMismatchError(f"shapes {x.shape} and {y.shape} differ")
    if isinstance(x, SampledFunction) or isinstance(y, SampledFunction):
        if isinstance(x, SampledFunction) and isinstance(y, SampledFunction):
            if len(x.grid) == len(y.grid) and np.array_equal(x.grid, y.grid):
                grid = x.grid
            else:
                grid = common_points(x.grid, y.grid)
        else:
            grid = (x if isinstance(x, SampledFunction) else y).grid
        xs = _sample_on(x, grid, order)
        ys = _sample_on(y, grid, order)
        return _norm_of_tracks(xs - ys, order)
    interval = interval or x.interval or y.interval
    grid = interval.uniform(resolution)
    return _norm_of_tracks(_sample_on(x, grid, order) - _sample_on(y, grid, order), order)


def _sample_on(x, grid, order):
    if order > x.order:
        raise OrderExceededError(f"norm of order {order} requested, only {x.order} derivatives available")
    return x.sample(grid, order).values


def common_points(g1: np.ndarray, g2: np.ndarray, atol: float = 1e-12) -> np.ndarray:
    idx = np.clip(np.searchsorted(g2, g1), 0, len(g2) - 1)
    left = np.clip(idx - 1, 0, len(g2) - 1)
    close = (np.abs(g2[idx] - g1) <= atol) | (np.abs(g2[left] - g1) <= atol)
    return g1[close]
