"""Order-r systems, their first-order companion form and the way back.

The order-r system is ``z^(r) + sum_{i<r} K_i z^(i) = f``. With
``y = col(z, z', ..., z^(r-1))`` it becomes ``y' + A y = g`` where A has -I on
the block superdiagonal and K_0 ... K_{r-1} in the last block row, and
``g = col(0, ..., 0, f)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import comb

import numpy as np

from .boundary import GenericBoundaryOperator, PointOperator, _mat_apply
from .function_space import (
    Interval,
    SampledFunction,
    SmoothFunction,
    SmoothMatrixFunction,
)


@dataclass(frozen=True)
class HigherOrderSystem:
    """Coefficients bound to one parameter value; K[i] multiplies z^(i)."""

    interval: Interval
    r: int
    n: int
    m: int
    K: tuple
    f: SmoothFunction

    def __post_init__(self):
        if self.r < 1 or self.n < 0 or self.m < 1:
            raise ValueError("need r >= 1, n >= 0, m >= 1")
        if len(self.K) != self.r:
            raise ValueError(f"expected {self.r} coefficient matrices, got {len(self.K)}")
        for Ki in self.K:
            if tuple(Ki.shape) != (self.m, self.m):
                raise ValueError(f"coefficient has shape {Ki.shape}, expected {(self.m, self.m)}")
            if Ki.order < self.n:
                raise ValueError("coefficients must provide n derivatives")
        if tuple(self.f.shape) != (self.m,) or self.f.order < self.n:
            raise ValueError("right-hand side must be an m-vector with n derivatives")

    def with_rhs(self, f: SmoothFunction) -> "HigherOrderSystem":
        return HigherOrderSystem(self.interval, self.r, self.n, self.m, self.K, f)

    def apply_operator(self, z: SampledFunction, order: int | None = None) -> np.ndarray:
        """Tracks (L z)^(i), i = 0..order, on z's grid (Leibniz rule)."""
        order = self.n if order is None else order
        if z.order < self.r + order:
            raise ValueError(f"need {self.r + order} derivative tracks, have {z.order}")
        grid = z.grid
        Kd = [[Ki.derivs(grid, s) for s in range(order + 1)] for Ki in self.K]
        out = []
        for i in range(order + 1):
            acc = z.values[:, self.r + i].copy()
            for k in range(self.r):
                for s in range(i + 1):
                    acc = acc + comb(i, s) * np.einsum("gij,gj...->gi...", Kd[k][s], z.values[:, k + i - s])
            out.append(acc)
        return np.stack(out, axis=1)


@dataclass(frozen=True)
class _CompanionEvaluator:
    K: tuple
    r: int
    m: int

    def __call__(self, t, j):
        r, m = self.r, self.m
        out = np.zeros((len(t), r * m, r * m))
        if j == 0:
            eye = np.eye(m)
            for i in range(r - 1):
                out[:, i * m:(i + 1) * m, (i + 1) * m:(i + 2) * m] = -eye
        for i in range(r):
            out[:, (r - 1) * m:, i * m:(i + 1) * m] = self.K[i].derivs(t, j)
        return out


@dataclass(frozen=True)
class _StackedRhs:
    f: SmoothFunction
    r: int
    m: int

    def __call__(self, t, j):
        out = np.zeros((len(t), self.r * self.m))
        out[:, (self.r - 1) * self.m:] = self.f.derivs(t, j)
        return out


@dataclass(frozen=True)
class FirstOrderSystem:
    interval: Interval
    dim: int
    n: int
    A: SmoothMatrixFunction
    g: SmoothFunction


def build_companion(system: HigherOrderSystem) -> FirstOrderSystem:
    r, m, n = system.r, system.m, system.n
    if r == 1:
        return FirstOrderSystem(system.interval, m, n, system.K[0], system.f)
    order = min(Ki.order for Ki in system.K)
    A = SmoothMatrixFunction(r * m, r * m, order, _CompanionEvaluator(tuple(system.K), r, m), system.interval)
    g = SmoothFunction((r * m,), system.f.order, _StackedRhs(system.f, r, m), system.interval)
    return FirstOrderSystem(system.interval, r * m, n, A, g)


def stack_rhs(f: SmoothFunction, r: int, m: int) -> SmoothFunction:
    """col(0, ..., 0, f) as an rm-vector function."""
    if r == 1:
        return f
    return SmoothFunction((r * m,), f.order, _StackedRhs(f, r, m), f.interval)


def first_order_tracks(A: SmoothFunction, grid: np.ndarray, X: np.ndarray, order: int,
                       forcing: np.ndarray | None = None) -> np.ndarray:
    """Derivative tracks of a solution X of X' + A X = G on ``grid``.

    ``X`` has shape (len(grid), dim, *batch); ``forcing`` holds G^(i) for
    i < order with shape (len(grid), order, dim, *batch) or is None. Returns
    shape (len(grid), order + 1, dim, *batch), computed by
    X^(i+1) = G^(i) - sum_s C(i, s) A^(s) X^(i-s).
    """
    tracks = [X]
    Ad = [A.derivs(grid, s) for s in range(order)]
    for i in range(order):
        acc = np.zeros_like(X) if forcing is None else forcing[:, i].copy()
        for s in range(i + 1):
            acc = acc - comb(i, s) * np.einsum("gij,gj...->gi...", Ad[s], tracks[i - s])
        tracks.append(acc)
    return np.stack(tracks, axis=1)


class LiftedSolution(SampledFunction):
    """Tracks z^(0) ... z^(n+r) of a solution of the order-r system."""


def lift_tracks(y_tracks: np.ndarray, r: int, m: int) -> np.ndarray:
    """Map y tracks (G, n+2, rm, *batch) to z tracks (G, n+r+1, m, *batch).

    z^(k) = y_{k+1} for k < r and z^(r-1+i) = y_r^(i) for i >= 1.
    """
    cols = [y_tracks[:, 0, k * m:(k + 1) * m] for k in range(r)]
    last = slice((r - 1) * m, r * m)
    cols += [y_tracks[:, i, last] for i in range(1, y_tracks.shape[1])]
    return np.stack(cols, axis=1)


def lift_solution(y: SampledFunction, system: HigherOrderSystem) -> LiftedSolution:
    """Recover z and all its derivatives up to n + r from a first-order solution.

    Derivatives beyond those stored in ``y`` come from the differential
    equation itself (never from numerical differentiation).
    """
    n, r, m = system.n, system.r, system.m
    if tuple(y.shape[:1]) != (r * m,):
        raise ValueError(f"first-order solution must have dimension {r * m}")
    tracks = y.values
    if y.order < n + 1:
        fo = build_companion(system)
        forcing = np.stack([fo.g.derivs(y.grid, i) for i in range(n + 1)], axis=1)
        if len(y.shape) > 1:
            forcing = np.broadcast_to(forcing[..., None], forcing.shape + y.shape[1:]).copy()
        tracks = first_order_tracks(fo.A, y.grid, y.values[:, 0], n + 1, forcing)
    return LiftedSolution(y.grid, lift_tracks(tracks[:, : n + 2], r, m))


class _Block:
    """View of block ``k`` (m components) of an rm-vector function."""

    def __init__(self, y, k: int, m: int):
        self.y, self.sl, self.order = y, slice(k * m, (k + 1) * m), y.order
        self.shape = (m,) + tuple(y.shape[1:])

    def derivs(self, t, j=0):
        return self.y.derivs(t, j)[:, self.sl]

    def quadrature_nodes(self, *args, **kwargs):
        return self.y.quadrature_nodes(*args, **kwargs)


class _ZView:
    """z^(l) read off a first-order function y = col(z, ..., z^(r-1))."""

    def __init__(self, y, r: int, m: int):
        self.y, self.r, self.m = y, r, m
        self.order = y.order + r - 1
        self.shape = (m,) + tuple(y.shape[1:])

    def derivs(self, t, l=0):
        r, m = self.r, self.m
        if l < r:
            return self.y.derivs(t, 0)[:, l * m:(l + 1) * m]
        return self.y.derivs(t, l - r + 1)[:, (r - 1) * m:r * m]

    def quadrature_nodes(self, *args, **kwargs):
        return self.y.quadrature_nodes(*args, **kwargs)


@dataclass(frozen=True)
class ReducedBoundary:
    """The boundary operator N acting on first-order functions y.

    For canonical operators N y = sum_{k<r} beta_k y_k(a)
    + sum_{k=r}^{n+r} beta_k y_r^(k-r)(a) + int dPhi y_r^(n+1).
    """

    B: object
    r: int
    m: int

    @property
    def rows(self) -> int:
        return self.r * self.m

    def apply(self, y) -> np.ndarray:
        B, r, m = self.B, self.r, self.m
        if isinstance(B, GenericBoundaryOperator):
            a = B.interval.a
            out = 0
            for k in range(1, r):
                out = out + _mat_apply(B.betas[k - 1], y.derivs([a], 0)[0][(k - 1) * m:k * m])
            last = _Block(y, r - 1, m)
            for k in range(r, B.n + r + 1):
                out = out + _mat_apply(B.betas[k - 1], last.derivs([a], k - r)[0])
            return out + B.measure.integrate(last, B.n + 1)
        if isinstance(B, PointOperator):
            return B.apply(_ZView(y, r, m))
        raise TypeError(f"unsupported boundary operator {type(B).__name__}")

    def special_points(self) -> list[float]:
        return self.B.special_points()


def reduce_boundary(B, r: int | None = None, m: int | None = None) -> ReducedBoundary:
    return ReducedBoundary(B, B.r if r is None else r, B.m if m is None else m)
