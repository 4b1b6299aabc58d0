"""Fundamental-matrix solution of y' + A y = g, N y = q.

The homogeneous matrix problem Y' + A Y = 0, Y(a) = I and any number of
particular solutions (zero initial data, one per forcing) are integrated in a
single pass as the columns of one matrix IVP. The boundary operator applied
to the columns of Y gives the characteristic matrix M; the problem is
uniquely solvable iff M is invertible, which is decided by its smallest
singular value.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .boundary import mnorm
from .function_space import DEFAULT_RESOLUTION, SampledFunction, SmoothFunction, make_grid
from .integrator import integrate_linear
from .reduction import (
    HigherOrderSystem,
    LiftedSolution,
    ReducedBoundary,
    build_companion,
    first_order_tracks,
    lift_tracks,
    reduce_boundary,
    stack_rhs,
)

DEFAULT_TOL = 1e-10
DEGENERACY_RTOL = 1e-8


class DegenerateProblem(ArithmeticError):
    """The homogeneous problem has a nontrivial solution (numerically)."""

    def __init__(self, sigma_min: float, threshold: float):
        super().__init__(f"characteristic matrix is singular: sigma_min = {sigma_min:.3e} <= {threshold:.3e}")
        self.sigma_min = sigma_min
        self.threshold = threshold


class NearSingularError(ArithmeticError):
    pass


@dataclass
class FundamentalMatrix:
    grid: np.ndarray
    tracks: np.ndarray  # (G, l + 1, dim, dim)
    integration_error: float = 0.0

    @property
    def Y(self) -> np.ndarray:
        return self.tracks[:, 0]

    @property
    def Yprime(self) -> np.ndarray:
        return self.tracks[:, 1]

    @property
    def dim(self) -> int:
        return self.tracks.shape[-1]

    def as_sampled(self) -> SampledFunction:
        return SampledFunction(self.grid, self.tracks)

    def min_abs_det(self) -> float:
        return float(np.abs(np.linalg.det(self.Y)).min())


@dataclass
class CharacteristicMatrix:
    M: np.ndarray
    sigma_min: float
    sigma_max: float

    @property
    def condition(self) -> float:
        return np.inf if self.sigma_min == 0 else self.sigma_max / self.sigma_min

    @property
    def threshold(self) -> float:
        return DEGENERACY_RTOL * self.sigma_max

    @property
    def degenerate(self) -> bool:
        return not self.sigma_min > self.threshold


@dataclass
class Condition0Verdict:
    nondegenerate: bool
    sigma_min: float
    sigma_max: float
    threshold: float


@dataclass
class SolveOutcome:
    solution: LiftedSolution
    ode_residual: float
    boundary_residual: float
    sigma_min: float
    integration_error: float
    resolution: int
    tol: float


def _as_reduced(B, system: HigherOrderSystem) -> ReducedBoundary:
    return B if isinstance(B, ReducedBoundary) else reduce_boundary(B, system.r, system.m)


def default_grid(system: HigherOrderSystem, B=None, resolution: int = DEFAULT_RESOLUTION) -> np.ndarray:
    points = [] if B is None else B.special_points()
    return make_grid(system.interval, resolution, points)


def _track_order(A, g, n: int) -> int:
    # one extra derivative beyond n + 1 feeds the residual check when available
    want = max(n + 1, 2)
    avail = min(A.order, g.order if g is not None else A.order) + 1
    return max(n + 1, min(want, avail))


def hermite_residual(grid: np.ndarray, tracks: np.ndarray) -> float:
    """Largest defect of y(t_{i+1}) - y(t_i) against the integral of y' over each panel.

    Uses the two-point Hermite rule when y'' is present, the trapezoid rule otherwise.
    """
    h = np.diff(grid).reshape((-1,) + (1,) * (tracks.ndim - 2))
    y0, y1 = tracks[:-1, 0], tracks[1:, 0]
    d0, d1 = tracks[:-1, 1], tracks[1:, 1]
    integral = h / 2 * (d0 + d1)
    if tracks.shape[1] > 2:
        integral = integral + h**2 / 12 * (tracks[:-1, 2] - tracks[1:, 2])
    return float(np.abs(y1 - y0 - integral).max())


class _ForcingColumns:
    """Several rm-vector forcings side by side as an (rm, p) function."""

    def __init__(self, forcings: Sequence[SmoothFunction]):
        self.forcings = list(forcings)

    def __call__(self, t, j):
        return np.stack([g.derivs(t, j) for g in self.forcings], axis=-1)


def _integrate_columns(system: HigherOrderSystem, grid: np.ndarray, tol: float,
                       forcings: Sequence[SmoothFunction]):
    fo = build_companion(system)
    d = fo.dim
    stacked = [stack_rhs(f, system.r, system.m) for f in forcings]
    p = len(stacked)
    X0 = np.zeros((d, d + p))
    X0[:, :d] = np.eye(d)
    forcing = None
    g_order = None
    if p:
        g_order = min(g.order for g in stacked)
        forcing = SmoothFunction((d, p), g_order, _ForcingColumns(stacked), system.interval)
    res = integrate_linear(fo.A, grid, X0, forcing=forcing, tol=tol)
    order = _track_order(fo.A, forcing, system.n)
    G = None
    if p:
        G = np.zeros((len(grid), order, d, d + p))
        for i in range(order):
            G[:, i, :, d:] = forcing.derivs(grid, i)
    tracks = first_order_tracks(fo.A, grid, res.values, order, G)
    return tracks, res


def fundamental_matrix(A, grid: np.ndarray, tol: float = DEFAULT_TOL, order: int = 1) -> FundamentalMatrix:
    """Y' + A Y = 0 with Y(a) = I, with derivative tracks up to ``order``."""
    d = A.shape[0]
    res = integrate_linear(A, grid, np.eye(d), tol=tol)
    order = max(1, min(order, A.order + 1))
    tracks = first_order_tracks(A, grid, res.values, order)
    return FundamentalMatrix(np.asarray(grid, dtype=float), tracks, res.max_error)


def particular_solution(A, g, grid: np.ndarray, tol: float = DEFAULT_TOL, order: int = 1) -> SampledFunction:
    """Solution of y' + A y = g with y(a) = 0, as derivative tracks."""
    d = A.shape[0]
    res = integrate_linear(A, grid, np.zeros((d, 1)), forcing=g, tol=tol)
    order = max(1, min(order, A.order + 1, g.order + 1))
    G = np.stack([g.derivs(grid, i) for i in range(order)], axis=1)[..., None]
    tracks = first_order_tracks(A, grid, res.values, order, G)
    return SampledFunction(np.asarray(grid, dtype=float), tracks[..., 0])


def characteristic_matrix(Y: FundamentalMatrix, N) -> CharacteristicMatrix:
    """M = [N Y]: column j is N applied to column j of Y."""
    M = np.asarray(N.apply(Y.as_sampled()))
    s = np.linalg.svd(M, compute_uv=False)
    return CharacteristicMatrix(M, float(s[-1]), float(s[0]))


@dataclass
class Factorization:
    """Fundamental matrix, characteristic matrix and particular solutions for one system."""

    system: HigherOrderSystem
    N: ReducedBoundary
    grid: np.ndarray
    fundamental: FundamentalMatrix
    characteristic: CharacteristicMatrix
    particular: np.ndarray  # (G, l + 1, rm, p)
    boundary_particular: np.ndarray  # (rm, p)
    integration_error: float
    tol: float
    _svd: tuple = field(default=None, repr=False)

    @property
    def dim(self) -> int:
        return self.fundamental.dim

    def require_nondegenerate(self) -> None:
        cm = self.characteristic
        if cm.degenerate:
            raise DegenerateProblem(cm.sigma_min, cm.threshold)

    def coefficients(self, rhs: np.ndarray) -> np.ndarray:
        """c with M c = rhs, through the singular value decomposition of M."""
        self.require_nondegenerate()
        if self._svd is None:
            self._svd = np.linalg.svd(self.characteristic.M)
        U, s, Vh = self._svd
        return Vh.conj().T @ ((U.conj().T @ rhs) / s)

    def first_order_tracks(self, q, k: int | None = 0) -> np.ndarray:
        """Tracks of y = Y c + y_p with N y = q; ``k`` selects the forcing, None means g = 0."""
        q = np.asarray(q, dtype=float).reshape(self.dim)
        if k is None:
            c = self.coefficients(q)
            return np.einsum("glij,j->gli", self.fundamental.tracks, c)
        c = self.coefficients(q - self.boundary_particular[:, k])
        return np.einsum("glij,j->gli", self.fundamental.tracks, c) + self.particular[..., k]

    def solve(self, q, k: int | None = 0) -> SolveOutcome:
        tracks = self.first_order_tracks(q, k)
        system = self.system
        z = LiftedSolution(self.grid, lift_tracks(tracks[:, : system.n + 2], system.r, system.m))
        boundary = mnorm(self.N.B.apply(z) - np.asarray(q, dtype=float).reshape(self.dim))
        return SolveOutcome(
            solution=z,
            ode_residual=hermite_residual(self.grid, tracks),
            boundary_residual=boundary,
            sigma_min=self.characteristic.sigma_min,
            integration_error=self.integration_error,
            resolution=len(self.grid) - 1,
            tol=self.tol,
        )


def factorize(system: HigherOrderSystem, B, grid: np.ndarray | None = None, tol: float = DEFAULT_TOL,
              forcings: Sequence[SmoothFunction] | None = None,
              resolution: int = DEFAULT_RESOLUTION) -> Factorization:
    """Integrate Y and one particular solution per forcing (default: the system's f)."""
    if tol <= 0:
        raise ValueError("tolerance must be positive")
    N = _as_reduced(B, system)
    if grid is None:
        grid = default_grid(system, N, resolution)
    forcings = [system.f] if forcings is None else list(forcings)
    tracks, res = _integrate_columns(system, grid, tol, forcings)
    d = system.r * system.m
    fund = FundamentalMatrix(np.asarray(grid, dtype=float), tracks[..., :d], res.max_error)
    NX = np.asarray(N.apply(SampledFunction(grid, tracks)))
    M = NX[:, :d]
    s = np.linalg.svd(M, compute_uv=False)
    cm = CharacteristicMatrix(M, float(s[-1]), float(s[0]))
    return Factorization(system, N, np.asarray(grid, dtype=float), fund, cm, tracks[..., d:], NX[:, d:],
                         res.max_error, tol)


def check_condition0(system: HigherOrderSystem, B, grid: np.ndarray | None = None,
                     tol: float = DEFAULT_TOL, resolution: int = DEFAULT_RESOLUTION) -> Condition0Verdict:
    fac = factorize(system, B, grid, tol, forcings=[], resolution=resolution)
    cm = fac.characteristic
    return Condition0Verdict(not cm.degenerate, cm.sigma_min, cm.sigma_max, cm.threshold)


def solve_bvp(system: HigherOrderSystem, B, q, tol: float = DEFAULT_TOL, grid: np.ndarray | None = None,
              resolution: int = DEFAULT_RESOLUTION) -> SolveOutcome:
    """Solve L z = f, B z = q; raises DegenerateProblem if M is singular."""
    return factorize(system, B, grid, tol, resolution=resolution).solve(q)


def normalized_fundamental(Y: FundamentalMatrix, M) -> FundamentalMatrix:
    """Y M^{-1}, the fundamental matrix with [N Y] = I."""
    if isinstance(M, CharacteristicMatrix):
        if M.degenerate:
            raise DegenerateProblem(M.sigma_min, M.threshold)
        M = M.M
    Minv = np.linalg.inv(np.asarray(M))
    return FundamentalMatrix(Y.grid, Y.tracks @ Minv, Y.integration_error)


def reconstruct_A(Y: FundamentalMatrix, max_condition: float = 1e12) -> SampledFunction:
    """-Y' Y^{-1} on the grid."""
    cond = np.linalg.cond(Y.Y)
    if not np.all(cond < max_condition):
        raise NearSingularError(f"fundamental matrix is near singular (condition {cond.max():.3e})")
    A = -np.linalg.solve(np.swapaxes(Y.Y, 1, 2), np.swapaxes(Y.Yprime, 1, 2))
    A = np.swapaxes(A, 1, 2)
    return SampledFunction(Y.grid, A[:, None])
