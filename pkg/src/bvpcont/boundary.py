"""Boundary operators B: (C^(n+r))^m -> C^(rm).

Two numeric forms are supported:

* ``GenericBoundaryOperator``: derivative values at ``a`` weighted by matrices
  beta_1..beta_{n+r}, plus a Stieltjes integral of z^(n+r) against a matrix
  measure made of jumps and piecewise-smooth densities.
* ``PointOperator``: a finite sum of alpha * z^(l)(t) terms (a multipoint
  operator frozen at one parameter value).

``MultipointBoundaryOperator`` and ``CanonicalBoundaryFamily`` carry
eps-dependent expression data and produce the numeric forms via ``at(eps)``.

Vectors in C^(rm) are measured with the l1 norm; matrices with the entrywise
absolute sum.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import factorial
from typing import NamedTuple, Sequence

import numpy as np
from scipy.integrate import simpson

from . import expr as ex
from .function_space import (
    DEFAULT_RESOLUTION,
    Interval,
    SmoothFunction,
    ck_norm,
    expr_function,
    quadrature_panels,
)


class PointOutsideIntervalError(ValueError):
    pass


class InsufficientSmoothnessError(ValueError):
    pass


def mnorm(x) -> float:
    """Entrywise absolute sum (l1 for vectors)."""
    return float(np.abs(np.asarray(x)).sum())


def _mat_apply(mat: np.ndarray, v: np.ndarray) -> np.ndarray:
    # mat (rm, m); v (m, *batch)
    return np.tensordot(mat, v, axes=([1], [0]))


def _check_smoothness(z, needed: int):
    if getattr(z, "order", needed) < needed:
        raise InsufficientSmoothnessError(
            f"boundary operator needs {needed} derivatives, function provides {z.order}")


# ---------------------------------------------------------------------------
# Matrix measures
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class _PolyKernel:
    """alpha * (t0 - t)^p / p!, with exact derivatives."""

    t0: float
    p: int
    alpha: np.ndarray

    def __call__(self, t, j):
        t = np.asarray(t, dtype=float)
        if j > self.p:
            scalar = np.zeros_like(t)
        else:
            q = self.p - j
            scalar = (-1) ** j * (self.t0 - t) ** q / factorial(q)
        return scalar[:, None, None] * self.alpha[None]


@dataclass(frozen=True)
class DensityPiece:
    """Density phi on [lo, hi] (zero elsewhere)."""

    lo: float
    hi: float
    fn: SmoothFunction


@dataclass(frozen=True)
class MatrixMeasure:
    """dPhi = sum_i J_i delta_{t_i} + sum_pieces phi(t) dt on [a, b].

    Phi(a) = 0 and Phi(t) = sum_{t_i <= t} J_i + int_a^t phi for t > a; a jump
    declared at ``a`` itself acts on z^(n+r)(a).
    """

    interval: Interval
    rows: int
    cols: int
    jumps: tuple = ()
    pieces: tuple = ()
    resolution: int = DEFAULT_RESOLUTION

    def __post_init__(self):
        for t, J in self.jumps:
            if not self.interval.contains(t):
                raise PointOutsideIntervalError(f"jump point {t} outside interval")
            if np.shape(J) != (self.rows, self.cols):
                raise ValueError(f"jump matrix has shape {np.shape(J)}, expected {(self.rows, self.cols)}")
        for p in self.pieces:
            if not (self.interval.contains(p.lo) and self.interval.contains(p.hi) and p.lo <= p.hi):
                raise PointOutsideIntervalError(f"density support [{p.lo}, {p.hi}] invalid")
            if tuple(p.fn.shape) != (self.rows, self.cols):
                raise ValueError("density shape mismatch")

    @classmethod
    def zero(cls, interval: Interval, rows: int, cols: int, resolution: int = DEFAULT_RESOLUTION):
        return cls(interval, rows, cols, (), (), resolution)

    def special_points(self) -> list[float]:
        pts = [t for t, _ in self.jumps]
        for p in self.pieces:
            pts += [p.lo, p.hi]
        return pts

    def __sub__(self, other: "MatrixMeasure") -> "MatrixMeasure":
        jumps = tuple(self.jumps) + tuple((t, -np.asarray(J)) for t, J in other.jumps)
        pieces = tuple(self.pieces) + tuple(
            DensityPiece(p.lo, p.hi, p.fn.scaled(-1.0)) for p in other.pieces)
        return MatrixMeasure(self.interval, self.rows, self.cols, jumps, pieces, self.resolution)

    def merged_jumps(self) -> list[tuple[float, np.ndarray]]:
        out: dict[float, np.ndarray] = {}
        for t, J in sorted(self.jumps, key=lambda tj: tj[0]):
            key = next((k for k in out if abs(k - t) <= 1e-13 * max(1.0, abs(t))), t)
            out[key] = out.get(key, 0) + np.asarray(J)
        return list(out.items())

    def _segments(self):
        """Yield (nodes, summed density values) over maximal smooth segments."""
        a, b = self.interval.a, self.interval.b
        cuts = sorted({a, b, *[p.lo for p in self.pieces], *[p.hi for p in self.pieces]})
        for u, v in zip(cuts[:-1], cuts[1:]):
            if v <= u:
                continue
            active = [p for p in self.pieces if p.lo <= u and v <= p.hi]
            if not active:
                continue
            nodes = np.linspace(u, v, quadrature_panels(v - u, self.interval, self.resolution) + 1)
            vals = sum(p.fn.derivs(nodes, 0) for p in active)
            yield nodes, vals

    def total_variation(self) -> float:
        tv = sum(mnorm(J) for _, J in self.merged_jumps())
        for nodes, vals in self._segments():
            tv += float(simpson(np.abs(vals).reshape(len(nodes), -1).sum(axis=1), x=nodes))
        return float(tv)

    def value_at_end(self) -> np.ndarray:
        """Phi(b)."""
        out = np.zeros((self.rows, self.cols))
        for _, J in self.jumps:
            out = out + np.asarray(J)
        for nodes, vals in self._segments():
            out = out + simpson(vals, x=nodes, axis=0)
        return out

    def running_integral(self, t: float) -> np.ndarray:
        """int_a^t Phi(s) ds."""
        out = np.zeros((self.rows, self.cols))
        for ti, J in self.jumps:
            if t > ti:
                out = out + (t - ti) * np.asarray(J)
        for p in self.pieces:
            hi = min(p.hi, t)
            if hi <= p.lo:
                continue
            nodes = np.linspace(p.lo, hi, quadrature_panels(hi - p.lo, self.interval, self.resolution) + 1)
            vals = p.fn.derivs(nodes, 0) * (t - nodes)[:, None, None]
            out = out + simpson(vals, x=nodes, axis=0)
        return out

    def integrate(self, z, order: int) -> np.ndarray:
        """int_a^b dPhi(t) z^(order)(t); z may carry trailing batch axes."""
        total = 0
        for t, J in self.jumps:
            total = total + _mat_apply(np.asarray(J), z.derivs([t], order)[0])
        for p in self.pieces:
            if p.hi <= p.lo:
                continue
            nodes = z.quadrature_nodes(p.lo, p.hi, self.interval, self.resolution)
            phi = p.fn.derivs(nodes, 0)
            w = z.derivs(nodes, order)
            integrand = np.einsum("kij,kj...->ki...", phi, w)
            total = total + simpson(integrand, x=nodes, axis=0)
        return total


def variation_distance(phi1: MatrixMeasure, phi2: MatrixMeasure) -> float:
    """Total variation of Phi1 - Phi2."""
    if (phi1.rows, phi1.cols) != (phi2.rows, phi2.cols):
        raise ValueError("measures have different shapes")
    return (phi1 - phi2).total_variation()


# ---------------------------------------------------------------------------
# Numeric operators
# ---------------------------------------------------------------------------


class NormBounds(NamedTuple):
    upper: float
    lower: float


def probe_dictionary(interval: Interval, order: int, m: int, extra_degree: int = 2) -> list[SmoothFunction]:
    """Monomials 1, t, ..., t^(order+extra_degree) and sin t, cos t in every component slot."""
    scalars = ["1"] + [f"t^{k}" for k in range(1, order + extra_degree + 1)] + ["sin(t)", "cos(t)"]
    probes = []
    for c in range(m):
        for s in scalars:
            entries = ["0"] * m
            entries[c] = s
            probes.append(expr_function(entries, (m,), order=order + extra_degree + 2, interval=interval))
    return probes


class _OperatorBase:
    interval: Interval
    n: int
    r: int
    m: int

    @property
    def rows(self) -> int:
        return self.r * self.m

    @property
    def top_order(self) -> int:
        return self.n + self.r

    def lower_norm_bound(self, resolution: int = DEFAULT_RESOLUTION) -> float:
        best = 0.0
        for z in probe_dictionary(self.interval, self.top_order, self.m):
            nz = ck_norm(z, self.top_order, self.interval, resolution)
            best = max(best, mnorm(self.apply(z)) / nz)
        return best


@dataclass(frozen=True)
class GenericBoundaryOperator(_OperatorBase):
    interval: Interval
    n: int
    r: int
    m: int
    betas: np.ndarray  # (n + r, rm, m); betas[k] multiplies z^(k)(a)
    measure: MatrixMeasure

    def __post_init__(self):
        betas = np.asarray(self.betas)
        if betas.shape != (self.n + self.r, self.r * self.m, self.m):
            raise ValueError(f"beta array has shape {betas.shape}, expected "
                             f"{(self.n + self.r, self.r * self.m, self.m)}")
        if (self.measure.rows, self.measure.cols) != (self.r * self.m, self.m):
            raise ValueError("measure shape mismatch")
        if not np.all(np.isfinite(betas)):
            raise ValueError("beta matrices must be finite")
        object.__setattr__(self, "betas", betas)

    def apply(self, z) -> np.ndarray:
        _check_smoothness(z, self.top_order)
        a = self.interval.a
        out = 0
        for k in range(self.top_order):
            out = out + _mat_apply(self.betas[k], z.derivs([a], k)[0])
        out = out + self.measure.integrate(z, self.top_order)
        if np.ndim(out) == 0:
            return np.zeros((self.r * self.m,) + tuple(z.shape[1:]))
        return out

    def special_points(self) -> list[float]:
        return [self.interval.a] + self.measure.special_points()

    def upper_norm_bound(self) -> float:
        return sum(mnorm(b) for b in self.betas) + self.measure.total_variation()


@dataclass(frozen=True)
class PointOperator(_OperatorBase):
    """sum over terms (t, l, alpha) of alpha z^(l)(t)."""

    interval: Interval
    n: int
    r: int
    m: int
    terms: tuple = ()

    def __post_init__(self):
        for t, l, alpha in self.terms:
            if not self.interval.contains(t):
                raise PointOutsideIntervalError(
                    f"point {t} outside [{self.interval.a}, {self.interval.b}]")
            if not 0 <= l <= self.n + self.r:
                raise ValueError(f"derivative order {l} outside 0..{self.n + self.r}")
            if np.shape(alpha) != (self.r * self.m, self.m):
                raise ValueError(f"coefficient has shape {np.shape(alpha)}")

    def apply(self, z) -> np.ndarray:
        _check_smoothness(z, max((l for _, l, _ in self.terms), default=0))
        out = 0
        for t, l, alpha in self.terms:
            out = out + _mat_apply(np.asarray(alpha), z.derivs([t], l)[0])
        if np.ndim(out) == 0:
            return np.zeros((self.r * self.m,) + tuple(z.shape[1:]))
        return out

    def special_points(self) -> list[float]:
        return [t for t, _, _ in self.terms]

    def upper_norm_bound(self) -> float:
        return sum(mnorm(alpha) for _, _, alpha in self.terms)


def apply_generic(B: GenericBoundaryOperator, z) -> np.ndarray:
    return B.apply(z)


def operator_norm_bound(B, resolution: int = DEFAULT_RESOLUTION) -> NormBounds:
    """(upper, lower) bounds on the norm of B from (C^(n+r))^m to C^(rm)."""
    return NormBounds(B.upper_norm_bound(), B.lower_norm_bound(resolution))


def canonicalize(P: PointOperator, resolution: int = DEFAULT_RESOLUTION) -> GenericBoundaryOperator:
    """Rewrite point terms in the beta + Stieltjes form.

    A term alpha z^(l)(t0) with l < n+r becomes Taylor coefficients at ``a``
    plus the kernel alpha (t0 - s)^(n+r-1-l)/(n+r-1-l)! on [a, t0]; a term with
    l = n+r becomes a jump at t0.
    """
    N = P.n + P.r
    a = P.interval.a
    betas = np.zeros((N, P.rows, P.m))
    jumps, pieces = [], []
    for t0, l, alpha in P.terms:
        alpha = np.asarray(alpha, dtype=float)
        if l == N:
            jumps.append((t0, alpha))
            continue
        for k in range(l, N):
            betas[k] += alpha * (t0 - a) ** (k - l) / factorial(k - l)
        if t0 > a:
            p = N - 1 - l
            fn = SmoothFunction((P.rows, P.m), 64, _PolyKernel(t0, p, alpha), P.interval)
            pieces.append(DensityPiece(a, t0, fn))
    measure = MatrixMeasure(P.interval, P.rows, P.m, tuple(jumps), tuple(pieces), resolution)
    return GenericBoundaryOperator(P.interval, P.n, P.r, P.m, betas, measure)


# ---------------------------------------------------------------------------
# eps-dependent operator data
# ---------------------------------------------------------------------------


def _eval_scalar(e: ex.Expr, eps: float, what: str) -> float:
    if "t" in ex.free_variables(e):
        raise ValueError(f"{what} {ex.to_string(e)!r} must depend on eps only")
    return ex.evaluate(e, 0.0, eps)


def _eval_matrix(mat: tuple, eps: float, what: str = "coefficient") -> np.ndarray:
    return np.array([[_eval_scalar(e, eps, what) for e in row] for row in mat], dtype=float)


def _expr_matrix(rows) -> tuple:
    return tuple(tuple(ex.as_expr(e) for e in row) for row in rows)


@dataclass(frozen=True)
class MultipointTerm:
    """One point t_{j,k}(eps) with coefficient matrices alpha^{(l)}(eps) keyed by l."""

    point: ex.Expr
    coeffs: tuple  # ((l, matrix-of-Expr), ...)

    @classmethod
    def build(cls, point, coeffs: dict) -> "MultipointTerm":
        return cls(ex.as_expr(point), tuple(sorted((int(l), _expr_matrix(mat)) for l, mat in coeffs.items())))

    def point_at(self, eps: float) -> float:
        return _eval_scalar(self.point, eps, "point")

    def coeffs_at(self, eps: float) -> dict[int, np.ndarray]:
        return {l: _eval_matrix(mat, eps) for l, mat in self.coeffs}


@dataclass(frozen=True)
class MultipointBoundaryOperator:
    """sum_{j=0}^{p} sum_k sum_l alpha_{j,k}^{(l)}(eps) z^(l)(t_{j,k}(eps)).

    ``groups[0]`` holds the points without a limit; ``groups[j]`` for j >= 1
    converge to ``limits[j-1]``, a MultipointTerm with constant data giving
    t_j and alpha_j^{(l)} of the limiting operator B(0).
    """

    interval: Interval
    n: int
    r: int
    m: int
    groups: tuple  # tuple of tuples of MultipointTerm; index 0 is the free group
    limits: tuple | None = None

    def __post_init__(self):
        if self.limits is not None and len(self.limits) != len(self.groups) - 1:
            raise ValueError("one limit term is required per converging group")

    @property
    def p(self) -> int:
        return len(self.groups) - 1

    def terms_at(self, eps: float) -> list[tuple[int, float, dict]]:
        out = []
        for j, group in enumerate(self.groups):
            for term in group:
                out.append((j, term.point_at(eps), term.coeffs_at(eps)))
        return out

    def at(self, eps: float) -> PointOperator:
        if eps == 0 and self.limits is not None:
            return self.limit_operator()
        terms = []
        for _, t, coeffs in self.terms_at(eps):
            terms += [(t, l, alpha) for l, alpha in coeffs.items()]
        return PointOperator(self.interval, self.n, self.r, self.m, tuple(terms))

    def limit_operator(self) -> PointOperator:
        terms = []
        for term in self.limits:
            t = term.point_at(0.0)
            terms += [(t, l, alpha) for l, alpha in term.coeffs_at(0.0).items()]
        return PointOperator(self.interval, self.n, self.r, self.m, tuple(terms))


def apply_multipoint(B: MultipointBoundaryOperator, z, eps: float) -> np.ndarray:
    return B.at(eps).apply(z)


def canonicalize_multipoint(B: MultipointBoundaryOperator, eps: float,
                            resolution: int = DEFAULT_RESOLUTION) -> GenericBoundaryOperator:
    return canonicalize(B.at(eps), resolution)


@dataclass(frozen=True)
class CanonicalSpec:
    """Expression data for one canonical operator: betas, jumps, densities."""

    betas: tuple  # n+r matrices of Expr
    jumps: tuple = ()  # ((point Expr, matrix), ...)
    densities: tuple = ()  # ((lo Expr, hi Expr, matrix of Expr in t, eps), ...)


@dataclass(frozen=True)
class CanonicalBoundaryFamily:
    interval: Interval
    n: int
    r: int
    m: int
    spec: CanonicalSpec
    limit: CanonicalSpec | None = None
    resolution: int = DEFAULT_RESOLUTION

    def at(self, eps: float) -> GenericBoundaryOperator:
        spec = self.limit if (eps == 0 and self.limit is not None) else self.spec
        rm = self.r * self.m
        betas = np.array([_eval_matrix(b, eps) for b in spec.betas]).reshape(self.n + self.r, rm, self.m)
        jumps = tuple((_eval_scalar(t, eps, "jump point"), _eval_matrix(J, eps)) for t, J in spec.jumps)
        pieces = []
        for lo, hi, mat in spec.densities:
            fn = expr_function(mat, (rm, self.m), eps=eps, order=4, interval=self.interval)
            pieces.append(DensityPiece(_eval_scalar(lo, eps, "support"), _eval_scalar(hi, eps, "support"), fn))
        measure = MatrixMeasure(self.interval, rm, self.m, jumps, tuple(pieces), self.resolution)
        return GenericBoundaryOperator(self.interval, self.n, self.r, self.m, betas, measure)


def canonical_form(B, eps: float | None = None, resolution: int = DEFAULT_RESOLUTION) -> GenericBoundaryOperator:
    """Canonical operator for any supported boundary object."""
    if isinstance(B, GenericBoundaryOperator):
        return B
    if isinstance(B, PointOperator):
        return canonicalize(B, resolution)
    if isinstance(B, MultipointBoundaryOperator):
        return canonicalize_multipoint(B, eps, resolution)
    if isinstance(B, CanonicalBoundaryFamily):
        return B.at(eps)
    raise TypeError(f"unsupported boundary object {type(B).__name__}")
