"""Parameter families of boundary-value problems and their behaviour as eps -> 0+.

A ``ProblemFamily`` holds expression data in ``t`` and ``eps``; binding a
parameter value yields a numeric system and boundary operator. The checkers
evaluate the limit conditions along the parameter schedule and return the
numeric sequences they were decided on; ``convergence_study`` solves along the
schedule, measures the error against the eps = 0 solution and the discrepancy
of that solution in each perturbed problem.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from math import comb
from typing import Sequence

import numpy as np

from . import expr as ex
from .boundary import (
    CanonicalBoundaryFamily,
    MultipointBoundaryOperator,
    canonical_form,
    mnorm,
    probe_dictionary,
    variation_distance,
)
from .function_space import (
    DEFAULT_RESOLUTION,
    Interval,
    SampledFunction,
    ck_distance,
    ck_norm,
    expr_function,
    make_grid,
)
from .reduction import HigherOrderSystem, LiftedSolution
from .solver import DEFAULT_TOL, DegenerateProblem, factorize

DEFAULT_SCHEDULE = tuple(2.0**-k for k in range(3, 13))
CONVERGENCE_TOL = 1e-3
BOUNDED_RATIO = 10.0
ZERO_FLOOR = 1e-12
KAPPA_SAFETY = 2.0
TD_MESH = 17


# ---------------------------------------------------------------------------
# decision rules
# ---------------------------------------------------------------------------


def tends_to_zero(values: Sequence[float], tol: float = CONVERGENCE_TOL) -> bool:
    """Finite-schedule reading of "-> 0".

    The last value must be at most ``tol`` and the largest of the last four
    values may not exceed the largest of the four before them. Values below
    ZERO_FLOOR count as zero.
    """
    v = np.asarray(values, dtype=float)
    if len(v) == 0 or not np.all(np.isfinite(v)):
        return False
    v = np.where(np.abs(v) <= ZERO_FLOOR, 0.0, np.abs(v))
    if v[-1] > tol:
        return False
    if len(v) < 8:
        return bool(np.all(np.diff(v[-4:]) <= 0))
    return bool(v[-4:].max() <= v[-8:-4].max())


def is_bounded(values: Sequence[float], ratio: float = BOUNDED_RATIO) -> bool:
    """O(1) along the schedule: max / median <= ratio (all-zero counts as bounded)."""
    v = np.abs(np.asarray(values, dtype=float))
    if len(v) == 0 or not np.all(np.isfinite(v)):
        return False
    med = float(np.median(v))
    if v.max() <= ZERO_FLOOR:
        return True
    return med > 0 and v.max() / med <= ratio


# ---------------------------------------------------------------------------
# families
# ---------------------------------------------------------------------------


def _expr_tuple(items) -> tuple:
    return tuple(ex.as_expr(e) for e in np.asarray(items, dtype=object).reshape(-1))


@dataclass(frozen=True)
class ProblemFamily:
    """eps-dependent data of an order-r system with m components.

    ``K[i]`` (flattened m*m expressions) multiplies z^(i). ``limit_*`` fields
    replace the corresponding data at eps = 0 when the expressions have no
    value there.
    """

    name: str
    interval: Interval
    r: int
    n: int
    m: int
    K: tuple
    f: tuple
    q: tuple
    boundary: object
    limit_K: tuple | None = None
    limit_f: tuple | None = None
    limit_q: tuple | None = None
    schedule: tuple = DEFAULT_SCHEDULE
    tol: float = DEFAULT_TOL
    resolution: int = DEFAULT_RESOLUTION
    convergence_tol: float = CONVERGENCE_TOL
    exact: tuple | None = None
    description: str = ""

    def __post_init__(self):
        m, r = self.m, self.r
        if len(self.K) != r or any(len(Ki) != m * m for Ki in self.K):
            raise ValueError(f"{self.name}: expected {r} coefficient matrices of size {m}x{m}")
        if len(self.f) != m:
            raise ValueError(f"{self.name}: right-hand side must have {m} entries")
        if len(self.q) != r * m:
            raise ValueError(f"{self.name}: boundary data must have {r * m} entries")
        if self.limit_K is not None and len(self.limit_K) != r:
            raise ValueError(f"{self.name}: limit coefficients need {r} matrices")
        if any(not (e > 0) for e in self.schedule):
            raise ValueError(f"{self.name}: schedule values must be positive")
        if (self.boundary.n, self.boundary.r, self.boundary.m) != (self.n, r, m):
            raise ValueError(f"{self.name}: boundary operator dimensions disagree with the system")

    @property
    def order(self) -> int:
        # two derivatives beyond n keep the residual checks available
        return self.n + 2

    def _pick(self, data, limit, eps):
        return limit if (eps == 0 and limit is not None) else data

    def K_at(self, eps: float) -> list:
        K = self._pick(self.K, self.limit_K, eps)
        return [expr_function(Ki, (self.m, self.m), eps, self.order, self.interval) for Ki in K]

    def f_at(self, eps: float):
        return expr_function(self._pick(self.f, self.limit_f, eps), (self.m,), eps, self.order, self.interval)

    def q_at(self, eps: float) -> np.ndarray:
        q = self._pick(self.q, self.limit_q, eps)
        return np.array([ex.evaluate(e, 0.0, eps) for e in q], dtype=float)

    def system(self, eps: float) -> HigherOrderSystem:
        return HigherOrderSystem(self.interval, self.r, self.n, self.m, tuple(self.K_at(eps)), self.f_at(eps))

    def boundary_at(self, eps: float):
        return self.boundary.at(eps)

    def exact_at(self, eps: float = 0.0):
        if self.exact is None:
            return None
        return expr_function(self.exact, (self.m,), eps, self.n + self.r + 2, self.interval)

    @property
    def is_multipoint(self) -> bool:
        return isinstance(self.boundary, MultipointBoundaryOperator)

    def master_grid(self, eps_values: Sequence[float] | None = None) -> np.ndarray:
        """One grid for the whole schedule: every special point of every B(eps)."""
        eps_values = (0.0,) + tuple(self.schedule) if eps_values is None else eps_values
        points = []
        for e in eps_values:
            points += self.boundary_at(e).special_points()
        return make_grid(self.interval, self.resolution, points)


def build_family(name: str, interval, r: int, n: int, m: int, K, f, q, boundary, **kwargs) -> ProblemFamily:
    """Convenience constructor accepting nested lists of strings."""
    interval = interval if isinstance(interval, Interval) else Interval(*interval)
    K = tuple(_expr_tuple(Ki) for Ki in K)
    lk = kwargs.pop("limit_K", None)
    lf = kwargs.pop("limit_f", None)
    lq = kwargs.pop("limit_q", None)
    exact = kwargs.pop("exact", None)
    return ProblemFamily(
        name, interval, r, n, m, K, _expr_tuple(f), _expr_tuple(q), boundary,
        limit_K=None if lk is None else tuple(_expr_tuple(Ki) for Ki in lk),
        limit_f=None if lf is None else _expr_tuple(lf),
        limit_q=None if lq is None else _expr_tuple(lq),
        exact=None if exact is None else _expr_tuple(exact),
        **kwargs,
    )


# ---------------------------------------------------------------------------
# condition checkers
# ---------------------------------------------------------------------------


@dataclass
class Check:
    name: str
    passed: bool
    values: list  # the sequence along the schedule the verdict was decided on
    witness: float  # the value the verdict hinges on (usually the last one)
    detail: dict = field(default_factory=dict)


def _seq_check(name: str, values, tol: float, detail=None) -> Check:
    values = [float(v) for v in values]
    return Check(name, tends_to_zero(values, tol), values, values[-1] if values else float("nan"), detail or {})


def _bounded_check(name: str, values, detail=None) -> Check:
    values = [float(v) for v in values]
    witness = max(values) / max(float(np.median(values)), ZERO_FLOOR) if values else float("nan")
    return Check(name, is_bounded(values), values, witness, detail or {})


def check_condition0(family: ProblemFamily, eps: float = 0.0, grid=None) -> Check:
    grid = family.master_grid((eps,)) if grid is None else grid
    fac = factorize(family.system(eps), family.boundary_at(eps), grid, family.tol, forcings=[])
    cm = fac.characteristic
    return Check("0", not cm.degenerate, [cm.sigma_min], cm.sigma_min,
                 {"sigma_max": cm.sigma_max, "threshold": cm.threshold})


def check_condition_I(family: ProblemFamily, tol: float | None = None) -> Check:
    tol = family.convergence_tol if tol is None else tol
    K0 = family.K_at(0.0)
    per_j = {i: [] for i in range(family.r)}
    for eps in family.schedule:
        for i, Ki in enumerate(family.K_at(eps)):
            per_j[i].append(ck_distance(Ki, K0[i], family.n, family.interval, family.resolution))
    values = [max(per_j[i][k] for i in per_j) for k in range(len(family.schedule))]
    return _seq_check("I", values, tol, {"per_coefficient": per_j})


def default_probes(family: ProblemFamily) -> list:
    return probe_dictionary(family.interval, family.n + family.r, family.m)


def probe_differences(family: ProblemFamily, eps: float, probes=None) -> list[float]:
    """|B(eps) z - B(0) z| / ||z||_(n+r) for every probe z."""
    probes = default_probes(family) if probes is None else probes
    B0, Be = family.boundary_at(0.0), family.boundary_at(eps)
    top = family.n + family.r
    out = []
    for z in probes:
        nz = ck_norm(z, top, family.interval, family.resolution)
        out.append(mnorm(Be.apply(z) - B0.apply(z)) / nz)
    return out


def check_condition_II_probes(family: ProblemFamily, probes=None, tol: float | None = None) -> Check:
    tol = family.convergence_tol if tol is None else tol
    probes = default_probes(family) if probes is None else probes
    table = [probe_differences(family, eps, probes) for eps in family.schedule]
    values = [max(row) for row in table]
    return _seq_check("II", values, tol, {"table": table})


def check_condition_III(family: ProblemFamily, tol: float | None = None) -> Check:
    """||f(eps) - f(0)||_(n) + |q(eps) - q(0)| along the schedule."""
    tol = family.convergence_tol if tol is None else tol
    f0, q0 = family.f_at(0.0), family.q_at(0.0)
    values = []
    for eps in family.schedule:
        df = ck_distance(family.f_at(eps), f0, family.n, family.interval, family.resolution)
        values.append(df + mnorm(family.q_at(eps) - q0))
    return _seq_check("III", values, tol)


def check_2a_2d(family: ProblemFamily, tol: float | None = None, mesh: int = TD_MESH) -> dict[str, Check]:
    """Coefficient, variation, endpoint and running-integral conditions on the canonical form."""
    tol = family.convergence_tol if tol is None else tol
    C0 = canonical_form(family.boundary, 0.0, family.resolution)
    ts = np.linspace(family.interval.a, family.interval.b, mesh)
    I0 = [C0.measure.running_integral(t) for t in ts]
    end0 = C0.measure.value_at_end()
    beta, tv, endpoint, running, vdist = [], [], [], [], []
    for eps in family.schedule:
        C = canonical_form(family.boundary, eps, family.resolution)
        beta.append([mnorm(C.betas[k] - C0.betas[k]) for k in range(len(C.betas))])
        tv.append(C.measure.total_variation())
        endpoint.append(mnorm(C.measure.value_at_end() - end0))
        running.append(max(mnorm(C.measure.running_integral(t) - I0[i]) for i, t in enumerate(ts)))
        vdist.append(variation_distance(C.measure, C0.measure))
    return {
        "2a": _seq_check("2a", [max(row) for row in beta], tol, {"per_k": beta}),
        "2b": _bounded_check("2b", tv),
        "2c": _seq_check("2c", endpoint, tol),
        "2d": _seq_check("2d", running, tol),
        "variation": _seq_check("variation", vdist, tol),
    }


def check_multipoint_d1_d5(family: ProblemFamily, tol: float | None = None) -> dict[str, Check]:
    B = family.boundary
    if not isinstance(B, MultipointBoundaryOperator) or B.limits is None:
        raise TypeError("a multipoint operator with declared limits is required")
    tol = family.convergence_tol if tol is None else tol
    top = family.n + family.r
    zero = np.zeros((family.r * family.m, family.m))
    limits = [(term.point_at(0.0), term.coeffs_at(0.0)) for term in B.limits]
    d1, d2, d3, d4, d5 = [], [], [], [], []
    for eps in family.schedule:
        v1 = v2 = v3 = v4 = v5 = 0.0
        for term in B.groups[0]:
            for alpha in term.coeffs_at(eps).values():
                v5 = max(v5, mnorm(alpha))
        for j, group in enumerate(B.groups[1:]):
            tj, alpha_j = limits[j]
            sums = {l: np.zeros_like(zero) for l in range(top + 1)}
            for term in group:
                t = term.point_at(eps)
                coeffs = term.coeffs_at(eps)
                v1 = max(v1, abs(t - tj))
                for l, alpha in coeffs.items():
                    sums[l] = sums[l] + alpha
                    if l < top:
                        v4 = max(v4, mnorm(alpha) * abs(t - tj))
                v3 = max(v3, mnorm(coeffs.get(top, zero)))
            for l in range(top + 1):
                v2 = max(v2, mnorm(sums[l] - alpha_j.get(l, zero)))
        for seq, v in zip((d1, d2, d3, d4, d5), (v1, v2, v3, v4, v5)):
            seq.append(v)
    return {
        "d1": _seq_check("d1", d1, tol),
        "d2": _seq_check("d2", d2, tol),
        "d3": _bounded_check("d3", d3),
        "d4": _seq_check("d4", d4, tol),
        "d5": _seq_check("d5", d5, tol),
    }


@dataclass
class ConditionVerdicts:
    family: str
    checks: dict  # name -> Check

    def __getitem__(self, name: str) -> Check:
        return self.checks[name]

    @property
    def main_hypotheses(self) -> bool:
        return all(self.checks[k].passed for k in ("0", "I", "II"))

    @property
    def a1_consistent(self) -> bool | None:
        """All of (d1)-(d5) implies the probe check; None when not applicable."""
        names = ("d1", "d2", "d3", "d4", "d5")
        if not all(k in self.checks for k in names):
            return None
        return (not all(self.checks[k].passed for k in names)) or self.checks["II"].passed

    def rows(self) -> list[tuple[str, bool, float]]:
        return [(c.name, c.passed, c.witness) for c in self.checks.values()]


def check_conditions(family: ProblemFamily) -> ConditionVerdicts:
    checks = {"0": check_condition0(family, 0.0, family.master_grid())}
    checks["I"] = check_condition_I(family)
    checks["II"] = check_condition_II_probes(family)
    checks["III"] = check_condition_III(family)
    checks.update(check_2a_2d(family))
    if family.is_multipoint and family.boundary.limits is not None:
        checks.update(check_multipoint_d1_d5(family))
    return ConditionVerdicts(family.name, checks)


# ---------------------------------------------------------------------------
# discrepancy, kappa and the convergence study
# ---------------------------------------------------------------------------


def discrepancy(family: ProblemFamily, eps: float, z0: LiftedSolution) -> float:
    """||L(eps) z0 - f(eps)||_(n) + |B(eps) z0 - q(eps)|."""
    n = family.n
    system = family.system(eps)
    Lz = system.apply_operator(z0, n)
    f = np.stack([system.f.derivs(z0.grid, j) for j in range(n + 1)], axis=1)
    residual = ck_norm(SampledFunction(z0.grid, Lz - f), n)
    return residual + mnorm(family.boundary_at(eps).apply(z0) - family.q_at(eps))


def forward_bound(family: ProblemFamily) -> float:
    """Upper bound on ||(L(eps), B(eps))|| over the schedule and eps = 0.

    ||L z||_(n) <= (1 + C(n, n//2) sum_i ||K_i||_(n)) ||z||_(n+r); the
    binomial factor bounds the Leibniz coefficients.
    """
    n = family.n
    eps_values = (0.0,) + tuple(family.schedule)
    K_norms = np.zeros(family.r)
    B_norm = 0.0
    for eps in eps_values:
        for i, Ki in enumerate(family.K_at(eps)):
            K_norms[i] = max(K_norms[i], ck_norm(Ki, n, family.interval, family.resolution))
        B_norm = max(B_norm, family.boundary_at(eps).upper_norm_bound())
    return 1.0 + comb(n, n // 2) * float(K_norms.sum()) + B_norm


def _kappa_probes(family: ProblemFamily) -> list:
    return probe_dictionary(family.interval, family.n, family.m)


@dataclass
class PointResult:
    eps: float
    solution: LiftedSolution | None
    sigma_min: float
    degenerate: bool
    probe_ratio: float  # max over probes of ||(L, B)^{-1}(f, q)||_(n+r) / ||(f, q)||
    ode_residual: float = float("nan")
    boundary_residual: float = float("nan")


def solve_point(family: ProblemFamily, eps: float, grid: np.ndarray, with_probes: bool = True) -> PointResult:
    """Solve the eps-instance; optionally push the kappa probes through the same factorization."""
    system = family.system(eps)
    probes = _kappa_probes(family) if with_probes else []
    fac = factorize(system, family.boundary_at(eps), grid, family.tol, forcings=[system.f] + probes)
    cm = fac.characteristic
    if cm.degenerate:
        return PointResult(eps, None, cm.sigma_min, True, float("nan"))
    out = fac.solve(family.q_at(eps), 0)
    top = family.n + family.r
    ratio = 0.0
    if with_probes:
        rm = family.r * family.m
        for i in range(rm):
            z = fac.solve(np.eye(rm)[i], None).solution
            ratio = max(ratio, ck_norm(z, top))
        for k, g in enumerate(probes, start=1):
            z = fac.solve(np.zeros(rm), k).solution
            ratio = max(ratio, ck_norm(z, top) / ck_norm(g, family.n, family.interval, family.resolution))
    return PointResult(eps, out.solution, cm.sigma_min, False, ratio, out.ode_residual, out.boundary_residual)


def _solve_point_star(args):
    return solve_point(*args)


def _solve_all(family: ProblemFamily, eps_values, grid, with_probes: bool, jobs: int) -> list[PointResult]:
    tasks = [(family, e, grid, with_probes) for e in eps_values]
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(_solve_point_star, tasks))
    return [solve_point(*t) for t in tasks]


@dataclass
class KappaEstimate:
    kappa1: float
    kappa2: float
    forward_bound: float
    probe_max: float


def estimate_kappa(family: ProblemFamily, grid=None, jobs: int = 1, points: list | None = None) -> KappaEstimate:
    """kappa1 from the forward bound, kappa2 = safety factor * probe maximum."""
    if points is None:
        grid = family.master_grid() if grid is None else grid
        points = _solve_all(family, (0.0,) + tuple(family.schedule), grid, True, jobs)
    bad = [p for p in points if p.degenerate]
    if bad:
        raise DegenerateProblem(bad[0].sigma_min, 0.0)
    probe_max = max(p.probe_ratio for p in points)
    fb = forward_bound(family)
    return KappaEstimate(1.0 / fb, KAPPA_SAFETY * probe_max, fb, probe_max)


@dataclass
class ConvergenceRow:
    eps: float
    err: float
    d_n: float
    ratio: float  # nan when d_n == 0
    within_bounds: bool | None  # None when err is at solver-noise level
    sigma_min: float


@dataclass
class ConvergenceReport:
    family: str
    rows: list
    kappa: KappaEstimate | None
    verdict: str  # "continuous", "not-continuous" or "degenerate"
    slope: float
    grid_points: int
    tol: float
    degenerate_eps: list = field(default_factory=list)
    conditions: ConditionVerdicts | None = None

    @property
    def errors(self) -> list[float]:
        return [row.err for row in self.rows]

    @property
    def consistent(self) -> bool | None:
        """Study verdict agrees with Condition (0) and checkers (I), (II)."""
        if self.conditions is None:
            return None
        return (self.verdict == "continuous") == self.conditions.main_hypotheses


def loglog_slope(eps: Sequence[float], err: Sequence[float], floor: float = 0.0) -> float:
    e, v = np.asarray(eps, dtype=float), np.asarray(err, dtype=float)
    keep = v > floor
    if keep.sum() < 2:
        return float("nan")
    return float(np.polyfit(np.log(e[keep]), np.log(v[keep]), 1)[0])


def convergence_study(family: ProblemFamily, jobs: int = 1, with_kappa: bool = True,
                      with_conditions: bool = True) -> ConvergenceReport:
    grid = family.master_grid()
    eps_values = (0.0,) + tuple(family.schedule)
    conditions = check_conditions(family) if with_conditions else None
    points = _solve_all(family, eps_values, grid, with_kappa, jobs)
    base = points[0]
    if base.degenerate:
        return ConvergenceReport(family.name, [], None, "degenerate", float("nan"), len(grid), family.tol,
                                 [0.0], conditions)
    z0 = base.solution
    top = family.n + family.r
    kappa = None
    solved = [p for p in points[1:] if not p.degenerate]
    if with_kappa and len(solved) == len(points) - 1:
        kappa = estimate_kappa(family, points=points)
    rows = []
    for p in points[1:]:
        if p.degenerate:
            rows.append(ConvergenceRow(p.eps, float("nan"), float("nan"), float("nan"), None, p.sigma_min))
            continue
        err = ck_distance(z0, p.solution, top)
        d = discrepancy(family, p.eps, z0)
        ratio = err / d if d > 0 else float("nan")
        within = None
        if kappa is not None and err > 100 * family.tol:
            within = bool(kappa.kappa1 * d <= err <= kappa.kappa2 * d)
        rows.append(ConvergenceRow(p.eps, err, d, ratio, within, p.sigma_min))
    degenerate_eps = [p.eps for p in points[1:] if p.degenerate]
    errs = [row.err for row in rows]
    continuous = not degenerate_eps and tends_to_zero(errs, family.convergence_tol)
    slope = loglog_slope([row.eps for row in rows], errs, 100 * family.tol) if not degenerate_eps else float("nan")
    return ConvergenceReport(family.name, rows, kappa, "continuous" if continuous else "not-continuous", slope,
                             len(grid), family.tol, degenerate_eps, conditions)
