"""Randomized invariants. Every suite runs at least 100 derandomized cases."""

import mpmath
import numpy as np
from hypothesis import HealthCheck, assume, given, settings
from hypothesis import strategies as st

from bvpcont import expr as ex
from bvpcont.boundary import (
    DensityPiece,
    GenericBoundaryOperator,
    MatrixMeasure,
    MultipointBoundaryOperator,
    MultipointTerm,
    apply_generic,
    apply_multipoint,
    canonicalize_multipoint,
)
from bvpcont.expr import BinOp, Func, Neg, Num, Pow, Var
from bvpcont.function_space import Interval, ck_distance, ck_norm, expr_function
from bvpcont.reduction import HigherOrderSystem
from bvpcont.solver import DegenerateProblem, factorize

UNIT = Interval(0.0, 1.0)
EPS_VALUE = 0.7

PROPS = settings(max_examples=100, derandomize=True, deadline=None,
                 suppress_health_check=[HealthCheck.too_slow])

# expression trees --------------------------------------------------------------

literals = st.sampled_from([0.5, 1.0, 2.0, 3.0, 0.25, 1.5, 0.1, 7.0])
leaves = st.one_of(literals.map(Num), st.sampled_from([Var("t"), Var("eps")]))


def _grow(children):
    return st.one_of(
        st.tuples(st.sampled_from("+-*"), children, children).map(lambda a: BinOp(*a)),
        # quotient rule, with a denominator bounded away from zero
        st.tuples(children, children).map(lambda a: BinOp("/", a[0], BinOp("+", Num(2.0), Func("cos", a[1])))),
        st.tuples(children, st.integers(1, 3)).map(lambda a: Pow(*a)),
        st.tuples(st.sampled_from(["sin", "cos"]), children).map(lambda a: Func(*a)),
        children.map(lambda a: Func("exp", Func("sin", a))),
        children.map(Neg),
    )


smooth_trees = st.recursive(leaves, _grow, max_leaves=8)


def _mp_eval(e, t):
    if isinstance(e, Num):
        return mpmath.mpf(e.value)
    if isinstance(e, Var):
        return t if e.name == "t" else mpmath.mpf(EPS_VALUE)
    if isinstance(e, Neg):
        return -_mp_eval(e.arg, t)
    if isinstance(e, Pow):
        return _mp_eval(e.base, t) ** e.exponent
    if isinstance(e, Func):
        return getattr(mpmath, e.name)(_mp_eval(e.arg, t))
    a, b = _mp_eval(e.left, t), _mp_eval(e.right, t)
    return {"+": a + b, "-": a - b, "*": a * b, "/": a / b}[e.op]


def _central_differences(e, t, h):
    """Lowest-order central differences of orders 1..4 from a five-point stencil."""
    f = [_mp_eval(e, t + k * h) for k in range(-2, 3)]
    return [
        (f[3] - f[1]) / (2 * h),
        (f[3] - 2 * f[2] + f[1]) / h**2,
        (f[4] - 2 * f[3] + 2 * f[1] - f[0]) / (2 * h**3),
        (f[4] - 4 * f[3] + 6 * f[2] - 4 * f[1] + f[0]) / h**4,
    ]


@PROPS
@given(smooth_trees)
def test_symbolic_derivatives_match_finite_differences(e):
    ts = np.random.default_rng(0).uniform(-1, 1, 100)
    derivs = [e]
    for _ in range(4):
        derivs.append(ex.differentiate(derivs[-1], "t"))
    sym = np.array([np.broadcast_to(ex.evaluate(d, ts, EPS_VALUE), ts.shape) for d in derivs[1:]])
    with mpmath.workdps(40):
        h = mpmath.mpf("1e-8")
        for i, t in enumerate(ts):
            fd = [float(v) for v in _central_differences(e, mpmath.mpf(float(t)), h)]
            for j in range(4):
                assert abs(sym[j, i] - fd[j]) <= 1e-5 * max(1.0, abs(fd[j])), (ex.to_string(e), j + 1, t)


# parse/print round trip: trees as the parser builds them (literals are nonnegative)
any_trees = st.recursive(
    st.one_of(st.floats(0, 1e6, allow_nan=False).map(Num), st.sampled_from([Var("t"), Var("eps")])),
    lambda c: st.one_of(
        st.tuples(st.sampled_from("+-*/"), c, c).map(lambda a: BinOp(*a)),
        st.tuples(c, st.integers(-4, 4)).map(lambda a: Pow(*a)),
        st.tuples(st.sampled_from(ex.FUNCTIONS), c).map(lambda a: Func(*a)),
        c.map(Neg),
    ),
    max_leaves=12,
)


def _depth(e):
    if isinstance(e, (Num, Var)):
        return 0
    if isinstance(e, BinOp):
        return 1 + max(_depth(e.left), _depth(e.right))
    return 1 + _depth(e.base if isinstance(e, Pow) else e.arg)


@settings(max_examples=1000, derandomize=True, deadline=None)
@given(any_trees)
def test_parse_print_round_trip(e):
    assume(_depth(e) <= 6)
    assert ex.parse(ex.to_string(e)) == e


# norms -------------------------------------------------------------------------

coef = st.floats(-3, 3, allow_nan=False)
func_sources = st.tuples(coef, coef, coef, st.floats(0.5, 6)).map(
    lambda c: f"{c[0]!r}*t^2 + {c[1]!r}*sin({c[3]!r}*t) + {c[2]!r}")
funcs = func_sources.map(lambda src: expr_function([src], (1,)))


def scaled_sum(c1, src1, c2=0.0, src2="0"):
    return expr_function([f"({c1!r})*({src1}) + ({c2!r})*({src2})"], (1,))


@PROPS
@given(funcs, funcs, funcs, st.integers(0, 3))
def test_triangle_inequality(x, y, z, l):
    xz = ck_distance(x, z, l, UNIT, 256)
    assert xz <= ck_distance(x, y, l, UNIT, 256) + ck_distance(y, z, l, UNIT, 256) + 1e-12 * (1 + xz)


@PROPS
@given(func_sources, st.floats(-50, 50, allow_nan=False), st.integers(0, 3))
def test_norm_homogeneity(src, c, l):
    x, cx = scaled_sum(1.0, src), scaled_sum(c, src)
    base = ck_norm(x, l, UNIT, 256)
    assert abs(ck_norm(cx, l, UNIT, 256) - abs(c) * base) <= 1e-12 * abs(c) * base + 1e-300


@PROPS
@given(funcs, st.integers(0, 3), st.integers(2, 400))
def test_grid_refinement_never_decreases_norm(x, l, N):
    assert ck_norm(x, l, UNIT, 2 * N) >= ck_norm(x, l, UNIT, N)


# boundary operators --------------------------------------------------------------

points = st.floats(0.0, 1.0)
small = st.floats(-2, 2, allow_nan=False)


@st.composite
def generic_operators(draw):
    n, r = draw(st.integers(0, 1)), draw(st.integers(1, 2))
    betas = np.array(draw(st.lists(small, min_size=(n + r) * r, max_size=(n + r) * r))).reshape(n + r, r, 1)
    jumps = tuple((draw(points), np.array(draw(st.lists(small, min_size=r, max_size=r))).reshape(r, 1))
                  for _ in range(draw(st.integers(0, 2))))
    pieces = []
    for _ in range(draw(st.integers(0, 2))):
        lo, hi = sorted((draw(points), draw(points)))
        assume(hi - lo > 1e-3)
        rows = [[f"{draw(small)!r} + {draw(small)!r}*cos({draw(st.integers(1, 9))}*t)"] for _ in range(r)]
        pieces.append(DensityPiece(lo, hi, expr_function(rows, (r, 1), interval=UNIT)))
    return GenericBoundaryOperator(UNIT, n, r, 1, betas, MatrixMeasure(UNIT, r, 1, jumps, tuple(pieces)))


poly_sources = st.lists(small, min_size=6, max_size=6).map(
    lambda c: " + ".join(f"({a!r})*t^{k}" for k, a in enumerate(c)))
polys = poly_sources.map(lambda src: expr_function([src], (1,)))


@PROPS
@given(generic_operators(), poly_sources, poly_sources, small, small)
def test_generic_operator_is_linear(B, src1, src2, c1, c2):
    z1, z2 = scaled_sum(1.0, src1), scaled_sum(1.0, src2)
    combo = scaled_sum(c1, src1, c2, src2)
    lhs = apply_generic(B, combo)
    rhs = c1 * apply_generic(B, z1) + c2 * apply_generic(B, z2)
    np.testing.assert_allclose(lhs, rhs, atol=1e-10 * (1 + np.abs(rhs).max()))


@st.composite
def multipoint_operators(draw):
    n, r = draw(st.integers(0, 1)), draw(st.integers(1, 2))
    top = n + r
    groups = [()]
    for _ in range(draw(st.integers(1, 3))):
        terms = []
        for _ in range(draw(st.integers(1, 2))):
            coeffs = {l: [[repr(draw(small))] for _ in range(r)] for l in draw(st.sets(st.integers(0, top), min_size=1))}
            terms.append(MultipointTerm.build(repr(draw(points)), coeffs))
        groups.append(tuple(terms))
    return MultipointBoundaryOperator(UNIT, n, r, 1, tuple(groups))


@PROPS
@given(multipoint_operators(), polys)
def test_canonical_form_agrees_with_point_evaluation(B, z):
    direct = apply_multipoint(B, z, 0.0)
    canon = canonicalize_multipoint(B, 0.0).apply(z)
    np.testing.assert_allclose(canon, direct, atol=1e-8)


# solves --------------------------------------------------------------------------

@st.composite
def instances(draw):
    r = draw(st.integers(1, 2))
    K = tuple(expr_function([[f"{draw(small)!r} + {draw(small)!r}*t"]], (1, 1)) for _ in range(r))
    t1 = draw(points)
    groups = [(), (MultipointTerm.build("0", {0: [["1"]] + [["0"]] * (r - 1)}),)]
    if r == 2:
        groups.append((MultipointTerm.build(repr(t1), {draw(st.integers(0, 1)): [["0"], ["1"]]}),))
    B = MultipointBoundaryOperator(UNIT, 0, r, 1, tuple(groups)).at(0.0)
    system = HigherOrderSystem(UNIT, r, 0, 1, K, expr_function(["0"], (1,)))
    return system, B


rhs = st.tuples(small, small, st.floats(0.5, 5)).map(lambda c: f"{c[0]!r}*cos({c[2]!r}*t) + {c[1]!r}")


@PROPS
@given(instances(), rhs, rhs, st.lists(small, min_size=4, max_size=4), small, small)
def test_solve_is_linear(inst, src1, src2, qs, c1, c2):
    system, B = inst
    r = system.r
    q1, q2 = np.array(qs[:r]), np.array(qs[2:2 + r])
    f1, f2, f3 = scaled_sum(1.0, src1), scaled_sum(1.0, src2), scaled_sum(c1, src1, c2, src2)
    grid = np.linspace(0.0, 1.0, 257)
    grid = np.union1d(grid, B.special_points())
    sols = []
    try:
        for f, q in ((f1, q1), (f2, q2), (f3, c1 * q1 + c2 * q2)):
            sols.append(factorize(system.with_rhs(f), B, grid).solve(q).solution)
    except DegenerateProblem:
        assume(False)
    combo = c1 * sols[0].values + c2 * sols[1].values
    assert np.abs(sols[2].values - combo).max() <= 1e-8 * (1 + np.abs(combo).max())
