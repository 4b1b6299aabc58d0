import numpy as np
import pytest

from bvpcont.function_space import Interval, constant_function, expr_function, make_grid
from bvpcont.integrator import integrate_linear

UNIT = Interval(0.0, 1.0)


def test_scalar_growth():
    A = constant_function(np.array([[-1.0]]))
    res = integrate_linear(A, make_grid(UNIT, 64), np.eye(1))
    assert res.values[-1, 0, 0] == pytest.approx(np.e, rel=1e-10)


def test_zero_coefficient_keeps_identity():
    A = constant_function(np.zeros((3, 3)))
    res = integrate_linear(A, make_grid(UNIT, 8), np.eye(3))
    np.testing.assert_array_equal(res.values[-1], np.eye(3))


def test_rotation_quarter_turn():
    # Y' = -A Y with A = [[0, -1], [1, 0]] rotates by t
    A = constant_function(np.array([[0.0, -1.0], [1.0, 0.0]]))
    grid = make_grid(Interval(0.0, np.pi / 2), 64)
    res = integrate_linear(A, grid, np.eye(2))
    np.testing.assert_allclose(res.values[-1], [[0.0, 1.0], [-1.0, 0.0]], atol=1e-10)


@pytest.mark.parametrize("g, exact", [("1", lambda t: t), ("t", lambda t: t**2 / 2), ("exp(t)", lambda t: np.exp(t) - 1)])
def test_forced_solutions(g, exact):
    A = constant_function(np.zeros((1, 1)))
    grid = make_grid(UNIT, 32)
    res = integrate_linear(A, grid, np.zeros((1, 1)), forcing=expr_function([g], (1,)))
    np.testing.assert_allclose(res.values[:, 0, 0], exact(grid), atol=1e-10)


def test_refinement_reaches_tolerance_on_coarse_grid():
    A = expr_function([["-20*cos(20*t)"]], (1, 1))
    grid = make_grid(UNIT, 4)
    res = integrate_linear(A, grid, np.eye(1), tol=1e-10)
    assert res.subdivided_panels > 0
    assert res.values[-1, 0, 0] == pytest.approx(np.exp(np.sin(20.0)), rel=1e-8)


def test_rejects_nonpositive_tolerance():
    with pytest.raises(ValueError):
        integrate_linear(constant_function(np.zeros((1, 1))), make_grid(UNIT, 2), np.eye(1), tol=0.0)
