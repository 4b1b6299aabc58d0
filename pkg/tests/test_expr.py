import math

import numpy as np
import pytest

from bvpcont import expr as ex
from bvpcont.expr import BinOp, Func, Num, Pow, Var


def test_parse_variable():
    assert ex.parse("t") == Var("t")


def test_parse_function_of_quotient():
    assert ex.parse("sin(t/eps)") == Func("sin", BinOp("/", Var("t"), Var("eps")))


def test_parse_precedence_and_value():
    e = ex.parse("2*t^2 + 1")
    assert e == BinOp("+", BinOp("*", Num(2.0), Pow(Var("t"), 2)), Num(1.0))
    assert ex.evaluate(e, 3.0) == 19.0


@pytest.mark.parametrize("source, value", [
    ("-t^2", -4.0),  # ^ binds tighter than unary minus
    ("2^3^1", 8.0),
    ("1 - 2 - 3", -4.0),
    ("8 / 2 / 2", 2.0),
    ("-(t + 1)*3", -9.0),
    ("t^(-1)", 0.5),
])
def test_precedence_table(source, value):
    assert ex.evaluate(ex.parse(source), 2.0) == pytest.approx(value)


@pytest.mark.parametrize("source", ["", "   ", "t +", "sin t", "(t", "t)", "2 ** 3", "t^t", "t^1.5", "3 $ 4"])
def test_syntax_errors(source):
    with pytest.raises(ex.ExprSyntaxError):
        ex.parse(source)


def test_syntax_error_reports_position():
    with pytest.raises(ex.ExprSyntaxError) as info:
        ex.parse("t + $")
    assert info.value.position == 4


@pytest.mark.parametrize("source", ["x", "tan(t)", "log(t)", "pi"])
def test_unknown_identifiers(source):
    with pytest.raises(ex.UnknownIdentifierError):
        ex.parse(source)


def test_power_rule():
    d = ex.differentiate(ex.parse("t^2"), "t")
    assert ex.to_string(d) == "2.0 * t"


def test_chain_rule_for_oscillation():
    d = ex.differentiate(ex.parse("sin(t/eps)"), "t")
    assert d == ex.parse("cos(t/eps) * (1/eps)")


def test_second_derivative_of_exponential():
    d2 = ex.nth_derivative(ex.parse("exp(2*t)"), 2)
    assert ex.evaluate(d2, 0.0) == pytest.approx(4.0, rel=1e-15)


def test_derivative_in_eps():
    d = ex.differentiate(ex.parse("eps*t^2 + sin(eps)"), "eps")
    assert ex.evaluate(d, 2.0, 0.0) == pytest.approx(5.0)


def test_evaluate_examples():
    assert ex.evaluate(ex.parse("t"), 0.5) == 0.5
    assert ex.evaluate(ex.parse("sin(t/eps)"), math.pi, 1.0) == pytest.approx(1.2246e-16, abs=1e-19)


def test_evaluate_vectorised():
    t = np.linspace(0, 1, 5)
    np.testing.assert_allclose(ex.evaluate(ex.parse("t^2 + eps"), t, 1.0), t**2 + 1)
    assert ex.evaluate(ex.parse("3"), t).shape == (5,)


@pytest.mark.parametrize("source, t, eps", [("1/t", 0.0, 0.0), ("t^(-2)", 0.0, 0.0), ("t/eps", 1.0, 0.0)])
def test_domain_errors(source, t, eps):
    with pytest.raises(ex.DomainError):
        ex.evaluate(ex.parse(source), t, eps)


def test_free_variables():
    assert ex.free_variables(ex.parse("sin(t/eps) + 1")) == {"t", "eps"}
    assert ex.free_variables(ex.parse("2*3")) == frozenset()


def test_roundtrip_examples():
    for source in ["-t^2", "(-t)^2", "t - (1 - t)", "t / (2 * eps)", "-(-t)", "exp(-t^2/2)", "t^(-3)"]:
        e = ex.parse(source)
        assert ex.parse(ex.to_string(e)) == e


def test_constant_folding_in_derivatives():
    assert ex.differentiate(ex.parse("3*t + 2"), "t") == Num(3.0)
    assert ex.differentiate(ex.parse("eps"), "t") == Num(0.0)
