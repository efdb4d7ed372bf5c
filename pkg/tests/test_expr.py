import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from kahlercheck.expr import Expression, ExpressionError, compile_map, compile_matrix

U0 = np.array([0.7, -1.3])


def val(text, u=U0, **params):
    return float(Expression(text, len(u), params or None).value(np.asarray(u, float)))


@pytest.mark.parametrize("text, want", [
    ("1 + 2 * 3", 7.0),
    ("(1 + 2) * 3", 9.0),
    ("2 ^ 3 ^ 2", 512.0),
    ("-2 ^ 2", -4.0),
    ("-u1 ^ 2", -0.49),
    ("u1 / u2", 0.7 / -1.3),
    ("pi", np.pi),
    ("sqrt(4) + exp(0) + cosh(0) - sinh(0)", 4.0),
    ("sin(u1)^2 + cos(u1)^2", 1.0),
    ("2.5e-1", 0.25),
])
def test_grammar_examples(text, want):
    assert val(text) == pytest.approx(want, rel=1e-15, abs=1e-15)


def test_parameter_t_defaults_to_zero_and_can_be_set():
    assert val("t + 1") == 1.0
    assert val("t + 1", t=2.5) == 3.5


def test_evaluation_is_vectorized():
    U = np.array([[0.0, 1.0], [1.0, 2.0], [2.0, 3.0]])
    v, g = Expression("u1 * u2", 2).evaluate(U)
    np.testing.assert_array_equal(v, [0.0, 2.0, 6.0])
    np.testing.assert_array_equal(g, U[:, ::-1])


def test_constant_expression_has_zero_gradient():
    v, g = Expression("3 * pi", 2).evaluate(U0)
    assert v == pytest.approx(3 * np.pi)
    assert not np.any(g)


def test_variables_are_reported():
    assert Expression("u1 * sin(u2) + t", 2).variables() >= {"u1", "u2"}


# -- derivatives -----------------------------------------------------------------


@pytest.mark.parametrize("text, grad", [
    ("u1^3", lambda a, b: (3 * a**2, 0.0)),
    ("sin(u1) * cos(u2)", lambda a, b: (np.cos(a) * np.cos(b), -np.sin(a) * np.sin(b))),
    ("u1 / u2", lambda a, b: (1 / b, -a / b**2)),
    ("sqrt(u1^2 + u2^2)", lambda a, b: (a / np.hypot(a, b), b / np.hypot(a, b))),
    ("exp(u1 * u2)", lambda a, b: (b * np.exp(a * b), a * np.exp(a * b))),
    ("cosh(u2) - sinh(u1)", lambda a, b: (-np.cosh(a), np.sinh(b))),
])
def test_exact_derivatives(text, grad):
    _, g = Expression(text, 2).evaluate(U0)
    np.testing.assert_allclose(g, grad(*U0), rtol=1e-14, atol=1e-15)


EXPRS = ["sin(u1) * u2^2", "cosh(u1 - u2) / (2 + u1^2)", "exp(-u1^2) * cos(3 * u2)", "sqrt(1 + u1^2 * u2^2)",
         "(u1 + 2) ^ (u2 / 3)", "u2^(-2) + pi * u1"]


@given(st.sampled_from(EXPRS), st.floats(-1.5, 1.5), st.floats(0.5, 1.5))
def test_dual_derivatives_match_central_differences(text, a, b):
    e = Expression(text, 2)
    u = np.array([a, b])
    _, g = e.evaluate(u)
    h = 1e-5
    fd = [(e.value(u + h * d) - e.value(u - h * d)) / (2 * h) for d in np.eye(2)]
    np.testing.assert_allclose(g, fd, rtol=1e-6, atol=1e-6)


def test_compile_map_layout():
    f, df = compile_map(["cos(u1)", "sin(u1)", "u2"], 2)
    U = np.zeros((4, 2)) + U0
    assert f(U).shape == (4, 3)
    assert df(U).shape == (4, 2, 3)
    np.testing.assert_allclose(df(U0), [[-np.sin(0.7), np.cos(0.7), 0.0], [0.0, 0.0, 1.0]])


def test_compile_matrix_broadcasts_constants():
    J = compile_matrix([["0", "-1"], ["1", "0"]], 2)
    out = J(np.zeros((3, 2)))
    assert out.shape == (3, 2, 2)
    np.testing.assert_array_equal(out[1], [[0.0, -1.0], [1.0, 0.0]])


# -- errors ----------------------------------------------------------------------


@pytest.mark.parametrize("text, match", [
    ("u1 ** 2", "use '\\^'"),
    ("u3", "unknown variable"),
    ("x + 1", "unknown variable"),
    ("tan(u1)", "unknown function"),
    ("sin(u1, u2)", "exactly one argument"),
    ("u1 +", "syntax error"),
    ("u1 < u2", "not allowed|unsupported"),
    ("'a'", "unsupported literal"),
    ("u1[0]", "unsupported syntax"),
])
def test_rejected_expressions(text, match):
    with pytest.raises(ExpressionError, match=match):
        Expression(text, 2)


def test_error_carries_a_column():
    with pytest.raises(ExpressionError) as info:
        Expression("u1 + foo", 2)
    assert info.value.column == 6


def test_wrong_point_dimension_is_rejected():
    with pytest.raises(ExpressionError, match="coordinates"):
        Expression("u1", 2).evaluate(np.zeros(3))
