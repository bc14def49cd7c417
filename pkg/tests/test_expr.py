import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hausreg.errors import ConfigError
from hausreg.expr import Expression, point_env, tokenize


def test_precedence_and_associativity():
    assert float(Expression("1 + 2 * 3")()) == 7
    assert float(Expression("2 ^ 3 ^ 2")()) == 512
    assert float(Expression("-2 ^ 2")()) == -4
    assert float(Expression("2 ^ -1")()) == 0.5
    assert float(Expression("(1 + 2) * 3")()) == 9
    assert float(Expression("8 / 4 / 2")()) == 1


def test_functions_and_variables():
    e = Expression("atan(x) + max(u, 0.5, x1) - abs(-x)", {"u", "x", "x1"})
    assert e.names == {"u", "x", "x1"}
    got = e(u=np.array([0.1]), x=np.array([2.0]), x1=np.array([3.0]))
    assert got[0] == pytest.approx(math.atan(2) + 3 - 2)


def test_vectorized_evaluation():
    e = Expression("exp(-u) * x")
    u = np.linspace(0, 1, 5)[:, None]
    x = np.array([[1.0, 2.0]])
    assert e(u=u, x=x).shape == (5, 2)


@pytest.mark.parametrize("src,col", [("1 + foo", 5), ("sqrt(x)", 1), ("1 +", 4), ("(1 + 2", 7), ("2 $ 3", 3),
                                     ("exp(1, 2)", 1), ("min(1)", 1), ("1 2", 3)])
def test_errors_carry_column(src, col):
    with pytest.raises(ConfigError) as exc:
        Expression(src, {"u", "x"})
    assert exc.value.column == col
    assert f"column {col}" in str(exc.value)


def test_restricted_variables():
    Expression("x1 + x2", {"x1", "x2"})
    with pytest.raises(ConfigError):
        Expression("x3", {"x1", "x2"})
    with pytest.raises(ConfigError):
        Expression("u", {"x"})


def test_missing_variable_at_call():
    with pytest.raises(KeyError):
        Expression("u + x")(u=1.0)


def test_point_env():
    Y = np.array([[3.0, 4.0]])
    env = point_env(Y, 2)
    assert env["x"][0] == 5.0 and env["x1"][0] == 3.0 and env["x2"][0] == 4.0
    assert point_env(np.array([2.0]))["x"][0] == 2.0


def test_tokenizer_columns():
    toks = tokenize("  a+ 12.5e-1")
    assert [(t.kind, t.text, t.column) for t in toks[:-1]] == [("name", "a", 3), ("op", "+", 4), ("num", "12.5e-1", 6)]


_num = st.floats(-50, 50, allow_nan=False).map(lambda v: round(v, 3))


@settings(max_examples=100, deadline=None)
@given(_num, _num, _num)
def test_arithmetic_matches_python(a, b, c):
    src = f"({a}) * ({b}) + ({c}) - ({a}) / 7"
    assert float(Expression(src)()) == pytest.approx(a * b + c - a / 7, rel=1e-12, abs=1e-12)
