import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate as sp_integrate

from hausreg import methods
from hausreg.errors import BadOrder, BadSupport, BudgetExceeded, NotPositive, PrecisionLoss
from hausreg.measures import Measure
from hausreg.operators import TestFunction, apply_generic, apply_matrix_method, kernel_mass


def test_cesaro_orders_on_linear_input():
    # (C,alpha) of f(t) = t is x / (alpha + 1)
    for alpha, want in ((0.5, 8 / 3), (1, 2.0), (2, 4 / 3), (3, 1.0)):
        got = apply_generic(methods.cesaro_spec(alpha), TestFunction(lambda t: t), 4.0)
        assert got == pytest.approx(want, abs=1e-13)


def test_cesaro_rejects_nonpositive_order():
    with pytest.raises(BadOrder):
        methods.cesaro_measure(0)


def test_cesaro_half_against_scipy():
    x = 3.0
    ref, _ = sp_integrate.quad(lambda u: 0.5 * (1 - u) ** -0.5 * np.arctan(u * x), 0, 1, limit=200)
    got = apply_generic(methods.cesaro_spec(0.5), TestFunction(np.arctan), x)
    assert got == pytest.approx(ref, abs=1e-10)


def test_holder_iterates_cesaro():
    f = TestFunction(lambda t: t)
    assert methods.holder_apply(f, 1.0, 2) == pytest.approx(0.25, abs=1e-13)
    with pytest.raises(BadOrder):
        methods.holder_apply(f, 1.0, 0)
    with pytest.raises(BudgetExceeded):
        methods.holder_apply(f, 1.0, 3)


def test_holder_density_matches_nested_iterate():
    f = TestFunction(np.arctan)
    X = np.array([0.5, 3.0, 100.0])
    nested = methods.holder_apply(f, X, 2)
    assert np.allclose(apply_generic(methods.holder_spec(2), f, X), nested, rtol=0, atol=1e-13)
    # f(t) = t gives x / 2^k for every order
    for k in (1, 3, 5):
        assert apply_generic(methods.holder_spec(k), TestFunction(lambda t: t), 8.0) == pytest.approx(8 / 2 ** k)


def test_abel_type_mean():
    spec = methods.abel_type_spec()
    assert kernel_mass(spec, 2.0) == pytest.approx(1.0, abs=1e-10)
    # ∫ e^{-u} e^{-u x} du = 1 / (1 + x)
    assert apply_generic(spec, TestFunction(lambda t: np.exp(-t)), 2.0) == pytest.approx(1 / 3, abs=1e-12)


def test_moment_matrix_of_lebesgue_is_cesaro():
    C = methods.hausdorff_matrix_from_moments(Measure.lebesgue(), 20)
    for m in range(21):
        assert C.row(m) == [Fraction(1, m + 1)] * (m + 1)


def test_moment_matrix_of_two_atoms():
    half = Fraction(1, 2)
    C = methods.hausdorff_matrix_from_moments(Measure(atoms=((0, half), (1, half))), 10)
    assert C.row(6) == [half] + [0] * 5 + [half]


def test_moment_matrix_from_sequence_matches_measure():
    mu = Measure.polynomial([0, 2], 0, 1)
    seq = methods.moments(mu, 12)
    assert seq.exact
    assert seq.values[3] == Fraction(2, 5)
    a = methods.hausdorff_matrix_from_moments(seq, 12)
    b = methods.hausdorff_matrix_from_moments(mu, 12)
    assert all(a.row(m) == b.row(m) for m in range(13))


def test_float_moments_lose_precision():
    seq = methods.moments(methods.cesaro_measure(0.5), 60)
    assert not seq.exact
    with pytest.raises(PrecisionLoss):
        methods.hausdorff_matrix_from_moments(seq, 50)
    C = methods.hausdorff_matrix_from_moments(methods.cesaro_measure(0.5), 50)
    assert sum(float(c) for c in C.row(50)) == pytest.approx(1.0, abs=1e-9)


def test_moment_matrix_needs_unit_support():
    with pytest.raises(BadSupport):
        methods.hausdorff_matrix_from_moments(Measure.lebesgue(0, 2), 5)


def test_grandi_partial_sums():
    C = methods.hausdorff_matrix_from_moments(Measure.lebesgue(), 9999)
    t = apply_matrix_method(C, [1 - k % 2 for k in range(10_000)], 9999)
    assert t == Fraction(1, 2)


def test_complete_monotonicity():
    assert methods.is_completely_monotone(methods.moments(Measure.lebesgue(), 15))
    from hausreg.methods import MomentSequence
    assert not methods.is_completely_monotone(MomentSequence((1, 0, 1), True))


def test_delsarte_shift_of_squared_norm():
    T = methods.delsarte_spec((1.0, -0.5), nodes=256)
    X = np.random.default_rng(1).normal(size=(20, 2)) * 4
    vals = T(lambda y: (y ** 2).sum(-1), X)
    assert np.allclose(vals, 1.25 + (X ** 2).sum(-1), rtol=0, atol=1e-10)


def test_delsarte_commutes_with_rotations():
    # T_h(f∘R)(x) = (T_{Rh} f)(R x)
    h = np.array([0.7, 0.2])
    t = 0.9
    R = np.array([[math.cos(t), -math.sin(t)], [math.sin(t), math.cos(t)]])
    f = lambda y: np.exp(-((y - np.array([1.0, 0.0])) ** 2).sum(-1))
    X = np.array([[0.3, -1.1], [2.0, 0.5]])
    lhs = methods.delsarte_spec(h)(lambda y: f(y @ R.T), X)
    rhs = methods.delsarte_spec(R @ h)(f, X @ R.T)
    assert np.allclose(lhs, rhs, atol=1e-12)


def test_affine_exact_case():
    spec = methods.affine_spec(lambda u: u[:, None, None] * np.eye(2), lambda u: np.stack([u, u], -1),
                               Measure.lebesgue(1, 2), normalize=True)
    # ∫_1^2 (4u + u) du = 7.5
    assert apply_generic(spec, TestFunction(lambda y: y[..., 0]), np.array([4.0, 1.0])) == pytest.approx(7.5, abs=1e-12)


def test_affine_rejects_negative_entries():
    with pytest.raises(NotPositive):
        methods.affine_spec(lambda u: -u[:, None, None] * np.eye(2), lambda u: np.stack([u, u], -1),
                            Measure.lebesgue(1, 2))


def test_shipped_and_counterexample_measures():
    from hausreg.measures import atom_mass, total_mass
    for mu in methods.shipped_measures().values():
        assert total_mass(mu) == pytest.approx(1.0, abs=1e-12)
        assert atom_mass(mu, 0) == 0
    assert set(methods.counterexample_measures()) >= {"half-dirac-0-lebesgue", "half-dirac-0-dirac-1"}
    assert "cesaro" in methods.METHODS and "moments" in methods.METHODS


@settings(max_examples=25, deadline=None)
@given(st.integers(1, 4), st.integers(0, 30))
def test_cesaro_moment_rows_sum_to_one(alpha, m):
    C = methods.hausdorff_matrix_from_moments(methods.cesaro_measure(alpha), 30)
    row = C.row(m)
    assert sum(row) == 1
    assert all(c >= 0 for c in row)
