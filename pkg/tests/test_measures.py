import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hausreg.errors import HausdorffError, NanInIntegrand, TailUnresolved
from hausreg.measures import (DEFAULT_QUAD, Exhaustion, Measure, QuadSettings, atom_mass, gauss_legendre, integrate,
                              integrate_detailed, total_mass)
from hausreg.methods import abel_type_measure, cesaro_measure


def test_gauss_legendre_exact_for_polynomials():
    x, w = gauss_legendre(8)
    for k in range(16):
        exact = 0.0 if k % 2 else 2.0 / (k + 1)
        assert abs(np.dot(w, x ** k) - exact) < 1e-14


def test_lebesgue_moments():
    mu = Measure.lebesgue(0, 1)
    for n in range(10):
        assert integrate(lambda u: u ** n, mu) == pytest.approx(1 / (n + 1), abs=1e-14)


def test_dirac_and_atoms():
    mu = Measure.dirac(0.25, 3)
    assert integrate(lambda u: u ** 2, mu) == pytest.approx(3 / 16)
    assert atom_mass(mu, 0.25) == 3
    assert atom_mass(mu, 0) == 0


def test_sum_and_scaling():
    half = Fraction(1, 2)
    mu = half * Measure.dirac(0, 1) + half * Measure.lebesgue(0, 1)
    assert total_mass(mu) == pytest.approx(1.0, abs=1e-15)
    assert atom_mass(mu, 0) == 0.5
    assert mu.is_exact
    assert integrate(lambda u: u, mu) == pytest.approx(0.25, abs=1e-15)


def test_cesaro_density_with_endpoint_singularity():
    # alpha (1-u)^(alpha-1): moments are alpha B(n+1, alpha)
    for alpha in (0.3, 0.5, 1.5):
        mu = cesaro_measure(alpha)
        for n in (0, 1, 4):
            exact = alpha * math.gamma(n + 1) * math.gamma(alpha) / math.gamma(n + 1 + alpha)
            assert integrate(lambda u: u ** n, mu) == pytest.approx(exact, rel=1e-12)


def test_polynomial_density_is_exact():
    mu = Measure.polynomial([0, 2], 0, 1)
    assert mu.is_exact
    assert total_mass(mu) == pytest.approx(1.0, abs=1e-15)
    assert integrate(lambda u: u, mu) == pytest.approx(2 / 3, abs=1e-15)


def test_half_line_tail_is_bounded():
    mu = abel_type_measure()
    res = integrate_detailed(lambda u: np.exp(-u), mu)
    assert res.value == pytest.approx(1.0, abs=1e-12)
    assert res.tail_bound <= DEFAULT_QUAD.tail_tol


def test_tail_unresolved_is_raised():
    mu = abel_type_measure(cutoff=5.0)
    with pytest.raises(TailUnresolved) as exc:
        integrate(lambda u: np.exp(-u), mu)
    assert exc.value.code == "tail-unresolved"


def test_nan_integrand_reports_node():
    with pytest.raises(NanInIntegrand) as exc:
        integrate(lambda u: np.where(u > 0.5, np.nan, 1.0), Measure.lebesgue(0, 1))
    assert exc.value.details["node"] > 0.5


def test_haar_circle_averages_trig_polynomials():
    mu = Measure.haar_circle(64)
    assert total_mass(mu) == pytest.approx(1.0, abs=1e-15)
    for k in range(1, 30):
        assert abs(integrate(lambda t: np.cos(k * t), mu)) < 1e-14


def test_restrict_is_half_open():
    mu = Measure(atoms=((0, 1), (Fraction(1, 2), 1), (1, 1)))
    assert total_mass(mu.restrict(0, 1)) == 2
    assert total_mass(mu.restrict(-1, 0)) == 1


def test_exhaustion_masses_increase():
    mu = abel_type_measure()
    exh = Exhaustion.default_for(mu)
    masses = [exh.mass(mu, m) for m in range(len(exh.cutoffs))]
    # the parameter measure is du on [0, inf); K_m = [0, cutoff_m]
    assert masses == pytest.approx(list(exh.cutoffs), abs=1e-12)


def test_errors_share_a_base_class():
    assert issubclass(TailUnresolved, HausdorffError)


@settings(max_examples=40, deadline=None)
@given(st.floats(0.1, 5.0), st.integers(0, 6))
def test_refinement_is_stable(alpha, n):
    mu = cesaro_measure(alpha)
    coarse = integrate(lambda u: u ** n * np.cos(u), mu)
    fine = integrate(lambda u: u ** n * np.cos(u), mu, QuadSettings().refined())
    assert abs(coarse - fine) <= 1e-10
