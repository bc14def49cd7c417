from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hausreg.errors import InconclusiveByConstruction
from hausreg.filters import (CONVERGED, DIVERGENT, EVIDENCE, FAIL, PROVEN, Affine, AgreementSettings, ConstantTarget,
                             CustomFamily, Dilation, FilterBase, LimitSettings, Rotation, Shift, agrees_with,
                             limit_along_filter, sampling_evidence)
from hausreg.measures import Measure


@pytest.mark.parametrize("kind,dim", [("half-line", 1), ("index", 1), ("orthant", 2), ("ball-complement", 2),
                                      ("ball-complement", 3)])
def test_filter_levels_are_nested(kind, dim):
    F = FilterBase(kind, dim=dim)
    assert F.is_nested()
    pts = F.sample(3, 32)
    assert np.all(F.contains(3, pts))
    assert np.all(F.in_domain(F.sample_domain(64)))


def test_filter_rejects_bad_parameters():
    with pytest.raises(ValueError):
        FilterBase("sideways")
    with pytest.raises(ValueError):
        FilterBase(ratio=1.0)
    with pytest.raises(ValueError):
        FilterBase("half-line", dim=2)


def test_sampling_is_deterministic():
    F = FilterBase("ball-complement", dim=2)
    assert np.array_equal(F.sample(2, 10, seed=5), F.sample(2, 10, seed=5))
    assert not np.array_equal(F.sample(2, 10, seed=5), F.sample(2, 10, seed=6))


def test_limit_of_converging_function():
    est = limit_along_filter(lambda x: np.arctan(x), FilterBase())
    assert est.status == CONVERGED
    assert est.value == pytest.approx(np.pi / 2, abs=1e-3)
    assert len(est.deviation_trace) == len(est.thresholds) == 8


def test_limit_of_oscillating_function_is_divergent():
    est = limit_along_filter(lambda x: np.sin(x), FilterBase())
    assert est.status == DIVERGENT


def test_vector_valued_limit():
    est = limit_along_filter(lambda x: np.stack([1 / x, 2 + 0 * x], -1), FilterBase())
    assert est.status == CONVERGED
    assert np.allclose(est.value, [0, 2], atol=1e-3)


def test_dilation_structural_rule():
    F = FilterBase()
    v = Dilation().structural(np.array([0.0, 0.5, 1.0]), F, F)
    assert list(v) == [FAIL, PROVEN, PROVEN]


def test_shift_and_constant_rules():
    F = FilterBase("index")
    assert list(Shift().structural(np.array([0.0, 2.0, 2.5]), F, F)) == [PROVEN, PROVEN, FAIL]
    assert set(ConstantTarget().structural(np.array([1.0, 2.0]), F, F)) == {FAIL}


def test_rotation_with_offset():
    R = Rotation(offset=[1.0, 0.0])
    out = R(np.array([np.pi / 2]), np.array([[1.0, 0.0]]))
    assert np.allclose(out[0, 0], [1.0, 1.0])
    F = FilterBase("ball-complement", dim=2)
    assert set(R.structural(np.array([0.1, 2.0]), F, F)) == {PROVEN}
    assert R.describe()["offset"] == [1.0, 0.0]


def test_affine_violations():
    fam = Affine(lambda u: u[:, None, None] * np.array([[1.0, -1.0], [0.0, 1.0]]), lambda u: np.stack([u, u], -1))
    assert fam.violations(np.array([1.0])).all()
    ok = Affine(lambda u: u[:, None, None] * np.eye(2), lambda u: np.zeros((len(u), 2)))
    assert not ok.violations(np.array([0.5, 2.0])).any()


def test_agreement_fails_on_atom_at_zero():
    half = Fraction(1, 2)
    mu = half * Measure.dirac(0, 1) + half * Measure.lebesgue(0, 1)
    av = agrees_with(Dilation(), FilterBase(), FilterBase(), mu)
    assert not av.agrees
    assert av.fail_mass == pytest.approx(0.5)
    assert av.witness == 0.0
    assert av.method == "structural"


def test_agreement_ignores_null_endpoint():
    # u = 0 is a quadrature endpoint of Lebesgue measure but carries no mass
    av = agrees_with(Dilation(), FilterBase(), FilterBase(), Measure.lebesgue(0, 1))
    assert av.agrees and av.fail_mass == 0


def test_custom_family_uses_sampling():
    fam = CustomFamily(lambda u, X: u.reshape(-1, 1) * X[None] + 1.0, "u x + 1")
    F = FilterBase()
    verdict, _ = sampling_evidence(fam, 0.5, F, F)
    assert verdict == EVIDENCE
    av = agrees_with(fam, F, F, Measure.lebesgue(0.5, 1))
    assert av.agrees and av.method == "sampling"
    bounded = CustomFamily(lambda u, X: np.arctan(u.reshape(-1, 1) * X[None]), "atan(u x)")
    assert sampling_evidence(bounded, 1.0, F, F)[0] == FAIL


def test_sampling_can_be_disabled():
    fam = CustomFamily(lambda u, X: u.reshape(-1, 1) * X[None])
    with pytest.raises(InconclusiveByConstruction):
        agrees_with(fam, FilterBase(), FilterBase(), Measure.lebesgue(0, 1), AgreementSettings(sampling=False))


@settings(max_examples=30, deadline=None)
@given(st.floats(-3, 3), st.floats(0.1, 10))
def test_limit_of_constant_plus_decay(level, rate):
    est = limit_along_filter(lambda x: level + np.exp(-rate * x), FilterBase(), LimitSettings())
    assert est.status == CONVERGED
    assert abs(est.value - level) < 1e-12
