"""Shared catalog of the operators shipped with the package."""

from fractions import Fraction

import numpy as np
import pytest

from hausreg import methods
from hausreg.filters import Dilation, FilterBase, Shift
from hausreg.measures import Measure
from hausreg.operators import DiscreteOperatorSpec, Kernel, OperatorSpec, SecondKindSpec, hausdorff_spec


def _geometric():
    return DiscreteOperatorSpec(lambda n, x: 0.5 ** (n + 1), lambda n: np.ones_like(n), Shift(), n_max=60,
                                tail_bound=lambda N, X: 0.5 ** (N + 1), domain="index", label="geometric")


def _half_identity():
    return OperatorSpec(Kernel.const(0.5), Dilation(), Measure.dirac(1, 1), label="half-identity")


def shipped_catalog():
    """(name, spec, filter) for every operator the package ships, regular or not."""
    out = []
    for name, mu in {**methods.shipped_measures(), **methods.counterexample_measures()}.items():
        out.append((f"hausdorff[{name}]", hausdorff_spec(mu), FilterBase()))
    out.append(("holder-3", methods.holder_spec(3), FilterBase()))
    out.append(("abel-type", methods.abel_type_spec(), FilterBase()))
    out.append(("delsarte", methods.delsarte_spec((1.0, -0.5)).spec, FilterBase("ball-complement", dim=2)))
    affine = methods.affine_spec(lambda u: u[:, None, None] * np.eye(2), lambda u: np.stack([u, u], -1),
                                 Measure.lebesgue(1, 2), normalize=True)
    out.append(("affine", affine, FilterBase("orthant", dim=2)))
    out.append(("geometric-series", _geometric(), FilterBase("index")))
    half = lambda X: np.full(np.shape(X)[:1], 0.5)
    out.append(("second-kind-regular", SecondKindSpec(half, _half_identity(), a_bound=0.5, alpha=0.5),
                FilterBase()))
    out.append(("second-kind-cesaro", SecondKindSpec(half, methods.cesaro_spec(1), a_bound=0.5, alpha=0.5),
                FilterBase()))
    return out


@pytest.fixture(scope="session")
def catalog():
    return shipped_catalog()


HALF = Fraction(1, 2)
