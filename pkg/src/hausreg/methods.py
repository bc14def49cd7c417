"""Ready-made operators: Cesàro/Hölder/Abel-type means, moment matrices, Delsarte shifts, affine maps."""

from __future__ import annotations

import functools
import math
import sys
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np
from scipy import stats

from .errors import BadOrder, BadSupport, BudgetExceeded, NotPositive, PrecisionLoss
from .filters import Affine, Dilation, Rotation
from .measures import DEFAULT_QUAD, Measure, QuadSettings, constant, integrate, total_mass
from .operators import Kernel, MatrixMethod, OperatorSpec, TestFunction, apply_generic


# --------------------------------------------------------------------------
# Means on (0, ∞)
# --------------------------------------------------------------------------

def cesaro_measure(alpha: float) -> Measure:
    """α (1 - u)^(α - 1) du on [0, 1]; exact polynomial coefficients for integer α."""
    if not alpha > 0:
        raise BadOrder(f"Cesàro order must be positive, got {alpha!r}")
    if float(alpha).is_integer():
        k = int(alpha)
        coeffs = [Fraction(k * math.comb(k - 1, j) * (-1) ** j) for j in range(k)]
        mu = Measure.polynomial(coeffs, 0, 1)
    else:
        mu = Measure.with_density(constant(float(alpha)), 0, 1, hi_exponent=float(alpha) - 1)
    return Measure(pieces=mu.pieces, label=f"cesaro({alpha})")


def cesaro_spec(alpha: float = 1) -> OperatorSpec:
    return OperatorSpec(Kernel.const(1.0), Dilation(), cesaro_measure(alpha), label=f"cesaro({alpha})")


def holder_apply(f: TestFunction, x, k: int, settings: QuadSettings = DEFAULT_QUAD, budget: int = 20_000_000):
    """k-fold iterate of the (C,1) mean, by nested quadrature.

    The cost is (nodes per mean)^k evaluations per point; beyond ``budget``
    this raises ``budget-exceeded`` rather than running for hours.
    """
    if k < 1:
        raise BadOrder(f"Hölder order must be >= 1, got {k!r}")
    spec = cesaro_spec(1)
    nodes = len(spec.measure.quadrature(settings)[0])
    X = np.atleast_1d(np.asarray(x, dtype=float))
    cost = nodes ** k * X.size
    if cost > budget:
        raise BudgetExceeded(f"Hölder order {k} needs {cost:.3g} evaluations (budget {budget:.3g})", cost=cost)

    def iterate(g, level):
        if level == 0:
            return g
        inner = iterate(g, level - 1)

        def mean(Y):
            Y = np.asarray(Y, dtype=float)
            flat = Y.reshape(-1)
            vals = apply_generic(spec, TestFunction(inner), flat, settings)
            return np.asarray(vals).reshape(Y.shape + np.shape(vals)[1:])

        return mean

    out = iterate(f, k)(X)
    return out.item() if np.ndim(x) == 0 and np.size(out) == 1 else (out[0] if np.ndim(x) == 0 else out)


def holder_measure(k: int) -> Measure:
    """(ln 1/u)^(k-1) / (k-1)! du on [0, 1]: the k-fold (C,1) iterate as a single mean."""
    if k < 1:
        raise BadOrder(f"Hölder order must be >= 1, got {k!r}")
    if k == 1:
        return Measure(pieces=Measure.lebesgue(0, 1).pieces, label="holder(1)")
    c = 1.0 / math.factorial(k - 1)
    mu = Measure.with_density(lambda u: c * (-np.log(u)) ** (k - 1), 0, 1)
    return Measure(pieces=mu.pieces, label=f"holder({k})")


def holder_spec(k: int) -> OperatorSpec:
    return OperatorSpec(Kernel.const(1.0), Dilation(), holder_measure(k), label=f"holder({k})")


def abel_type_measure(cutoff: float = 40.0) -> Measure:
    return Measure.half_line(0.0, lambda u: np.exp(-u), lambda K: math.exp(-K), cutoff=cutoff)


def abel_type_spec(cutoff: float = 40.0) -> OperatorSpec:
    """Φ(u, x) = e^{-u} on Ω = [0, ∞) with dilations: (A f)(x) = ∫_0^∞ e^{-u} f(u x) du."""
    kernel = Kernel(lambda u, x: np.exp(-u), label="exp(-u)")
    return OperatorSpec(kernel, Dilation(), abel_type_measure(cutoff), envelope=lambda u: np.exp(-u),
                        label="abel-type")


# --------------------------------------------------------------------------
# Moments and Hausdorff moment matrices
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class MomentSequence:
    """μ_n = ∫ u^n dμ for n = 0..order."""

    values: tuple
    exact: bool

    @property
    def order(self) -> int:
        return len(self.values) - 1


def _check_unit_support(mu: Measure) -> None:
    lo, hi = mu.support
    if mu.tail is not None or lo < 0 or hi > 1:
        raise BadSupport(f"measure must be supported in [0, 1], support is [{lo}, {hi}]")


def _poly_moment(piece, n: int) -> Fraction:
    lo, hi = Fraction(piece.lo), Fraction(piece.hi)
    return sum((a * (hi ** (n + j + 1) - lo ** (n + j + 1)) / (n + j + 1) for j, a in enumerate(piece.poly)),
               Fraction(0))


def moments(mu: Measure, order: int, settings: QuadSettings = DEFAULT_QUAD) -> MomentSequence:
    _check_unit_support(mu)
    if mu.is_exact:
        vals = []
        for n in range(order + 1):
            v = sum((Fraction(w) * Fraction(p) ** n for p, w in mu.atoms), Fraction(0))
            v += sum((_poly_moment(pc, n) for pc in mu.pieces), Fraction(0))
            vals.append(v)
        return MomentSequence(tuple(vals), True)
    powers = np.arange(order + 1)
    vals = integrate(lambda u: u[:, None] ** powers[None, :], mu, settings)
    return MomentSequence(tuple(float(v) for v in np.atleast_1d(vals)), False)


def forward_difference(values: Sequence, k: int, n: int):
    """Δ^k μ_n with Δ μ_n = μ_n - μ_{n+1}."""
    return sum(((-1) ** i * math.comb(k, i) * values[n + i] for i in range(k + 1)),
               Fraction(0) if isinstance(values[n], (int, Fraction)) else 0.0)


def is_completely_monotone(seq: MomentSequence, order: int | None = None, tol: float = 0.0) -> bool:
    M = seq.order if order is None else min(order, seq.order)
    vals = seq.values
    row = list(vals[: M + 1])
    for k in range(M + 1):
        if any(v < -tol for v in row):
            return False
        row = [row[i] - row[i + 1] for i in range(len(row) - 1)]
    return True


class MomentMatrix(MatrixMethod):
    """Lower-triangular c_{m,n} = C(m, n) Δ^{m-n} μ_n for m ≤ order."""

    def __init__(self, row_fn: Callable[[int], list], order: int, exact: bool, label: str):
        self._row_fn = functools.lru_cache(maxsize=256)(row_fn)
        self.order = order
        super().__init__(self._entry, row_end=lambda m: m, label=label, exact=exact)

    def _check(self, m: int) -> None:
        if not 0 <= m <= self.order:
            raise IndexError(f"row {m} outside the constructed order {self.order}")

    def _entry(self, m: int, n: int):
        self._check(m)
        return self._row_fn(m)[n] if n <= m else 0

    def row(self, m: int, upto: int | None = None) -> list:
        self._check(m)
        r = self._row_fn(m)
        return list(r if upto is None else r[: upto + 1])

    def dense(self, size: int | None = None) -> list[list]:
        size = self.order if size is None else size
        return [self.row(m) + [0] * (size - m) for m in range(size + 1)]


def _bernstein_exact_row(mu: Measure, m: int) -> list:
    row = []
    need_binom = bool(mu.atoms) or any((pc.lo, pc.hi) != (0, 1) for pc in mu.pieces)
    c = 1
    for n in range(m + 1):
        k = m - n
        if n and need_binom:
            # running product is much cheaper than math.comb for large rows
            c = c * (k + 1) // n
        v = Fraction(0)
        for p, w in mu.atoms:
            p = Fraction(p)
            if (p == 0 and n) or (p == 1 and k):
                continue
            v += Fraction(w) * c * p ** n * (1 - p) ** k
        for pc in mu.pieces:
            lo, hi = Fraction(pc.lo), Fraction(pc.hi)
            for j, a in enumerate(pc.poly):
                if a == 0:
                    continue
                if (lo, hi) == (0, 1):
                    # C(m,n) B(n+j+1, k+1) = prod_{i<=j}(n+i) / prod_{i<=j+1}(m+i)
                    num = math.prod(range(n + 1, n + j + 1))
                    den = math.prod(range(m + 1, m + j + 2))
                    v += a * Fraction(num, den)
                else:
                    s = sum((Fraction((-1) ** i * math.comb(k, i), n + j + i + 1)
                             * (hi ** (n + j + i + 1) - lo ** (n + j + i + 1)) for i in range(k + 1)), Fraction(0))
                    v += a * c * s
        row.append(v)
    return row


def _bernstein_float_row(mu: Measure, m: int, settings: QuadSettings) -> list:
    n = np.arange(m + 1)
    vals = integrate(lambda u: stats.binom.pmf(n[None, :], m, np.clip(u, 0, 1)[:, None]), mu, settings)
    return [float(v) for v in np.atleast_1d(vals)]


def hausdorff_matrix_from_moments(source: Measure | MomentSequence, order: int,
                                  settings: QuadSettings = DEFAULT_QUAD, max_error: float = 1e-9) -> MomentMatrix:
    """Hausdorff summation matrix of a measure on [0, 1] (or of a given moment sequence).

    For a measure the entries are ∫ C(m,n) u^n (1-u)^(m-n) dμ, in exact
    rationals when the measure is rational (atoms, polynomial densities) and
    by quadrature of the nonnegative Bernstein integrand otherwise.  For a
    moment sequence the entries come from forward differences; floating
    moments carry an error bound C(m,n) 2^(m-n) eps max|μ| and raise
    ``precision-loss`` above ``max_error``.
    """
    if isinstance(source, MomentSequence):
        vals = source.values
        if source.order < order:
            raise ValueError(f"need moments up to order {order}, have {source.order}")
        if not source.exact:
            scale = max(abs(v) for v in vals[: order + 1])
            worst = max(math.comb(order, n) * 2.0 ** (order - n) for n in range(order + 1)) * sys.float_info.epsilon * scale
            if worst > max_error:
                raise PrecisionLoss(f"floating differencing to order {order} has error bound {worst:.3g}", bound=worst)

        def row_fn(m):
            return [math.comb(m, n) * forward_difference(vals, m - n, n) for n in range(m + 1)]

        return MomentMatrix(row_fn, order, source.exact, label="moments")
    mu = source
    _check_unit_support(mu)
    if mu.is_exact:
        return MomentMatrix(functools.partial(_bernstein_exact_row, mu), order, True, label=f"hausdorff[{mu.label}]")
    return MomentMatrix(functools.partial(_bernstein_float_row, mu, settings=settings), order, False,
                        label=f"hausdorff[{mu.label}]")


# --------------------------------------------------------------------------
# Group and affine examples
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class DelsarteShift:
    """T_h f(x) = ∫ f(h + R_θ x) dμ(θ), μ normalized Haar measure on plane rotations."""

    h: tuple
    spec: OperatorSpec

    def __call__(self, f, x, settings: QuadSettings = DEFAULT_QUAD):
        if not isinstance(f, TestFunction):
            f = TestFunction(f)
        return apply_generic(self.spec, f, x, settings)


def delsarte_spec(h=(0.0, 0.0), nodes: int = 256) -> DelsarteShift:
    h = tuple(float(v) for v in np.asarray(h, dtype=float).reshape(-1))
    if len(h) != 2:
        raise ValueError("only the plane (d = 2) is supported")
    if nodes < 4:
        raise ValueError("Delsarte averages need at least 4 rotation nodes")
    family = Rotation(offset=np.array(h))
    spec = OperatorSpec(Kernel.const(1.0), family, Measure.haar_circle(nodes), domain="ball-complement", dim=2,
                        label=f"delsarte(h={h})")
    return DelsarteShift(h, spec)


def _probe_parameters(mu: Measure) -> np.ndarray:
    u, _, _ = mu.quadrature(DEFAULT_QUAD)
    return np.unique(u)


def affine_spec(A: Callable, b: Callable, mu: Measure, kernel: Kernel | None = None, dim: int = 2,
                normalize: bool = False, envelope: Callable | None = None) -> OperatorSpec:
    """∫ Φ(u, x) f(A_u x + b(u)) dμ(u) on the open positive orthant of R^dim."""
    family = Affine(A, b)
    u = _probe_parameters(mu)
    bad = family.violations(u)
    if bad.any():
        w = float(u[int(np.argmax(bad))])
        raise NotPositive(f"A_u must be nonnegative and invertible with b(u) >= 0; violated at u={w}", witness=w)
    if normalize:
        mass = total_mass(mu)
        mu = mu.scaled(1 / mass)
    kernel = kernel or Kernel.const(1.0)
    return OperatorSpec(kernel, family, mu, domain="orthant", dim=dim, envelope=envelope,
                        label="affine")


# --------------------------------------------------------------------------
# Shipped measures (used by demos, acceptance and property suites)
# --------------------------------------------------------------------------

def shipped_measures() -> dict[str, Measure]:
    """Probability measures on [0, 1] without an atom at 0."""
    half = Fraction(1, 2)
    return {
        "lebesgue": Measure.lebesgue(0, 1),
        "linear-density": Measure.polynomial([0, 2], 0, 1),
        "dirac-1": Measure.dirac(1, 1),
        "cesaro-0.5": cesaro_measure(0.5),
        "cesaro-2": cesaro_measure(2),
        "cesaro-3": cesaro_measure(3),
        "half-dirac-1-lebesgue": half * Measure.dirac(1, 1) + half * Measure.lebesgue(0, 1),
    }


def counterexample_measures() -> dict[str, Measure]:
    """Measures on [0, 1] that violate the Rogosinski criterion."""
    half = Fraction(1, 2)
    return {
        "half-dirac-0-lebesgue": half * Measure.dirac(0, 1) + half * Measure.lebesgue(0, 1),
        "half-dirac-0-dirac-1": Measure(atoms=((0, half), (1, half))),
        "dirac-0": Measure.dirac(0, 1),
        "half-dirac-1": Measure.dirac(1, half),
    }


METHODS = {
    "identity": "δ_1 with Φ ≡ 1 and dilations (returns f)",
    "cesaro": "Cesàro mean of order alpha > 0: density alpha (1-u)^(alpha-1) on [0, 1]",
    "holder": "k-fold iterate of the (C,1) mean; checks use the density (ln 1/u)^(k-1)/(k-1)!",
    "abel": "exponential mean ∫_0^∞ e^{-u} f(u x) du",
    "hausdorff": "∫ f(u x) dμ(u) for the configured measure",
    "moments": "Hausdorff moment matrix of the configured measure, applied to a sequence",
    "delsarte": "generalized shift T_h f(x) = mean over rotations R of f(h + R x) on R^2",
    "affine": "∫ f(A_u x + b(u)) dμ(u) on the positive orthant",
    "second-kind": "a(x) f(x) + inner operator",
    "custom": "kernel, family and measure given explicitly",
    "discrete": "Σ_n c_n(x) μ_n f(A_n(x))",
}
