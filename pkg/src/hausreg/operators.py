"""Evaluation of Hausdorff-type transforms.

Four forms are supported:

* generic:      (H f)(x) = ∫ Φ(u, x) f(A(u)(x)) dμ(u)
* discrete:     (H f)(x) = Σ_n c_n(x) μ_n f(A_n(x))
* matrix:       t(m)     = Σ_n c_{m,n} s_n
* second kind:  (T f)(x) = a(x) f(x) + (H f)(x)

Appliers accept a single point or a batch (see :mod:`hausreg.filters` for
point shapes) and return values of shape ``batch + value_shape``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, NamedTuple, Sequence

import numpy as np

from .errors import SequenceTooShort, TailUnresolved
from .filters import Dilation, FilterBase, MapFamily
from .measures import DEFAULT_QUAD, Measure, QuadSettings, integrate_detailed


class Kernel:
    """Φ(u, x).  ``fn`` receives ``u`` of shape (U, 1) and points of shape (1, N[, n])."""

    def __init__(self, fn: Callable, constant: float | None = None, label: str = ""):
        self.fn = fn
        self.constant = constant
        self.label = label or (repr(constant) if constant is not None else "custom")

    @classmethod
    def const(cls, c: float) -> "Kernel":
        return cls(lambda u, x: np.full(np.broadcast_shapes(np.shape(u), np.shape(x)[:2]), c, dtype=float),
                   constant=c, label=repr(c))

    def __call__(self, u, X) -> np.ndarray:
        u = np.atleast_1d(np.asarray(u, dtype=float))
        X = np.asarray(X, dtype=float)
        out = np.asarray(self.fn(u[:, None], X[None]))
        return np.broadcast_to(out, (len(u), X.shape[0]))

    def __repr__(self):
        return f"Kernel({self.label})"


class TestFunction:
    """A bounded function on S' with an optional declared limit along a filter."""

    __test__ = False  # not a pytest class

    def __init__(self, fn: Callable, bound: float = math.inf, limit=None, name: str = "",
                 filter: FilterBase | None = None):
        self.fn = fn
        self.bound = bound
        self.limit = limit
        self.name = name or getattr(fn, "__name__", "f")
        self.filter = filter

    def __call__(self, Y) -> np.ndarray:
        return np.asarray(self.fn(np.asarray(Y, dtype=float)))

    def value_shape(self, probe) -> tuple[int, ...]:
        return self(np.asarray(probe)[:1]).shape[1:]

    def __add__(self, other: "TestFunction") -> "TestFunction":
        return TestFunction(lambda y: self(y) + other(y), self.bound + other.bound, name=f"{self.name}+{other.name}")

    def scaled(self, c: float) -> "TestFunction":
        return TestFunction(lambda y: c * self(y), abs(c) * self.bound, name=f"{c}*{self.name}")

    def check_bound(self, Y) -> bool:
        vals = self(Y)
        mag = np.abs(vals).reshape(len(vals), -1).max(axis=1)
        return bool(np.all(mag <= self.bound * (1 + 1e-12)))

    def __repr__(self):
        return f"TestFunction({self.name})"


@dataclass(frozen=True)
class OperatorSpec:
    kernel: Kernel
    family: MapFamily
    measure: Measure
    domain: str = "half-line"
    dim: int = 1
    codomain: str | None = None
    envelope: Callable | None = None
    label: str = ""

    @property
    def effective_envelope(self) -> Callable | None:
        """Registered dominating function φ(u); constant kernels dominate themselves."""
        if self.envelope is not None:
            return self.envelope
        if self.kernel.constant is not None:
            c = abs(self.kernel.constant)
            return lambda u: np.full(np.shape(u), c, dtype=float)
        return None


@dataclass(frozen=True)
class DiscreteOperatorSpec:
    """Σ_{n=0}^{n_max} c_n(x) μ_n f(A_n(x)) plus a declared tail bound.

    ``coefficients(n, X)`` gets ``n`` with shape (N, 1); ``weights(n)`` the
    index vector.  ``tail_bound(N, X)`` must bound Σ_{n>N} |c_n(x)| μ_n per
    point; ``None`` means no bound is known (the series may diverge).
    """

    coefficients: Callable
    weights: Callable
    family: MapFamily
    n_max: int = 60
    tail_bound: Callable | None = None
    domain: str = "half-line"
    dim: int = 1
    label: str = ""

    def indices(self) -> np.ndarray:
        return np.arange(self.n_max + 1, dtype=float)

    def coefficient_matrix(self, X) -> np.ndarray:
        n = self.indices()
        X = np.asarray(X, dtype=float)
        out = np.asarray(self.coefficients(n[:, None], X[None]))
        return np.broadcast_to(out, (len(n), X.shape[0]))

    def weight_vector(self) -> np.ndarray:
        n = self.indices()
        return np.broadcast_to(np.asarray(self.weights(n), dtype=float), n.shape)

    def tail(self, X, N: int | None = None) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if self.tail_bound is None:
            return np.full(X.shape[0], np.inf)
        N = self.n_max if N is None else N
        return np.broadcast_to(np.asarray(self.tail_bound(N, X), dtype=float), (X.shape[0],))

    def as_measure(self) -> Measure:
        n = self.indices()
        return Measure(atoms=tuple((int(k), float(w)) for k, w in zip(n, self.weight_vector())))


class MatrixMethod:
    """t(m) = Σ_n c_{m,n} s_n.

    ``row_end(m)`` is the last index of row ``m`` (``None`` for infinite rows,
    which then need ``row_tail(m, N)`` bounding Σ_{n>N} |c_{m,n}|).
    """

    def __init__(self, entry: Callable[[int, int], object], row_end: Callable[[int], int | None] = lambda m: m,
                 row_tail: Callable[[int, int], float] | None = None, label: str = "", exact: bool = False):
        self.entry = entry
        self.row_end = row_end
        self.row_tail = row_tail
        self.label = label
        self.exact = exact

    def row(self, m: int, upto: int | None = None) -> list:
        end = self.row_end(m)
        if end is None:
            end = upto
        elif upto is not None:
            end = min(end, upto)
        return [self.entry(m, n) for n in range(end + 1)]

    @classmethod
    def identity(cls) -> "MatrixMethod":
        return cls(lambda m, n: Fraction(int(m == n)), label="identity", exact=True)

    @classmethod
    def cesaro1(cls) -> "MatrixMethod":
        return cls(lambda m, n: Fraction(1, m + 1), label="(C,1)", exact=True)

    @classmethod
    def from_rows(cls, rows: Sequence[Sequence], label: str = "") -> "MatrixMethod":
        rows = [list(r) for r in rows]
        return cls(lambda m, n: rows[m][n] if n < len(rows[m]) else 0, row_end=lambda m: len(rows[m]) - 1,
                   label=label, exact=all(isinstance(v, (int, Fraction)) for r in rows for v in r))

    def __repr__(self):
        return f"MatrixMethod({self.label})"


@dataclass(frozen=True)
class SecondKindSpec:
    """T f = a f + H f with a bounded multiplier ``a`` on S."""

    a: Callable
    inner: OperatorSpec
    a_bound: float = math.inf
    alpha: float | None = None
    label: str = ""


class Evaluation(NamedTuple):
    value: object
    error_bound: float


def _batch(x, vector: bool):
    X = np.asarray(x, dtype=float)
    single = X.ndim == (1 if vector else 0)
    if single:
        X = X[None]
    return X, single


def _unbatch(value, single: bool):
    value = np.asarray(value)
    if single:
        value = value[0]
    return value.item() if value.ndim == 0 else value


def _combine(weights_kernel: np.ndarray, fvals: np.ndarray) -> np.ndarray:
    extra = fvals.ndim - weights_kernel.ndim
    return weights_kernel.reshape(weights_kernel.shape + (1,) * extra) * fvals


def evaluate_generic(spec: OperatorSpec, f: TestFunction, x, settings: QuadSettings = DEFAULT_QUAD) -> Evaluation:
    """∫ Φ(u, x) f(A(u)(x)) dμ(u) with the tail truncation bound."""
    X, single = _batch(x, spec.dim > 1)

    def integrand(u):
        return _combine(spec.kernel(u, X), f(spec.family(u, X)))

    res = integrate_detailed(integrand, spec.measure, settings)
    return Evaluation(_unbatch(res.value, single), res.tail_bound)


def apply_generic(spec: OperatorSpec, f: TestFunction, x, settings: QuadSettings = DEFAULT_QUAD):
    return evaluate_generic(spec, f, x, settings).value


def kernel_mass(spec: OperatorSpec, x, settings: QuadSettings = DEFAULT_QUAD):
    """∫ Φ(u, x) dμ(u): the response to f ≡ 1."""
    X, single = _batch(x, spec.dim > 1)
    res = integrate_detailed(lambda u: spec.kernel(u, X), spec.measure, settings)
    return _unbatch(res.value, single)


def evaluate_discrete(spec: DiscreteOperatorSpec, f: TestFunction, x, tail_tol: float = 1e-10) -> Evaluation:
    X, single = _batch(x, spec.dim > 1)
    n = spec.indices()
    c = spec.coefficient_matrix(X)
    w = spec.weight_vector()
    fvals = f(spec.family(n, X))
    value = np.tensordot(w, _combine(c, fvals), axes=(0, 0))
    tail = spec.tail(X)
    if np.isfinite(f.bound):
        scale = f.bound
    else:
        scale = float(np.abs(fvals).max()) if fvals.size else 0.0
    bound = float(np.max(tail * scale)) if len(tail) else 0.0
    if not bound <= tail_tol:
        raise TailUnresolved(f"series tail bound {bound:.3g} beyond n={spec.n_max} exceeds {tail_tol:.3g}",
                             bound=bound)
    return Evaluation(_unbatch(value, single), bound)


def apply_discrete(spec: DiscreteOperatorSpec, f: TestFunction, x, tail_tol: float = 1e-10):
    return evaluate_discrete(spec, f, x, tail_tol).value


def _is_exact(v) -> bool:
    return isinstance(v, (int, Fraction)) and not isinstance(v, bool)


def apply_matrix_method(C: MatrixMethod, s: Sequence, m: int, tol: float = 1e-12):
    """t(m) = Σ_n c_{m,n} s_n, exact when both the row and the sequence are rational."""
    end = C.row_end(m)
    if end is None:
        if C.row_tail is None:
            raise SequenceTooShort(f"row {m} is infinite and has no declared tail bound")
        upto = len(s) - 1
        vals = np.abs(np.asarray([float(np.max(np.abs(v))) for v in s]))
        if C.row_tail(m, upto) * (vals.max() if len(vals) else 0.0) > tol:
            raise SequenceTooShort(f"row {m} needs more than {len(s)} terms for tolerance {tol:g}", needed=None)
    else:
        if len(s) <= end:
            raise SequenceTooShort(f"row {m} needs {end + 1} terms, sequence has {len(s)}", needed=end + 1)
        upto = end
    row = C.row(m, upto)
    terms = s[: len(row)]
    if all(_is_exact(c) for c in row) and all(_is_exact(v) for v in terms):
        return sum((c * v for c, v in zip(row, terms)), Fraction(0))
    coeffs = np.array([float(c) for c in row])
    return _unbatch(np.tensordot(coeffs, np.asarray(terms, dtype=float), axes=(0, 0))[None], True)


def evaluate_second_kind(spec: SecondKindSpec, f: TestFunction, x, settings: QuadSettings = DEFAULT_QUAD) -> Evaluation:
    inner = spec.inner
    X, single = _batch(x, inner.dim > 1)
    a = np.broadcast_to(np.asarray(spec.a(X), dtype=float), (X.shape[0],))
    local = _combine(a, f(X))
    ev = evaluate_generic(inner, f, X, settings)
    return Evaluation(_unbatch(local + np.asarray(ev.value), single), ev.error_bound)


def apply_second_kind(spec: SecondKindSpec, f: TestFunction, x, settings: QuadSettings = DEFAULT_QUAD):
    return evaluate_second_kind(spec, f, x, settings).value


def identity_spec(domain: str = "half-line", dim: int = 1) -> OperatorSpec:
    """δ_1 with Φ ≡ 1 and dilations: returns f unchanged."""
    return OperatorSpec(Kernel.const(1.0), Dilation(), Measure.dirac(1, 1), domain=domain, dim=dim,
                        label="identity")


def hausdorff_spec(mu: Measure, label: str = "") -> OperatorSpec:
    """The one-dimensional operator ∫ f(u x) dμ(u) on (0, ∞)."""
    return OperatorSpec(Kernel.const(1.0), Dilation(), mu, label=label or f"hausdorff[{mu.label}]")


__all__ = [
    "DiscreteOperatorSpec", "Evaluation", "Kernel", "MatrixMethod", "OperatorSpec", "SecondKindSpec",
    "TestFunction", "apply_discrete", "apply_generic", "apply_matrix_method", "apply_second_kind",
    "evaluate_discrete", "evaluate_generic", "evaluate_second_kind", "hausdorff_spec", "identity_spec",
    "kernel_mass",
]
