"""Finite (and exhaustible sigma-finite) measures on a 1-D parameter space.

A :class:`Measure` is a sum of point masses, density pieces on bounded
intervals and an optional half-line tail.  Integration is composite
Gauss-Legendre on each density piece, with panels graded geometrically
towards both endpoints so that dilation integrands ``u -> f(u x)`` stay
resolved for large ``x`` and integrable endpoint singularities (such as
``(1 - u)**(a - 1)``) are handled without special casing.

The tail is never truncated silently: it carries a declared envelope and the
closed-form integral of that envelope beyond the truncation point, and the
truncation remainder is reported (and enforced against ``tail_tol``).
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Callable, NamedTuple, Sequence

import numpy as np
from scipy import special

from .errors import InvalidMeasure, NanInIntegrand, TailUnresolved

Evaluator = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class QuadSettings:
    """Quadrature configuration shared by every integral in the package."""

    grade_levels: int = 40
    tail_tol: float = 1e-10
    quad_tol: float = 1e-8
    mass_tol: float = 1e-9
    # Declared bound on |g| / envelope over the tail; estimated from the
    # quadrature nodes when None.
    tail_scale: float | None = None
    node_factor: int = 1

    def refined(self) -> "QuadSettings":
        return replace(self, node_factor=2 * self.node_factor)


DEFAULT_QUAD = QuadSettings()


@functools.lru_cache(maxsize=64)
def gauss_legendre(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights on [-1, 1]; exact for polynomials of degree 2n - 1."""
    x, w = np.polynomial.legendre.leggauss(n)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def constant(c: float) -> Evaluator:
    def fn(u):
        return np.full(np.shape(u), c, dtype=float)

    fn.constant = c
    return fn


def _panel_rule(breaks: np.ndarray, n: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = gauss_legendre(n)
    a = breaks[:-1, None]
    b = breaks[1:, None]
    half = 0.5 * (b - a)
    nodes = (a + b) * 0.5 + half * x[None, :]
    weights = half * w[None, :]
    return nodes.ravel(), weights.ravel()


def _tail_breaks(start: float, cutoff: float, levels: int) -> np.ndarray:
    first = min(1.0, cutoff - start)
    steps = first * 2.0 ** -np.arange(levels + 1)
    near = start + steps[::-1]
    far = np.arange(start + first, cutoff, 1.0)[1:]
    return np.unique(np.concatenate(([start], near, far, [cutoff])))


@dataclass(frozen=True)
class DensityPiece:
    """``density(u) du`` restricted to ``[lo, hi]``.

    ``rule`` is ``"gauss-legendre"`` (graded composite) or ``"periodic"``
    (equispaced trapezoid, exact for trigonometric polynomials of degree
    below ``nodes``; used for Haar measure on the circle).

    The full density is ``density(u) * (u - lo)**lo_exponent *
    (hi - u)**hi_exponent``; non-zero exponents get Gauss-Jacobi on the
    innermost panel at that end.  ``poly`` holds
    exact rational coefficients of the density in powers of ``u`` when it is
    a polynomial, enabling rational moment computations.
    """

    lo: float
    hi: float
    density: Evaluator
    nodes: int = 16
    rule: str = "gauss-legendre"
    poly: tuple[Fraction, ...] | None = None
    lo_exponent: float = 0.0
    hi_exponent: float = 0.0

    def __post_init__(self):
        if self.lo_exponent <= -1 or self.hi_exponent <= -1:
            raise InvalidMeasure("endpoint exponents must exceed -1 for a finite measure")
        if self.nodes < 2:
            raise InvalidMeasure(f"quadrature_nodes must be >= 2, got {self.nodes}")
        if not self.hi > self.lo:
            raise InvalidMeasure(f"interval [{self.lo}, {self.hi}] has non-positive length")
        if self.rule not in ("gauss-legendre", "periodic"):
            raise InvalidMeasure(f"unknown quadrature rule {self.rule!r}")

    def rule_nodes(self, settings: QuadSettings) -> tuple[np.ndarray, np.ndarray]:
        n = self.nodes * settings.node_factor
        if self.rule == "periodic":
            h = (self.hi - self.lo) / n
            u = self.lo + h * np.arange(n)
            base = np.full(n, h)
            return u, base * np.asarray(self.density(u), dtype=float)
        lo, hi = float(self.lo), float(self.hi)
        a, b = self.lo_exponent, self.hi_exponent
        half = 0.5 * (hi - lo)
        # panels in distance-from-endpoint coordinates, innermost first
        steps = half * 2.0 ** -np.arange(settings.grade_levels, -1, -1)
        d, wd = _panel_rule(np.concatenate(([0.0], steps)), n)
        side_u, side_w = [], []
        for end, sign, own, other in ((lo, 1.0, a, b), (hi, -1.0, b, a)):
            w = wd.copy()
            dist = d.copy()
            if own != 0:
                t, wj = special.roots_jacobi(n, 0.0, own)
                h = steps[0]
                dist[:n] = 0.5 * h * (1 + t)
                w[:n] = wj * (0.5 * h) ** (own + 1)
                w[n:] *= dist[n:] ** own
            if other != 0:
                w *= (2 * half - dist) ** other
            side_u.append(end + sign * dist)
            side_w.append(w)
        u = np.concatenate(side_u)
        base = np.concatenate(side_w)
        return u, base * np.asarray(self.density(u), dtype=float)


@dataclass(frozen=True)
class TailRule:
    """``density(u) du`` on ``[start, inf)``, integrated up to ``cutoff``.

    ``envelope`` is a declared decay profile for the integrands used with this
    measure and ``envelope_tail(K)`` must equal (or bound)
    ``int_K^inf envelope(u) density(u) du``.  The truncation remainder for an
    integrand ``g`` is ``scale * envelope_tail(cutoff)`` where ``scale`` bounds
    ``|g| / envelope`` (declared in settings, or the maximum over nodes).
    """

    start: float
    density: Evaluator
    envelope: Evaluator
    envelope_tail: Callable[[float], float]
    cutoff: float = 40.0
    nodes: int = 16

    def __post_init__(self):
        if self.nodes < 2:
            raise InvalidMeasure(f"quadrature_nodes must be >= 2, got {self.nodes}")
        if not self.cutoff > self.start:
            raise InvalidMeasure("tail cutoff must exceed tail start")

    def rule_nodes(self, settings: QuadSettings) -> tuple[np.ndarray, np.ndarray]:
        n = self.nodes * settings.node_factor
        u, base = _panel_rule(_tail_breaks(float(self.start), float(self.cutoff), settings.grade_levels), n)
        return u, base * np.asarray(self.density(u), dtype=float)


class IntegralResult(NamedTuple):
    value: object
    tail_bound: float
    refinement: float | None


def _as_float(v) -> float:
    return float(v)


def _clip_piece(pc: DensityPiece, a: float, b: float) -> DensityPiece:
    """Sub-piece on [a, b]; exponents at endpoints that moved fold into the density."""
    lo, hi = float(pc.lo), float(pc.hi)
    la = pc.lo_exponent if a == lo else 0.0
    hb = pc.hi_exponent if b == hi else 0.0
    fold_lo = pc.lo_exponent if a != lo else 0.0
    fold_hi = pc.hi_exponent if b != hi else 0.0
    density = pc.density
    if fold_lo or fold_hi:
        def density(u, d=pc.density):
            return d(u) * (u - lo) ** fold_lo * (hi - u) ** fold_hi
    return replace(pc, lo=a, hi=b, rule="gauss-legendre", density=density,
                   lo_exponent=la, hi_exponent=hb, poly=None)


@dataclass(frozen=True)
class Measure:
    """Atoms + density pieces + optional tail, on a 1-D parameter space."""

    atoms: tuple[tuple[object, object], ...] = ()
    pieces: tuple[DensityPiece, ...] = ()
    tail: TailRule | None = None
    signed: bool = False
    probability: bool = False
    label: str = field(default="", compare=False)

    def __post_init__(self):
        points = [_as_float(p) for p, _ in self.atoms]
        if len(set(points)) != len(points):
            raise InvalidMeasure("atoms must be distinct points")
        if not self.signed:
            for p, w in self.atoms:
                if w < 0:
                    raise InvalidMeasure(f"negative atom weight {w} at {p} in an unsigned measure")
            for piece in self.pieces:
                u, w = piece.rule_nodes(DEFAULT_QUAD)
                # expanded polynomials cancel near their roots; ignore rounding-level negatives
                if np.any(w < -1e-12 * float(np.max(np.abs(w), initial=0.0))):
                    raise InvalidMeasure(f"negative density on [{piece.lo}, {piece.hi}] in an unsigned measure")
        if self.probability:
            mass = total_mass(self)
            if abs(mass - 1.0) > DEFAULT_QUAD.mass_tol:
                raise InvalidMeasure(f"probability measure has total mass {mass!r}")

    # -- constructors -------------------------------------------------
    @classmethod
    def dirac(cls, point=0, weight=1) -> "Measure":
        return cls(atoms=((point, weight),), label=f"{weight}*delta_{point}")

    @classmethod
    def lebesgue(cls, lo=0, hi=1, nodes: int = 16) -> "Measure":
        piece = DensityPiece(lo, hi, constant(1.0), nodes=nodes, poly=(Fraction(1),))
        return cls(pieces=(piece,), label=f"Lebesgue[{lo},{hi}]")

    @classmethod
    def with_density(cls, density: Evaluator, lo, hi, nodes: int = 16, poly=None,
                     lo_exponent: float = 0.0, hi_exponent: float = 0.0) -> "Measure":
        if poly is not None:
            poly = tuple(Fraction(c) for c in poly)
        piece = DensityPiece(lo, hi, density, nodes=nodes, poly=poly,
                             lo_exponent=lo_exponent, hi_exponent=hi_exponent)
        return cls(pieces=(piece,))

    @classmethod
    def polynomial(cls, coeffs: Sequence, lo=0, hi=1, nodes: int = 16) -> "Measure":
        """Density ``sum_j coeffs[j] * u**j`` on ``[lo, hi]`` (exact coefficients kept)."""
        fcoeffs = [float(c) for c in coeffs]

        def density(u):
            return np.polynomial.polynomial.polyval(u, fcoeffs)

        return cls.with_density(density, lo, hi, nodes=nodes, poly=coeffs)

    @classmethod
    def half_line(cls, start: float, envelope: Evaluator, envelope_tail: Callable[[float], float],
                  density: Evaluator | None = None, cutoff: float = 40.0, nodes: int = 16) -> "Measure":
        tail = TailRule(start, density or constant(1.0), envelope, envelope_tail, cutoff=cutoff, nodes=nodes)
        return cls(tail=tail, label=f"Lebesgue[{start},inf)")

    @classmethod
    def haar_circle(cls, nodes: int = 256) -> "Measure":
        """Normalized Haar measure on the rotation group, parametrized by angle."""
        piece = DensityPiece(0.0, 2 * math.pi, constant(1 / (2 * math.pi)), nodes=nodes, rule="periodic")
        return cls(pieces=(piece,), label="Haar(SO(2))")

    # -- algebra ------------------------------------------------------
    def __add__(self, other: "Measure") -> "Measure":
        if not isinstance(other, Measure):
            return NotImplemented
        if self.tail is not None and other.tail is not None:
            raise InvalidMeasure("cannot add two measures that both carry a tail")
        merged: dict[float, list] = {}
        for p, w in self.atoms + other.atoms:
            key = _as_float(p)
            if key in merged:
                merged[key][1] = merged[key][1] + w
            else:
                merged[key] = [p, w]
        atoms = tuple((p, w) for p, w in merged.values())
        return Measure(atoms=atoms, pieces=self.pieces + other.pieces, tail=self.tail or other.tail,
                       signed=self.signed or other.signed,
                       label=f"{self.label} + {other.label}")

    def scaled(self, c) -> "Measure":
        if self.tail is not None:
            t = self.tail
            cf = float(c)
            tail = replace(t, density=lambda u, d=t.density: cf * d(u))
        else:
            tail = None
        pieces = tuple(
            replace(p, density=(lambda u, d=p.density, cf=float(c): cf * d(u)),
                    poly=None if p.poly is None else tuple(Fraction(c) * a for a in p.poly))
            for p in self.pieces
        )
        return Measure(atoms=tuple((p, c * w) for p, w in self.atoms), pieces=pieces, tail=tail,
                       signed=self.signed or c < 0, label=f"{c}*({self.label})")

    def __rmul__(self, c) -> "Measure":
        return self.scaled(c)

    def as_probability(self) -> "Measure":
        return replace(self, probability=True)

    # -- structure ----------------------------------------------------
    @property
    def is_atomless(self) -> bool:
        return not self.atoms

    @property
    def is_purely_atomic(self) -> bool:
        return not self.pieces and self.tail is None

    @property
    def support(self) -> tuple[float, float]:
        lows = [_as_float(p) for p, _ in self.atoms] + [float(pc.lo) for pc in self.pieces]
        highs = [_as_float(p) for p, _ in self.atoms] + [float(pc.hi) for pc in self.pieces]
        if self.tail is not None:
            lows.append(float(self.tail.start))
            highs.append(math.inf)
        if not lows:
            return (0.0, 0.0)
        return (min(lows), max(highs))

    @property
    def is_exact(self) -> bool:
        """True when every weight, atom and density is representable in rationals."""
        if self.tail is not None:
            return False
        for p, w in self.atoms:
            if not isinstance(p, (int, Fraction)) or not isinstance(w, (int, Fraction)):
                return False
        for pc in self.pieces:
            if pc.poly is None or not isinstance(pc.lo, (int, Fraction)) or not isinstance(pc.hi, (int, Fraction)):
                return False
        return True

    def restrict(self, lo: float = -math.inf, hi: float = math.inf) -> "Measure":
        """The measure restricted to the half-open window ``(lo, hi]``."""
        atoms = tuple((p, w) for p, w in self.atoms if lo < _as_float(p) <= hi)
        pieces = []
        for pc in self.pieces:
            a, b = max(float(pc.lo), lo), min(float(pc.hi), hi)
            if b > a:
                if (a, b) == (float(pc.lo), float(pc.hi)):
                    pieces.append(pc)
                else:
                    pieces.append(_clip_piece(pc, a, b))
        tail = self.tail
        if tail is not None:
            start = max(float(tail.start), lo)
            if hi <= start:
                tail = None
            elif math.isfinite(hi):
                pieces.append(DensityPiece(start, hi, tail.density, nodes=tail.nodes))
                tail = None
            else:
                tail = replace(tail, start=start, cutoff=max(float(tail.cutoff), start + 1.0))
        return Measure(atoms=atoms, pieces=tuple(pieces), tail=tail, signed=self.signed,
                       label=f"{self.label}|({lo},{hi}]")

    def quadrature(self, settings: QuadSettings = DEFAULT_QUAD):
        """Nodes, weights and the slice of tail nodes."""
        us, ws = [], []
        if self.atoms:
            us.append(np.array([_as_float(p) for p, _ in self.atoms]))
            ws.append(np.array([float(w) for _, w in self.atoms]))
        for pc in self.pieces:
            u, w = pc.rule_nodes(settings)
            us.append(u)
            ws.append(w)
        n_body = sum(len(u) for u in us)
        if self.tail is not None:
            u, w = self.tail.rule_nodes(settings)
            us.append(u)
            ws.append(w)
        if not us:
            return np.zeros(0), np.zeros(0), slice(0, 0)
        u = np.concatenate(us)
        w = np.concatenate(ws)
        return u, w, slice(n_body, len(u))


def _evaluate(g, u: np.ndarray) -> np.ndarray:
    vals = np.asarray(g(u))
    if vals.ndim == 0:
        vals = np.full(len(u), vals)
    return vals


def _check_finite(vals: np.ndarray, u: np.ndarray) -> None:
    finite = np.isfinite(vals)
    if not finite.all():
        flat = finite.reshape(len(u), -1).all(axis=1)
        bad = int(np.argmin(flat))
        raise NanInIntegrand(f"non-finite integrand value at node u={u[bad]!r}", node=float(u[bad]))


def integrate_detailed(g, mu: Measure, settings: QuadSettings = DEFAULT_QUAD,
                       refine: bool = False) -> IntegralResult:
    """Integrate ``g`` against ``mu``.

    ``g`` maps a 1-D array of parameter values to an array whose first axis
    matches it (trailing axes carry vector values or batches of points).
    """
    u, w, tail_slice = mu.quadrature(settings)
    if len(u) == 0:
        probe = np.asarray(g(np.zeros(1)))
        return IntegralResult(np.zeros(probe.shape[1:]) if probe.ndim else 0.0, 0.0, 0.0 if refine else None)
    vals = _evaluate(g, u)
    _check_finite(vals, u)
    value = np.tensordot(w, vals, axes=(0, 0))
    tail_bound = 0.0
    if mu.tail is not None:
        tail = mu.tail
        tu = u[tail_slice]
        if settings.tail_scale is not None:
            scale = settings.tail_scale
        else:
            env = np.asarray(tail.envelope(tu), dtype=float)
            mag = np.abs(vals[tail_slice]).reshape(len(tu), -1).max(axis=1)
            with np.errstate(divide="ignore", invalid="ignore"):
                ratio = np.where(mag == 0, 0.0, mag / env)
            scale = float(np.max(ratio)) if len(ratio) else 0.0
        tail_bound = scale * float(tail.envelope_tail(tail.cutoff))
        if not tail_bound <= settings.tail_tol:
            raise TailUnresolved(
                f"tail remainder bound {tail_bound:.3g} beyond u={tail.cutoff} exceeds tail_tol={settings.tail_tol:.3g}",
                bound=tail_bound,
            )
    refinement = None
    if refine:
        finer = integrate_detailed(g, mu, settings.refined()).value
        refinement = float(np.max(np.abs(np.asarray(finer) - np.asarray(value))))
    if np.ndim(value) == 0:
        value = value.item()
    return IntegralResult(value, tail_bound, refinement)


def integrate(g, mu: Measure, settings: QuadSettings = DEFAULT_QUAD):
    return integrate_detailed(g, mu, settings).value


def total_mass(mu: Measure, settings: QuadSettings = DEFAULT_QUAD) -> float:
    return float(np.real(integrate(lambda u: np.ones(len(u)), mu, settings)))


def atom_mass(mu: Measure, point) -> float:
    p = _as_float(point)
    return float(sum(w for q, w in mu.atoms if _as_float(q) == p))


def total_variation(mu: Measure, settings: QuadSettings = DEFAULT_QUAD) -> float:
    atomic = sum(abs(float(w)) for _, w in mu.atoms)
    dens = 0.0
    for pc in mu.pieces:
        _, w = pc.rule_nodes(settings)
        dens += float(np.abs(w).sum())
    if mu.tail is not None:
        dens += total_mass(Measure(tail=mu.tail), settings)
    return atomic + dens


@dataclass(frozen=True)
class Exhaustion:
    """Nested sets ``K_m = Omega ∩ (-inf, cutoffs[m]]`` of finite measure."""

    cutoffs: tuple[float, ...]

    def __post_init__(self):
        if any(b <= a for a, b in zip(self.cutoffs, self.cutoffs[1:])):
            raise InvalidMeasure("exhaustion cutoffs must be strictly increasing")

    def __len__(self):
        return len(self.cutoffs)

    def inside(self, mu: Measure, m: int) -> Measure:
        return mu.restrict(hi=self.cutoffs[m])

    def outside(self, mu: Measure, m: int) -> Measure:
        return mu.restrict(lo=self.cutoffs[m])

    def mass(self, mu: Measure, m: int, settings: QuadSettings = DEFAULT_QUAD) -> float:
        return total_mass(self.inside(mu, m), settings)

    @classmethod
    def default_for(cls, mu: Measure, step: float = 0.5, count: int = 8) -> "Exhaustion":
        lo, hi = mu.support
        if mu.tail is not None:
            start = float(mu.tail.start)
            return cls(tuple(np.arange(start, float(mu.tail.cutoff) + step / 2, step)))
        if mu.is_purely_atomic and all(float(p).is_integer() for p, _ in mu.atoms):
            return cls(tuple(float(k) for k in range(int(lo), int(hi) + 1)))
        if hi == lo:
            return cls((hi,))
        return cls(tuple(np.linspace(lo, hi, count + 1)[1:]))
