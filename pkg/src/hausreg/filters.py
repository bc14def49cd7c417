"""Filters with countable base, parameter-indexed map families, and limits.

A :class:`FilterBase` is the decreasing family ``F_1 ⊇ F_2 ⊇ ...`` given by
thresholds ``T_k = t0 * ratio**(k-1)``; membership is ``x > T_k`` (half-line),
``n >= ceil(T_k)`` (index), or ``|x| > T_k`` (orthant / ball complement).

Points are numpy arrays: a batch of scalar points has shape ``(N,)`` and a
batch of points in R^n has shape ``(N, n)``.  A :class:`MapFamily` maps a
parameter batch ``u`` of shape ``(M,)`` and a point batch to images of shape
``(M, N)`` or ``(M, N, n)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import EvalError, HausdorffError, InconclusiveByConstruction
from .measures import DEFAULT_QUAD, Measure, atom_mass

KINDS = ("half-line", "index", "orthant", "ball-complement")

PROVEN = "PROVEN"
EVIDENCE = "EVIDENCE"
FAIL = "FAIL"

CONVERGED = "CONVERGED"
DIVERGENT = "DIVERGENT"
INCONCLUSIVE = "INCONCLUSIVE"


@dataclass(frozen=True)
class FilterBase:
    kind: str = "half-line"
    t0: float = 10 ** 2.5
    ratio: float = 10 ** 0.5
    dim: int = 1
    spread: float = 2.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown filter kind {self.kind!r}; expected one of {KINDS}")
        if not (self.t0 > 0 and self.ratio > 1 and self.spread > 1):
            raise ValueError("filter thresholds must be positive and strictly increasing")
        if self.kind in ("half-line", "index") and self.dim != 1:
            raise ValueError(f"{self.kind} filters live on scalar domains")

    @property
    def vector(self) -> bool:
        return self.kind in ("orthant", "ball-complement")

    def threshold(self, k: int) -> float:
        t = self.t0 * self.ratio ** (k - 1)
        return float(math.ceil(t)) if self.kind == "index" else t

    def norms(self, points) -> np.ndarray:
        points = np.asarray(points, dtype=float)
        if self.vector:
            return np.linalg.norm(points, axis=-1)
        return points

    def in_domain(self, points) -> np.ndarray:
        points = np.asarray(points, dtype=float)
        if self.kind == "half-line":
            return points > 0
        if self.kind == "index":
            return (points >= 0) & (points == np.floor(points))
        if self.kind == "orthant":
            return np.all(points > 0, axis=-1)
        return np.ones(points.shape[:-1], dtype=bool)

    def contains(self, k: int, points) -> np.ndarray:
        t = self.threshold(k)
        r = self.norms(points)
        inside = r >= t if self.kind == "index" else r > t
        return inside & self.in_domain(points)

    def _directions(self, rng, n: int) -> np.ndarray:
        v = rng.standard_normal((n, self.dim))
        if self.kind == "orthant":
            v = np.abs(v) + 1e-3
        return v / np.linalg.norm(v, axis=1, keepdims=True)

    def _at_radius(self, rng, r: np.ndarray) -> np.ndarray:
        if self.kind == "index":
            return np.ceil(r)
        if not self.vector:
            return r
        return r[:, None] * self._directions(rng, len(r))

    def sample(self, k: int, n: int, seed: int = 42) -> np.ndarray:
        """``n`` deterministic points of ``F_k`` with norms in ``(T_k, spread*T_k]``."""
        rng = np.random.default_rng([seed, k])
        t = self.threshold(k)
        r = t * self.spread ** (1.0 - rng.random(n))
        r[0] = t * self.spread
        return self._at_radius(rng, r)

    def sample_domain(self, n: int, seed: int = 42, levels: int = 8) -> np.ndarray:
        """Points spread log-uniformly over the whole domain, up to the deepest level."""
        rng = np.random.default_rng([seed, 10_000 + levels])
        lo = 1e-3 * self.t0 if self.kind != "index" else 1.0
        hi = self.threshold(levels) * self.spread
        r = np.exp(rng.uniform(math.log(lo), math.log(hi), n))
        pts = self._at_radius(rng, r)
        if self.kind == "index":
            pts = np.concatenate(([0.0], pts[1:]))
        return pts

    def is_nested(self, levels: int = 8, n: int = 64, seed: int = 42) -> bool:
        for k in range(1, levels):
            pts = self.sample(k + 1, n, seed)
            if not np.all(self.contains(k, pts)) or not np.all(self.contains(k + 1, pts)):
                return False
        return True


@dataclass(frozen=True)
class LimitSettings:
    tol: float = 1e-3
    levels: int = 8
    samples_per_level: int = 64
    window: int = 3
    seed: int = 42


@dataclass(frozen=True)
class LimitEstimate:
    status: str
    value: object
    deviation_trace: tuple[float, ...]
    thresholds: tuple[float, ...] = ()

    @property
    def converged(self) -> bool:
        return self.status == CONVERGED


def _max_norm(a: np.ndarray) -> np.ndarray:
    a = np.abs(a)
    return a.reshape(a.shape[0], -1).max(axis=1) if a.ndim > 1 else a


def _point_repr(p) -> object:
    p = np.asarray(p)
    return p.tolist() if p.ndim else float(p)


def evaluate_checked(g: Callable, points: np.ndarray) -> np.ndarray:
    """Evaluate ``g`` on a point batch; failures and non-finite values become ``eval-error``."""
    try:
        vals = np.asarray(g(points))
    except HausdorffError:
        raise
    except Exception as exc:
        for p in points:
            try:
                g(np.asarray([p]))
            except Exception:
                raise EvalError(f"evaluator failed at {_point_repr(p)}: {exc}", point=_point_repr(p)) from exc
        raise EvalError(f"evaluator failed on batch: {exc}") from exc
    if vals.ndim == 0:
        vals = np.full(len(points), vals)
    bad = ~np.isfinite(vals).reshape(len(points), -1).all(axis=1)
    if bad.any():
        p = points[int(np.argmax(bad))]
        raise EvalError(f"non-finite value at {_point_repr(p)}", point=_point_repr(p))
    return vals


def limit_along_filter(g: Callable, F: FilterBase, settings: LimitSettings = LimitSettings()) -> LimitEstimate:
    """Numerical surrogate for ``lim_{x, F} g(x)``.

    The candidate is the mean of ``g`` over the deepest level's samples;
    the trace records, per level, the worst max-norm deviation from it.
    """
    values = []
    for k in range(1, settings.levels + 1):
        pts = F.sample(k, settings.samples_per_level, settings.seed)
        values.append(evaluate_checked(g, pts))
    candidate = values[-1].mean(axis=0)
    trace = tuple(float(_max_norm(v - candidate).max()) for v in values)
    scale = max(1.0, float(np.max(np.abs(candidate))))
    slack = 1e-12 * scale
    w = min(settings.window, len(trace))
    tail = trace[-w:]
    shrinking = all(b <= a + slack for a, b in zip(tail, tail[1:]))
    if trace[-1] <= settings.tol and shrinking:
        status = CONVERGED
    elif trace[-1] > settings.tol and trace[-1] >= 0.5 * tail[0]:
        status = DIVERGENT
    else:
        status = INCONCLUSIVE
    value = candidate.item() if np.ndim(candidate) == 0 else candidate
    thresholds = tuple(F.threshold(k) for k in range(1, settings.levels + 1))
    return LimitEstimate(status, value, trace, thresholds)


# --------------------------------------------------------------------------
# Map families
# --------------------------------------------------------------------------

def _param_eval(fn, u: np.ndarray, shape=()) -> np.ndarray:
    v = np.asarray(fn(u), dtype=float)
    if v.shape[: 1] != (len(u),):
        v = np.broadcast_to(v, (len(u),) + shape)
    return v


class MapFamily:
    """``A(u): S -> S'`` for parameters ``u``; subclasses add structural agreement rules."""

    tag = "custom"

    def __call__(self, u, X) -> np.ndarray:
        raise NotImplementedError

    def structural(self, u: np.ndarray, F: FilterBase, Fp: FilterBase) -> np.ndarray | None:
        """Per-parameter PROVEN/FAIL verdicts, or None when no rule is registered."""
        return None

    def describe(self) -> dict:
        return {"class": self.tag}


class CustomFamily(MapFamily):
    tag = "custom"

    def __init__(self, fn: Callable, label: str = ""):
        self.fn = fn
        self.label = label

    def __call__(self, u, X):
        return self.fn(np.asarray(u, dtype=float), np.asarray(X, dtype=float))

    def describe(self):
        return {"class": self.tag, "map": self.label}


def _scale_points(u: np.ndarray, X: np.ndarray) -> np.ndarray:
    u = np.asarray(u, dtype=float)
    X = np.asarray(X, dtype=float)
    return u.reshape((-1,) + (1,) * X.ndim) * X[None]


class Dilation(MapFamily):
    """``A(u)(x) = u x``."""

    tag = "dilation"

    def __call__(self, u, X):
        return _scale_points(u, X)

    def structural(self, u, F, Fp):
        u = np.asarray(u, dtype=float)
        ok = u != 0 if Fp.kind == "ball-complement" else u > 0
        return np.where(ok, PROVEN, FAIL)


class Shift(MapFamily):
    """``A(u)(x) = x + s(u)`` on scalar domains."""

    tag = "shift"

    def __init__(self, s: Callable = None, label: str = "u"):
        self.s = s if s is not None else (lambda u: u)
        self.label = label

    def __call__(self, u, X):
        s = _param_eval(self.s, np.asarray(u, dtype=float))
        X = np.asarray(X, dtype=float)
        return X[None] + s.reshape((-1,) + (1,) * X.ndim)

    def structural(self, u, F, Fp):
        s = _param_eval(self.s, np.asarray(u, dtype=float))
        ok = np.isfinite(s) & (s >= 0)
        if Fp.kind == "index":
            ok &= s == np.floor(s)
        return np.where(ok, PROVEN, FAIL)

    def describe(self):
        return {"class": self.tag, "s": self.label}


class ConstantTarget(MapFamily):
    """``A(u)(x) = s(u)`` for every x (the classical matrix-method case)."""

    tag = "constant"

    def __init__(self, s: Callable = None, label: str = "u"):
        self.s = s if s is not None else (lambda u: u)
        self.label = label

    def __call__(self, u, X):
        s = _param_eval(self.s, np.asarray(u, dtype=float))
        X = np.asarray(X, dtype=float)
        return np.broadcast_to(s.reshape((-1,) + (1,) * X.ndim), (len(s),) + X.shape).copy()

    def structural(self, u, F, Fp):
        return np.full(np.shape(u), FAIL, dtype=object)

    def describe(self):
        return {"class": self.tag, "s": self.label}


def _matrices(fn, u: np.ndarray) -> np.ndarray:
    m = np.asarray(fn(u), dtype=float)
    if m.ndim == 2:
        m = np.broadcast_to(m, (len(u),) + m.shape)
    return m


def _apply_matrix(M: np.ndarray, X: np.ndarray) -> np.ndarray:
    # M: (U, n, n), X: (N, n) -> (U, N, n)
    return np.einsum("uij,nj->uni", M, np.asarray(X, dtype=float))


class Linear(MapFamily):
    """``A(u)(x) = M(u) x`` with invertible ``M(u)`` (automorphisms of R^n)."""

    tag = "linear"

    def __init__(self, matrix: Callable, label: str = ""):
        self.matrix = matrix
        self.label = label

    def __call__(self, u, X):
        return _apply_matrix(_matrices(self.matrix, np.atleast_1d(np.asarray(u, dtype=float))), X)

    def inverse_norms(self, u) -> np.ndarray:
        M = _matrices(self.matrix, np.atleast_1d(np.asarray(u, dtype=float)))
        out = np.full(len(M), np.inf)
        for i, m in enumerate(M):
            if abs(np.linalg.det(m)) > 0 and np.isfinite(np.linalg.cond(m)):
                out[i] = np.linalg.norm(np.linalg.inv(m), 2)
        return out

    def structural(self, u, F, Fp):
        if Fp.kind != "ball-complement":
            return None
        return np.where(np.isfinite(self.inverse_norms(u)), PROVEN, FAIL)

    def describe(self):
        return {"class": self.tag, "matrix": self.label}


class Rotation(Linear):
    """Plane rotations by angle ``theta(u)``, optionally followed by a fixed shift ``h``.

    The default angle is ``u`` itself.
    """

    tag = "rotation"

    def __init__(self, angle: Callable = None, offset=None, label: str = "u"):
        self.angle = angle if angle is not None else (lambda u: u)
        self.offset = None if offset is None else np.asarray(offset, dtype=float)

        def matrix(u):
            t = _param_eval(self.angle, u)
            c, s = np.cos(t), np.sin(t)
            return np.stack([np.stack([c, -s], -1), np.stack([s, c], -1)], -2)

        super().__init__(matrix, label)

    def __call__(self, u, X):
        out = super().__call__(u, X)
        return out if self.offset is None else out + self.offset

    def structural(self, u, F, Fp):
        # norm preserving: R(u) maps {|x| > T} onto {|y| > T}; a shift h moves it into {|y| > T - |h|}
        return np.full(np.shape(u), PROVEN, dtype=object)

    def describe(self):
        d = {"class": self.tag, "angle": self.label}
        if self.offset is not None:
            d["offset"] = self.offset.tolist()
        return d


class Affine(MapFamily):
    """``A(u)(x) = M(u) x + b(u)`` on the open positive orthant."""

    tag = "affine"

    def __init__(self, matrix: Callable, offset: Callable, label: str = ""):
        self.matrix = matrix
        self.offset = offset
        self.label = label

    def __call__(self, u, X):
        u = np.atleast_1d(np.asarray(u, dtype=float))
        M = _matrices(self.matrix, u)
        b = np.asarray(self.offset(u), dtype=float)
        if b.ndim == 1:
            b = np.broadcast_to(b, (len(u), M.shape[-1]))
        return _apply_matrix(M, X) + b[:, None, :]

    def violations(self, u) -> np.ndarray:
        """True where M(u) has a negative entry, is singular, or b(u) leaves the closed orthant."""
        u = np.atleast_1d(np.asarray(u, dtype=float))
        M = _matrices(self.matrix, u)
        b = np.asarray(self.offset(u), dtype=float)
        if b.ndim == 1:
            b = np.broadcast_to(b, (len(u), M.shape[-1]))
        bad = np.any(M < 0, axis=(1, 2)) | np.any(b < 0, axis=1)
        det = np.abs(np.linalg.det(M))
        return bad | ~(det > 0)

    def inverse_norms(self, u) -> np.ndarray:
        M = _matrices(self.matrix, np.atleast_1d(np.asarray(u, dtype=float)))
        return np.array([np.linalg.norm(np.linalg.inv(m), 2) if abs(np.linalg.det(m)) > 0 else np.inf for m in M])

    def structural(self, u, F, Fp):
        # |M x + b| >= |M x| >= |x| / ||M^-1|| for nonnegative M, b and x > 0
        return np.where(self.violations(u), FAIL, PROVEN)

    def describe(self):
        return {"class": self.tag, "map": self.label}


# --------------------------------------------------------------------------
# Agreement with filters
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class AgreementSettings:
    levels: int = 8
    samples_per_level: int = 16
    search_depth: int = 48
    max_probes: int = 64
    sampling: bool = True
    seed: int = 42


@dataclass(frozen=True)
class RegionVerdict:
    lo: float
    hi: float
    verdict: str
    mass: float
    witness: float | None = None


@dataclass(frozen=True)
class AgreementVerdict:
    agrees: bool
    fail_mass: float
    regions: tuple[RegionVerdict, ...]
    witness: float | None = None
    method: str = "structural"

    def to_dict(self) -> dict:
        return {
            "agrees": self.agrees,
            "fail_mass": self.fail_mass,
            "witness": self.witness,
            "method": self.method,
            "regions": [r.__dict__ for r in self.regions],
        }


def sampling_evidence(family: MapFamily, u: float, F: FilterBase, Fp: FilterBase,
                      settings: AgreementSettings = AgreementSettings()) -> tuple[str, int | None]:
    """EVIDENCE if for every target level k' some level j has A(u)(F_j samples) ⊆ F'_k'.

    Returns the verdict and, on failure, the first target level left uncovered.
    """
    images = {}
    for kp in range(1, settings.levels + 1):
        found = False
        for j in range(1, settings.levels + settings.search_depth + 1):
            if j not in images:
                pts = F.sample(j, settings.samples_per_level, settings.seed)
                images[j] = np.asarray(family(np.array([u]), pts))[0]
            if np.all(Fp.contains(kp, images[j])):
                found = True
                break
        if not found:
            return FAIL, kp
    return EVIDENCE, None


def _probes(mu: Measure, max_probes: int, thin: bool):
    """Parameter probes with the mu-mass each one stands for."""
    u_list, m_list = [], []
    for p, w in mu.atoms:
        u_list.append(float(p))
        m_list.append(float(w))
    ends = set()
    for pc in mu.pieces:
        ends.update((float(pc.lo), float(pc.hi)))
    if mu.tail is not None:
        ends.add(float(mu.tail.start))
    for e in sorted(ends):
        if e not in u_list:
            u_list.append(e)
            m_list.append(atom_mass(mu, e))
    body = Measure(pieces=mu.pieces, tail=mu.tail) if (mu.pieces or mu.tail) else None
    if body is not None:
        u, w, _ = body.quadrature(DEFAULT_QUAD)
        order = np.argsort(u)
        u, w = u[order], w[order]
        if thin and len(u) > max_probes:
            chunks = np.array_split(np.arange(len(u)), max_probes)
            u = np.array([u[c[len(c) // 2]] for c in chunks])
            w = np.array([w[c].sum() for c in chunks])
        u_list.extend(u.tolist())
        m_list.extend(w.tolist())
    return np.array(u_list), np.array(m_list)


def agrees_with(family: MapFamily, F: FilterBase, Fp: FilterBase, mu: Measure,
                settings: AgreementSettings = AgreementSettings()) -> AgreementVerdict:
    """Check that ``A(u)(F)`` is a base of ``F'`` for mu-almost every ``u``.

    Registered families are decided by their structural rule; other families
    fall back to sampling evidence.  The family agrees iff the FAIL probes
    carry zero mu-mass (atoms are decisive; density failures are seen only
    at probed nodes).
    """
    u, mass = _probes(mu, settings.max_probes, thin=False)
    verdicts = family.structural(u, F, Fp)
    method = "structural"
    if verdicts is None:
        if not settings.sampling:
            raise InconclusiveByConstruction(
                f"family {family.tag!r} has no structural rule and sampling is disabled")
        u, mass = _probes(mu, settings.max_probes, thin=True)
        verdicts = np.array([sampling_evidence(family, float(v), F, Fp, settings)[0] for v in u], dtype=object)
        method = "sampling"
    verdicts = np.asarray(verdicts, dtype=object)
    order = np.argsort(u, kind="stable")
    regions = []
    for i in order:
        v, m, p = verdicts[i], float(mass[i]), float(u[i])
        if regions and regions[-1]["verdict"] == v:
            r = regions[-1]
            r["hi"] = p
            r["mass"] += m
            if v == FAIL and m > 0 and (r["witness_mass"] <= 0):
                r["witness"], r["witness_mass"] = p, m
        else:
            regions.append({"lo": p, "hi": p, "verdict": v, "mass": m, "witness": p if v == FAIL else None,
                            "witness_mass": m if v == FAIL else 0.0})
    out = tuple(RegionVerdict(r["lo"], r["hi"], r["verdict"], r["mass"], r["witness"]) for r in regions)
    fail_mass = float(sum(r.mass for r in out if r.verdict == FAIL))
    witness = None
    fails = [r for r in regions if r["verdict"] == FAIL]
    if fails:
        best = max(fails, key=lambda r: r["witness_mass"])
        witness = best["witness"]
    return AgreementVerdict(fail_mass <= 0.0, fail_mass, out, witness, method)
