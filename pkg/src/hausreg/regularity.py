"""Numerical checks of regularity conditions, plus empirical limit preservation.

Every verdict here is evidence, not proof.  A condition is PASS when the
numerical diagnostic is consistent with it, FAIL only with a concrete
witness, and INCONCLUSIVE otherwise.  The overall verdict of a
:class:`ConditionsReport` is REGULAR-EVIDENCE when all six entries pass and
NOT-REGULAR when the kernel-mass limit (iv) fails or the map family visibly
disagrees with the filters on a set of positive mass.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import HausdorffError, InconclusiveByConstruction, SignedMeasureRejected
from .filters import (CONVERGED, DIVERGENT, AgreementSettings, FilterBase, LimitEstimate, LimitSettings,
                      _probes, agrees_with, limit_along_filter)
from .measures import DEFAULT_QUAD, Exhaustion, Measure, QuadSettings, atom_mass, integrate, total_mass
from .operators import (DiscreteOperatorSpec, MatrixMethod, OperatorSpec, SecondKindSpec, TestFunction,
                        apply_discrete, apply_generic, apply_second_kind, kernel_mass)

PASS = "PASS"
FAIL = "FAIL"
INCONCLUSIVE = "INCONCLUSIVE"

REGULAR = "REGULAR-EVIDENCE"
NOT_REGULAR = "NOT-REGULAR"

CONDITION_IDS = ("i.a", "i.b", "ii", "iii", "iv", "agrees")
EXIT_CODES = {REGULAR: 0, NOT_REGULAR: 1, INCONCLUSIVE: 2}


@dataclass(frozen=True)
class CheckSettings:
    eps_grid: tuple[float, ...] = (1e-1, 1e-2, 1e-3, 1e-4)
    delta_grid: tuple[float, ...] = (1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6, 1e-8, 1e-10)
    samples: int = 64
    levels: int = 8
    tol_limit: float = 1e-3
    tol_sup: float = 1e-2
    tol_column: float = 1e-6
    seed: int = 42
    omit_ia_for_atomless: bool = False
    agreement_probes: int = 64
    quad: QuadSettings = DEFAULT_QUAD

    def __post_init__(self):
        for name in ("eps_grid", "delta_grid"):
            grid = getattr(self, name)
            if not grid or not all(math.isfinite(g) and g > 0 for g in grid):
                raise ValueError(f"{name} must be a nonempty grid of finite positive numbers")
            if any(b >= a for a, b in zip(grid, grid[1:])):
                raise ValueError(f"{name} must be strictly decreasing")
        if self.samples < 2 or self.levels < 2:
            raise ValueError("need at least 2 samples and 2 filter levels")

    def limit_settings(self, tol: float | None = None) -> LimitSettings:
        return LimitSettings(tol=self.tol_limit if tol is None else tol, levels=self.levels,
                             samples_per_level=self.samples, seed=self.seed)

    def agreement_settings(self) -> AgreementSettings:
        return AgreementSettings(levels=self.levels, max_probes=self.agreement_probes, seed=self.seed)


DEFAULT_CHECK = CheckSettings()


def to_plain(v):
    """JSON-friendly copy of nested numpy/Fraction data."""
    if isinstance(v, dict):
        return {str(k): to_plain(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [to_plain(x) for x in v]
    if isinstance(v, np.ndarray):
        return to_plain(v.tolist())
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if v is None or isinstance(v, str):
        return v
    try:
        return float(v)
    except (TypeError, ValueError):
        return repr(v)


@dataclass(frozen=True)
class ConditionEntry:
    id: str
    verdict: str
    evidence: dict = field(default_factory=dict)
    witness: object = None
    basis: str = "numerical"

    def to_dict(self) -> dict:
        return {"id": self.id, "verdict": self.verdict, "basis": self.basis,
                "evidence": to_plain(self.evidence), "witness": to_plain(self.witness)}


@dataclass(frozen=True)
class ConditionsReport:
    entries: tuple[ConditionEntry, ...]
    overall: str
    subject: str = ""
    auxiliary: tuple[ConditionEntry, ...] = ()

    def entry(self, cid: str) -> ConditionEntry:
        for e in self.entries + self.auxiliary:
            if e.id == cid:
                return e
        raise KeyError(cid)

    def verdicts(self) -> dict[str, str]:
        return {e.id: e.verdict for e in self.entries}

    @property
    def exit_code(self) -> int:
        return EXIT_CODES[self.overall]

    def to_dict(self) -> dict:
        return {
            "subject": self.subject,
            "overall": self.overall,
            "exit_code": self.exit_code,
            "conditions": [e.to_dict() for e in self.entries],
            "auxiliary": [e.to_dict() for e in self.auxiliary],
        }


def overall_verdict(entries: Sequence[ConditionEntry], auxiliary: Sequence[ConditionEntry] = ()) -> str:
    by_id = {e.id: e for e in entries}
    iv, agrees = by_id.get("iv"), by_id.get("agrees")
    if (iv is not None and iv.verdict == FAIL) or \
            (agrees is not None and agrees.verdict == FAIL and (agrees.evidence.get("fail_mass") or 0) > 0):
        return NOT_REGULAR
    if all(by_id.get(c) is not None and by_id[c].verdict == PASS for c in CONDITION_IDS) \
            and all(a.verdict == PASS for a in auxiliary):
        return REGULAR
    return INCONCLUSIVE


def _report(entries, subject, auxiliary=(), gating: bool = True) -> ConditionsReport:
    """Assemble a report; gating auxiliary entries must also PASS for REGULAR-EVIDENCE."""
    entries = tuple(sorted(entries, key=lambda e: CONDITION_IDS.index(e.id)))
    overall = overall_verdict(entries, auxiliary if gating else ())
    return ConditionsReport(entries, overall, subject, tuple(auxiliary))


# --------------------------------------------------------------------------
# Sample sets and small numerical helpers
# --------------------------------------------------------------------------

def _x_samples(F: FilterBase, settings: CheckSettings) -> tuple[np.ndarray, np.ndarray]:
    """A base sample of S and a doubled one reaching twice as many filter levels."""
    small = F.sample_domain(settings.samples, settings.seed, settings.levels)
    big = F.sample_domain(2 * settings.samples, settings.seed + 1, 2 * settings.levels)
    deep = np.concatenate([F.sample(k, settings.samples, settings.seed) for k in range(1, 2 * settings.levels + 1)])
    return small, np.concatenate([small, big, deep])


def _stability(sup_small: float, sup_big: float, tol: float) -> str:
    if not math.isfinite(sup_big) or sup_big >= 2 * sup_small + tol:
        return FAIL
    if sup_big <= sup_small * (1 + tol) + tol:
        return PASS
    return INCONCLUSIVE


def _point(X: np.ndarray, i: int):
    p = X[i]
    return p.tolist() if np.ndim(p) else float(p)


def _loglog_slope(m: np.ndarray, v: np.ndarray) -> float:
    v = np.abs(v)
    if np.any(v <= 0):
        return -math.inf if np.all(v[len(v) // 2:] <= 0) else math.nan
    return float(np.polyfit(np.log(m + 1.0), np.log(v), 1)[0])


def _richardson(m: np.ndarray, v: np.ndarray) -> float:
    """Limit of v_m under the model v_m ≈ L + a/(m+1), from the window ends."""
    K, M = int(m[0]), int(m[-1])
    return float(((M + 1) * v[-1] - (K + 1) * v[0]) / (M - K))


def _sequence_to_zero(m: np.ndarray, v: np.ndarray, tol: float) -> tuple[str, float, float]:
    """Evidence that v_m → 0 over the window: (verdict, slope, extrapolated limit)."""
    slope = _loglog_slope(m, v)
    limit = _richardson(m, v)
    if float(np.max(np.abs(v))) <= tol * 1e-3 or slope <= -0.5:
        return PASS, slope, limit
    if abs(limit) > tol and (math.isnan(slope) or slope > -0.1):
        return FAIL, slope, limit
    return INCONCLUSIVE, slope, limit


# --------------------------------------------------------------------------
# Theorem-1 style criterion and Toeplitz conditions
# --------------------------------------------------------------------------

def check_rogosinski(mu: Measure, settings: QuadSettings = DEFAULT_QUAD) -> dict:
    """Regularity of ∫ f(u x) dμ(u) on (0, ∞): unit mass and no atom at 0."""
    from .methods import _check_unit_support
    _check_unit_support(mu)
    mass = total_mass(mu, settings)
    atom0 = float(atom_mass(mu, 0))
    regular = abs(mass - 1.0) <= settings.mass_tol and atom0 == 0
    return {"regular": bool(regular), "mass": float(mass), "atom0": atom0}


@dataclass(frozen=True)
class ToeplitzReport:
    row_norm_sup: float
    row_norms: dict
    column_limits: dict
    row_sum_limits: dict
    verdicts: dict
    verdict: str
    witness: object = None

    def to_dict(self) -> dict:
        return to_plain(self.__dict__)


def check_toeplitz(C: MatrixMethod, M: int = 50, settings: CheckSettings = DEFAULT_CHECK,
                   columns: int | None = None) -> ToeplitzReport:
    """Uniform row ℓ¹ bound, vanishing columns and unit row sums over rows 0..M.

    Column and row-sum limits are judged on the window m ∈ [M/2, M] by a
    log-log decay slope and an extrapolated limit.  Only columns well inside
    the window (n ≤ √M / 2 by default) are tested, where the asymptotic regime
    is already visible.
    """
    if M < 8:
        raise ValueError("truncation depth M must be at least 8")
    rows = [np.array([float(c) for c in C.row(m, upto=M)]) for m in range(M + 1)]
    if any(not np.all(np.isfinite(r)) for r in rows):
        raise HausdorffError("non-finite matrix entry")
    norms = np.array([np.abs(r).sum() for r in rows])
    sums = np.array([r.sum() for r in rows])
    half = M // 2
    window = np.arange(half, M + 1)

    early, late = float(norms[:half].max()), float(norms[half:].max())
    slope = _loglog_slope(window, norms[half:])
    if late <= early * (1 + 1e-6):
        v_rows = PASS
    elif slope >= 0.5:
        v_rows = FAIL
    else:
        v_rows = INCONCLUSIVE
    row_norms = {"sup": float(norms.max()), "early_sup": early, "late_sup": late, "slope": slope}

    ncols = columns if columns is not None else max(1, math.isqrt(M) // 2)
    column_limits = {}
    col_verdicts = []
    for n in range(ncols + 1):
        v = np.array([rows[m][n] if n < len(rows[m]) else 0.0 for m in window])
        verdict, s, lim = _sequence_to_zero(window, v, settings.tol_column)
        column_limits[n] = {"verdict": verdict, "slope": s, "limit": lim, "last": float(v[-1])}
        col_verdicts.append(verdict)

    dev = sums[half:] - 1.0
    v_sums, s_slope, s_lim = _sequence_to_zero(window, dev, settings.tol_column)
    row_sum_limits = {"verdict": v_sums, "slope": s_slope, "limit": 1.0 + s_lim, "last": float(sums[-1])}

    v_cols = FAIL if FAIL in col_verdicts else (PASS if all(c == PASS for c in col_verdicts) else INCONCLUSIVE)
    verdicts = {"rows": v_rows, "columns": v_cols, "row_sums": v_sums}
    witness = None
    if v_cols == FAIL:
        witness = {"column": col_verdicts.index(FAIL)}
    elif v_sums == FAIL:
        witness = {"row_sum_limit": 1.0 + s_lim}
    elif v_rows == FAIL:
        witness = {"row": int(np.argmax(norms))}
    vals = set(verdicts.values())
    overall = FAIL if FAIL in vals else (PASS if vals == {PASS} else INCONCLUSIVE)
    return ToeplitzReport(float(norms.max()), row_norms, column_limits, row_sum_limits, verdicts, overall, witness)


# --------------------------------------------------------------------------
# Continuous conditions
# --------------------------------------------------------------------------

def _parameter_probes(mu: Measure, settings: CheckSettings) -> tuple[np.ndarray, np.ndarray]:
    u, mass = _probes(mu, settings.agreement_probes, thin=True)
    return u, mass


def check_dominated(spec: OperatorSpec, phi: Callable, settings: CheckSettings = DEFAULT_CHECK,
                    F: FilterBase | None = None) -> dict:
    """Search a (u, x) sample grid for |Φ(u, x)| > φ(u) and integrate φ against μ."""
    F = F or default_filter(spec.domain, spec.dim)
    _, X = _x_samples(F, settings)
    u, _ = _parameter_probes(spec.measure, settings)
    bound = np.asarray(phi(u), dtype=float).reshape(-1)
    bound = np.broadcast_to(bound, u.shape)
    vals = np.abs(spec.kernel(u, X))
    excess = vals - bound[:, None] * (1 + 1e-12) - 1e-300
    witness = None
    if np.any(excess > 0):
        i, j = np.unravel_index(int(np.argmax(excess)), excess.shape)
        witness = {"u": float(u[i]), "x": _point(X, j), "kernel": float(vals[i, j]), "phi": float(bound[i])}
    try:
        phi_integral = float(integrate(lambda v: np.asarray(phi(v), dtype=float), spec.measure, settings.quad))
    except HausdorffError:
        phi_integral = math.inf
    return {"dominates": witness is None, "phi_integral": phi_integral, "witness": witness}


def _sup_integral(spec: OperatorSpec, mu: Measure, X: np.ndarray, settings: CheckSettings) -> np.ndarray:
    if not (mu.atoms or mu.pieces or mu.tail):
        return np.zeros(len(X))
    return np.asarray(integrate(lambda u: np.abs(spec.kernel(u, X)), mu, settings.quad), dtype=float)


def _check_ia(spec, small, big, settings):
    vs = _sup_integral(spec, spec.measure, small, settings)
    vb = _sup_integral(spec, spec.measure, big, settings)
    verdict = _stability(float(vs.max()), float(vb.max()), settings.tol_sup)
    ev = {"sup_small": float(vs.max()), "sup_doubled": float(vb.max())}
    witness = _point(big, int(np.argmax(vb))) if verdict == FAIL else None
    return verdict, ev, witness


def _check_ib(spec, small, big, settings):
    u, _ = _parameter_probes(spec.measure, settings)
    vs = np.abs(spec.kernel(u, small)).max(axis=1)
    vb_all = np.abs(spec.kernel(u, big))
    vb = vb_all.max(axis=1)
    verdicts = [_stability(float(a), float(b), settings.tol_sup) for a, b in zip(vs, vb)]
    ev = {"probes": len(u), "max_sup": float(vb.max()) if len(vb) else 0.0}
    if FAIL in verdicts:
        i = verdicts.index(FAIL)
        j = int(np.argmax(vb_all[i]))
        return FAIL, ev, {"u": float(u[i]), "x": _point(big, j)}
    return (PASS if all(v == PASS for v in verdicts) else INCONCLUSIVE), ev, None


def _check_ii(spec, F, exh, settings):
    """For each ε find the first K_m and filter level with sup ∫_{Ω∖K_m} |Φ| dμ < ε."""
    mu = spec.measure
    levels = [F.sample(k, settings.samples, settings.seed) for k in range(1, settings.levels + 1)]
    found = {}
    pending = sorted(settings.eps_grid, reverse=True)
    for m, cutoff in enumerate(exh.cutoffs):
        if not pending:
            break
        outside = exh.outside(mu, m)
        try:
            sups = [float(_sup_integral(spec, outside, X, settings).max()) for X in levels]
        except HausdorffError:
            continue
        for eps in list(pending):
            ks = [k for k, s in enumerate(sups, start=1) if s < eps]
            if ks:
                try:
                    inside_mass = float(exh.mass(mu, m, settings.quad))
                except HausdorffError:
                    inside_mass = math.inf
                found[eps] = {"eps": eps, "m": m, "cutoff": float(cutoff), "level": ks[0],
                              "sup": sups[ks[0] - 1], "mass_K": inside_mass}
                pending.remove(eps)
    rows = [found[e] for e in sorted(found, reverse=True)]
    ok = not pending and all(math.isfinite(r["mass_K"]) for r in rows)
    return (PASS if ok else INCONCLUSIVE), {"search": rows, "unresolved_eps": sorted(pending, reverse=True)}


def _greedy_small_set_bound(ratios: np.ndarray, masses: np.ndarray, delta: float) -> float:
    """Upper bound of Σ_{i∈E} r_i w_i over atom sets E with Σ_{i∈E} w_i < δ (fractional knapsack)."""
    eligible = masses < delta
    order = np.argsort(-ratios[eligible], kind="stable")
    r, w = ratios[eligible][order], masses[eligible][order]
    room, total = delta, 0.0
    for ri, wi in zip(r, w):
        take = min(wi, room)
        total += ri * take
        room -= take
        if room <= 0:
            break
    return total


def _check_iii_atomic(spec, X, settings):
    mu = spec.measure
    if mu.pieces or mu.tail is not None:
        return INCONCLUSIVE, {"reason": "density part without a registered envelope"}
    u = np.array([float(p) for p, _ in mu.atoms])
    w = np.array([float(m) for _, m in mu.atoms])
    ratios = np.abs(spec.kernel(u, X)).max(axis=1)
    table = []
    for eps in settings.eps_grid:
        hit = None
        for delta in settings.delta_grid:
            b = _greedy_small_set_bound(ratios, w, delta)
            if b < eps:
                hit = {"eps": eps, "delta": delta, "bound": b}
                break
        if hit is None:
            return INCONCLUSIVE, {"search": table, "unresolved_eps": eps}
        table.append(hit)
    return PASS, {"search": table}


def _limit_entry(cid: str, est: LimitEstimate, target, tol: float, F: FilterBase, settings: CheckSettings,
                 resolution: Callable | None = None):
    """Verdict for a limit condition.  ``resolution(X)`` returns the change of the
    estimated quantity under quadrature refinement; a FAIL needs it below ``tol``."""
    ev = {"status": est.status, "limit": est.value, "target": target, "trace": list(est.deviation_trace),
          "thresholds": list(est.thresholds)}
    if target is None:
        ev["reason"] = "target unavailable"
        return ConditionEntry(cid, INCONCLUSIVE, ev)
    gap = float(np.max(np.abs(np.asarray(est.value) - np.asarray(target))))
    ev["gap"] = gap
    deep = F.sample(settings.levels, settings.samples, settings.seed)
    if est.status == CONVERGED and gap <= tol:
        return ConditionEntry(cid, PASS, ev)
    if est.status not in (CONVERGED, DIVERGENT):
        return ConditionEntry(cid, INCONCLUSIVE, ev)
    if resolution is not None:
        change = max(float(resolution(F.sample(k, settings.samples, settings.seed)))
                     for k in range(1, settings.levels + 1))
        ev["refinement_change"] = change
        if not change <= tol:
            ev["reason"] = "quadrature does not resolve the integrand along the filter"
            return ConditionEntry(cid, INCONCLUSIVE, ev)
    if est.status == CONVERGED:
        return ConditionEntry(cid, FAIL, ev, {"x": _point(deep, 0), "value": est.value})
    return ConditionEntry(cid, FAIL, ev, {"x": _point(deep, 0), "reason": "no limit along the filter"})


def _agreement_entry(family, F, Fp, mu, settings) -> ConditionEntry:
    try:
        av = agrees_with(family, F, Fp, mu, settings.agreement_settings())
    except InconclusiveByConstruction as exc:
        return ConditionEntry("agrees", INCONCLUSIVE, {"reason": str(exc)})
    ev = av.to_dict()
    if av.agrees:
        return ConditionEntry("agrees", PASS, ev, basis=av.method)
    return ConditionEntry("agrees", FAIL, ev, {"u": av.witness, "mass": av.fail_mass}, basis=av.method)


def default_filter(domain: str, dim: int = 1) -> FilterBase:
    kind = {"plane": "ball-complement"}.get(domain, domain)
    return FilterBase(kind=kind, dim=dim)


def check_theorem2(spec: OperatorSpec, F: FilterBase | None = None, Fp: FilterBase | None = None,
                   exh: Exhaustion | None = None, settings: CheckSettings = DEFAULT_CHECK,
                   target: float | None = 1.0) -> ConditionsReport:
    """Check boundedness (i.a, i.b), tails (ii), small sets (iii), kernel mass (iv) and agreement."""
    mu = spec.measure
    if mu.signed:
        raise SignedMeasureRejected("regularity checks need a nonnegative measure; put signs into the kernel")
    F = F or default_filter(spec.domain, spec.dim)
    Fp = Fp or (default_filter(spec.codomain, spec.dim) if spec.codomain else F)
    exh = exh or Exhaustion.default_for(mu)
    small, big = _x_samples(F, settings)

    dominated = None
    phi = spec.effective_envelope
    if phi is not None:
        dominated = check_dominated(spec, phi, settings, F)
        dominated["used"] = bool(dominated["dominates"] and math.isfinite(dominated["phi_integral"]))
    by_domination = bool(dominated and dominated["used"])

    entries = []
    v, ev, w = _check_ia(spec, small, big, settings)
    if by_domination:
        entries.append(ConditionEntry("i.a", PASS, ev, basis="domination"))
    elif settings.omit_ia_for_atomless and mu.is_atomless and v != FAIL:
        entries.append(ConditionEntry("i.a", PASS, ev, basis="omitted-for-atomless"))
    else:
        entries.append(ConditionEntry("i.a", v, ev, w))

    v, ev, w = _check_ib(spec, small, big, settings)
    entries.append(ConditionEntry("i.b", PASS, ev, basis="domination") if by_domination
                   else ConditionEntry("i.b", v, ev, w))

    v, ev = _check_ii(spec, F, exh, settings)
    entries.append(ConditionEntry("ii", PASS, ev, basis="domination") if by_domination
                   else ConditionEntry("ii", v, ev))

    if by_domination:
        entries.append(ConditionEntry("iii", PASS, {"domination": dominated}, basis="domination"))
    else:
        v, ev = _check_iii_atomic(spec, big, settings)
        if dominated is not None:
            ev["domination"] = dominated
        entries.append(ConditionEntry("iii", v, ev, basis="atomic-greedy" if v == PASS else "numerical"))

    est = limit_along_filter(lambda X: kernel_mass(spec, X, settings.quad), F, settings.limit_settings())
    def refinement_change(X):
        coarse = kernel_mass(spec, X, settings.quad)
        fine = kernel_mass(spec, X, settings.quad.refined())
        return np.max(np.abs(np.asarray(fine) - np.asarray(coarse)))

    entries.append(_limit_entry("iv", est, target, settings.tol_limit, F, settings, refinement_change))
    entries.append(_agreement_entry(spec.family, F, Fp, mu, settings))
    return _report(entries, spec.label)


# --------------------------------------------------------------------------
# Discrete conditions
# --------------------------------------------------------------------------

def _partial_sums(spec: DiscreteOperatorSpec, X: np.ndarray, absolute: bool = True, weighted: bool = True):
    c = spec.coefficient_matrix(X)
    w = spec.weight_vector() if weighted else np.ones(spec.n_max + 1)
    terms = (np.abs(c) if absolute else c) * w[:, None]
    return np.cumsum(terms, axis=0)


def _divergence_ratio(P: np.ndarray) -> np.ndarray:
    """(P_N - P_{N/2}) / (P_{N/2} - P_{N/4}) per point; near 1 or above means no decay."""
    N = P.shape[0] - 1
    a, b, c = P[N // 4], P[N // 2], P[N]
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(b - a > 0, (c - b) / (b - a), 0.0)


def check_discrete_conditions(spec: DiscreteOperatorSpec, F: FilterBase | None = None,
                              Fp: FilterBase | None = None, settings: CheckSettings = DEFAULT_CHECK,
                              target: float = 1.0) -> ConditionsReport:
    """Series analogs of the conditions, with index prefixes {0..m} as exhaustion."""
    F = F or default_filter(spec.domain, spec.dim)
    Fp = Fp or F
    small, big = _x_samples(F, settings)
    w = spec.weight_vector()
    if np.any(w <= 0):
        raise SignedMeasureRejected("discrete weights μ_n must be positive")
    has_tail = spec.tail_bound is not None

    # (v_d) shortcut: μ_n ↓ 0 and Σ|c_n(x)| bounded
    P_unw = _partial_sums(spec, big, weighted=False)
    N = spec.n_max
    settled = P_unw[N] - P_unw[N // 2] <= 1e-6 * np.maximum(P_unw[N], 1.0)
    v_ok = bool(np.all(np.diff(w) <= 0) and w[-1] <= 1e-3 * w[0] and np.all(settled))
    vd = ConditionEntry("v", PASS if v_ok else INCONCLUSIVE,
                        {"weights_nonincreasing": bool(np.all(np.diff(w) <= 0)), "last_weight": float(w[-1]),
                         "sup_abs_coefficient_sum": float(P_unw[N].max())}, basis="shortcut")

    entries = []
    Ps = _partial_sums(spec, small)[-1] + spec.tail(small)
    Pb_all = _partial_sums(spec, big)
    Pb = Pb_all[-1] + spec.tail(big)
    ev = {"sup_small": float(Ps.max()), "sup_doubled": float(Pb.max()), "tail_bound": has_tail}
    if has_tail:
        v_i = _stability(float(Ps.max()), float(Pb.max()), settings.tol_sup)
        wit = _point(big, int(np.argmax(Pb))) if v_i == FAIL else None
    else:
        ratio = _divergence_ratio(Pb_all)
        ev["increment_ratio"] = float(ratio.max())
        if ratio.max() >= 0.9:
            v_i, wit = FAIL, {"x": _point(big, int(np.argmax(ratio))), "partial_sum": float(Pb_all[-1].max())}
        else:
            v_i, wit = INCONCLUSIVE, None
    if v_ok and v_i != FAIL:
        entries.append(ConditionEntry("i.a", PASS, ev, basis="shortcut-v"))
    else:
        entries.append(ConditionEntry("i.a", v_i, ev, wit))

    cs = np.abs(spec.coefficient_matrix(small)).max(axis=1)
    cb = np.abs(spec.coefficient_matrix(big)).max(axis=1)
    vb = [_stability(float(a), float(b), settings.tol_sup) for a, b in zip(cs, cb)]
    v_ib = FAIL if FAIL in vb else (PASS if all(v == PASS for v in vb) else INCONCLUSIVE)
    entries.append(ConditionEntry("i.b", v_ib, {"max_sup": float(cb.max())},
                                  {"n": vb.index(FAIL)} if v_ib == FAIL else None))

    # (ii_d): sup over F_k of Σ_{n>m} |c_n| μ_n + tail
    levels = [F.sample(k, settings.samples, settings.seed) for k in range(1, settings.levels + 1)]
    tails = []
    for X in levels:
        P = _partial_sums(spec, X)
        tails.append(P[-1][None, :] - P + spec.tail(X)[None, :])
    pending = sorted(settings.eps_grid, reverse=True)
    rows = []
    for m in range(N + 1):
        for eps in list(pending):
            ks = [k for k, T in enumerate(tails, start=1) if T[m].max() < eps]
            if ks:
                rows.append({"eps": eps, "m": m, "level": ks[0], "sup": float(tails[ks[0] - 1][m].max()),
                             "mass_K": float(w[: m + 1].sum())})
                pending.remove(eps)
    v_ii = PASS if not pending else INCONCLUSIVE
    ev_ii = {"search": rows, "unresolved_eps": pending}
    entries.append(ConditionEntry("ii", PASS, ev_ii, basis="shortcut-v") if v_ok and v_ii != PASS
                   else ConditionEntry("ii", v_ii, ev_ii))

    # (iii_d): greedy bound over index sets of small weight, tail counted as worst case
    ratios = cb
    tail_sup = float(spec.tail(big).max()) if has_tail else math.inf
    table, v_iii = [], PASS
    for eps in settings.eps_grid:
        hit = None
        for delta in settings.delta_grid:
            b = _greedy_small_set_bound(ratios, w, delta) + tail_sup
            if b < eps:
                hit = {"eps": eps, "delta": delta, "bound": b}
                break
        if hit is None:
            v_iii = INCONCLUSIVE
            break
        table.append(hit)
    ev_iii = {"search": table}
    entries.append(ConditionEntry("iii", PASS, ev_iii, basis="shortcut-v") if v_ok and v_iii != PASS
                   else ConditionEntry("iii", v_iii, ev_iii, basis="atomic-greedy"))

    def mass_fn(X):
        return _partial_sums(spec, X, absolute=False)[-1]

    est = limit_along_filter(mass_fn, F, settings.limit_settings())
    entries.append(_limit_entry("iv", est, target, settings.tol_limit, F, settings))
    entries.append(_agreement_entry(spec.family, F, Fp, spec.as_measure(), settings))
    return _report(entries, spec.label, (vd,), gating=False)


# --------------------------------------------------------------------------
# Second kind
# --------------------------------------------------------------------------

def check_second_kind(spec: SecondKindSpec, F: FilterBase | None = None, settings: CheckSettings = DEFAULT_CHECK,
                      exh: Exhaustion | None = None) -> ConditionsReport:
    """Conditions on the inner operator with the kernel-mass target 1 - α, α = lim a."""
    inner = spec.inner
    F = F or default_filter(inner.domain, inner.dim)
    small, big = _x_samples(F, settings)

    def a_vals(X):
        return np.broadcast_to(np.asarray(spec.a(X), dtype=float), (len(X),))

    sa, sb = float(np.abs(a_vals(small)).max()), float(np.abs(a_vals(big)).max())
    v_a = PASS if sb <= spec.a_bound else _stability(sa, sb, settings.tol_sup)
    aux = [ConditionEntry("a.bounded", v_a, {"sup_small": sa, "sup_doubled": sb, "declared": spec.a_bound})]

    if spec.alpha is not None:
        alpha = float(spec.alpha)
        aux.append(ConditionEntry("a.limit", PASS, {"alpha": alpha}, basis="declared"))
    else:
        est = limit_along_filter(a_vals, F, settings.limit_settings())
        alpha = float(est.value) if est.status == CONVERGED else None
        aux.append(ConditionEntry("a.limit", PASS if alpha is not None else INCONCLUSIVE,
                                  {"alpha": est.value, "status": est.status, "trace": list(est.deviation_trace)},
                                  basis="estimated"))
    target = None if alpha is None else 1.0 - alpha
    rep = check_theorem2(inner, F, F, exh, settings, target=target)
    return _report(rep.entries, spec.label or f"second-kind[{inner.label}]", aux)


# --------------------------------------------------------------------------
# Empirical limit preservation
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class EmpiricalResult:
    name: str
    status: str
    estimate: object
    declared: object
    gap: float
    trace: tuple
    verdict: str

    def to_dict(self) -> dict:
        return to_plain(self.__dict__)


@dataclass(frozen=True)
class EmpiricalReport:
    per_function: tuple[EmpiricalResult, ...]
    verdict: str

    def to_dict(self) -> dict:
        return {"verdict": self.verdict, "per_function": [r.to_dict() for r in self.per_function]}


def applier(spec, settings: QuadSettings = DEFAULT_QUAD) -> Callable:
    """``(f, X) -> values`` for any spec type."""
    if isinstance(spec, OperatorSpec):
        return lambda f, X: apply_generic(spec, f, X, settings)
    if isinstance(spec, DiscreteOperatorSpec):
        return lambda f, X: apply_discrete(spec, f, X)
    if isinstance(spec, SecondKindSpec):
        return lambda f, X: apply_second_kind(spec, f, X, settings)
    if callable(getattr(spec, "spec", None)) or hasattr(spec, "spec"):
        return applier(spec.spec, settings)
    raise TypeError(f"no applier for {type(spec).__name__}")


def empirical_regularity(apply: Callable, suite: Sequence[TestFunction], F: FilterBase,
                         settings: CheckSettings = DEFAULT_CHECK) -> EmpiricalReport:
    """Does ``x ↦ apply(f, x)`` converge along F to each function's declared limit?"""
    results = []
    for f in suite:
        if f.limit is None:
            raise ValueError(f"test function {f.name!r} has no declared limit")
        est = limit_along_filter(lambda X, f=f: apply(f, X), F, settings.limit_settings())
        gap = float(np.max(np.abs(np.asarray(est.value, dtype=float) - np.asarray(f.limit, dtype=float))))
        ok = est.status == CONVERGED and gap <= settings.tol_limit
        results.append(EmpiricalResult(f.name, est.status, est.value, f.limit, gap, est.deviation_trace,
                                       PASS if ok else FAIL))
    verdict = PASS if all(r.verdict == PASS for r in results) else FAIL
    return EmpiricalReport(tuple(results), verdict)


def _radius(Y: np.ndarray) -> np.ndarray:
    return np.linalg.norm(Y, axis=-1)


def default_suite(domain: str = "half-line", level: float = 2.0) -> list[TestFunction]:
    """Bounded probes with known limits: arctan type, level + decaying term, constant, R^2-valued."""
    half_pi = math.pi / 2
    if domain in ("half-line", "index"):
        return [
            TestFunction(np.arctan, half_pi, half_pi, "atan"),
            TestFunction(lambda t: level + np.exp(-np.abs(t)), level + 1, level, f"{level}+exp(-t)"),
            TestFunction(lambda t: np.ones_like(t), 1.0, 1.0, "one"),
            TestFunction(lambda t: np.stack([np.arctan(t), 1 / (1 + np.abs(t))], axis=-1), half_pi,
                         (half_pi, 0.0), "(atan, 1/(1+t))"),
        ]
    return [
        TestFunction(lambda y: np.arctan(_radius(y)), half_pi, half_pi, "atan|x|"),
        TestFunction(lambda y: level + np.exp(-_radius(y) ** 2), level + 1, level, f"{level}+exp(-|x|^2)"),
        TestFunction(lambda y: np.ones(np.shape(y)[:-1]), 1.0, 1.0, "one"),
        TestFunction(lambda y: np.stack([np.arctan(_radius(y)), 1 / (1 + _radius(y))], axis=-1), half_pi,
                     (half_pi, 0.0), "(atan|x|, 1/(1+|x|))"),
    ]


__all__ = [
    "CONDITION_IDS", "CheckSettings", "ConditionEntry", "ConditionsReport", "DEFAULT_CHECK", "EXIT_CODES",
    "EmpiricalReport", "EmpiricalResult", "FAIL", "INCONCLUSIVE", "NOT_REGULAR", "PASS", "REGULAR",
    "ToeplitzReport", "applier", "check_discrete_conditions", "check_dominated", "check_rogosinski",
    "check_second_kind", "check_theorem2", "check_toeplitz", "default_filter", "default_suite",
    "empirical_regularity", "overall_verdict",
]
