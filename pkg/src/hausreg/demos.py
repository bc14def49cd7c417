"""Canned reproductions of the worked examples, each compared with stored expectations."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import methods
from .filters import PROVEN, Dilation, FilterBase, agrees_with
from .measures import Exhaustion, Measure
from .operators import (Kernel, OperatorSpec, SecondKindSpec, TestFunction, apply_generic, apply_matrix_method,
                        apply_second_kind, hausdorff_spec, kernel_mass)
from .regularity import (DEFAULT_CHECK, NOT_REGULAR, PASS, REGULAR, applier, check_second_kind, check_theorem2,
                         empirical_regularity, to_plain)


@dataclass(frozen=True)
class DemoCheck:
    label: str
    observed: object
    expected: object
    tol: float | None
    passed: bool

    def to_dict(self) -> dict:
        def conv(v):
            if isinstance(v, Fraction):
                return str(v)
            return to_plain(sorted(v) if isinstance(v, set) else v)

        return {"label": self.label, "observed": conv(self.observed), "expected": conv(self.expected),
                "tol": self.tol, "verdict": "PASS" if self.passed else "FAIL"}


@dataclass
class DemoReport:
    name: str
    checks: list = field(default_factory=list)

    def close(self, label, observed, expected, tol):
        ok = bool(abs(float(observed) - float(expected)) <= tol)
        self.checks.append(DemoCheck(label, observed, expected, tol, ok))

    def equal(self, label, observed, expected):
        self.checks.append(DemoCheck(label, observed, expected, None, observed == expected))

    @property
    def verdict(self) -> str:
        return "PASS" if all(c.passed for c in self.checks) else "FAIL"

    def to_dict(self) -> dict:
        return {"demo": self.name, "verdict": self.verdict, "checks": [c.to_dict() for c in self.checks]}

    def lines(self) -> list[str]:
        out = [f"{'PASS' if c.passed else 'FAIL'}  {self.name}: {c.label}" for c in self.checks]
        out.append(f"{self.verdict}  {self.name}")
        return out


def grandi() -> DemoReport:
    r = DemoReport("grandi")
    C = methods.hausdorff_matrix_from_moments(Measure.lebesgue(), 9999)
    exact = all(C.row(m) == [Fraction(1, m + 1)] * (m + 1) for m in range(21))
    r.equal("moment matrix of Lebesgue is (C,1) in exact arithmetic for m <= 20", exact, True)
    partial_sums = [1 - k % 2 for k in range(10_000)]
    t = apply_matrix_method(C, partial_sums, 9999)
    r.close("t(9999) for partial sums 1,0,1,0,...", float(t), 0.5, 1e-4)
    return r


def rogosinski_counterexample() -> DemoReport:
    r = DemoReport("rogosinski-counterexample")
    mu = methods.counterexample_measures()["half-dirac-0-lebesgue"]
    spec = hausdorff_spec(mu)
    rep = check_theorem2(spec)
    r.equal("overall verdict", rep.overall, NOT_REGULAR)
    ag = rep.entry("agrees")
    r.equal("agreement fails at u = 0", (ag.verdict, ag.witness["u"]), ("FAIL", 0.0))
    r.close("failing mass", ag.witness["mass"], 0.5, 1e-12)
    value = apply_generic(spec, TestFunction(np.arctan), 1e4)
    r.close("(H atan)(1e4) against pi/4", value, math.pi / 4, 1e-3)
    emp = empirical_regularity(applier(spec), [TestFunction(np.arctan, math.pi / 2, math.pi / 2, "atan")],
                               FilterBase())
    r.close("empirical gap from pi/2", emp.per_function[0].gap, math.pi / 4, 1e-3)
    return r


def delsarte() -> DemoReport:
    r = DemoReport("delsarte")
    h = np.array([1.0, -0.5])
    T = methods.delsarte_spec(h, nodes=256)
    rng = np.random.default_rng(7)
    X = rng.normal(scale=3.0, size=(32, 2))
    vals = T(lambda y: (y ** 2).sum(-1), X)
    err = float(np.max(np.abs(vals - (h @ h + (X ** 2).sum(-1)))))
    r.close("T_h |.|^2 = |h|^2 + |x|^2 (max error)", err, 0.0, 1e-10)
    level = 2.0
    f = TestFunction(lambda y: level + np.exp(-(y ** 2).sum(-1)), level + 1, level)
    ring = 10.0 * np.stack([np.cos(np.linspace(0, 2 * np.pi, 16)), np.sin(np.linspace(0, 2 * np.pi, 16))], -1)
    r.close("T_h(l + exp(-|x|^2)) at |x| = 10", float(np.max(np.abs(T(f, ring) - level))), 0.0, 1e-3)
    return r


def abel_type() -> DemoReport:
    r = DemoReport("abel-type")
    spec = methods.abel_type_spec()
    rep = check_theorem2(spec, exh=Exhaustion.default_for(spec.measure))
    r.equal("overall verdict", rep.overall, REGULAR)
    found = {row["eps"]: row["cutoff"] for row in rep.entry("ii").evidence["search"]}
    step = 0.5
    for eps in DEFAULT_CHECK.eps_grid:
        r.close(f"K_eps cutoff for eps={eps:g} against ln(1/eps)", found.get(eps, math.inf), math.log(1 / eps), step)
    r.close("kernel mass", kernel_mass(spec, 3.0), 1.0, 1e-10)
    level = 2.0
    value = apply_generic(spec, TestFunction(lambda t: level + np.exp(-t)), 999.0)
    r.close("(A(l + exp(-t)))(999) against l + 1/1000", value, level + 1 / 1000, 1e-6)
    return r


def affine() -> DemoReport:
    r = DemoReport("affine")
    mu = Measure.lebesgue(1, 2)
    spec = methods.affine_spec(lambda u: u[:, None, None] * np.eye(2), lambda u: np.stack([u, u], -1), mu,
                               normalize=True)
    value = apply_generic(spec, TestFunction(lambda y: y[..., 0]), np.array([4.0, 1.0]))
    r.close("integral of f(x) = x1 at x = (4, 1)", value, 7.5, 1e-10)
    F = FilterBase("orthant", dim=2)
    ag = agrees_with(spec.family, F, F, spec.measure)
    r.equal("agreement decided structurally", (ag.agrees, ag.method, {g.verdict for g in ag.regions}),
            (True, "structural", {PROVEN}))
    level = 2.0
    f = TestFunction(lambda y: level + 1 / (1 + np.linalg.norm(y, axis=-1)), level + 1, level, "l+1/(1+|x|)")
    emp = empirical_regularity(applier(spec), [f], F)
    r.equal("empirical regularity", emp.verdict, PASS)
    return r


def second_kind() -> DemoReport:
    r = DemoReport("second-kind")
    inner = OperatorSpec(Kernel.const(0.5), Dilation(), Measure.dirac(1, 1), label="half-identity")
    spec = SecondKindSpec(lambda X: np.full(np.shape(X)[:1], 0.5), inner, a_bound=0.5, alpha=0.5)
    rep = check_second_kind(spec)
    r.equal("a = 1/2 with inner mass 1/2", rep.overall, REGULAR)
    f = TestFunction(np.arctan)
    X = np.geomspace(1, 1e6, 25)
    r.close("T f = f (max error)", float(np.max(np.abs(apply_second_kind(spec, f, X) - np.arctan(X)))), 0.0, 1e-12)
    bad = SecondKindSpec(lambda X: np.full(np.shape(X)[:1], 0.5), methods.cesaro_spec(1), a_bound=0.5, alpha=0.5)
    r.equal("a = 1/2 with Cesaro inner (mass 1)", check_second_kind(bad).overall, NOT_REGULAR)
    return r


DEMOS = {
    "grandi": grandi,
    "rogosinski-counterexample": rogosinski_counterexample,
    "delsarte": delsarte,
    "abel-type": abel_type,
    "affine": affine,
    "second-kind": second_kind,
}


def run_demo(name: str) -> DemoReport:
    if name not in DEMOS:
        raise KeyError(f"unknown demo {name!r}; choose from {', '.join(DEMOS)}")
    return DEMOS[name]()
