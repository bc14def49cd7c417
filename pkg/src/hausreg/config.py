"""YAML configuration documents: parsing, validation, round-trip and spec building.

A document names a method and the pieces it needs::

    method: hausdorff
    measure:
      atoms: [[0, 1/2]]
      pieces: [{density: 1/2, lo: 0, hi: 1}]
    input: {expr: atan(x)}
    points: [10, 100, 10000]

Expressions use the grammar of :mod:`hausreg.expr`; numbers written as
``p/q`` strings or decimals in atoms and polynomial densities are kept as
exact rationals.
"""

from __future__ import annotations

import copy
import math
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np
import yaml

from . import methods
from .errors import ConfigError, HausdorffError
from .expr import Expression, point_env
from .filters import Affine, ConstantTarget, CustomFamily, Dilation, FilterBase, Linear, Rotation, Shift
from .measures import DEFAULT_QUAD, Measure, QuadSettings, constant
from .operators import (DiscreteOperatorSpec, Kernel, MatrixMethod, OperatorSpec, SecondKindSpec, TestFunction,
                        hausdorff_spec, identity_spec)
from .regularity import CheckSettings

TOP_KEYS = {
    "method", "params", "measure", "kernel", "envelope", "family", "domain", "dim", "filter", "input",
    "points", "checks", "settings", "inner", "output", "a", "coefficients", "weights", "tail_bound",
}
CHECKS = {"conditions", "empirical"}
SETTINGS_KEYS = {
    "eps_grid", "delta_grid", "samples", "levels", "tol_limit", "tol_sup", "tol_column", "seed",
    "omit_ia_for_atomless", "agreement_probes", "grade_levels", "tail_tol", "quad_tol",
}
QUAD_KEYS = {"grade_levels", "tail_tol", "quad_tol"}
PARAMS = {
    "identity": set(), "cesaro": {"alpha"}, "holder": {"k"}, "abel": {"cutoff"}, "hausdorff": set(),
    "moments": {"order"}, "delsarte": {"h", "nodes"}, "affine": {"matrix", "offset", "normalize"},
    "second-kind": {"alpha", "a_bound"}, "custom": set(), "discrete": {"n_max"},
}


# --------------------------------------------------------------------------
# Source positions
# --------------------------------------------------------------------------

_KEY = ("<key>",)  # marks of mapping keys live under this prefix


def _index_marks(node, path=(), out=None) -> dict:
    """Map key paths to (line, column, quoted) of their value nodes, 1-based."""
    out = {} if out is None else out
    out[path] = (node.start_mark.line + 1, node.start_mark.column + 1, getattr(node, "style", None) in ("'", '"'))
    if isinstance(node, yaml.MappingNode):
        for k, v in node.value:
            out[_KEY + path + (k.value,)] = (k.start_mark.line + 1, k.start_mark.column + 1, False)
            _index_marks(v, path + (k.value,), out)
    elif isinstance(node, yaml.SequenceNode):
        for i, v in enumerate(node.value):
            _index_marks(v, path + (i,), out)
    return out


def _sub_marks(marks: dict, key: str) -> dict:
    out = {}
    for path, mark in marks.items():
        if path[:1] == (key,):
            out[path[1:]] = mark
        elif path[:2] == _KEY + (key,) and len(path) > 2:
            out[_KEY + path[2:]] = mark
    return out


@dataclass
class ConfigDocument:
    data: dict
    marks: dict = field(default_factory=dict, compare=False, repr=False)
    base_dir: Path = field(default_factory=Path.cwd, compare=False, repr=False)

    # -- parsing ------------------------------------------------------
    @classmethod
    def from_text(cls, text: str, base_dir: Path | None = None) -> "ConfigDocument":
        try:
            node = yaml.compose(text, Loader=yaml.SafeLoader)
            data = yaml.safe_load(text)
        except yaml.MarkedYAMLError as exc:
            mark = exc.problem_mark
            raise ConfigError(f"invalid YAML: {exc.problem}",
                              line=mark.line + 1 if mark else None, column=mark.column + 1 if mark else None)
        if not isinstance(data, dict):
            raise ConfigError("config must be a mapping", line=1, column=1)
        doc = cls(data, _index_marks(node) if node is not None else {}, base_dir or Path.cwd())
        doc.validate()
        return doc

    @classmethod
    def load(cls, path) -> "ConfigDocument":
        path = Path(path)
        return cls.from_text(path.read_text(), base_dir=path.parent)

    def to_text(self) -> str:
        return yaml.safe_dump(self.data, sort_keys=True, default_flow_style=None)

    def with_seed(self, seed: int) -> "ConfigDocument":
        data = copy.deepcopy(self.data)
        data.setdefault("settings", {})["seed"] = int(seed)
        return ConfigDocument(data, self.marks, self.base_dir)

    def error(self, path: tuple, message: str, column_offset: int | None = None, at_key: bool = False) -> ConfigError:
        line, col, quoted = self.marks.get(_KEY + path if at_key else path, (None, None, False))
        if line is not None and column_offset is not None:
            col = col + column_offset - 1 + (1 if quoted else 0)
        return ConfigError(message, line=line, column=col)

    def get(self, *path, default=None):
        node = self.data
        for key in path:
            if isinstance(node, dict) and key in node:
                node = node[key]
            elif isinstance(node, list) and isinstance(key, int) and key < len(node):
                node = node[key]
            else:
                return default
        return node

    def expression(self, path: tuple, variables) -> Expression:
        src = self.get(*path)
        try:
            return Expression(src, variables)
        except ConfigError as exc:
            raise self.error(path, f"in {'.'.join(map(str, path))}: {Exception.__str__(exc)}", exc.column) from None

    # -- validation ---------------------------------------------------
    def validate(self) -> None:
        d = self.data
        unknown = sorted(set(d) - TOP_KEYS)
        if unknown:
            raise self.error((unknown[0],), f"unknown key {unknown[0]!r}", at_key=True)
        method = d.get("method")
        if method not in methods.METHODS:
            raise self.error(("method",), f"unknown method {method!r}; see `methods list`")
        params = d.get("params") or {}
        if not isinstance(params, dict):
            raise self.error(("params",), "params must be a mapping")
        bad = sorted(set(params) - PARAMS[method])
        if bad:
            raise self.error(("params", bad[0]), f"method {method!r} has no parameter {bad[0]!r}", at_key=True)
        checks = d.get("checks", ["conditions"])
        if not isinstance(checks, list) or not set(checks) <= CHECKS:
            raise self.error(("checks",), f"checks must be a list drawn from {sorted(CHECKS)}")
        settings = d.get("settings") or {}
        bad = sorted(set(settings) - SETTINGS_KEYS)
        if bad:
            raise self.error(("settings", bad[0]), f"unknown setting {bad[0]!r}", at_key=True)
        for path, variables in self._expression_paths():
            self.expression(path, variables)
        if "inner" in d:
            inner = ConfigDocument(d["inner"], _sub_marks(self.marks, "inner"),
                                   self.base_dir)
            inner.validate()

    def dim(self) -> int:
        default = 2 if self.data.get("method") in ("affine", "delsarte") else 1
        return int(self.data.get("dim", default))

    def _vars(self) -> set[str]:
        dim = self.dim()
        return {"u", "x"} | {f"x{i + 1}" for i in range(dim)} if dim > 1 else {"u", "x"}

    def _expression_paths(self):
        d, uv = self.data, self._vars()
        for key in ("kernel", "coefficients", "tail_bound", "a"):
            if key in d:
                yield (key,), uv
        for key in ("envelope", "weights"):
            if key in d:
                yield (key,), {"u"}
        if isinstance(d.get("input"), dict) and "expr" in d["input"]:
            yield ("input", "expr"), uv - {"u"}
        fam = d.get("family") or {}
        for key in ("shift", "angle", "target", "map"):
            if key in fam:
                yield ("family", key), {"u"} if key != "map" else uv
        for key in ("matrix",):
            for path in _nested_paths(fam.get(key), ("family", key)):
                yield path, {"u"}
        for path in _nested_paths(fam.get("offset"), ("family", "offset")):
            if isinstance(self.get(*path), str):
                yield path, {"u"}
        params = d.get("params") or {}
        for key in ("matrix", "offset"):
            for path in _nested_paths(params.get(key), ("params", key)):
                yield path, {"u"}
        m = d.get("measure")
        if isinstance(m, dict):
            for i, pc in enumerate(m.get("pieces") or []):
                if isinstance(pc, dict) and isinstance(pc.get("density"), str) and _rational(pc["density"]) is None:
                    yield ("measure", "pieces", i, "density"), {"u"}
            tail = m.get("tail")
            if isinstance(tail, dict):
                for key in ("density", "envelope", "envelope_tail"):
                    if isinstance(tail.get(key), str):
                        yield ("measure", "tail", key), {"u"}

    # -- settings -----------------------------------------------------
    def check_settings(self) -> CheckSettings:
        s = dict(self.data.get("settings") or {})
        quad = QuadSettings(**{k: s.pop(k) for k in list(s) if k in QUAD_KEYS})
        for key in ("eps_grid", "delta_grid"):
            if key in s:
                s[key] = tuple(float(v) for v in s[key])
        try:
            return CheckSettings(quad=quad, **s)
        except (TypeError, ValueError) as exc:
            raise self.error(("settings",), str(exc)) from None

    def quad(self) -> QuadSettings:
        return self.check_settings().quad


def _nested_paths(value, path):
    if isinstance(value, list):
        for i, v in enumerate(value):
            yield from _nested_paths(v, path + (i,))
    elif isinstance(value, str):
        yield path


def _rational(v):
    """Exact value of a config number (int, decimal or 'p/q'), or None."""
    if isinstance(v, bool):
        return None
    if isinstance(v, int):
        return v
    if isinstance(v, float):
        return Fraction(repr(v)) if math.isfinite(v) else None
    if isinstance(v, str):
        try:
            return Fraction(v.strip())
        except (ValueError, ZeroDivisionError):
            return None
    return None


def _number(doc: ConfigDocument, path: tuple):
    v = _rational(doc.get(*path))
    if v is None:
        raise doc.error(path, f"{'.'.join(map(str, path))} must be a number")
    return v


# --------------------------------------------------------------------------
# Builders
# --------------------------------------------------------------------------

def _u_fn(expr: Expression):
    return lambda u: np.broadcast_to(expr(u=u), np.shape(u)).astype(float)


def build_measure(doc: ConfigDocument, path: tuple = ("measure",)) -> Measure:
    m = doc.get(*path)
    if m is None:
        raise doc.error(path[:-1] or ("method",), "this method needs a measure")
    if isinstance(m, str):
        m = {"preset": m}
    if not isinstance(m, dict):
        raise doc.error(path, "measure must be a preset name or a mapping")
    preset = m.get("preset")
    if preset is not None:
        if preset == "lebesgue":
            return Measure.lebesgue(_rational(m.get("lo", 0)), _rational(m.get("hi", 1)))
        if preset == "dirac":
            return Measure.dirac(_rational(m.get("point", 0)), _rational(m.get("weight", 1)))
        if preset == "cesaro":
            return methods.cesaro_measure(float(m.get("alpha", 1)))
        if preset == "haar":
            return Measure.haar_circle(int(m.get("nodes", 256)))
        if preset == "abel":
            return methods.abel_type_measure(float(m.get("cutoff", 40)))
        if preset in methods.shipped_measures():
            return methods.shipped_measures()[preset]
        if preset in methods.counterexample_measures():
            return methods.counterexample_measures()[preset]
        raise doc.error(path + ("preset",), f"unknown measure preset {preset!r}")
    parts = []
    atoms = []
    for i, a in enumerate(m.get("atoms") or []):
        if not isinstance(a, list) or len(a) != 2:
            raise doc.error(path + ("atoms", i), "atoms are [point, weight] pairs")
        atoms.append((_number(doc, path + ("atoms", i, 0)), _number(doc, path + ("atoms", i, 1))))
    if atoms:
        parts.append(Measure(atoms=tuple(atoms)))
    for i, pc in enumerate(m.get("pieces") or []):
        p = path + ("pieces", i)
        lo, hi = _number(doc, p + ("lo",)), _number(doc, p + ("hi",))
        nodes = int(pc.get("nodes", 16))
        if "poly" in pc:
            coeffs = [_number(doc, p + ("poly", j)) for j in range(len(pc["poly"]))]
            parts.append(Measure.polynomial(coeffs, lo, hi, nodes=nodes))
            continue
        dens = pc.get("density", 1)
        exact = _rational(dens)
        lo_exp, hi_exp = float(pc.get("lo_exponent", 0)), float(pc.get("hi_exponent", 0))
        if exact is not None and lo_exp == 0 and hi_exp == 0:
            parts.append(Measure.polynomial([exact], lo, hi, nodes=nodes))
        elif exact is not None:
            parts.append(Measure.with_density(constant(float(exact)), lo, hi, nodes=nodes,
                                              lo_exponent=lo_exp, hi_exponent=hi_exp))
        else:
            e = doc.expression(p + ("density",), {"u"})
            parts.append(Measure.with_density(_u_fn(e), lo, hi, nodes=nodes, lo_exponent=lo_exp,
                                              hi_exponent=hi_exp))
    tail = m.get("tail")
    if tail is not None:
        p = path + ("tail",)
        env = doc.expression(p + ("envelope",), {"u"})
        env_tail = doc.expression(p + ("envelope_tail",), {"u"})
        density = _u_fn(doc.expression(p + ("density",), {"u"})) if "density" in tail else None
        parts.append(Measure.half_line(float(_number(doc, p + ("start",))), _u_fn(env),
                                       lambda K: float(env_tail(u=K)), density=density,
                                       cutoff=float(tail.get("cutoff", 40))))
    if not parts:
        raise doc.error(path, "measure needs atoms, pieces, a tail or a preset")
    out = parts[0]
    for p in parts[1:]:
        out = out + p
    return Measure(out.atoms, out.pieces, out.tail, label=m.get("label", "configured"))


def build_kernel(doc: ConfigDocument, dim: int) -> Kernel:
    if "kernel" not in doc.data:
        return Kernel.const(1.0)
    src = doc.data["kernel"]
    exact = _rational(src)
    if exact is not None:
        return Kernel.const(float(exact))
    e = doc.expression(("kernel",), doc._vars())

    def fn(u, X):
        return e(u=u, **point_env(X, dim))

    return Kernel(fn, label=str(src))


def build_family(doc: ConfigDocument, dim: int):
    fam = doc.get("family") or {"class": "dilation"}
    cls = fam.get("class", "dilation")
    if cls == "dilation":
        return Dilation()
    if cls == "shift":
        e = doc.expression(("family", "shift"), {"u"}) if "shift" in fam else None
        return Shift(_u_fn(e) if e else None, label=str(fam.get("shift", "u")))
    if cls == "constant":
        e = doc.expression(("family", "target"), {"u"})
        return ConstantTarget(_u_fn(e), label=str(fam["target"]))
    if cls == "rotation":
        e = doc.expression(("family", "angle"), {"u"}) if "angle" in fam else None
        offset = fam.get("offset")
        return Rotation(_u_fn(e) if e else None, offset=None if offset is None else [float(v) for v in offset],
                        label=str(fam.get("angle", "u")))
    if cls in ("linear", "affine"):
        matrix = _matrix_fn(doc, ("family", "matrix"), dim)
        if cls == "linear":
            return Linear(matrix, label="configured")
        return Affine(matrix, _vector_fn(doc, ("family", "offset"), dim), label="configured")
    if cls == "custom":
        e = doc.expression(("family", "map"), doc._vars())

        def fn(u, X):
            U = np.asarray(u, dtype=float)[:, None]
            return e(u=U, **point_env(np.asarray(X, dtype=float)[None], dim))

        return CustomFamily(fn, label=str(fam["map"]))
    raise doc.error(("family", "class"), f"unknown family class {cls!r}")


def _matrix_fn(doc, path, dim):
    rows = doc.get(*path)
    if not isinstance(rows, list) or len(rows) != dim or any(not isinstance(r, list) or len(r) != dim for r in rows):
        raise doc.error(path, f"matrix must be a {dim}x{dim} list of expressions")
    exprs = [[doc.expression(path + (i, j), {"u"}) for j in range(dim)] for i in range(dim)]

    def fn(u):
        u = np.asarray(u, dtype=float)
        return np.stack([np.stack([np.broadcast_to(e(u=u), u.shape) for e in row], -1) for row in exprs], -2)

    return fn


def _vector_fn(doc, path, dim):
    vals = doc.get(*path)
    if vals is None:
        return lambda u: np.zeros(np.shape(u) + (dim,))
    if not isinstance(vals, list) or len(vals) != dim:
        raise doc.error(path, f"offset must list {dim} expressions")
    exprs = [doc.expression(path + (i,), {"u"}) if isinstance(v, str) else Expression(repr(float(v)))
             for i, v in enumerate(vals)]

    def fn(u):
        u = np.asarray(u, dtype=float)
        return np.stack([np.broadcast_to(e(u=u), u.shape) for e in exprs], -1)

    return fn


def build_filter(doc: ConfigDocument) -> FilterBase:
    dim = doc.dim()
    f = dict(doc.get("filter") or {})
    f.setdefault("kind", _domain(doc))
    f.setdefault("dim", dim)
    try:
        return FilterBase(**{k: (float(v) if k in ("t0", "ratio", "spread") else v) for k, v in f.items()})
    except (TypeError, ValueError) as exc:
        raise doc.error(("filter",), str(exc)) from None


def _domain(doc: ConfigDocument) -> str:
    method = doc.data["method"]
    if method == "delsarte":
        return "ball-complement"
    if method == "affine":
        return "orthant"
    if method == "discrete":
        return doc.get("domain", default="index")
    return doc.get("domain", default="half-line")


def _param(params: dict, key: str, default):
    """A numeric parameter as float; accepts ints, decimals and 'p/q' strings."""
    v = params.get(key, default)
    r = _rational(v)
    if r is None:
        if isinstance(v, float):
            return v
        raise ValueError(f"params.{key} must be a number, got {v!r}")
    return float(r)


def build_spec(doc: ConfigDocument):
    """The operator a document describes (OperatorSpec, DiscreteOperatorSpec or SecondKindSpec)."""
    method = doc.data["method"]
    params = doc.get("params") or {}
    dim = doc.dim()
    try:
        if method == "identity":
            return identity_spec(_domain(doc), dim)
        if method == "cesaro":
            return methods.cesaro_spec(_param(params, "alpha", 1))
        if method == "abel":
            return methods.abel_type_spec(_param(params, "cutoff", 40))
        if method in ("hausdorff", "moments"):
            return hausdorff_spec(build_measure(doc))
        if method == "delsarte":
            return methods.delsarte_spec(params.get("h", (0.0, 0.0)), int(params.get("nodes", 256))).spec
        if method == "affine":
            mu = build_measure(doc)
            env = _u_fn(doc.expression(("envelope",), {"u"})) if "envelope" in doc.data else None
            return methods.affine_spec(_matrix_fn(doc, ("params", "matrix"), dim),
                                       _vector_fn(doc, ("params", "offset"), dim), mu,
                                       kernel=build_kernel(doc, dim) if "kernel" in doc.data else None, dim=dim,
                                       normalize=bool(params.get("normalize", False)), envelope=env)
        if method == "custom":
            env = _u_fn(doc.expression(("envelope",), {"u"})) if "envelope" in doc.data else None
            return OperatorSpec(build_kernel(doc, dim), build_family(doc, dim), build_measure(doc),
                                domain=_domain(doc), dim=dim, envelope=env, label="custom")
        if method == "discrete":
            return _build_discrete(doc, dim)
        if method == "second-kind":
            if "inner" not in doc.data:
                raise doc.error(("method",), "second-kind needs an `inner` operator document")
            inner_doc = ConfigDocument(doc.data["inner"], _sub_marks(doc.marks, "inner"), doc.base_dir)
            inner = build_spec(inner_doc)
            a = doc.expression(("a",), doc._vars() - {"u"}) if "a" in doc.data else Expression("0")
            inner_dim = inner.dim

            def a_fn(X):
                return a(**point_env(X, inner_dim)) if a.names else np.full(len(np.asarray(X)), float(a()))

            alpha = params.get("alpha")
            return SecondKindSpec(a_fn, inner, a_bound=_param(params, "a_bound", math.inf),
                                  alpha=None if alpha is None else _param(params, "alpha", None),
                                  label=f"second-kind[{inner.label}]")
        if method == "holder":
            return methods.holder_spec(int(params.get("k", 1)))
    except HausdorffError:
        raise
    except (TypeError, ValueError) as exc:
        raise doc.error(("params",), f"bad parameters for {method!r}: {exc}") from None
    raise doc.error(("method",), f"method {method!r} does not describe a single operator")


def _build_discrete(doc: ConfigDocument, dim: int) -> DiscreteOperatorSpec:
    uv = doc._vars()
    coef = doc.expression(("coefficients",), uv)
    weights = doc.expression(("weights",), {"u"}) if "weights" in doc.data else Expression("1")
    tail = doc.expression(("tail_bound",), uv) if "tail_bound" in doc.data else None

    def c_fn(n, X):
        return coef(u=n, **point_env(X, dim))

    def w_fn(n):
        return np.broadcast_to(weights(u=n), np.shape(n))

    def t_fn(N, X):
        return tail(u=float(N), **point_env(X, dim))

    family = build_family(doc, dim) if "family" in doc.data else Shift()
    n_max = int((doc.get("params") or {}).get("n_max", 60))
    return DiscreteOperatorSpec(c_fn, w_fn, family, n_max=n_max, tail_bound=t_fn if tail else None,
                                domain=_domain(doc), dim=dim, label="discrete")


def matrix_measure(doc: ConfigDocument) -> Measure:
    """The [0, 1] measure behind a matrix-method reading of the document."""
    method = doc.data["method"]
    if method == "identity":
        return Measure.dirac(1, 1)
    if method == "cesaro":
        return methods.cesaro_measure(_param(doc.get("params") or {}, "alpha", 1))
    if method in ("hausdorff", "moments"):
        return build_measure(doc)
    raise doc.error(("method",), f"method {method!r} has no matrix form; use identity, cesaro or moments")


def build_matrix(doc: ConfigDocument, order: int) -> MatrixMethod:
    if doc.data["method"] == "identity":
        return MatrixMethod.identity()
    return methods.hausdorff_matrix_from_moments(matrix_measure(doc), order, doc.quad())


def build_input(doc: ConfigDocument, dim: int = 1):
    """Either ('function', TestFunction) or ('sequence', list)."""
    inp = doc.get("input")
    if inp is None:
        raise doc.error(("method",), "transform needs an `input` (expr, sequence or file)")
    if "expr" in inp:
        e = doc.expression(("input", "expr"), doc._vars() - {"u"})
        return "function", TestFunction(lambda Y: e(**point_env(Y, dim)), name=str(inp["expr"]))
    if "sequence" in inp:
        return "sequence", [_sequence_value(v) for v in inp["sequence"]]
    if "file" in inp:
        return "sequence", read_sequence(doc.base_dir / inp["file"])
    raise doc.error(("input",), "input needs one of expr, sequence, file")


def _sequence_value(v):
    if isinstance(v, int) and not isinstance(v, bool):
        return v
    exact = _rational(v) if isinstance(v, str) else None
    return exact if exact is not None else float(v)


def read_sequence(path) -> list:
    """One value per line; integers and p/q stay exact, everything else is a float."""
    out = []
    for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
        s = line.strip()
        if not s or s.startswith("#"):
            continue
        try:
            out.append(int(s) if s.lstrip("+-").isdigit() else (Fraction(s) if "/" in s else float(s)))
        except (ValueError, ZeroDivisionError):
            raise ConfigError(f"not a number: {s!r}", line=lineno, column=1) from None
    return out


def build_points(doc: ConfigDocument, dim: int = 1):
    pts = doc.get("points")
    if pts is None:
        raise doc.error(("method",), "transform needs `points`")
    if isinstance(pts, dict) and "range" in pts:
        r = pts["range"]
        step = r[2] if len(r) > 2 else 1
        return list(range(int(r[0]), int(r[1]) + 1, int(step)))
    if isinstance(pts, dict) and "last" in pts:
        return [int(pts["last"])]
    if not isinstance(pts, list):
        raise doc.error(("points",), "points must be a list, {range: [a, b]} or {last: m}")
    return [tuple(float(c) for c in p) if isinstance(p, list) else float(p) for p in pts]
