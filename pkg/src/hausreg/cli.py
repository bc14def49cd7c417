"""Command-line front end: ``transform``, ``check``, ``demo`` and ``methods list``.

Exit status: ``check`` returns 0 (REGULAR-EVIDENCE), 1 (NOT-REGULAR) or
2 (INCONCLUSIVE); ``demo`` returns 0 on PASS and 1 on FAIL; usage, config
and evaluation errors return 3.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import config as cfg
from .demos import DEMOS, run_demo
from .errors import ConfigError, HausdorffError
from .expr import Expression, point_env
from .methods import METHODS, holder_apply
from .operators import (DiscreteOperatorSpec, OperatorSpec, SecondKindSpec, TestFunction, apply_matrix_method,
                        evaluate_discrete, evaluate_generic, evaluate_second_kind)
from .regularity import (EXIT_CODES, FAIL, INCONCLUSIVE, NOT_REGULAR, PASS, REGULAR, applier,
                         check_discrete_conditions, check_second_kind, check_theorem2, check_toeplitz,
                         default_suite, empirical_regularity, to_plain)

ERROR_EXIT = 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(ERROR_EXIT, f"{self.prog}: error: {message}\n")


def _fmt(v) -> str:
    """Shortest round-trip decimal for floats; exact rationals as p/q."""
    if isinstance(v, Fraction):
        return str(v.numerator) if v.denominator == 1 else f"{v.numerator}/{v.denominator}"
    if isinstance(v, (int, np.integer)) and not isinstance(v, bool):
        return str(int(v))
    return repr(float(v))


def _dump(doc: dict) -> str:
    return json.dumps(to_plain(doc), sort_keys=True, indent=2) + "\n"


def _csv(header: list[str], rows: list[list]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow(r)
    return buf.getvalue()


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _load(args) -> cfg.ConfigDocument:
    if not args.config:
        raise ConfigError("--config PATH is required")
    doc = cfg.ConfigDocument.load(args.config)
    if args.seed is not None:
        doc = doc.with_seed(args.seed)
    return doc


# --------------------------------------------------------------------------
# transform
# --------------------------------------------------------------------------

def _value_cells(v) -> list:
    arr = np.asarray(v, dtype=float)
    return [arr.item()] if arr.ndim == 0 else arr.reshape(-1).tolist()


def transform_rows(doc: cfg.ConfigDocument, input_expr: str | None = None, sequence: str | None = None):
    """Evaluate the configured transform; returns (kind, rows)."""
    dim = doc.dim()
    if input_expr is not None:
        try:
            e = Expression(input_expr, doc._vars() - {"u"})
        except ConfigError as exc:
            raise ConfigError(f"in --input: {Exception.__str__(exc)}", column=exc.column) from None
        kind, inp = "function", TestFunction(lambda Y: e(**point_env(Y, dim)), name=input_expr)
    elif sequence is not None:
        kind, inp = "sequence", cfg.read_sequence(sequence)
    else:
        kind, inp = cfg.build_input(doc, dim)
    points = cfg.build_points(doc, dim)

    if kind == "sequence":
        ms = [int(m) for m in points]
        C = cfg.build_matrix(doc, max(ms))
        rows = []
        for m in ms:
            t = apply_matrix_method(C, inp, m)
            rows.append({"m": m, "value": float(t), "exact": _fmt(t) if isinstance(t, (int, Fraction)) else None,
                         "error_bound": 0.0})
        return "sequence", rows

    method = doc.data["method"]
    rows = []
    if method == "holder":
        k = int((doc.get("params") or {}).get("k", 1))
        for x in points:
            rows.append({"x": x, "value": holder_apply(inp, float(x), k, doc.quad()), "error_bound": None})
        return "function", rows
    spec = cfg.build_spec(doc)
    quad = doc.quad()
    for x in points:
        X = np.asarray(x, dtype=float)
        if isinstance(spec, OperatorSpec):
            ev = evaluate_generic(spec, inp, X, quad)
        elif isinstance(spec, DiscreteOperatorSpec):
            ev = evaluate_discrete(spec, inp, X, quad.tail_tol)
        elif isinstance(spec, SecondKindSpec):
            ev = evaluate_second_kind(spec, inp, X, quad)
        else:
            raise ConfigError(f"cannot transform with {type(spec).__name__}")
        rows.append({"x": x, "value": ev.value, "error_bound": ev.error_bound})
    return "function", rows


def cmd_transform(args) -> int:
    doc = _load(args)
    kind, rows = transform_rows(doc, args.input, args.sequence)
    if args.format == "csv":
        if kind == "sequence":
            table = [[r["m"], _fmt(r["value"]), r["exact"] or "", _fmt(r["error_bound"])] for r in rows]
            text = _csv(["m", "value", "exact", "error_bound"], table)
        else:
            xw = len(_value_cells(rows[0]["x"])) if rows else 1
            vw = len(_value_cells(rows[0]["value"])) if rows else 1
            head = (["x"] if xw == 1 else [f"x{i + 1}" for i in range(xw)]) + \
                   (["value"] if vw == 1 else [f"value{i + 1}" for i in range(vw)]) + ["error_bound"]
            table = [[_fmt(c) for c in _value_cells(r["x"])] + [_fmt(c) for c in _value_cells(r["value"])]
                     + ["" if r["error_bound"] is None else _fmt(r["error_bound"])] for r in rows]
            text = _csv(head, table)
    else:
        text = _dump({"command": "transform", "method": doc.data["method"], "kind": kind, "rows": rows})
    _emit(text, args.out)
    return 0


# --------------------------------------------------------------------------
# check
# --------------------------------------------------------------------------

_TOEPLITZ_OVERALL = {PASS: REGULAR, FAIL: NOT_REGULAR, INCONCLUSIVE: INCONCLUSIVE}


def check_document(doc: cfg.ConfigDocument) -> dict:
    """Run the configured checks and return the report document (with ``exit_code``)."""
    settings = doc.check_settings()
    method = doc.data["method"]
    if method == "moments":
        order = int((doc.get("params") or {}).get("order", 50))
        C = cfg.build_matrix(doc, order)
        rep = check_toeplitz(C, order, settings)
        overall = _TOEPLITZ_OVERALL[rep.verdict]
        return {"command": "check", "method": method, "kind": "toeplitz", "overall": overall,
                "exit_code": EXIT_CODES[overall], "toeplitz": rep.to_dict()}
    spec = cfg.build_spec(doc)
    F = cfg.build_filter(doc)
    if isinstance(spec, DiscreteOperatorSpec):
        rep = check_discrete_conditions(spec, F, F, settings)
    elif isinstance(spec, SecondKindSpec):
        rep = check_second_kind(spec, F, settings)
    else:
        rep = check_theorem2(spec, F, F, settings=settings)
    out = {"command": "check", "method": method, "kind": "conditions", **rep.to_dict()}
    if "empirical" in doc.data.get("checks", ["conditions"]):
        emp = empirical_regularity(applier(spec, settings.quad), default_suite(F.kind), F, settings)
        out["empirical"] = emp.to_dict()
    return out


def _trace_rows(report: dict) -> list[list]:
    rows = []
    for c in report.get("conditions", []):
        ev = c["evidence"]
        if "trace" in ev:
            for k, (t, d) in enumerate(zip(ev["thresholds"], ev["trace"]), start=1):
                rows.append([c["id"], k, _fmt(t), _fmt(d)])
    for r in (report.get("empirical") or {}).get("per_function", []):
        for k, d in enumerate(r["trace"], start=1):
            rows.append([f"empirical:{r['name']}", k, "", _fmt(d)])
    return rows


def cmd_check(args) -> int:
    doc = _load(args)
    report = check_document(doc)
    if args.format == "csv":
        text = _csv(["series", "level", "threshold", "deviation"], _trace_rows(report))
    else:
        text = _dump(report)
    _emit(text, args.out)
    return report["exit_code"]


# --------------------------------------------------------------------------
# demo and methods
# --------------------------------------------------------------------------

def cmd_demo(args) -> int:
    if args.name not in DEMOS:
        raise ConfigError(f"unknown demo {args.name!r}; choose from {', '.join(DEMOS)}")
    rep = run_demo(args.name)
    if args.format == "csv":
        rows = [[c["label"], json.dumps(c["observed"]), json.dumps(c["expected"]),
                 "" if c["tol"] is None else _fmt(c["tol"]), c["verdict"]] for c in rep.to_dict()["checks"]]
        text = _csv(["check", "observed", "expected", "tol", "verdict"], rows)
    elif args.out:
        text = _dump(rep.to_dict())
    else:
        text = "\n".join(rep.lines()) + "\n"
    _emit(text, args.out)
    if args.out:
        sys.stdout.write("\n".join(rep.lines()) + "\n")
    return 0 if rep.verdict == "PASS" else 1


def cmd_methods(args) -> int:
    if args.action != "list":
        raise ConfigError(f"unknown methods action {args.action!r}; only `list` is supported")
    if args.format == "csv":
        text = _csv(["method", "description"], [[k, v] for k, v in METHODS.items()])
    elif args.out:
        text = _dump({"methods": METHODS})
    else:
        width = max(map(len, METHODS))
        text = "".join(f"{k:<{width}}  {v}\n" for k, v in METHODS.items())
    _emit(text, args.out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="YAML config document")
    common.add_argument("--seed", type=int, help="override the sampling seed")
    common.add_argument("--out", metavar="PATH", help="write the output here instead of stdout")
    common.add_argument("--format", choices=("report", "csv"), default="report")

    p = _Parser(prog="hausreg", description="Hausdorff-type transforms and their regularity checks.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    t = sub.add_parser("transform", parents=[common], help="evaluate a configured transform")
    t.add_argument("--input", metavar="EXPR", help="input function, overriding the config")
    t.add_argument("--sequence", metavar="PATH", help="sequence file (one value per line), overriding the config")
    t.set_defaults(func=cmd_transform)
    c = sub.add_parser("check", parents=[common], help="check regularity conditions")
    c.set_defaults(func=cmd_check)
    d = sub.add_parser("demo", parents=[common], help="reproduce a worked example")
    d.add_argument("name", help=", ".join(DEMOS))
    d.set_defaults(func=cmd_demo)
    m = sub.add_parser("methods", parents=[common], help="list available methods")
    m.add_argument("action", choices=("list",))
    m.set_defaults(func=cmd_methods)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (HausdorffError, OSError, KeyError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return ERROR_EXIT


if __name__ == "__main__":
    sys.exit(main())
