import csv
import io
import json
import subprocess
import sys
from pathlib import Path

import pytest

from hausreg.cli import main
from hausreg.demos import DEMOS, run_demo

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


@pytest.mark.parametrize("name,code", [("cesaro", 0), ("atom_at_zero", 1), ("custom_kernel", 2), ("grandi", 0),
                                       ("abel", 0), ("geometric", 0), ("second_kind", 0), ("affine", 0),
                                       ("delsarte", 0), ("holder", 0), ("identity", 0)])
def test_check_exit_codes(capsys, name, code):
    got, out, _ = run(capsys, "check", "--config", str(CONFIGS / f"{name}.yaml"))
    assert got == code
    report = json.loads(out)
    assert report["exit_code"] == code


def test_check_reports_agreement_witness(capsys):
    _, out, _ = run(capsys, "check", "--config", str(CONFIGS / "atom_at_zero.yaml"))
    report = json.loads(out)
    agrees = next(c for c in report["conditions"] if c["id"] == "agrees")
    assert agrees["verdict"] == "FAIL"
    assert agrees["witness"] == {"u": 0.0, "mass": 0.5}


def test_check_with_empirical_section(capsys):
    _, out, _ = run(capsys, "check", "--config", str(CONFIGS / "cesaro.yaml"))
    assert json.loads(out)["empirical"]["verdict"] == "PASS"


def test_check_is_deterministic_and_seeded(capsys, tmp_path):
    cfg = str(CONFIGS / "cesaro.yaml")
    a = tmp_path / "a.json"
    b = tmp_path / "b.json"
    run(capsys, "check", "--config", cfg, "--seed", "3", "--out", str(a))
    run(capsys, "check", "--config", cfg, "--seed", "3", "--out", str(b))
    assert a.read_text() == b.read_text()


def test_check_csv_trace(capsys):
    _, out, _ = run(capsys, "check", "--config", str(CONFIGS / "cesaro.yaml"), "--format", "csv")
    rows = list(csv.reader(io.StringIO(out)))
    assert rows[0] == ["series", "level", "threshold", "deviation"]
    assert any(r[0] == "iv" for r in rows[1:])


def test_transform_sequence_exact(capsys):
    code, out, _ = run(capsys, "transform", "--config", str(CONFIGS / "grandi.yaml"), "--format", "csv")
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    assert rows == [{"m": "9999", "value": "0.5", "exact": "1/2", "error_bound": "0.0"}]


def test_transform_with_input_override(capsys):
    code, out, _ = run(capsys, "transform", "--config", str(CONFIGS / "cesaro.yaml"), "--input", "x")
    assert code == 0
    rows = json.loads(out)["rows"]
    assert [r["value"] for r in rows] == pytest.approx([5.0, 50.0, 5000.0])


def test_transform_sequence_override(capsys, tmp_path):
    p = tmp_path / "s.txt"
    p.write_text("1\n2\n3\n-4\n")
    code, out, _ = run(capsys, "transform", "--config", str(CONFIGS / "identity.yaml"), "--sequence", str(p),
                       "--format", "csv")
    assert code == 0
    assert [r["exact"] for r in csv.DictReader(io.StringIO(out))] == ["1", "2", "3", "-4"]


def test_vector_transform_csv(capsys):
    code, out, _ = run(capsys, "transform", "--config", str(CONFIGS / "affine.yaml"), "--format", "csv")
    rows = list(csv.DictReader(io.StringIO(out)))
    assert code == 0 and float(rows[0]["value"]) == pytest.approx(7.5)
    assert set(rows[0]) == {"x1", "x2", "value", "error_bound"}


@pytest.mark.parametrize("text,fragment", [
    ("method: cesaro\nparams: {alpha: 1\n", "line 3, column 1"),
    ("method: cesaro\ninput: {expr: atan(x) + foo}\npoints: [1]\n", "line 2, column 25"),
])
def test_parse_errors_exit_3(capsys, tmp_path, text, fragment):
    p = tmp_path / "bad.yaml"
    p.write_text(text)
    code, _, err = run(capsys, "transform", "--config", str(p))
    assert code == 3
    assert "parse-error" in err and fragment in err


def test_evaluation_errors_exit_3(capsys, tmp_path):
    p = tmp_path / "nan.yaml"
    p.write_text("method: cesaro\ninput: {expr: log(x - 1)}\npoints: [0.5]\n")
    code, _, err = run(capsys, "transform", "--config", str(p))
    assert code == 3 and "nan-in-integrand" in err
    code, _, err = run(capsys, "transform", "--config", str(tmp_path / "missing.yaml"))
    assert code == 3


def test_usage_errors_exit_3(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["frobnicate"])
    assert exc.value.code == 3
    code, _, err = run(capsys, "check")
    assert code == 3 and "--config" in err


def test_methods_list(capsys):
    code, out, _ = run(capsys, "methods", "list")
    assert code == 0
    names = [line.split()[0] for line in out.splitlines()]
    assert {"cesaro", "abel", "moments", "delsarte", "affine", "second-kind", "discrete"} <= set(names)


@pytest.mark.parametrize("name", list(DEMOS))
def test_demos_pass(capsys, name, tmp_path):
    code, out, _ = run(capsys, "demo", name)
    assert code == 0
    assert out.strip().splitlines()[-1] == f"PASS  {name}"
    target = tmp_path / "demo.json"
    run(capsys, "demo", name, "--out", str(target))
    assert json.loads(target.read_text())["verdict"] == "PASS"


def test_run_demo_unknown():
    with pytest.raises(KeyError):
        run_demo("nothing")


def test_console_entry_point():
    proc = subprocess.run([sys.executable, "-m", "hausreg", "methods", "list"], capture_output=True, text=True)
    assert proc.returncode == 0 and "cesaro" in proc.stdout
