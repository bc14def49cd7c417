from fractions import Fraction
from pathlib import Path

import numpy as np
import pytest
import yaml
from hypothesis import given, settings, strategies as st

from hausreg import config as cfg
from hausreg.errors import ConfigError
from hausreg.filters import Affine, Rotation, Shift
from hausreg.measures import atom_mass, total_mass
from hausreg.operators import DiscreteOperatorSpec, SecondKindSpec, TestFunction, apply_generic

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


def doc(text):
    return cfg.ConfigDocument.from_text(text)


def test_measure_atoms_and_pieces_are_exact():
    d = doc("method: hausdorff\nmeasure:\n  atoms: [[0, 1/2]]\n  pieces: [{density: 0.5, lo: 0, hi: 1}]\n")
    mu = cfg.build_measure(d)
    assert mu.is_exact
    assert atom_mass(mu, 0) == Fraction(1, 2)
    assert total_mass(mu) == pytest.approx(1.0, abs=1e-15)


def test_measure_presets_and_expression_density():
    assert total_mass(cfg.build_measure(doc("method: hausdorff\nmeasure: lebesgue\n"))) == 1.0
    d = doc("method: hausdorff\nmeasure:\n  pieces: [{density: 2*u, lo: 0, hi: 1}]\n")
    assert total_mass(cfg.build_measure(d)) == pytest.approx(1.0, abs=1e-14)
    with pytest.raises(ConfigError):
        cfg.build_measure(doc("method: hausdorff\nmeasure: {preset: nowhere}\n"))


def test_tail_measure():
    d = doc("method: custom\nkernel: exp(-u)\nenvelope: exp(-u)\nmeasure:\n"
            "  tail: {start: 0, envelope: exp(-u), envelope_tail: exp(-u), cutoff: 40}\n")
    spec = cfg.build_spec(d)
    assert apply_generic(spec, TestFunction(lambda t: np.exp(-t)), 2.0) == pytest.approx(1 / 3, abs=1e-12)


def test_family_classes():
    d = doc("method: custom\nkernel: 1\nmeasure: lebesgue\nfamily: {class: shift, shift: 2*u}\n")
    assert isinstance(cfg.build_spec(d).family, Shift)
    d = doc("method: custom\ndim: 2\nmeasure: {preset: haar}\nfamily: {class: rotation, offset: [1, 0]}\n")
    assert isinstance(cfg.build_spec(d).family, Rotation)
    d = doc("method: custom\ndim: 2\nmeasure: {preset: lebesgue, lo: 1, hi: 2}\n"
            "family: {class: affine, matrix: [[u, 0], [0, u]], offset: [u, 0]}\n")
    fam = cfg.build_spec(d).family
    assert isinstance(fam, Affine)
    assert np.allclose(fam(np.array([2.0]), np.array([[1.0, 1.0]]))[0, 0], [4.0, 2.0])


def test_discrete_and_second_kind_documents():
    spec = cfg.build_spec(cfg.ConfigDocument.load(CONFIGS / "geometric.yaml"))
    assert isinstance(spec, DiscreteOperatorSpec)
    spec = cfg.build_spec(cfg.ConfigDocument.load(CONFIGS / "second_kind.yaml"))
    assert isinstance(spec, SecondKindSpec) and spec.alpha == 0.5 and spec.a_bound == 0.5


def test_points_and_sequences(tmp_path):
    assert cfg.build_points(doc("method: identity\npoints: {range: [0, 6, 3]}\n")) == [0, 3, 6]
    assert cfg.build_points(doc("method: identity\npoints: {last: 9}\n")) == [9]
    assert cfg.build_points(doc("method: affine\npoints: [[1, 2]]\n"), 2) == [(1.0, 2.0)]
    p = tmp_path / "s.txt"
    p.write_text("# header\n1\n-2\n3/4\n0.5\n")
    assert cfg.read_sequence(p) == [1, -2, Fraction(3, 4), 0.5]
    p.write_text("1\nabc\n")
    with pytest.raises(ConfigError) as exc:
        cfg.read_sequence(p)
    assert exc.value.line == 2


@pytest.mark.parametrize("text,line,col", [
    ("method: cesaro\nparams: {alpha: 1\n", 3, 1),
    ("method: nope\n", 1, 9),
    ("method: cesaro\ncolour: red\n", 2, 1),
    ("method: cesaro\nparams: {beta: 2}\n", 2, 10),
    ("method: cesaro\ninput: {expr: atan(x) + foo}\n", 2, 25),
    ("method: cesaro\ninput: {expr: 'atan(x) + foo'}\n", 2, 26),
    ("method: custom\nmeasure: lebesgue\nkernel: u * y\n", 3, 13),
    ("method: cesaro\nsettings: {speed: 3}\n", 2, 12),
])
def test_errors_report_line_and_column(text, line, col):
    with pytest.raises(ConfigError) as exc:
        doc(text)
    assert (exc.value.line, exc.value.column) == (line, col)


def test_settings_flow_into_checks():
    d = doc("method: cesaro\nsettings: {seed: 7, samples: 16, grade_levels: 30}\n")
    s = d.check_settings()
    assert (s.seed, s.samples, s.quad.grade_levels) == (7, 16, 30)
    assert d.with_seed(11).check_settings().seed == 11
    with pytest.raises(ConfigError):
        doc("method: cesaro\nsettings: {levels: 1}\n").check_settings()


@pytest.mark.parametrize("path", sorted(CONFIGS.glob("*.yaml")), ids=lambda p: p.stem)
def test_shipped_configs_round_trip(path):
    d = cfg.ConfigDocument.load(path)
    again = cfg.ConfigDocument.from_text(d.to_text(), base_dir=path.parent)
    assert again.data == d.data
    assert again.to_text() == d.to_text()


@settings(max_examples=50, deadline=None)
@given(st.sampled_from(["cesaro", "abel", "hausdorff", "holder"]), st.floats(0.1, 5.0),
       st.lists(st.floats(0.01, 1e6), min_size=1, max_size=4), st.integers(0, 10 ** 6))
def test_round_trip_property(method, alpha, points, seed):
    data = {"method": method, "points": points, "input": {"expr": "atan(x)"}, "settings": {"seed": seed}}
    if method == "cesaro":
        data["params"] = {"alpha": alpha}
    if method == "hausdorff":
        data["measure"] = {"pieces": [{"density": 1, "lo": 0, "hi": 1}]}
    if method == "holder":
        data["params"] = {"k": 2}
    d = doc(yaml.safe_dump(data))
    again = doc(d.to_text())
    assert again.data == d.data
    a = apply_generic(cfg.build_spec(d), TestFunction(np.arctan), np.array(points))
    b = apply_generic(cfg.build_spec(again), TestFunction(np.arctan), np.array(points))
    assert np.array_equal(a, b)
