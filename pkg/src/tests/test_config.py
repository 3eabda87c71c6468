"""Tests for JSON config files.

These cover:
- entry -> config -> entry for explicit, implicit and family entries
- integrals given as products of linear forms
- structural errors surfacing as ConfigError
"""
import json

import numpy as np
import pytest

from src.core.errors import ConfigError
from src.core.expr import evaluate
from src.data.config import entry_from_config, entry_to_config, load_config, save_config
from src.data.registry import get_example

POINT = (0.3, -0.4)
STATE = (0.3, -0.4, 0.7, 1.1)


def _minimal(**overrides):
    config = {
        "id": "my-metric",
        "kind": "explicit-metric",
        "metric": {"g11": "exp(x)", "g12": 0, "g22": "exp(x)"},
        "integral": {"coefficients": [0, 1]},
        "region": {"box": [[-1, 1], [-1, 1]]},
    }
    config.update(overrides)
    return config


@pytest.mark.parametrize("example_id", ["ex2-explicit", "ex9-explicit", "liouville-n2"])
def test_explicit_round_trip(example_id, tmp_path):
    # Input: a built-in entry saved to disk and loaded back
    # Expected: same metric, integral, curvature and region
    entry = get_example(example_id)
    path = save_config(entry, str(tmp_path / f"{example_id}.json"))
    loaded = load_config(path)
    assert loaded.id == entry.id and loaded.kind == entry.kind and loaded.degree == entry.degree
    np.testing.assert_allclose(loaded.metric.evaluate(POINT), entry.metric.evaluate(POINT), rtol=1e-13)
    assert loaded.integral.evaluate(STATE) == pytest.approx(entry.integral.evaluate(STATE), rel=1e-12)
    assert loaded.region.box == entry.region.box
    assert len(loaded.region.singular_loci) == len(entry.region.singular_loci)
    assert loaded.initial_state == entry.initial_state
    assert loaded.expected_verdict == entry.expected_verdict
    if entry.curvature is not None:
        point = dict(zip(entry.coordinates, POINT))
        assert evaluate(loaded.curvature, point) == pytest.approx(evaluate(entry.curvature, point), rel=1e-13)


def test_implicit_round_trip():
    entry = get_example("ex3-implicit")
    loaded = entry_from_config(json.loads(json.dumps(entry_to_config(entry))))
    assert loaded.is_implicit
    assert loaded.coordinates == ("t", "x")
    assert loaded.constants == entry.constants
    assert loaded.anchor == entry.anchor
    assert loaded.grid.as_list() == entry.grid.as_list()
    a = (-0.4, 0.1, 1.2)
    np.testing.assert_allclose(loaded.system.residual(a, 0.05, -1.7), entry.system.residual(a, 0.05, -1.7),
                               rtol=1e-13)
    quadratic = loaded.with_preset("quadratic")
    assert quadratic.anchor == entry.with_preset("quadratic").anchor
    assert len(loaded.generators) == 3


def test_family_config_by_parameters():
    # Input: a family config naming only the built-in family and its parameter
    # Expected: the hydrated built-in entry
    entry = entry_from_config({"id": "ex0-family", "kind": "family", "parameters": {"n": 4}})
    assert entry.degree == 5
    hydrated = entry_from_config(entry_to_config(entry))
    assert hydrated.integral.evaluate(STATE) == pytest.approx(entry.integral.evaluate(STATE), rel=1e-12)


def test_minimal_config_defaults():
    entry = entry_from_config(_minimal())
    assert entry.degree == 1
    assert entry.coordinates == ("x", "y")
    assert entry.region.margin == 0.1
    assert entry.initial_state is None


def test_integral_from_linear_forms():
    # Input: alpha^2 with alpha = p1 + y p2
    # Expected: coefficients 1, 2y, y^2
    entry = entry_from_config(_minimal(
        degree=2,
        integral={"expression": "alpha^2", "forms": {"alpha": ["1", "y"]}},
    ))
    coefficients = entry.integral.evaluate_coefficients(POINT)
    np.testing.assert_allclose(coefficients, [1.0, 2 * POINT[1], POINT[1] ** 2])


@pytest.mark.parametrize(
    "overrides",
    [
        {"kind": "surface"},
        {"metric": {"g11": "1", "g22": "1"}},
        {"integral": {"terms": []}},
        {"integral": {"expression": "alpha", "forms": {"alpha": ["1", "0", "2"]}}},
        {"integral": {"expression": "p1^2 + p2"}},
        {"initial_state": [0, 0, 1]},
        {"region": {"margin": 0.2}},
        {"region": {"box": [[1, -1], [0, 1]]}},
        {"degree": 3},
    ],
)
def test_config_errors(overrides):
    with pytest.raises(ConfigError):
        entry_from_config(_minimal(**overrides))


def test_implicit_config_errors():
    config = entry_to_config(get_example("ex1-implicit"))
    del config["anchor"]
    with pytest.raises(ConfigError):
        entry_from_config(config)
    config = entry_to_config(get_example("ex1-implicit"))
    config["grid"] = {"t0": 0.1, "t1": -0.1, "x0": 0, "x1": 1, "nt": 3, "nx": 3}
    with pytest.raises(ConfigError):
        entry_from_config(config)
    config = entry_to_config(get_example("ex1-implicit"))
    config["implicit"]["equations"].append("a0 - q")
    with pytest.raises(ConfigError):
        entry_from_config(config)


def test_load_config_errors(tmp_path):
    with pytest.raises(ConfigError):
        load_config(str(tmp_path / "missing.json"))
    bad = tmp_path / "bad.json"
    bad.write_text('{"id": "x", ', encoding="utf-8")
    with pytest.raises(ConfigError) as info:
        load_config(str(bad))
    assert "invalid JSON" in str(info.value)
    with pytest.raises(ConfigError):
        entry_from_config([1, 2, 3])


def test_family_without_metric_must_be_built_in():
    with pytest.raises(ConfigError):
        entry_from_config({"id": "my-family", "kind": "family", "parameters": {"n": 3}})
