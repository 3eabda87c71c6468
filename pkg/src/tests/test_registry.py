"""Tests for the example catalog.

These cover:
- catalog ids, metadata and family parameters
- constant overrides and presets of implicit entries
- entry validation and lookup errors
"""
import numpy as np
import pytest

from src.core.errors import ConfigError, UnknownExampleError
from src.core.geometry import MomentumPoly
from src.data.registry import (
    EXPLICIT,
    FAMILY,
    IMPLICIT,
    Anchor,
    ExampleEntry,
    example_ids,
    get_example,
    list_examples,
)

EXPECTED_IDS = [
    "ex0-family", "ex1-implicit", "ex2-explicit", "ex3-implicit", "ex4-implicit", "ex5-implicit",
    "ex6-implicit", "ex7-explicit", "ex8-implicit", "ex9-explicit", "n1-family", "liouville-n2",
]


def test_catalog_ids_and_metadata():
    assert example_ids() == EXPECTED_IDS
    listing = list_examples()
    assert [item["id"] for item in listing] == EXPECTED_IDS
    kinds = {item["id"]: item["kind"] for item in listing}
    assert kinds["ex2-explicit"] == EXPLICIT
    assert kinds["ex5-implicit"] == IMPLICIT
    assert kinds["liouville-n2"] == FAMILY
    degrees = {item["id"]: item["degree"] for item in listing}
    assert degrees == {
        "ex0-family": 4, "ex1-implicit": 3, "ex2-explicit": 3, "ex3-implicit": 3, "ex4-implicit": 3,
        "ex5-implicit": 4, "ex6-implicit": 4, "ex7-explicit": 4, "ex8-implicit": 5, "ex9-explicit": 5,
        "n1-family": 1, "liouville-n2": 2,
    }


def test_entries_are_cached():
    assert get_example("ex2-explicit") is get_example("ex2-explicit")


@pytest.mark.parametrize("n", [3, 4, 5])
def test_family_parameter_sets_the_degree(n):
    # Input: ex0-family with n = 3, 4, 5
    # Expected: integral of degree n + 1; parameters recorded in the metadata
    entry = get_example("ex0-family", {"n": n})
    assert entry.degree == n + 1
    assert entry.integral.degree == n + 1
    assert entry.metadata()["parameters"] == {"n": n}


def test_family_accepts_string_parameters():
    assert get_example("ex0-family", {"n": "4"}).degree == 5
    entry = get_example("n1-family", {"f": "3 + s^2"})
    assert entry.metric.free_variables() == frozenset({"t", "x"})


@pytest.mark.parametrize(
    "example_id, params",
    [
        ("ex0-family", {"n": 2}),
        ("ex0-family", {"n": "three"}),
        ("ex0-family", {"m": 3}),
        ("n1-family", {"f": "s + y"}),
        ("liouville-n2", {"f": "y^2"}),
        ("ex2-explicit", {"n": 3}),
    ],
)
def test_bad_parameters(example_id, params):
    with pytest.raises(ConfigError):
        get_example(example_id, params)


def test_unknown_example():
    with pytest.raises(UnknownExampleError) as info:
        get_example("ex42")
    assert "ex2-explicit" in str(info.value)


def test_constants_override():
    # Input: ex1-implicit with k = 2
    # Expected: new constants, original entry untouched, system rebound
    entry = get_example("ex1-implicit")
    doubled = entry.with_constants({"k": 2.0})
    assert doubled.constants == {"k": 2.0}
    assert entry.constants == {"k": 1.0}
    # a2 = 1, a1 = 0 solves the second relation only for t = 0 whatever k is
    residual = doubled.system.residual((-0.5, 0.0, 1.0), 0.0, -3.0)
    np.testing.assert_allclose(residual, [0.0, 0.0, 0.0], atol=1e-14)
    assert entry.with_constants({}) is entry
    with pytest.raises(ConfigError):
        entry.with_constants({"q": 1.0})


def test_bound_generators_substitute_constants():
    entry = get_example("ex1-implicit").with_constants({"k": 3.0})
    generators = entry.bound_generators()
    assert all("k" not in g.free_variables for g in generators)


def test_presets():
    entry = get_example("ex3-implicit")
    assert list(entry.presets) == ["quadratic"]
    quadratic = entry.with_preset("quadratic")
    assert quadratic.constants["k1"] == 1.0 and quadratic.constants["k2"] == 0.0
    assert quadratic.anchor == Anchor(8.0, -2.0 / 3.0, (0.0, -1.0, 1.0))
    assert quadratic.grid.t0 == pytest.approx(7.95)
    with pytest.raises(ConfigError):
        entry.with_preset("cubic")


def test_entry_validation():
    integral = MomentumPoly.linear(1, 0)
    with pytest.raises(ConfigError):
        ExampleEntry(id="bad", kind="symbolic", degree=1)
    with pytest.raises(ConfigError):
        ExampleEntry(id="bad", kind=EXPLICIT, degree=1, integral=integral)
    with pytest.raises(ConfigError):
        ExampleEntry(id="bad", kind=EXPLICIT, degree=2, metric=get_example("ex2-explicit").metric, integral=integral)
    source = get_example("ex1-implicit")
    with pytest.raises(ConfigError):
        ExampleEntry(id="bad", kind=IMPLICIT, degree=3, system=source.system, anchor=Anchor(0, 0, (1.0, 2.0)))
    with pytest.raises(ConfigError):
        ExampleEntry(id="bad", kind=IMPLICIT, degree=3, system=source.system)
