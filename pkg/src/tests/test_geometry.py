"""Unit tests for metrics, momentum polynomials, Poisson brackets and curvature.

These tests cover:
- Hamiltonian and bracket algebra on small hand-checkable metrics
- {F, H} = 0 for the built-in explicit integrals on sampled regions
- Gauss curvature against closed forms
- the semi-geodesic assembly and its normalization checks
- region sampling away from singular curves
"""
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from src.core.errors import DegenerateMetricError, NormalizationError
from src.core.expr import Const, Program, Var, cos, evaluate, exp, sin, variables
from src.core.expr_text import parse
from src.core.geometry import (
    Metric2D,
    MomentumPoly,
    Region,
    bracket_residual_stats,
    bracket_residuals,
    gauss_curvature,
    hamiltonian,
    poisson_bracket,
    relative_error,
    scalar_curvature,
    semi_geodesic_assembly,
)
from src.data.registry import get_example

x, y = variables("x y")


def _values(poly: MomentumPoly, point):
    return poly.evaluate_coefficients(point)


def test_hamiltonian_of_flat_metric():
    # Input: identity metric dx^2 + dy^2
    # Expected: H = (p1^2 + p2^2)/2
    h = hamiltonian(Metric2D.identity())
    assert h.degree == 2
    assert _values(h, (0.3, -0.7)) == pytest.approx([0.5, 0.0, 0.5])
    assert h.evaluate((0.0, 0.0, 3.0, 4.0)) == pytest.approx(12.5)


def test_hamiltonian_inverts_metric():
    metric = Metric2D(2 + x ** 2, x * y, 3 + y ** 2)
    h = hamiltonian(metric)
    point = (0.4, -1.2)
    g = metric.evaluate(point)
    inv = np.linalg.inv(g)
    h11, h12, h22 = _values(h, point)
    assert 2 * h11 == pytest.approx(inv[0, 0])
    assert h12 == pytest.approx(inv[0, 1])
    assert 2 * h22 == pytest.approx(inv[1, 1])


def test_degenerate_metric():
    with pytest.raises(DegenerateMetricError):
        hamiltonian(Metric2D(Const(1), Const(1), Const(1)))
    with pytest.raises(DegenerateMetricError):
        Metric2D(x, 0, 1).evaluate((0.0, 1.0))


def test_momentum_poly_algebra():
    # Input: A = x p1 + p2, B = p1 - y p2
    # Expected: A*B has coefficients (x, 1 - x y, -y); (A)^2 has degree 2
    a = MomentumPoly.linear(x, 1)
    b = MomentumPoly.linear(1, -y)
    prod = a * b
    assert prod.degree == 2
    assert _values(prod, (2.0, 3.0)) == pytest.approx([2.0, -5.0, -3.0])
    assert (a ** 2).degree == 2
    assert (a ** 0).degree == 0
    with pytest.raises(ValueError):
        a + prod
    with pytest.raises(ValueError):
        a ** -1
    with pytest.raises(ValueError):
        a + MomentumPoly.linear(1, 1, ("t", "x"))
    state = (2.0, 3.0, 0.5, -1.5)
    assert prod.evaluate(state) == pytest.approx(a.evaluate(state) * b.evaluate(state))


def test_momentum_derivatives():
    f = MomentumPoly((x * y, x, y ** 2))
    d1 = f.diff_momentum(0)
    d2 = f.diff_momentum(1)
    # d/dp1 (xy p1^2 + x p1 p2 + y^2 p2^2) = 2xy p1 + x p2
    assert _values(d1, (2.0, 3.0)) == pytest.approx([12.0, 2.0])
    assert _values(d2, (2.0, 3.0)) == pytest.approx([2.0, 18.0])
    assert _values(f.diff_coordinate(1), (2.0, 3.0)) == pytest.approx([2.0, 0.0, 6.0])


def test_from_expr_expands_forms():
    # Input: (alpha^2 + y*beta*p1) with alpha = x p1 + p2, beta = p2
    # Expected: x^2 p1^2 + (2x + y) p1 p2 + p2^2
    poly = MomentumPoly.from_expr(parse("alpha^2 + y*beta*p1"), {"alpha": (x, 1), "beta": (0, 1)})
    assert _values(poly, (1.5, -2.0)) == pytest.approx([2.25, 1.0, 1.0])
    scaled = MomentumPoly.from_expr(parse("p1*p2/(1 + x^2)"))
    assert _values(scaled, (1.0, 0.0)) == pytest.approx([0.0, 0.5, 0.0])


@pytest.mark.parametrize(
    "text",
    ["p1^2 + p2", "p1/p2", "sin(p1)", "p1^(1/2)"],
)
def test_from_expr_rejects_non_polynomial(text):
    with pytest.raises(NormalizationError):
        MomentumPoly.from_expr(parse(text))


def test_bracket_with_flat_hamiltonian():
    # Input: F = p1 and F = x p2 - y p1 on the flat metric
    # Expected: both commute with H (translations and rotations)
    h = hamiltonian(Metric2D.identity())
    assert poisson_bracket(MomentumPoly.linear(1, 0), h).is_structurally_zero()
    rotation = MomentumPoly.linear(-y, x)
    assert poisson_bracket(rotation, h).is_structurally_zero()
    # p1 does not commute with H = (1 + x^2)(p1^2 + p2^2)/2
    curved = hamiltonian(Metric2D.conformal(1 / (1 + x ** 2)))
    residual = bracket_residuals(MomentumPoly.linear(1, 0), curved, np.array([[0.5, 0.0]]))
    assert residual[0] > 0.1


def test_bracket_is_antisymmetric():
    metric = Metric2D(1 + x ** 2, 0, 2 + sin(y))
    h = hamiltonian(metric)
    f = MomentumPoly((x, y, x * y))
    fh = poisson_bracket(f, h)
    hf = poisson_bracket(h, f)
    point = (0.3, 0.9)
    assert _values(fh, point) == pytest.approx([-v for v in _values(hf, point)], abs=1e-14)
    assert poisson_bracket(MomentumPoly.scalar(1), MomentumPoly.scalar(x)).degree == 0


@pytest.mark.parametrize(
    "example_id, params",
    [
        ("ex2-explicit", None),
        ("ex7-explicit", None),
        ("ex9-explicit", None),
        ("ex0-family", {"n": 3}),
        ("n1-family", None),
        ("liouville-n2", None),
    ],
)
def test_builtin_integrals_commute(example_id, params):
    # Input: the built-in metric and integral, 1000 points of the sampling region
    # Expected: relative {F, H} residual <= 1e-9 at every evaluated point
    entry = get_example(example_id, params)
    points = entry.region.sample(np.random.default_rng(1), 1000)
    stats = bracket_residual_stats(entry.integral, hamiltonian(entry.metric), points, tolerance=1e-9)
    assert stats.evaluated == 1000
    assert stats.passed, stats.to_dict()


def test_bracket_detects_a_wrong_integral():
    # Input: F = p1 on the ex2 metric
    # Expected: the bracket check fails
    entry = get_example("ex2-explicit")
    points = entry.region.sample(np.random.default_rng(2), 200)
    stats = bracket_residual_stats(MomentumPoly.linear(1, 0), hamiltonian(entry.metric), points, tolerance=1e-9)
    assert not stats.passed
    assert stats.worst_point is not None


def test_bracket_stats_with_no_evaluable_points():
    f = MomentumPoly.linear(1 / x, 0)
    stats = bracket_residual_stats(f, hamiltonian(Metric2D.identity()), np.array([[0.0, 1.0]]), tolerance=1e-9)
    assert stats.evaluated == 0
    assert not stats.passed
    assert stats.to_dict()["worst_point"] is None


@pytest.mark.parametrize("example_id", ["ex2-explicit", "ex7-explicit", "ex9-explicit"])
def test_gauss_curvature_closed_forms(example_id):
    entry = get_example(example_id)
    points = entry.region.sample(np.random.default_rng(5), 100)
    computed, expected = Program([gauss_curvature(entry.metric), entry.curvature]).evaluate_arrays(
        {"x": points[:, 0], "y": points[:, 1]})
    assert np.max(relative_error(computed, expected)) <= 1e-9


def test_gauss_curvature_of_simple_surfaces():
    # Input: flat metric, round sphere dθ^2 + sin^2 θ dφ^2, hyperbolic plane (dx^2 + dy^2)/y^2
    # Expected: K = 0, 1, -1
    assert evaluate(gauss_curvature(Metric2D.identity()), {"x": 0.2, "y": 0.1}) == 0.0
    sphere = Metric2D(1, 0, sin(Var("th")) ** 2, ("th", "ph"))
    assert evaluate(gauss_curvature(sphere), {"th": 0.8, "ph": 0.1}) == pytest.approx(1.0, rel=1e-12)
    hyperbolic = Metric2D.conformal(1 / y ** 2)
    assert evaluate(gauss_curvature(hyperbolic), {"x": 0.3, "y": 1.7}) == pytest.approx(-1.0, rel=1e-12)
    assert evaluate(scalar_curvature(hyperbolic), {"x": 0.3, "y": 1.7}) == pytest.approx(-2.0, rel=1e-12)
    assert evaluate(scalar_curvature(hyperbolic, -1), {"x": 0.3, "y": 1.7}) == pytest.approx(2.0, rel=1e-12)


@settings(max_examples=30, deadline=None)
@given(st.floats(min_value=-1.0, max_value=1.0), st.floats(min_value=-1.0, max_value=1.0),
       st.floats(min_value=0.1, max_value=2.0))
def test_curvature_invariant_under_affine_maps(px, py, stretch):
    # K(pullback g)(u) == K(g)(A u + b) for u -> A u + b
    metric = Metric2D(2 + cos(x) * y ** 2, x * y / 4, 3 + exp(x / 2))
    matrix = ((stretch, 0.5), (-0.25, 1.0))
    shift = (0.1, -0.2)
    pulled = metric.pullback_affine(matrix, shift)
    image = (stretch * px + 0.5 * py + 0.1, -0.25 * px + py - 0.2)
    k_pulled = evaluate(gauss_curvature(pulled), {"x": px, "y": py})
    k_source = evaluate(gauss_curvature(metric), {"x": image[0], "y": image[1]})
    assert k_pulled == pytest.approx(k_source, rel=1e-9, abs=1e-10)


def test_semi_geodesic_assembly():
    # Input: n = 2, g = 1 + t^2, a = (x, g, 1)
    # Expected: metric g^2 dt^2 + dx^2; F coefficients a_k / g^(n-k)
    t = Var("t")
    g = 1 + t ** 2
    metric, integral = semi_geodesic_assembly(g, (Var("x"), g, 1), 2)
    assert metric.coordinates == ("t", "x")
    assert metric.evaluate((1.0, 0.0)) == pytest.approx(np.array([[4.0, 0.0], [0.0, 1.0]]))
    assert integral.evaluate_coefficients((1.0, 3.0)) == pytest.approx([0.75, 1.0, 1.0])
    with pytest.raises(NormalizationError):
        semi_geodesic_assembly(g, (Var("x"), g, 2), 2)
    with pytest.raises(NormalizationError):
        semi_geodesic_assembly(g, (Var("x"), Var("x"), 1), 2)
    with pytest.raises(NormalizationError):
        semi_geodesic_assembly(g, (g, 1), 2)


def test_n1_assembly_gives_killing_field():
    # Input: g = f(t - x), a = (g, 1): F = p1 + p2
    # Expected: {F, H} vanishes identically
    t, xx = Var("t"), Var("x")
    g = 2 + sin(t - xx)
    metric, integral = semi_geodesic_assembly(g, (g, 1), 1)
    points = np.random.default_rng(0).uniform(-1, 1, size=(50, 2))
    assert np.max(bracket_residuals(integral, hamiltonian(metric), points)) < 1e-13


def test_region_sampling_keeps_clear_of_loci():
    region = Region(((-2.0, 2.0), (-2.0, 2.0)), (parse("y^2 - 2*x"),), margin=0.1)
    points = region.sample(np.random.default_rng(0), 500)
    assert points.shape == (500, 2)
    assert np.all(region.distances(points) >= 0.1)
    assert np.all(np.abs(points) <= 2.0)
    # (0.5, 1) lies on y^2 = 2x
    assert not region.contains(np.array([[0.5, 1.0]]))[0]
    assert region.contains(np.array([[-1.0, 0.0]]))[0]


def test_region_signed_distances():
    # Input: loci x - 1 and 2y + 1 at (0.25, 0.5)
    # Expected: -0.75 on the first (left side), (2*0.5 + 1)/2 = 1 on the second
    region = Region(((-2.0, 2.0), (-2.0, 2.0)), (x - 1, 2 * y + 1))
    np.testing.assert_allclose(region.signed_distances((0.25, 0.5)), [-0.75, 1.0])
    np.testing.assert_allclose(region.distances(np.array([[0.25, 0.5]])), [0.75])


def test_region_rejects_bad_input():
    with pytest.raises(ValueError):
        Region(((1.0, 0.0), (0.0, 1.0)))
    # every point is within the margin of x = 0 on a thin strip
    thin = Region(((-0.01, 0.01), (0.0, 1.0)), (x,), margin=0.5)
    with pytest.raises(ValueError):
        thin.sample(np.random.default_rng(0), 10, max_batches=5)


def test_metric_substitute_and_free_variables():
    k = Var("k")
    metric = Metric2D(1 + k * x ** 2, 0, 1)
    assert metric.free_variables() == frozenset({"k", "x"})
    bound = metric.substitute({"k": 2.0})
    assert bound.evaluate((1.0, 0.0))[0, 0] == pytest.approx(3.0)
    assert math.isclose(evaluate(bound.det, {"x": 1.0, "y": 0.0}), 3.0)
