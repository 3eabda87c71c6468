"""Unit tests for the implicit hodograph solver.

These tests cover:
- Newton solves (convergence, singular Jacobians, domain failures)
- implicit-function derivatives
- grid specifications and breadth-first continuation, including flagged nodes
- the built-in implicit examples: anchors, grid convergence, PDE residual order
  and the {F, H} closure on the solved grid
- the closed-form n = 2 solution and the Euler-Poisson-Darboux potential
"""
import math
from fractions import Fraction

import numpy as np
import pytest

from src.core.errors import (
    ConvergenceError,
    DimensionError,
    DomainError,
    GridError,
    NewtonDomainError,
    SingularJacobianError,
    UnassignedVariableError,
)
from src.core.expr import Var, evaluate, log, power, variables
from src.core.flows import build_V
from src.core.hodograph import (
    CONVERGED,
    FAILED,
    SINGULAR,
    UNREACHED,
    GridContinuation,
    GridSpec,
    ImplicitSystem,
    bracket_closure,
    epd_check,
    epd_potential,
    implicit_jet,
    n2_bracket_residual,
    n2_diagonal_residual,
    n2_general_solution_sample,
    newton_solve,
    pde_residual_on_grid,
    refinement_study,
    solve_on_grid,
)
from src.data.registry import get_example

a0, a1, t, x, s = variables("a0 a1 t x s")

IMPLICIT_EXAMPLES = [
    ("ex1-implicit", None),
    ("ex3-implicit", None),
    ("ex3-implicit", "quadratic"),
    ("ex4-implicit", None),
    ("ex5-implicit", None),
    ("ex6-implicit", None),
    ("ex8-implicit", None),
]


def _entry(example_id, preset=None):
    entry = get_example(example_id)
    return entry.with_preset(preset) if preset else entry


def _solve(entry, spec=None):
    return solve_on_grid(entry.system, spec or entry.grid, entry.anchor.a, anchor=(entry.anchor.t, entry.anchor.x))


def _square_root_system():
    # a0^2 = x, a1 = t
    return ImplicitSystem((power(a0, 2) - x, a1 - t), ("a0", "a1"))


def test_implicit_system_validation():
    with pytest.raises(DimensionError):
        ImplicitSystem((a0 - t,), ("a0", "a1"))
    with pytest.raises(UnassignedVariableError):
        ImplicitSystem((a0 - Var("k") * t,), ("a0",))
    system = ImplicitSystem((a0 - Var("k") * t,), ("a0",), {"k": 2.0})
    assert system.residual((1.0,), 0.5, 0.0) == pytest.approx([0.0])
    assert system.with_constants(k=4.0).residual((1.0,), 0.5, 0.0) == pytest.approx([-1.0])


def test_newton_converges_quadratically():
    # Input: a0^2 = x, a1 = t at (t=0.5, x=4) from seed (1, 0)
    # Expected: a = (2, 0.5) within a handful of iterations
    result = newton_solve(_square_root_system(), 0.5, 4.0, (1.0, 0.0))
    assert result.a == pytest.approx([2.0, 0.5], abs=1e-10)
    assert result.residual <= 1e-11
    assert result.iterations <= 8


def test_newton_failures():
    system = _square_root_system()
    with pytest.raises(DimensionError):
        newton_solve(system, 0.0, 1.0, (1.0,))
    # dF/da0 = 2 a0 vanishes at the seed
    with pytest.raises(SingularJacobianError):
        newton_solve(system, 0.0, 1.0, (0.0, 0.0))
    # no real root for x < 0
    with pytest.raises(ConvergenceError):
        newton_solve(system, 0.0, -1.0, (1.0, 0.0))
    logarithmic = ImplicitSystem((log(a0) - x,), ("a0",))
    with pytest.raises(NewtonDomainError):
        newton_solve(logarithmic, 0.0, 0.0, (-1.0,))


def test_implicit_jet_matches_closed_form():
    # a0 = t x  ->  a_t = x, a_x = t
    system = ImplicitSystem((a0 - t * x,), ("a0",))
    a_t, a_x = implicit_jet(system, (0.6,), 2.0, 0.3)
    assert a_t == pytest.approx([0.3])
    assert a_x == pytest.approx([2.0])


def test_grid_spec():
    spec = GridSpec(-0.1, 0.1, 1.0, 2.0, 5, 11)
    assert spec.ht == pytest.approx(0.05)
    assert spec.hx == pytest.approx(0.1)
    fine = spec.refine()
    assert (fine.nt, fine.nx) == (9, 21)
    assert np.allclose(fine.ts[::2], spec.ts)
    assert spec.nearest(0.04, 1.52) == (3, 5)
    assert GridSpec.centered(0.0, 1.5, 0.1, 0.5, 5, 11) == spec
    assert spec.as_list() == [-0.1, 0.1, 1.0, 2.0, 5, 11]
    single = GridSpec(0.0, 0.0, 1.0, 2.0, 1, 3)
    assert single.ht == 0.0


@pytest.mark.parametrize(
    "args",
    [
        (0.0, 1.0, 0.0, 1.0, 0, 5),
        (1.0, 0.0, 0.0, 1.0, 3, 3),
        (0.0, 1.0, 0.0, 1.0, 1, 3),
        (0.0, 0.0, 0.0, 1.0, 3, 3),
    ],
)
def test_grid_spec_rejects_bad_ranges(args):
    with pytest.raises(GridError):
        GridSpec(*args)


def test_continuation_on_smooth_branch():
    # Input: a0^2 = x, a1 = t on [0, 1] x [1, 2], anchored at (0, 1) with a = (1, 0)
    # Expected: every node converges to (sqrt(x), t); each node is visited once
    spec = GridSpec(0.0, 1.0, 1.0, 2.0, 4, 5)
    visited = []
    grid = solve_on_grid(_square_root_system(), spec, (1.0, 0.0), anchor=(0.0, 1.0), callback=visited.append)
    assert grid.all_converged
    assert len(visited) == 20
    assert len({info["node"] for info in visited}) == 20
    tt, xx = np.meshgrid(spec.ts, spec.xs, indexing="ij")
    assert np.allclose(grid.component("a0"), np.sqrt(xx), atol=1e-10)
    assert np.allclose(grid.component("a1"), tt, atol=1e-10)
    # stored jets are the implicit-function derivatives
    assert np.allclose(grid.jets[:, :, 0, 1], 0.5 / np.sqrt(xx), atol=1e-9)
    rows = list(grid.rows())
    assert len(rows) == 20
    assert rows[0][:2] == (0.0, 1.0)
    assert rows[0][-2] == CONVERGED


def test_continuation_flags_nodes_past_a_fold():
    # Input: a0^2 = x on x in [-1, 1], anchored at x = 1
    # Expected: x >= 0 converge, x = -0.5 is flagged, x = -1 is never reached; nothing raises
    system = ImplicitSystem((power(a0, 2) - x,), ("a0",))
    spec = GridSpec(0.0, 0.0, -1.0, 1.0, 1, 5)
    continuation = GridContinuation(system, spec, (1.0,), anchor=(0.0, 1.0))
    steps = 0
    while continuation.has_next():
        continuation.step()
        steps += 1
    grid = continuation.solution()
    counts = grid.status_counts()
    assert counts[CONVERGED] == 3
    assert counts[UNREACHED] == 1
    assert grid.status[0, 1] in (FAILED, SINGULAR)
    assert not grid.all_converged
    assert math.isnan(grid.values[0, 1, 0])
    assert steps == 4
    stats = continuation.stats.to_dict()
    assert stats["nodes"] == 4
    assert stats["converged"] == 3


def test_continuation_reports_a_bad_anchor():
    system = ImplicitSystem((log(a0) - x,), ("a0",))
    with pytest.raises(ConvergenceError):
        solve_on_grid(system, GridSpec(0.0, 0.0, 0.0, 1.0, 1, 3), (-1.0,), anchor=(0.0, 0.0))


@pytest.mark.parametrize("example_id, preset", IMPLICIT_EXAMPLES)
def test_anchor_solves_the_system(example_id, preset):
    # Expected: the stored anchor is a root to 1e-11 and Newton stays on it
    entry = _entry(example_id, preset)
    anchor = entry.anchor
    assert np.max(np.abs(entry.system.residual(anchor.a, anchor.t, anchor.x))) <= 1e-11
    result = newton_solve(entry.system, anchor.t, anchor.x, anchor.a)
    assert result.a == pytest.approx(anchor.a, abs=1e-9)


@pytest.mark.parametrize("example_id, preset", IMPLICIT_EXAMPLES)
def test_default_grid_converges(example_id, preset):
    entry = _entry(example_id, preset)
    grid = _solve(entry)
    assert grid.all_converged, grid.status_counts()
    assert np.nanmax(grid.residuals) <= 1e-11
    assert np.all(np.isfinite(grid.jets))


@pytest.mark.parametrize("example_id, preset", IMPLICIT_EXAMPLES)
def test_grid_satisfies_the_quasi_linear_system(example_id, preset):
    # Input: the default grid, then two halvings of the step
    # Expected: the central-difference residual of a_t + V a_x shrinks at second order
    entry = _entry(example_id, preset)
    study = refinement_study(entry.system, build_V(entry.degree), entry.grid, entry.anchor.a,
                             anchor=(entry.anchor.t, entry.anchor.x), levels=3)
    assert len(study.residuals) == 3
    assert study.min_order is not None and study.min_order >= 1.9, study.to_dict()


def test_grid_residual_rejects_bad_grids():
    entry = get_example("ex1-implicit")
    grid = _solve(entry, GridSpec(-0.1, 0.1, -1.8, -1.6, 3, 3))
    with pytest.raises(DimensionError):
        pde_residual_on_grid(grid, build_V(3, ("u0", "u1", "u2")))
    grid.status[0, 0] = FAILED
    with pytest.raises(GridError):
        pde_residual_on_grid(grid, build_V(3))
    with pytest.raises(GridError):
        refinement_study(entry.system, build_V(3), entry.grid, entry.anchor.a, levels=1)


@pytest.mark.parametrize("example_id", ["ex1-implicit", "ex4-implicit", "ex5-implicit", "ex8-implicit"])
def test_bracket_closes_on_solved_grid(example_id):
    # Input: F and H assembled from the grid values and jets of a_k
    # Expected: relative {F, H} <= 1e-6 at every node
    entry = get_example(example_id)
    grid = _solve(entry)
    closure = bracket_closure(grid, entry.degree)
    assert np.all(np.isfinite(closure))
    assert np.max(closure) <= 1e-6


def test_bracket_closure_with_finite_differences():
    entry = get_example("ex1-implicit")
    grid = _solve(entry)
    closure = bracket_closure(grid, 3, method="fd")
    assert np.all(np.isnan(closure[0, :]))
    assert np.nanmax(closure) <= 1e-2
    with pytest.raises(ValueError):
        bracket_closure(grid, 3, method="spline")
    with pytest.raises(DimensionError):
        bracket_closure(grid, 4)


def test_wrong_sign_of_x_breaks_the_closure():
    # Input: ex1 with the relation 2x + ... replaced by -2x + ...
    # Expected: the grid still solves but {F, H} no longer closes
    entry = get_example("ex1-implicit")
    eqs = list(entry.system.equations)
    eqs[2] = eqs[2] - 4 * x
    flipped = ImplicitSystem(tuple(eqs), entry.system.unknowns, entry.system.constants)
    grid = solve_on_grid(flipped, GridSpec(-0.1, 0.1, 1.6, 1.8, 5, 5), entry.anchor.a, anchor=(0.0, 1.5))
    assert grid.all_converged
    assert np.max(bracket_closure(grid, 3)) > 1e-4


def test_n2_closed_form_solution():
    # Input: u = v = s^3 at r = (-0.5, 0.8)
    # Expected: a0 = 1 - r1 - r2, g = sqrt(-4 r1 r2); the diagonal system and {F, H} hold
    u = v = s ** 3
    sample = n2_general_solution_sample(u, v, -0.5, 0.8)
    assert sample.a0 == pytest.approx(0.7)
    assert sample.g == pytest.approx(math.sqrt(1.6))
    assert sample.t == pytest.approx(-0.9)
    assert not sample.degenerate
    assert n2_diagonal_residual(u, v, -0.5, 0.8) <= 1e-8
    assert n2_diagonal_residual(u, v, -0.5, 0.8, method="fd") <= 1e-6
    assert n2_bracket_residual(u, v, -0.5, 0.8) <= 1e-8


@pytest.mark.parametrize("r1, r2", [(-0.3, 0.4), (-1.2, 0.25), (0.6, -0.9)])
def test_n2_closed_form_other_profiles(r1, r2):
    u, v = s ** 4 / 12, s ** 3 + s ** 5 / 20
    assert n2_diagonal_residual(u, v, r1, r2) <= 1e-8
    assert n2_bracket_residual(u, v, r1, r2) <= 1e-8


def test_n2_closed_form_edge_cases():
    with pytest.raises(DomainError):
        n2_general_solution_sample(s ** 3, s ** 3, 0.5, 0.8)
    # u''' = v''' = 0 makes the map (r1, r2) -> (t, x) degenerate
    flat = n2_general_solution_sample(s ** 2, s ** 2, -0.5, 0.8)
    assert flat.degenerate
    assert math.isnan(flat.r_t[0])
    with pytest.raises(DomainError):
        n2_diagonal_residual(s ** 2, s ** 2, -0.5, 0.8)
    with pytest.raises(ValueError):
        n2_diagonal_residual(s ** 3, s ** 3, -0.5, 0.8, method="spectral")


def test_epd_potential_and_check():
    # Input: u = s^3, v = s^4
    # Expected: all residuals <= 1e-12; points with |r1 - r2| < 0.1 are skipped
    psi = epd_potential(s ** 3, s ** 4)
    point = {"r1": 0.5, "r2": -1.0}
    # 2u + 2v + (r1 - r2)(v'(r2) - u'(r1))
    assert evaluate(psi, point) == pytest.approx(2 * 0.125 + 2 * 1.0 + 1.5 * (-4.0 - 0.75))
    report = epd_check(s ** 3, s ** 4, samples=300, rng=np.random.default_rng(2))
    assert report.evaluated + report.skipped == 300
    assert report.evaluated > 250
    assert report.max_residual <= 1e-12
    explicit = epd_check(s ** 3, s ** 4, np.array([[0.1, 0.15], [0.3, -0.4]]))
    assert (explicit.evaluated, explicit.skipped) == (1, 1)


def test_epd_check_skips_points_that_fail_to_evaluate():
    # Input: u = s^(3/2), one point with r1 < 0 and one with r1 close to r2
    # Expected: both are skipped; the remaining point is exact
    report = epd_check(power(s, Fraction(3, 2)), s ** 2, np.array([[1.0, 0.5], [-1.0, 0.5], [0.2, 0.25]]))
    assert (report.evaluated, report.skipped) == (1, 2)
    assert math.isfinite(report.max_residual)
    assert report.max_residual <= 1e-12
