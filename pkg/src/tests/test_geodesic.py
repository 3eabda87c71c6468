"""Tests for geodesic integration and conservation monitoring.

These cover:
- Hamilton's equations against central differences of H
- straight lines of the flat metric
- conservation of H and the registered integrals along accurate trajectories
- time reversal, zero-length runs and early termination near singular loci
- geodesics of metrics interpolated from a solved hodograph grid
"""
import numpy as np
import pytest

from src.core.errors import DegenerateMetricError, DomainError, GridError
from src.core.expr import Const, variables
from src.core.geodesic import (
    COMPLETED,
    LEFT_GRID,
    MIN_SAMPLES,
    SINGULAR,
    GeodesicTrajectory,
    GridGeodesic,
    hamiltonian_rhs,
    integrate,
    integrate_on_grid,
    time_reversal_error,
)
from src.core.geometry import Metric2D, MomentumPoly, Region, hamiltonian
from src.core.hodograph import GridSpec, solve_on_grid
from src.data.registry import get_example

x, y = variables("x y")


def _entry_integrals(entry):
    return {"F": entry.integral}


def test_rhs_matches_finite_differences_of_h():
    # Input: the cubic-integral metric at (1, 1, 0.7, -0.3)
    # Expected: (H_p1, H_p2, -H_x, -H_y) agrees with central differences to 1e-6
    entry = get_example("ex2-explicit")
    state = np.array([1.0, 1.0, 0.7, -0.3])
    h = hamiltonian(entry.metric)
    eps = 1e-6
    numeric = []
    for k in (2, 3, 0, 1):
        up, down = state.copy(), state.copy()
        up[k] += eps
        down[k] -= eps
        numeric.append((h.evaluate(up) - h.evaluate(down)) / (2 * eps))
    numeric[2], numeric[3] = -numeric[2], -numeric[3]
    np.testing.assert_allclose(hamiltonian_rhs(entry.metric, state), numeric, atol=1e-6)


def test_rhs_rejects_degenerate_points():
    metric = Metric2D(x, Const(0), y)
    with pytest.raises(DegenerateMetricError):
        hamiltonian_rhs(metric, (0.0, 1.0, 1.0, 1.0))


def test_flat_metric_gives_straight_lines():
    # Input: identity metric from (0, 0) with momentum (1, 2)
    # Expected: x = t, y = 2t; H stays at 5/2 exactly up to rounding
    trajectory = integrate(Metric2D.identity(), (0.0, 0.0, 1.0, 2.0), t_end=2.0)
    assert trajectory.status == COMPLETED
    assert len(trajectory.times) >= MIN_SAMPLES
    np.testing.assert_allclose(trajectory.states[:, 0], trajectory.times, atol=1e-12)
    np.testing.assert_allclose(trajectory.states[:, 1], 2 * trajectory.times, atol=1e-12)
    assert trajectory.values["H"][0] == pytest.approx(2.5)
    assert trajectory.drift("H") < 1e-14


@pytest.mark.parametrize("example_id", ["ex2-explicit", "ex9-explicit"])
def test_registered_integral_is_conserved(example_id):
    # Input: registered initial state, t_end = 1, tol = 1e-10, singular loci guarded
    # Expected: relative drift of H and F at most 1e-8
    entry = get_example(example_id)
    trajectory = integrate(entry.metric, entry.initial_state, t_end=1.0, tol=1e-10,
                           integrals=_entry_integrals(entry), region=entry.region)
    assert not trajectory.terminated_early, trajectory.message
    assert trajectory.relative_drift("H") <= 1e-8
    assert trajectory.relative_drift("F") <= 1e-8
    stats = trajectory.drift_stats()
    assert set(stats) == {"H", "F"}
    assert stats["F"]["drift"] == trajectory.drift("F")


def test_non_integral_drifts():
    # Input: p1 monitored along a geodesic of a curved metric
    # Expected: p1 is visibly not conserved
    entry = get_example("ex2-explicit")
    trajectory = integrate(entry.metric, entry.initial_state, t_end=1.0,
                           integrals={"p1": MomentumPoly.linear(1, 0)}, region=entry.region)
    assert trajectory.drift("p1") > 1e-3


def test_drift_tracks_the_tolerance():
    entry = get_example("ex9-explicit")
    coarse = integrate(entry.metric, entry.initial_state, t_end=1.0, tol=1e-10, integrals=_entry_integrals(entry))
    fine = integrate(entry.metric, entry.initial_state, t_end=1.0, tol=5e-11, integrals=_entry_integrals(entry))
    assert fine.relative_drift("F") <= 2 * coarse.relative_drift("F") + 1e-12


@pytest.mark.parametrize("example_id", ["ex2-explicit", "ex9-explicit", "liouville-n2"])
def test_time_reversal_returns_to_start(example_id):
    entry = get_example(example_id)
    assert time_reversal_error(entry.metric, entry.initial_state, t_end=1.0, region=entry.region) <= 1e-6


def test_zero_length_run():
    # Input: t_end = 0
    # Expected: a single sample, zero drift; negative t_end is rejected
    entry = get_example("ex2-explicit")
    trajectory = integrate(entry.metric, entry.initial_state, t_end=0.0, integrals=_entry_integrals(entry))
    assert len(trajectory.times) == 1
    assert trajectory.drift("H") == 0.0 and trajectory.drift("F") == 0.0
    np.testing.assert_array_equal(trajectory.final_state, entry.initial_state)
    with pytest.raises(ValueError):
        integrate(entry.metric, entry.initial_state, t_end=-1.0)


def test_stops_near_a_singular_locus():
    # Input: flat metric, region singular along x = 1, path heading straight for it
    # Expected: the run stops once the guard distance is reached, flagged singular
    region = Region(((-2.0, 2.0), (-2.0, 2.0)), (x - 1,))
    trajectory = integrate(Metric2D.identity(), (0.0, 0.0, 1.0, 0.0), t_end=3.0, region=region, guard=0.05)
    assert trajectory.terminated_early
    assert trajectory.status == SINGULAR
    assert trajectory.final_state[0] <= 0.95 + 1e-9
    assert trajectory.final_state[0] > 0.9


@pytest.mark.parametrize("locus", [x - 1, 1 - x])
@pytest.mark.parametrize("tol", [1e-10, 1e-4])
def test_large_steps_do_not_jump_the_guard_band(locus, tol):
    # Input: straight line (steps limited only by t_eval), thin guard band, either sign of phi
    # Expected: still stopped before x = 1 - guard
    region = Region(((-2.0, 2.0), (-2.0, 2.0)), (y + 5, locus))
    trajectory = integrate(Metric2D.identity(), (0.0, 0.0, 1.0, 0.0), t_end=3.0, tol=tol, region=region,
                           samples=100, guard=0.01)
    assert trajectory.status == SINGULAR
    assert trajectory.final_state[0] <= 0.99 + 1e-9
    assert trajectory.final_state[0] > 0.9


def test_moving_away_from_a_locus_completes():
    region = Region(((-2.0, 2.0), (-2.0, 2.0)), (x + 0.5,))
    trajectory = integrate(Metric2D.identity(), (0.0, 0.0, 1.0, 0.0), t_end=1.0, region=region)
    assert trajectory.status == COMPLETED


def test_trajectory_rows_and_summary():
    trajectory = integrate(Metric2D.identity(), (0.0, 0.0, 1.0, 0.0), t_end=1.0, samples=150)
    assert trajectory.columns == ["t", "u1", "u2", "p1", "p2", "H"]
    rows = list(trajectory.rows())
    assert len(rows) == 150
    assert rows[-1][1] == pytest.approx(1.0)
    summary = trajectory.summary()
    assert summary["status"] == COMPLETED and summary["samples"] == 150
    assert summary["t_final"] == pytest.approx(1.0)
    with pytest.raises(ValueError):
        GeodesicTrajectory(np.array([0.0, 0.0]), np.zeros((2, 4)), {"H": np.zeros(2)})


def test_grid_geodesic_conserves_h_and_leaves_the_grid(ex1_grid):
    # Input: solved 11x11 grid, start at the centre moving mostly along x
    # Expected: stops at the grid edge; H conserved, F conserved up to interpolation error
    entry, grid = ex1_grid
    trajectory = integrate_on_grid(grid, entry.degree, (0.0, -1.7, 0.05, 0.3), t_end=2.0)
    assert trajectory.status == LEFT_GRID
    assert trajectory.relative_drift("H") <= 1e-8
    assert trajectory.relative_drift("F") <= 1e-3
    assert trajectory.times[-1] < 2.0


def test_grid_geodesic_errors(ex1_grid):
    entry, grid = ex1_grid
    with pytest.raises(GridError):
        integrate_on_grid(grid, entry.degree, (0.0, 5.0, 0.1, 0.1))
    with pytest.raises(GridError):
        GridGeodesic(grid, 4)
    small = solve_on_grid(entry.system, GridSpec(-0.1, 0.1, -1.8, -1.6, 3, 3), entry.anchor.a,
                          anchor=(entry.anchor.t, entry.anchor.x))
    with pytest.raises(GridError):
        GridGeodesic(small, entry.degree)


def test_reversal_refuses_a_terminated_run():
    region = Region(((-2.0, 2.0), (-2.0, 2.0)), (x - 1,))
    with pytest.raises(DomainError):
        time_reversal_error(Metric2D.identity(), (0.0, 0.0, 1.0, 0.0), t_end=3.0, region=region)
