"""Geodesic flows: Hamilton's equations and conservation monitoring.

Trajectories come from scipy's DOP853 pair with local error control; the
quantity under test is conservation itself, so no symplectic scheme is used.
"""
import logging
from dataclasses import dataclass, field
from functools import cached_property
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np
from scipy.integrate import solve_ivp
from scipy.interpolate import RectBivariateSpline

from .errors import DomainError, GridError
from .expr import Program, differentiate
from .geometry import MOMENTA, Metric2D, MomentumPoly, Region, hamiltonian

logger = logging.getLogger(__name__)

COMPLETED = "completed"
SINGULAR = "singular"
LEFT_GRID = "left-grid"
FAILED = "failed"

MIN_SAMPLES = 100


@dataclass
class GeodesicTrajectory:
    times: np.ndarray                 # (k,)
    states: np.ndarray                # (k, 4): u1, u2, p1, p2
    values: Dict[str, np.ndarray]     # monitored quantities, "H" first
    status: str = COMPLETED
    message: str = ""
    coordinates: Sequence[str] = ("x", "y")

    def __post_init__(self):
        if len(self.times) > 1 and np.any(np.diff(self.times) <= 0):
            raise ValueError("trajectory times must be strictly increasing")

    @property
    def terminated_early(self) -> bool:
        return self.status != COMPLETED

    @property
    def final_state(self) -> np.ndarray:
        return self.states[-1]

    def drift(self, name: str) -> float:
        """max over samples of |value - value(0)|."""
        v = self.values[name]
        return float(np.max(np.abs(v - v[0]))) if len(v) else 0.0

    def relative_drift(self, name: str) -> float:
        v = self.values[name]
        if not len(v):
            return 0.0
        return self.drift(name) / max(abs(float(v[0])), np.finfo(float).tiny)

    def drift_stats(self) -> Dict[str, Dict[str, float]]:
        return {
            name: {"initial": float(v[0]), "drift": self.drift(name), "relative_drift": self.relative_drift(name)}
            for name, v in self.values.items()
        }

    @property
    def columns(self) -> List[str]:
        return ["t", "u1", "u2", *MOMENTA, *self.values]

    def rows(self):
        for k, t in enumerate(self.times):
            yield (float(t), *(float(v) for v in self.states[k]), *(float(v[k]) for v in self.values.values()))

    def summary(self) -> Dict[str, object]:
        return {
            "status": self.status,
            "coordinates": list(self.coordinates),
            "message": self.message,
            "samples": len(self.times),
            "t_final": float(self.times[-1]) if len(self.times) else 0.0,
            "drift": self.drift_stats(),
        }


class HamiltonianFlow:
    """Right-hand side of Hamilton's equations for H = 1/2 g^{ij} p_i p_j."""

    def __init__(self, metric: Metric2D):
        self.metric = metric
        self.hamiltonian = hamiltonian(metric)
        self.names = (*metric.coordinates, *MOMENTA)

    @cached_property
    def _program(self) -> Program:
        h = self.hamiltonian.as_expr()
        u1, u2 = self.metric.coordinates
        p1, p2 = MOMENTA
        rhs = [differentiate(h, p1), differentiate(h, p2), -differentiate(h, u1), -differentiate(h, u2)]
        return Program(rhs + [self.metric.det])

    def __call__(self, t: float, state: np.ndarray) -> np.ndarray:
        return np.array(self._program(dict(zip(self.names, state)))[:4])

    def rhs(self, state: Sequence[float]) -> np.ndarray:
        self.metric.evaluate(state[:2])
        return np.array(self._program(dict(zip(self.names, state)))[:4])

    def det(self, state: Sequence[float]) -> float:
        return self._program(dict(zip(self.names, state)))[4]


def hamiltonian_rhs(metric: Metric2D, state: Sequence[float]) -> np.ndarray:
    """(dH/dp1, dH/dp2, -dH/du1, -dH/du2) at a phase point."""
    return HamiltonianFlow(metric).rhs(np.asarray(state, dtype=float))


def _monitor_program(integrals: Mapping[str, MomentumPoly]) -> Program:
    return Program([f.as_expr() for f in integrals.values()])


def _monitored_values(names: Sequence[str], program: Program, states: np.ndarray, keys) -> Dict[str, np.ndarray]:
    assignment = {name: states[:, k] for k, name in enumerate(names)}
    values = program.evaluate_arrays(assignment, on_error="nan")
    return {key: np.broadcast_to(v, (len(states),)).copy() for key, v in zip(keys, values)}


def _sample_times(t_end: float, samples: int) -> np.ndarray:
    return np.linspace(0.0, t_end, max(int(samples), MIN_SAMPLES))


def _finish(sol, status_events: Sequence[str]) -> Tuple[str, str]:
    if sol.status == 1:
        fired = [name for name, hits in zip(status_events, sol.t_events) if len(hits)]
        return (fired[0] if fired else SINGULAR), f"terminated at t={sol.t[-1]:.6g} ({', '.join(fired)})"
    if sol.status == -1:
        return FAILED, sol.message
    return COMPLETED, ""


def _locus_event(region: Region, k: int, side: float, guard: float):
    def event(t, y):
        try:
            return side * float(region.signed_distances(y[:2])[k]) - guard
        except DomainError:
            return -guard

    event.terminal = True
    event.direction = -1
    return event


def integrate(metric: Metric2D, state0: Sequence[float], t_end: float = 1.0, tol: float = 1e-10,
              integrals: Optional[Mapping[str, MomentumPoly]] = None, region: Optional[Region] = None,
              samples: int = 200, guard: float = 0.05) -> GeodesicTrajectory:
    """Integrate the geodesic flow from `state0` over [0, t_end].

    H and every integral in `integrals` are evaluated at the output samples.
    The run stops early when the path comes within `guard` of a singular locus
    of `region` or det g changes sign; the trajectory then carries the flag.
    """
    if t_end < 0:
        raise ValueError("t_end must be non-negative; reverse the momenta to go backwards")
    flow = HamiltonianFlow(metric)
    state0 = np.asarray(state0, dtype=float)
    flow.rhs(state0)
    monitored = {"H": flow.hamiltonian, **(integrals or {})}
    program = _monitor_program(monitored)
    if t_end == 0:
        states = state0[None, :]
        return GeodesicTrajectory(np.zeros(1), states, _monitored_values(flow.names, program, states, monitored),
                                  coordinates=metric.coordinates)

    def rhs(t, y):
        try:
            return flow(t, y)
        except DomainError:
            return np.full(4, np.nan)

    events, names = [], []

    def det_event(t, y):
        try:
            return flow.det(y)
        except DomainError:
            return 0.0

    det_event.terminal = True
    events.append(det_event)
    names.append(SINGULAR)
    if region is not None and region.singular_loci:
        # signed per locus so a step that jumps the guard band still changes sign
        sides = np.sign(region.signed_distances(state0[:2]))
        for k, side in enumerate(sides):
            events.append(_locus_event(region, k, side, guard))
            names.append(SINGULAR)

    t_eval = _sample_times(t_end, samples)
    sol = solve_ivp(rhs, (0.0, t_end), state0, method="DOP853", t_eval=t_eval, rtol=tol, atol=tol, events=events)
    status, message = _finish(sol, names)
    if status != COMPLETED:
        logger.warning("geodesic from %s flagged %s: %s", tuple(state0), status, message)
    states = sol.y.T
    logger.debug("geodesic integrated: %d samples, %d rhs evaluations", len(sol.t), sol.nfev)
    return GeodesicTrajectory(sol.t, states, _monitored_values(flow.names, program, states, monitored),
                              status, message, metric.coordinates)


def time_reversal_error(metric: Metric2D, state0: Sequence[float], t_end: float = 1.0, tol: float = 1e-10,
                        region: Optional[Region] = None) -> float:
    """Integrate forward, flip the momenta, integrate back; max-norm distance to state0."""
    state0 = np.asarray(state0, dtype=float)
    forward = integrate(metric, state0, t_end, tol, region=region)
    if forward.terminated_early:
        raise DomainError(f"forward run terminated early: {forward.message}")
    end = forward.final_state.copy()
    end[2:] *= -1
    back = integrate(metric, end, t_end, tol, region=region)
    returned = back.final_state.copy()
    returned[2:] *= -1
    return float(np.max(np.abs(returned - state0)))


# grid mode ---------------------------------------------------------------------

@dataclass
class GridGeodesic:
    """Geodesics of g(t,x)^2 dt^2 + dx^2 with the a_k interpolated bicubically from a solved grid."""

    grid: object
    n: int
    splines: List[RectBivariateSpline] = field(init=False)

    def __post_init__(self):
        spec = self.grid.spec
        if len(self.grid.unknowns) != self.n:
            raise GridError(f"grid has {len(self.grid.unknowns)} fields, expected {self.n}")
        if spec.nt < 4 or spec.nx < 4:
            raise GridError("bicubic interpolation needs at least 4 nodes per axis")
        if not self.grid.all_converged:
            raise GridError("grid mode needs a fully converged grid")
        self.splines = [
            RectBivariateSpline(spec.ts, spec.xs, self.grid.values[:, :, k], kx=3, ky=3) for k in range(self.n)
        ]

    def _g(self, t, x, dt=0, dx=0):
        return self.splines[self.n - 1](t, x, dx=dt, dy=dx, grid=False)

    def __call__(self, time: float, y: np.ndarray) -> np.ndarray:
        t, x, p1, p2 = y
        g = float(self._g(t, x))
        g_t, g_x = float(self._g(t, x, dt=1)), float(self._g(t, x, dx=1))
        return np.array([p1 / g ** 2, p2, p1 ** 2 * g_t / g ** 3, p1 ** 2 * g_x / g ** 3])

    def values(self, states: np.ndarray) -> Dict[str, np.ndarray]:
        t, x, p1, p2 = states.T
        a = [s(t, x, grid=False) for s in self.splines] + [np.ones_like(t)]
        g = a[self.n - 1]
        h = 0.5 * (p1 ** 2 / g ** 2 + p2 ** 2)
        f = sum(a[k] / g ** (self.n - k) * p1 ** (self.n - k) * p2 ** k for k in range(self.n + 1))
        return {"H": h, "F": f}

    def margin(self, y: np.ndarray) -> float:
        spec = self.grid.spec
        t, x = y[0], y[1]
        return float(min(t - spec.t0, spec.t1 - t, x - spec.x0, spec.x1 - x))


def integrate_on_grid(grid, n: int, state0: Sequence[float], t_end: float = 1.0, tol: float = 1e-10,
                      samples: int = 200) -> GeodesicTrajectory:
    """Geodesic of the semi-geodesic metric of a solved grid; stops when it leaves the grid."""
    flow = GridGeodesic(grid, n)
    state0 = np.asarray(state0, dtype=float)
    if flow.margin(state0) < 0:
        raise GridError(f"initial point {tuple(state0[:2])} lies outside the grid")
    if t_end == 0:
        states = state0[None, :]
        return GeodesicTrajectory(np.zeros(1), states, flow.values(states), coordinates=("t", "x"))

    def leave(t, y):
        return flow.margin(y)

    leave.terminal = True
    leave.direction = -1
    sol = solve_ivp(flow, (0.0, t_end), state0, method="DOP853", t_eval=_sample_times(t_end, samples),
                    rtol=tol, atol=tol, events=[leave])
    status, message = _finish(sol, [LEFT_GRID])
    if status != COMPLETED:
        logger.warning("grid geodesic flagged %s: %s", status, message)
    states = sol.y.T
    return GeodesicTrajectory(sol.t, states, flow.values(states), status, message, ("t", "x"))


__all__ = [
    "COMPLETED",
    "SINGULAR",
    "LEFT_GRID",
    "FAILED",
    "GeodesicTrajectory",
    "HamiltonianFlow",
    "GridGeodesic",
    "hamiltonian_rhs",
    "integrate",
    "integrate_on_grid",
    "time_reversal_error",
]
