"""Implicit hodograph relations: Newton solves, grid continuation and checks.

A `GridContinuation` walks a rectangular (t, x) grid outward from an anchor
node, seeding each Newton solve with a tangent prediction from an already
solved neighbour. It is driven like a simulator: `has_next()` / `step()` /
`run_all()`, with counters kept in `ContinuationStatistics`.
"""
import logging
import math
import time
from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from .errors import (
    BranchJumpError,
    ConvergenceError,
    DimensionError,
    DomainError,
    GridError,
    NewtonDomainError,
    SingularJacobianError,
    UnassignedVariableError,
)
from .expr import (
    ONE,
    Const,
    Expr,
    Program,
    Var,
    add,
    as_expr,
    differentiate,
    div,
    free_variables,
    mul,
    neg,
    sub,
    substitute,
)
from .flows import QuasiLinearSystem, a_names, hodograph_relations
from .geometry import bracket_residuals, hamiltonian, semi_geodesic_assembly

logger = logging.getLogger(__name__)

CONVERGED = "converged"
FAILED = "failed"
DOMAIN = "domain"
SINGULAR = "singular"
BRANCH_JUMP = "branch-jump"
UNREACHED = "unreached"


@dataclass(frozen=True, eq=False)
class ImplicitSystem:
    """m equations (each = 0) in unknowns a_0..a_{m-1}, parameters t, x and constants."""

    equations: Tuple[Expr, ...]
    unknowns: Tuple[str, ...]
    constants: Mapping[str, float] = field(default_factory=dict)
    t: str = "t"
    x: str = "x"

    def __post_init__(self):
        object.__setattr__(self, "equations", tuple(as_expr(e) for e in self.equations))
        object.__setattr__(self, "unknowns", tuple(self.unknowns))
        object.__setattr__(self, "constants", dict(self.constants))
        if len(self.equations) != len(self.unknowns):
            raise DimensionError(f"{len(self.equations)} equations for {len(self.unknowns)} unknowns")
        allowed = set(self.unknowns) | {self.t, self.x}
        for e in self.bound:
            extra = free_variables(e) - allowed
            if extra:
                raise UnassignedVariableError(sorted(extra)[0])

    @classmethod
    def from_generators(cls, n: int, generators: Sequence, constants: Optional[Mapping[str, float]] = None,
                        names: Optional[Sequence[str]] = None) -> "ImplicitSystem":
        names = tuple(names) if names is not None else a_names(n)
        return cls(tuple(hodograph_relations(n, generators, names)), names, constants or {})

    @property
    def size(self) -> int:
        return len(self.unknowns)

    @cached_property
    def bound(self) -> Tuple[Expr, ...]:
        """Equations with the constants substituted."""
        if not self.constants:
            return self.equations
        return tuple(substitute(e, self.constants) for e in self.equations)

    def with_constants(self, **overrides: float) -> "ImplicitSystem":
        constants = dict(self.constants)
        constants.update(overrides)
        return ImplicitSystem(self.equations, self.unknowns, constants, self.t, self.x)

    @cached_property
    def _program(self) -> Program:
        exprs = list(self.bound)
        for e in self.bound:
            exprs.extend(differentiate(e, a) for a in self.unknowns)
        exprs.extend(differentiate(e, self.t) for e in self.bound)
        exprs.extend(differentiate(e, self.x) for e in self.bound)
        program = Program(exprs)
        logger.debug("compiled implicit system with %d equations (%d nodes)", self.size, len(program))
        return program

    @cached_property
    def _residual_program(self) -> Program:
        return Program(self.bound)

    def _assignment(self, a: Sequence[float], t: float, x: float) -> Dict[str, float]:
        assignment = dict(zip(self.unknowns, (float(v) for v in a)))
        assignment[self.t] = float(t)
        assignment[self.x] = float(x)
        return assignment

    def residual(self, a: Sequence[float], t: float, x: float) -> np.ndarray:
        return np.array(self._residual_program(self._assignment(a, t, x)))

    def linearize(self, a: Sequence[float], t: float, x: float):
        """(f, J = df/da, df/dt, df/dx) at a point."""
        m = self.size
        values = np.array(self._program(self._assignment(a, t, x)))
        f = values[:m]
        jac = values[m: m + m * m].reshape(m, m)
        ft = values[m + m * m: 2 * m + m * m]
        fx = values[2 * m + m * m:]
        return f, jac, ft, fx


@dataclass
class NewtonResult:
    a: np.ndarray
    residual: float
    iterations: int


def _solve_linear(jac: np.ndarray, rhs: np.ndarray, a: np.ndarray, residual: float) -> np.ndarray:
    if not np.all(np.isfinite(jac)) or np.linalg.cond(jac) > 1e14:
        rank = int(np.linalg.matrix_rank(jac)) if np.all(np.isfinite(jac)) else -1
        raise SingularJacobianError(f"singular Jacobian (rank {rank} of {len(a)})", a.copy(), residual)
    try:
        return np.linalg.solve(jac, rhs)
    except np.linalg.LinAlgError:
        raise SingularJacobianError("singular Jacobian", a.copy(), residual) from None


def _linearize(system: ImplicitSystem, a: np.ndarray, t: float, x: float):
    try:
        return system.linearize(a, t, x)
    except DomainError as exc:
        raise NewtonDomainError(f"Jacobian undefined: {exc}", a.copy(), None) from exc


def newton_solve(system: ImplicitSystem, t: float, x: float, seed: Sequence[float], tol: float = 1e-11,
                 max_iter: int = 50, max_halvings: int = 20) -> NewtonResult:
    """Damped Newton with the exact Jacobian.

    A step is halved (up to `max_halvings` times) while the trial point leaves
    the domain or does not reduce the max-norm residual.
    """
    a = np.array(seed, dtype=float)
    if a.shape != (system.size,):
        raise DimensionError(f"seed must have {system.size} entries")
    try:
        f = system.residual(a, t, x)
    except DomainError as exc:
        raise NewtonDomainError(f"seed outside the domain: {exc}", a.copy(), None) from exc
    norm = float(np.max(np.abs(f)))
    for iteration in range(max_iter + 1):
        if norm <= tol:
            logger.debug("newton converged at (t=%g, x=%g) in %d iterations, residual %.3g", t, x, iteration, norm)
            return NewtonResult(a, norm, iteration)
        if iteration == max_iter:
            break
        _, jac, _, _ = _linearize(system, a, t, x)
        delta = _solve_linear(jac, -f, a, norm)
        step = 1.0
        domain_failure = False
        for _ in range(max_halvings + 1):
            trial = a + step * delta
            try:
                f_trial = system.residual(trial, t, x)
            except DomainError:
                domain_failure = True
                step *= 0.5
                continue
            trial_norm = float(np.max(np.abs(f_trial)))
            if np.isfinite(trial_norm) and (trial_norm < norm or trial_norm <= tol):
                a, f, norm = trial, f_trial, trial_norm
                break
            domain_failure = False
            step *= 0.5
        else:
            if domain_failure:
                raise NewtonDomainError("line search left the domain", a.copy(), norm)
            raise ConvergenceError(f"line search stalled at residual {norm:.3g}", a.copy(), norm)
    raise ConvergenceError(f"no convergence after {max_iter} iterations (residual {norm:.3g})", a.copy(), norm)


def implicit_jet(system: ImplicitSystem, a: Sequence[float], t: float, x: float) -> Tuple[np.ndarray, np.ndarray]:
    """(a_t, a_x) of the solution branch through a, by the implicit function theorem."""
    a = np.asarray(a, dtype=float)
    f, jac, ft, fx = _linearize(system, a, t, x)
    rhs = -np.column_stack([ft, fx])
    sol = _solve_linear(jac, rhs, a, float(np.max(np.abs(f))))
    return sol[:, 0], sol[:, 1]


# grids ------------------------------------------------------------------------

@dataclass(frozen=True)
class GridSpec:
    t0: float
    t1: float
    x0: float
    x1: float
    nt: int
    nx: int

    def __post_init__(self):
        if int(self.nt) < 1 or int(self.nx) < 1:
            raise GridError("a grid needs at least one node per axis")
        if self.t1 < self.t0 or self.x1 < self.x0:
            raise GridError(f"empty grid ranges {self}")
        if (self.nt == 1) != (self.t0 == self.t1) or (self.nx == 1) != (self.x0 == self.x1):
            raise GridError("single-node axes must have zero length and vice versa")
        object.__setattr__(self, "nt", int(self.nt))
        object.__setattr__(self, "nx", int(self.nx))

    @classmethod
    def centered(cls, t: float, x: float, half_t: float, half_x: float, nt: int, nx: int) -> "GridSpec":
        return cls(t - half_t, t + half_t, x - half_x, x + half_x, nt, nx)

    @property
    def ts(self) -> np.ndarray:
        return np.linspace(self.t0, self.t1, self.nt)

    @property
    def xs(self) -> np.ndarray:
        return np.linspace(self.x0, self.x1, self.nx)

    @property
    def ht(self) -> float:
        return (self.t1 - self.t0) / (self.nt - 1) if self.nt > 1 else 0.0

    @property
    def hx(self) -> float:
        return (self.x1 - self.x0) / (self.nx - 1) if self.nx > 1 else 0.0

    def refine(self) -> "GridSpec":
        """Halve both steps; the old nodes stay nodes."""
        return GridSpec(self.t0, self.t1, self.x0, self.x1, 2 * self.nt - 1, 2 * self.nx - 1)

    def nearest(self, t: float, x: float) -> Tuple[int, int]:
        i = int(np.argmin(np.abs(self.ts - t)))
        j = int(np.argmin(np.abs(self.xs - x)))
        return i, j

    def as_list(self) -> List[float]:
        return [self.t0, self.t1, self.x0, self.x1, self.nt, self.nx]


@dataclass
class GridSolution:
    spec: GridSpec
    unknowns: Tuple[str, ...]
    values: np.ndarray        # (nt, nx, m), NaN where not converged
    jets: np.ndarray          # (nt, nx, m, 2): a_t, a_x
    status: np.ndarray        # (nt, nx) of status strings
    residuals: np.ndarray     # (nt, nx)
    iterations: np.ndarray    # (nt, nx)

    @property
    def converged(self) -> np.ndarray:
        return self.status == CONVERGED

    @property
    def all_converged(self) -> bool:
        return bool(np.all(self.converged))

    def status_counts(self) -> Dict[str, int]:
        names, counts = np.unique(self.status, return_counts=True)
        return {str(k): int(v) for k, v in zip(names, counts)}

    def component(self, name: str) -> np.ndarray:
        return self.values[:, :, self.unknowns.index(name)]

    def rows(self):
        """(t, x, a_0.., status, residual) per node, t-major."""
        ts, xs = self.spec.ts, self.spec.xs
        for i, t in enumerate(ts):
            for j, x in enumerate(xs):
                yield (float(t), float(x), *(float(v) for v in self.values[i, j]),
                       str(self.status[i, j]), float(self.residuals[i, j]))


class ContinuationStatistics:
    def __init__(self):
        self.reset()

    def reset(self):
        self.nodes = 0
        self.converged = 0
        self.flagged: Dict[str, int] = {}
        self.newton_iterations = 0
        self.max_residual = 0.0
        self.start_time = time.time()

    def record_node(self, status: str, iterations: int = 0, residual: float = 0.0):
        self.nodes += 1
        self.newton_iterations += iterations
        if status == CONVERGED:
            self.converged += 1
            self.max_residual = max(self.max_residual, residual)
        else:
            self.flagged[status] = self.flagged.get(status, 0) + 1

    @property
    def convergence_rate(self) -> float:
        return self.converged / self.nodes if self.nodes else 0.0

    def elapsed(self) -> float:
        return time.time() - self.start_time

    def to_dict(self) -> Dict[str, object]:
        return {
            "nodes": self.nodes,
            "converged": self.converged,
            "flagged": dict(sorted(self.flagged.items())),
            "newton_iterations": self.newton_iterations,
            "max_residual": self.max_residual,
            "convergence_rate": self.convergence_rate,
        }


_STATUS_BY_ERROR = (
    (NewtonDomainError, DOMAIN),
    (SingularJacobianError, SINGULAR),
    (BranchJumpError, BRANCH_JUMP),
    (ConvergenceError, FAILED),
)


class GridContinuation:
    """Breadth-first continuation of one solution branch over a grid."""

    def __init__(self, system: ImplicitSystem, spec: GridSpec, seed: Sequence[float],
                 anchor: Optional[Tuple[float, float]] = None, tol: float = 1e-11,
                 branch_factor: float = 10.0, stats: Optional[ContinuationStatistics] = None):
        self.system = system
        self.spec = spec
        self.seed = np.asarray(seed, dtype=float)
        self.anchor = anchor
        self.tol = tol
        self.branch_factor = branch_factor
        self.stats = stats or ContinuationStatistics()
        self.reset()

    def reset(self):
        nt, nx, m = self.spec.nt, self.spec.nx, self.system.size
        self.values = np.full((nt, nx, m), np.nan)
        self.jets = np.full((nt, nx, m, 2), np.nan)
        self.status = np.full((nt, nx), UNREACHED, dtype=object)
        self.residuals = np.full((nt, nx), np.nan)
        self.iterations = np.zeros((nt, nx), dtype=int)
        self.queue: deque = deque()
        self.enqueued = np.zeros((nt, nx), dtype=bool)
        self.started = False
        self.stats.reset()

    def _start(self):
        ts, xs = self.spec.ts, self.spec.xs
        t_a, x_a = self.anchor if self.anchor is not None else (ts[0], xs[0])
        i, j = self.spec.nearest(t_a, x_a)
        try:
            anchor = newton_solve(self.system, t_a, x_a, self.seed, tol=self.tol)
        except ConvergenceError as exc:
            raise ConvergenceError(f"anchor solve failed at (t={t_a}, x={x_a}): {exc}", exc.iterate, exc.residual) from exc
        a_t, a_x = implicit_jet(self.system, anchor.a, t_a, x_a)
        guess = anchor.a + a_t * (ts[i] - t_a) + a_x * (xs[j] - x_a)
        self.queue.append(((i, j), guess, anchor.a, max(abs(ts[i] - t_a), abs(xs[j] - x_a)), None))
        self.enqueued[i, j] = True
        self.started = True
        logger.debug("continuation anchored at node (%d, %d)", i, j)

    def has_next(self) -> bool:
        if not self.started:
            return True
        return bool(self.queue)

    def step(self) -> Optional[dict]:
        if not self.started:
            self._start()
        if not self.queue:
            return None
        (i, j), guess, parent_a, distance, parent = self.queue.popleft()
        t, x = self.spec.ts[i], self.spec.xs[j]
        info = {"node": (i, j), "t": float(t), "x": float(x), "parent": parent}
        try:
            result = newton_solve(self.system, t, x, guess, tol=self.tol)
            scale = max(self.spec.ht, self.spec.hx, distance)
            jump = float(np.max(np.abs(result.a - parent_a)))
            if parent is not None:
                slope = float(np.max(np.abs(self.jets[parent])))
                if jump > self.branch_factor * scale * max(1.0, slope):
                    raise BranchJumpError(f"jump of {jump:.3g} from node {parent}")
            a_t, a_x = implicit_jet(self.system, result.a, t, x)
        except (ConvergenceError, BranchJumpError) as exc:
            status = next(s for cls, s in _STATUS_BY_ERROR if isinstance(exc, cls))
            self.status[i, j] = status
            self.stats.record_node(status)
            logger.warning("grid node (t=%.6g, x=%.6g) flagged %s: %s", t, x, status, exc)
            info["status"] = status
            return info
        self.values[i, j] = result.a
        self.jets[i, j, :, 0] = a_t
        self.jets[i, j, :, 1] = a_x
        self.status[i, j] = CONVERGED
        self.residuals[i, j] = result.residual
        self.iterations[i, j] = result.iterations
        self.stats.record_node(CONVERGED, result.iterations, result.residual)
        for di, dj in ((1, 0), (-1, 0), (0, 1), (0, -1)):
            ni, nj = i + di, j + dj
            if 0 <= ni < self.spec.nt and 0 <= nj < self.spec.nx and not self.enqueued[ni, nj]:
                dt, dx = self.spec.ts[ni] - t, self.spec.xs[nj] - x
                self.queue.append(((ni, nj), result.a + a_t * dt + a_x * dx, result.a, 0.0, (i, j)))
                self.enqueued[ni, nj] = True
        info["status"] = CONVERGED
        info["a"] = result.a.tolist()
        return info

    def run_all(self, callback: Optional[Callable[[dict], None]] = None) -> GridSolution:
        while self.has_next():
            info = self.step()
            if callback is not None and info is not None:
                callback(info)
        unreached = int(np.sum(self.status == UNREACHED))
        if unreached:
            logger.warning("%d grid nodes were not reached by continuation", unreached)
        return self.solution()

    def solution(self) -> GridSolution:
        return GridSolution(self.spec, self.system.unknowns, self.values.copy(), self.jets.copy(),
                            self.status.copy(), self.residuals.copy(), self.iterations.copy())


def solve_on_grid(system: ImplicitSystem, spec: GridSpec, seed: Sequence[float],
                  anchor: Optional[Tuple[float, float]] = None, tol: float = 1e-11,
                  callback: Optional[Callable[[dict], None]] = None) -> GridSolution:
    """Continue the branch through (anchor, seed) over the grid; flagged nodes never raise."""
    continuation = GridContinuation(system, spec, seed, anchor=anchor, tol=tol)
    solution = continuation.run_all(callback)
    logger.info("grid %dx%d solved: %s", spec.nt, spec.nx, continuation.stats.to_dict())
    return solution


# residuals on grids ------------------------------------------------------------

@dataclass
class GridResidual:
    h: float
    node_residuals: np.ndarray   # (nt-2, nx-2)

    @property
    def max_residual(self) -> float:
        return float(np.max(self.node_residuals))

    @property
    def mean_residual(self) -> float:
        return float(np.mean(self.node_residuals))


def _check_variables(grid: GridSolution, system: QuasiLinearSystem):
    if tuple(grid.unknowns) != tuple(system.variables):
        raise DimensionError(f"grid fields {grid.unknowns} do not match system variables {system.variables}")


def pde_residual_on_grid(grid: GridSolution, system: QuasiLinearSystem) -> GridResidual:
    """max_i |U_t + V(U) U_x| at interior nodes by central differences."""
    _check_variables(grid, system)
    spec = grid.spec
    if spec.nt < 3 or spec.nx < 3:
        raise GridError("central differences need at least 3 nodes per axis")
    if not np.all(grid.converged):
        bad = int(np.sum(~grid.converged))
        raise GridError(f"{bad} grid nodes are not converged")
    u = grid.values
    u_t = (u[2:, 1:-1] - u[:-2, 1:-1]) / (2.0 * spec.ht)
    u_x = (u[1:-1, 2:] - u[1:-1, :-2]) / (2.0 * spec.hx)
    centre = u[1:-1, 1:-1]
    out = np.empty(centre.shape[:2])
    for i in range(centre.shape[0]):
        for j in range(centre.shape[1]):
            v = system.evaluate(centre[i, j])
            out[i, j] = np.max(np.abs(u_t[i, j] + v @ u_x[i, j]))
    return GridResidual(max(spec.ht, spec.hx), out)


@dataclass
class RefinementStudy:
    steps: List[float]
    residuals: List[float]
    orders: List[Optional[float]]
    statuses: List[Dict[str, int]]

    @property
    def min_order(self) -> Optional[float]:
        known = [o for o in self.orders if o is not None]
        return min(known) if known else None

    def to_dict(self) -> Dict[str, object]:
        return {
            "steps": self.steps,
            "residuals": self.residuals,
            "orders": self.orders,
            "min_order": self.min_order,
            "statuses": self.statuses,
        }


def refinement_study(system: ImplicitSystem, quasi_linear: QuasiLinearSystem, spec: GridSpec,
                     seed: Sequence[float], anchor: Optional[Tuple[float, float]] = None,
                     levels: int = 3, tol: float = 1e-11, floor: float = 1e-13) -> RefinementStudy:
    """Observed order of the finite-difference residual on nested grids.

    The residual is compared at the interior nodes of the coarsest grid, which
    are nodes of every refinement.
    """
    if levels < 2:
        raise GridError("a refinement study needs at least two levels")
    steps, residuals, statuses = [], [], []
    current = spec
    for level in range(levels):
        grid = solve_on_grid(system, current, seed, anchor=anchor, tol=tol)
        statuses.append(grid.status_counts())
        res = pde_residual_on_grid(grid, quasi_linear)
        stride = 2 ** level
        coarse = res.node_residuals[stride - 1::stride, stride - 1::stride]
        steps.append(max(current.ht, current.hx))
        residuals.append(float(np.max(coarse)))
        current = current.refine()
    orders: List[Optional[float]] = []
    for r0, r1 in zip(residuals, residuals[1:]):
        orders.append(math.log2(r0 / r1) if min(r0, r1) > floor else None)
    logger.info("refinement residuals %s, orders %s", residuals, orders)
    return RefinementStudy(steps, residuals, orders, statuses)


def _finite_difference_jets(grid: GridSolution) -> np.ndarray:
    spec = grid.spec
    jets = np.full(grid.jets.shape, np.nan)
    u = grid.values
    jets[1:-1, 1:-1, :, 0] = (u[2:, 1:-1] - u[:-2, 1:-1]) / (2.0 * spec.ht)
    jets[1:-1, 1:-1, :, 1] = (u[1:-1, 2:] - u[1:-1, :-2]) / (2.0 * spec.hx)
    return jets


def _linear_model_bracket(n: int):
    """F and H for a_k = c_k + d_k t + e_k x (k < n), a_n = 1, with parameter names."""
    t, x = Var("t"), Var("x")
    params = []
    models = []
    for k in range(n):
        c, d, e = Var(f"a{k}_c"), Var(f"a{k}_t"), Var(f"a{k}_x")
        params.append((c.name, d.name, e.name))
        models.append(add(c, mul(d, t), mul(e, x)))
    models.append(ONE)
    metric, integral = semi_geodesic_assembly(models[n - 1], models, n, ("t", "x"))
    return integral, hamiltonian(metric), params


def _model_parameters(params, values: np.ndarray, jets: np.ndarray, points: np.ndarray) -> Dict[str, np.ndarray]:
    assignment = {}
    for k, (c, d, e) in enumerate(params):
        assignment[d] = jets[:, k, 0]
        assignment[e] = jets[:, k, 1]
        assignment[c] = values[:, k] - jets[:, k, 0] * points[:, 0] - jets[:, k, 1] * points[:, 1]
    return assignment


def bracket_closure(grid: GridSolution, n: int, method: str = "jet") -> np.ndarray:
    """Relative {F, H} residual at grid nodes from local linear models of the a_k.

    method="jet" uses the implicit-function derivatives stored with the grid,
    "fd" central differences (interior nodes only). Nodes without data give NaN.
    """
    if len(grid.unknowns) != n:
        raise DimensionError(f"grid has {len(grid.unknowns)} fields, expected {n}")
    if method == "jet":
        jets = grid.jets
    elif method == "fd":
        jets = _finite_difference_jets(grid)
    else:
        raise ValueError("method must be 'jet' or 'fd'")
    integral, ham, params = _linear_model_bracket(n)
    tt, xx = np.meshgrid(grid.spec.ts, grid.spec.xs, indexing="ij")
    points = np.column_stack([tt.ravel(), xx.ravel()])
    values = grid.values.reshape(-1, n)
    jets = jets.reshape(-1, n, 2)
    result = np.full(len(points), np.nan)
    ok = np.all(np.isfinite(values), axis=1) & np.all(np.isfinite(jets), axis=(1, 2))
    if ok.any():
        parameters = _model_parameters(params, values[ok], jets[ok], points[ok])
        result[ok] = bracket_residuals(integral, ham, points[ok], parameters)
    return result.reshape(grid.spec.nt, grid.spec.nx)


# n = 2 closed form ---------------------------------------------------------------

def _derivatives(f: Expr, var: str, order: int) -> List[Expr]:
    out = [as_expr(f)]
    for _ in range(order):
        out.append(differentiate(out[-1], var))
    return out


@dataclass
class N2Sample:
    t: float
    x: float
    a0: float
    g: float
    jacobian_det: float
    r_t: Tuple[float, float]
    r_x: Tuple[float, float]

    @property
    def degenerate(self) -> bool:
        return self.jacobian_det == 0.0


def n2_general_solution_sample(u, v, r1: float, r2: float, var: str = "s") -> N2Sample:
    """Point (t, x, a0, g) of the implicit n=2 solution generated by u(r1), v(r2).

    t = -(u''(r1) + v''(r2))/2, x = u'(r1) + v'(r2) - r1 u''(r1) - r2 v''(r2),
    a0 = 1 - r1 - r2, g = sqrt(-4 r1 r2). The derivatives of r are returned as
    well (NaN when the map (r1, r2) -> (t, x) is degenerate).
    """
    if r1 * r2 >= 0:
        raise DomainError(f"r1*r2 must be negative, got r1={r1}, r2={r2}")
    du = [e.evaluate({var: r1}) for e in _derivatives(u, var, 3)]
    dv = [e.evaluate({var: r2}) for e in _derivatives(v, var, 3)]
    t = -0.5 * (du[2] + dv[2])
    x = du[1] + dv[1] - r1 * du[2] - r2 * dv[2]
    t_r1, t_r2 = -0.5 * du[3], -0.5 * dv[3]
    x_r1, x_r2 = -r1 * du[3], -r2 * dv[3]
    det = t_r1 * x_r2 - t_r2 * x_r1
    if det == 0.0:
        logger.warning("n=2 solution map is degenerate at r=(%g, %g)", r1, r2)
        r_t = r_x = (float("nan"), float("nan"))
    else:
        # inverse of d(t, x)/d(r1, r2)
        r_t = (x_r2 / det, -x_r1 / det)
        r_x = (-t_r2 / det, t_r1 / det)
    return N2Sample(t, x, 1.0 - r1 - r2, math.sqrt(-4.0 * r1 * r2), det, r_t, r_x)


def n2_diagonal_residual(u, v, r1: float, r2: float, var: str = "s", method: str = "exact",
                         h: float = 1e-5) -> float:
    """max_i |r^i_t + v_i r^i_x| for v1 = 2 r2, v2 = 2 r1 at a sampled point."""
    if method == "exact":
        sample = n2_general_solution_sample(u, v, r1, r2, var)
        if sample.degenerate:
            raise DomainError("degenerate solution map")
        jac_inv = np.array([[sample.r_t[0], sample.r_x[0]], [sample.r_t[1], sample.r_x[1]]])
    elif method == "fd":
        def tx(a, b):
            s = n2_general_solution_sample(u, v, a, b, var)
            return np.array([s.t, s.x])

        col1 = (tx(r1 + h, r2) - tx(r1 - h, r2)) / (2 * h)
        col2 = (tx(r1, r2 + h) - tx(r1, r2 - h)) / (2 * h)
        jac = np.column_stack([col1, col2])
        jac_inv = np.linalg.inv(jac)
    else:
        raise ValueError("method must be 'exact' or 'fd'")
    velocities = (2.0 * r2, 2.0 * r1)
    return float(max(abs(jac_inv[i, 0] + velocities[i] * jac_inv[i, 1]) for i in range(2)))


def n2_bracket_residual(u, v, r1: float, r2: float, var: str = "s") -> float:
    """Relative {F, H} residual of the quadratic integral built from the n=2 solution at one point."""
    s = n2_general_solution_sample(u, v, r1, r2, var)
    if s.degenerate:
        raise DomainError("degenerate solution map")
    a0_jet = (-(s.r_t[0] + s.r_t[1]), -(s.r_x[0] + s.r_x[1]))
    # g^2 = -4 r1 r2
    g_jet = (-2.0 * (s.r_t[0] * r2 + r1 * s.r_t[1]) / s.g, -2.0 * (s.r_x[0] * r2 + r1 * s.r_x[1]) / s.g)
    integral, ham, params = _linear_model_bracket(2)
    point = np.array([[s.t, s.x]])
    parameters = _model_parameters(params, np.array([[s.a0, s.g]]), np.array([[a0_jet, g_jet]]), point)
    return float(bracket_residuals(integral, ham, point, parameters)[0])


@dataclass
class EpdReport:
    epd_residual: float
    symmetry_residual: float
    compatibility_residual: float
    evaluated: int
    skipped: int

    @property
    def max_residual(self) -> float:
        return max(self.epd_residual, self.symmetry_residual, self.compatibility_residual)


def epd_potential(u, v, var: str = "s", names=("r1", "r2")) -> Expr:
    """Psi = 2u(r1) + 2v(r2) + (r1 - r2)(v'(r2) - u'(r1))."""
    r1, r2 = (Var(n) for n in names)
    U = substitute(as_expr(u), {var: r1})
    W = substitute(as_expr(v), {var: r2})
    dU, dW = differentiate(U, names[0]), differentiate(W, names[1])
    return add(mul(Const(2), U), mul(Const(2), W), mul(sub(r1, r2), sub(dW, dU)))


def epd_check(u, v, points: Optional[np.ndarray] = None, *, var: str = "s", samples: int = 200,
              rng: Optional[np.random.Generator] = None, min_gap: float = 0.1) -> EpdReport:
    """Exact-derivative residuals of the Euler-Poisson-Darboux equation for Psi(u, v),
    of the commuting-flow conditions for w_i = Psi_{r_i} against v1 = 2 r2, v2 = 2 r1,
    and of (w1)_{r2} = (w2)_{r1}. Residuals are relative; points with
    |r1 - r2| < min_gap are skipped."""
    names = ("r1", "r2")
    psi = epd_potential(u, v, var, names)
    r1, r2 = (Var(n) for n in names)
    w1, w2 = differentiate(psi, "r1"), differentiate(psi, "r2")
    w12, w21 = differentiate(w1, "r2"), differentiate(w2, "r1")
    gap = sub(r1, r2)
    v1, v2 = mul(Const(2), r2), mul(Const(2), r1)
    exprs = [
        w12, neg(div(sub(w1, w2), gap)),
        mul(differentiate(v1, "r2"), sub(w2, w1)), mul(w12, sub(v2, v1)),
        mul(differentiate(v2, "r1"), sub(w1, w2)), mul(w21, sub(v1, v2)),
        w12, w21,
    ]
    if points is None:
        rng = rng if rng is not None else np.random.default_rng(0)
        points = rng.uniform(-2.0, 2.0, size=(samples, 2))
    points = np.atleast_2d(np.asarray(points, dtype=float))
    keep = np.abs(points[:, 0] - points[:, 1]) >= min_gap
    values = Program(exprs).evaluate_arrays({"r1": points[:, 0], "r2": points[:, 1]}, on_error="nan")
    values = np.array([np.broadcast_to(v, (len(points),)) for v in values])
    # points where any residual fails to evaluate count as skipped
    keep &= np.all(np.isfinite(values), axis=0)
    values = values[:, keep]

    def rel(a, b):
        r = np.abs(a - b) / (1.0 + np.abs(a) + np.abs(b))
        return float(np.max(r)) if len(r) else 0.0

    return EpdReport(
        epd_residual=rel(values[0], values[1]),
        symmetry_residual=max(rel(values[2], values[3]), rel(values[4], values[5])),
        compatibility_residual=rel(values[6], values[7]),
        evaluated=int(keep.sum()),
        skipped=int((~keep).sum()),
    )


__all__ = [
    "CONVERGED",
    "FAILED",
    "DOMAIN",
    "SINGULAR",
    "BRANCH_JUMP",
    "UNREACHED",
    "ImplicitSystem",
    "NewtonResult",
    "GridSpec",
    "GridSolution",
    "GridContinuation",
    "ContinuationStatistics",
    "GridResidual",
    "RefinementStudy",
    "N2Sample",
    "EpdReport",
    "newton_solve",
    "implicit_jet",
    "solve_on_grid",
    "pde_residual_on_grid",
    "refinement_study",
    "bracket_closure",
    "n2_general_solution_sample",
    "n2_diagonal_residual",
    "n2_bracket_residual",
    "epd_potential",
    "epd_check",
]
