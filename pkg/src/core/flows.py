"""Quasi-linear systems U_t + V(U) U_x = 0 for a_0..a_{n-1} and their commuting flows.

`build_V` gives the matrix for the semi-geodesic coefficients of a degree-n
integral, `build_W` the matrices commuting with it (n = 2, 3, 4) and
`symmetry_pde_equations` the differential conditions the generators must
satisfy for W to define a commuting flow.
"""
import logging
import math
from dataclasses import dataclass
from functools import cached_property
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .errors import CoincidingVelocitiesError, DegenerateMetricError, DimensionError
from .expr import (
    ONE,
    ZERO,
    Const,
    Expr,
    Program,
    Var,
    add,
    as_expr,
    differentiate,
    div,
    is_const,
    mul,
    power,
    sub,
)

logger = logging.getLogger(__name__)

Matrix = Tuple[Tuple[Expr, ...], ...]

GENERATOR_NAMES = {2: ("w1", "w2"), 3: ("P", "R", "S"), 4: ("P", "R", "S", "T"), 5: ("P", "R", "S", "T", "Q")}


def a_names(n: int) -> Tuple[str, ...]:
    return tuple(f"a{k}" for k in range(n))


def _check_n(n: int, allowed) -> None:
    if not isinstance(n, int) or n not in allowed:
        raise DimensionError(f"n={n!r} outside the supported range {sorted(allowed)}")


def _matrix_program(matrix: Matrix) -> Program:
    return Program([e for row in matrix for e in row])


def _evaluate_matrix(program: Program, names: Sequence[str], n: int, point: Sequence[float]) -> np.ndarray:
    if len(point) != len(names):
        raise DimensionError(f"expected {len(names)} values for {names}, got {len(point)}")
    values = program(dict(zip(names, point)))
    return np.array(values, dtype=float).reshape(n, n)


@dataclass(frozen=True, eq=False)
class QuasiLinearSystem:
    n: int
    matrix: Matrix
    variables: Tuple[str, ...]

    @cached_property
    def _program(self) -> Program:
        return _matrix_program(self.matrix)

    def evaluate(self, point: Sequence[float]) -> np.ndarray:
        return _evaluate_matrix(self._program, self.variables, self.n, point)


@dataclass(frozen=True, eq=False)
class SymmetryFlow:
    n: int
    generators: Tuple[Expr, ...]
    matrix: Matrix
    variables: Tuple[str, ...]

    @cached_property
    def _program(self) -> Program:
        return _matrix_program(self.matrix)

    def evaluate(self, point: Sequence[float]) -> np.ndarray:
        return _evaluate_matrix(self._program, self.variables, self.n, point)


def build_V(n: int, names: Optional[Sequence[str]] = None) -> QuasiLinearSystem:
    """Matrix with a_{n-1} on the subdiagonal and last column
    (k+1) a_{k+1} - (n-k+1) a_{k-1}, where a_{-1} = 0 and a_n = 1."""
    _check_n(n, range(1, 6))
    names = tuple(names) if names is not None else a_names(n)
    if len(names) != n:
        raise DimensionError(f"expected {n} variable names, got {len(names)}")
    a: Dict[int, Expr] = {k: Var(name) for k, name in enumerate(names)}
    a[-1] = ZERO
    a[n] = ONE
    rows = []
    for i in range(n):
        row = [ZERO] * n
        if i > 0:
            row[i - 1] = a[n - 1]
        last = sub(mul(Const(i + 1), a[i + 1]), mul(Const(n - i + 1), a[i - 1]))
        row[n - 1] = last
        rows.append(tuple(row))
    return QuasiLinearSystem(n, tuple(rows), names)


def build_W(n: int, generators: Sequence, names: Optional[Sequence[str]] = None) -> SymmetryFlow:
    """General matrix commuting with build_V(n).

    n=2: generators (w1, w2); n=3: (P, R, S); n=4: (P, R, S, T).
    """
    _check_n(n, (2, 3, 4))
    names = tuple(names) if names is not None else a_names(n)
    gens = tuple(as_expr(g) for g in generators)
    if len(gens) != len(GENERATOR_NAMES[n]):
        raise DimensionError(f"n={n} needs generators {GENERATOR_NAMES[n]}, got {len(gens)}")
    a = [Var(name) for name in names]
    c = Const
    if n == 2:
        w1, w2 = gens
        a0, a1 = a
        w4 = add(w1, div(mul(c(2), sub(ONE, a0), w2), a1))
        rows = ((w1, w2), (w2, w4))
    elif n == 3:
        P, R, S = gens
        a0, a1, a2 = a
        k2a1m3 = sub(mul(c(2), a1), c(3))
        k3a0m2a2 = sub(mul(c(3), a0), mul(c(2), a2))
        rows = (
            (add(mul(k3a0m2a2, P), mul(k2a1m3, R), S), mul(a1, P), mul(a1, R)),
            (add(mul(k2a1m3, P), mul(a2, R)), add(mul(k2a1m3, R), S),
             add(mul(a1, P), mul(sub(mul(c(2), a2), mul(c(3), a0)), R))),
            (mul(a2, P), mul(a2, R), S),
        )
    else:
        P, R, S, T = gens
        a0, a1, a2, a3 = a
        a2m2 = mul(c(2), sub(a2, c(2)))            # 2(a2 - 2)
        a2m2a0 = mul(c(2), sub(a2, mul(c(2), a0)))  # 2(a2 - 2a0)
        a1m3 = mul(c(3), sub(a1, a3))               # 3(a1 - a3)
        w1 = add(mul(c(2), sub(mul(c(2), a0), a2), P), mul(a1m3, R), mul(a2m2, S), T)
        w2 = add(mul(a1m3, P), mul(a2m2, R), mul(a3, S))
        w3 = add(mul(a1m3, R), mul(a2m2, S), T)
        w4 = add(mul(a1, P), mul(a2m2a0, R), mul(c(3), sub(a3, a1), S))
        rows = (
            (w1, mul(a1, P), mul(a1, R), mul(a1, S)),
            (w2, w3, add(mul(a1, P), mul(a2m2a0, R)), add(mul(a1, R), mul(a2m2a0, S))),
            (add(mul(a3, R), mul(a2m2, P)), add(mul(a3, S), mul(a2m2, R)), add(T, mul(a2m2, S)), w4),
            (mul(a3, P), mul(a3, R), mul(a3, S), T),
        )
    return SymmetryFlow(n, gens, tuple(tuple(r) for r in rows), names)


def commutator_residual(V, W, point: Sequence[float]) -> float:
    """max |VW - WV| at a point; V, W are systems/flows or plain arrays."""
    v = V.evaluate(point) if hasattr(V, "evaluate") else np.asarray(V, dtype=float)
    w = W.evaluate(point) if hasattr(W, "evaluate") else np.asarray(W, dtype=float)
    if v.shape != w.shape:
        raise DimensionError(f"matrix shapes differ: {v.shape} vs {w.shape}")
    return float(np.max(np.abs(v @ w - w @ v)))


# symmetry PDEs -----------------------------------------------------------------

@dataclass(frozen=True)
class PdeEquation:
    label: str
    lhs: Expr
    rhs: Expr


def symmetry_pde_equations(n: int, generators: Sequence, names: Optional[Sequence[str]] = None) -> List[PdeEquation]:
    """Conditions on the generators making W a commuting flow of V."""
    _check_n(n, (2, 3, 4))
    names = tuple(names) if names is not None else a_names(n)
    gens = [as_expr(g) for g in generators]
    if len(gens) != len(GENERATOR_NAMES[n]):
        raise DimensionError(f"n={n} needs generators {GENERATOR_NAMES[n]}, got {len(gens)}")
    a = [Var(name) for name in names]
    c = Const

    def d(e, k):
        return differentiate(e, names[k])

    def lin(*pairs):
        return add(*(mul(coeff, e) for coeff, e in pairs))

    if n == 2:
        w1, w2 = gens
        a0, a1 = a
        return [
            PdeEquation("(w1)_a1 = (w2)_a0", d(w1, 1), d(w2, 0)),
            PdeEquation(
                "w2 - a1 (w2)_a1 + a1 (w1)_a0 - 2(a0 - 1)(w2)_a0 = 0",
                lin((ONE, w2), (mul(c(-1), a1), d(w2, 1)), (a1, d(w1, 0)),
                    (mul(c(-2), sub(a0, ONE)), d(w2, 0))),
                ZERO,
            ),
        ]

    if n == 3:
        P, R, S = gens
        a0, a1, a2 = a
        R0, R1, R2 = d(R, 0), d(R, 1), d(R, 2)
        return [
            PdeEquation("a1 P_0 = (3a0 - 2a2) R_0 + (2a1 - 3) R_1 + a2 R_2", mul(a1, d(P, 0)),
                        lin((sub(mul(c(3), a0), mul(c(2), a2)), R0), (sub(mul(c(2), a1), c(3)), R1), (a2, R2))),
            PdeEquation("P_1 = R_0", d(P, 1), R0),
            PdeEquation("P_2 = R_1", d(P, 2), R1),
            PdeEquation("S_0 = a2 R_1 - 2P", d(S, 0), sub(mul(a2, R1), mul(c(2), P))),
            PdeEquation("S_1 = a2 R_2 - 2R", d(S, 1), sub(mul(a2, R2), mul(c(2), R))),
            PdeEquation("S_2 = a1 R_0 + (2a2 - 3a0) R_1 + (3 - 2a1) R_2 + P", d(S, 2),
                        add(lin((a1, R0), (sub(mul(c(2), a2), mul(c(3), a0)), R1), (sub(c(3), mul(c(2), a1)), R2)), P)),
        ]

    P, R, S, T = gens
    a0, a1, a2, a3 = a
    R0, R1, R2, R3 = (d(R, k) for k in range(4))
    common = lin((a1, R0), (mul(c(2), sub(a2, mul(c(2), a0))), R1), (mul(c(3), sub(a3, a1)), R2),
                 (mul(c(-2), sub(a2, c(2))), R3))
    gamma0 = mul(c(2), a1, sub(c(2), a2))
    gamma1 = add(mul(c(-4), power(a2, 2)), mul(c(8), a0, a2), mul(a1, a3), mul(c(-16), a0), mul(c(8), a2))
    gamma2 = add(mul(c(-4), a0, a3), mul(c(6), a1, a2), mul(c(-4), a2, a3), mul(c(-12), a1), mul(c(12), a3))
    gamma3 = add(mul(c(4), power(sub(a2, c(2)), 2)), mul(c(-3), a1, a3), mul(c(3), power(a3, 2)))
    return [
        PdeEquation("a1 P_0 = 2(2a0 - a2) R_0 + 3(a1 - a3) R_1 + 2(a2 - 2) R_2 + a3 R_3 + R", mul(a1, d(P, 0)),
                    add(lin((mul(c(2), sub(mul(c(2), a0), a2)), R0), (mul(c(3), sub(a1, a3)), R1),
                            (mul(c(2), sub(a2, c(2))), R2), (a3, R3)), R)),
        PdeEquation("P_1 = R_0", d(P, 1), R0),
        PdeEquation("P_2 = R_1", d(P, 2), R1),
        PdeEquation("P_3 = R_2", d(P, 3), R2),
        PdeEquation("S_0 = R_1", d(S, 0), R1),
        PdeEquation("S_1 = R_2", d(S, 1), R2),
        PdeEquation("S_2 = R_3", d(S, 2), R3),
        PdeEquation("a3 S_3 = a1 R_0 + 2(a2 - 2a0) R_1 + 3(a3 - a1) R_2 - 2(a2 - 2) R_3 + P",
                    mul(a3, d(S, 3)), add(common, P)),
        PdeEquation("T_0 = a3 R_2 - 2P", d(T, 0), sub(mul(a3, R2), mul(c(2), P))),
        PdeEquation("T_1 = a3 R_3 - 2R", d(T, 1), sub(mul(a3, R3), mul(c(2), R))),
        PdeEquation("T_2 = a1 R_0 + 2(a2 - 2a0) R_1 + 3(a3 - a1) R_2 - 2(a2 - 2) R_3 + P - 2S",
                    d(T, 2), add(common, P, mul(c(-2), S))),
        PdeEquation("a3 T_3 = gamma . grad R + 2(2 - a2) P + 2 a3 R", mul(a3, d(T, 3)),
                    add(lin((gamma0, R0), (gamma1, R1), (gamma2, R2), (gamma3, R3)),
                        mul(c(2), sub(c(2), a2), P), mul(c(2), a3, R))),
    ]


def sample_a_points(n: int, rng: np.random.Generator, count: int, half_width: float = 2.0,
                    min_g: float = 0.2, positive_g: bool = False) -> np.ndarray:
    """Uniform a-points in [-w, w]^n with |a_{n-1}| >= min_g."""
    points = rng.uniform(-half_width, half_width, size=(count, n))
    g = rng.uniform(min_g, half_width, size=count)
    if not positive_g:
        g = g * rng.choice([-1.0, 1.0], size=count)
    points[:, n - 1] = g
    return points


@dataclass
class PdeResidualReport:
    n: int
    labels: List[str]
    max_residuals: List[float]
    samples: int
    evaluated: int
    skipped: int
    tolerance: Optional[float] = None

    @property
    def max_residual(self) -> float:
        return max(self.max_residuals) if self.max_residuals else 0.0

    @property
    def passed(self) -> bool:
        return self.evaluated > 0 and (self.tolerance is None or self.max_residual <= self.tolerance)

    def to_dict(self) -> Dict[str, object]:
        return {
            "n": self.n,
            "samples": self.samples,
            "evaluated": self.evaluated,
            "skipped": self.skipped,
            "equations": [{"equation": l, "max_residual": r} for l, r in zip(self.labels, self.max_residuals)],
            "max_residual": self.max_residual,
            "tolerance": self.tolerance,
            "passed": self.passed,
        }


def symmetry_pde_residual(n: int, generators: Sequence, points: Optional[np.ndarray] = None, *,
                          samples: int = 500, rng: Optional[np.random.Generator] = None,
                          names: Optional[Sequence[str]] = None, tolerance: Optional[float] = None,
                          positive_g: bool = False) -> PdeResidualReport:
    """Per-equation max of |lhs - rhs| / (1 + |lhs| + |rhs|) over sample points.

    Points where an equation cannot be evaluated (log or division domain)
    are skipped and counted.
    """
    names = tuple(names) if names is not None else a_names(n)
    equations = symmetry_pde_equations(n, generators, names)
    if points is None:
        rng = rng if rng is not None else np.random.default_rng(0)
        points = sample_a_points(n, rng, samples, positive_g=positive_g)
    points = np.atleast_2d(np.asarray(points, dtype=float))
    program = Program([e for eq in equations for e in (eq.lhs, eq.rhs)])
    values = program.evaluate_arrays({name: points[:, k] for k, name in enumerate(names)}, on_error="nan")
    values = np.array([np.broadcast_to(v, (len(points),)) for v in values])
    lhs, rhs = values[0::2], values[1::2]
    residual = np.abs(lhs - rhs) / (1.0 + np.abs(lhs) + np.abs(rhs))
    ok = np.all(np.isfinite(residual), axis=0)
    skipped = int((~ok).sum())
    if skipped:
        logger.warning("symmetry PDE check skipped %d of %d points (domain errors)", skipped, len(points))
    maxima = [float(r[ok].max()) if ok.any() else float("nan") for r in residual]
    return PdeResidualReport(n, [eq.label for eq in equations], maxima, len(points), int(ok.sum()), skipped, tolerance)


# hodograph relations ---------------------------------------------------------

def hodograph_relations(n: int, generators: Sequence, names: Optional[Sequence[str]] = None,
                        t: str = "t", x: str = "x") -> List[Expr]:
    """S_1 = ... = S_{n-2} = 0, S_{n-1} = t, S_n = (n - 2 a_{n-2}) t - x, as expressions equal to zero."""
    _check_n(n, (3, 4, 5))
    names = tuple(names) if names is not None else a_names(n)
    gens = [as_expr(g) for g in generators]
    if len(gens) != n:
        raise DimensionError(f"n={n} needs {n} generators, got {len(gens)}")
    tv, xv = Var(t), Var(x)
    relations = list(gens[: n - 2])
    relations.append(sub(gens[n - 2], tv))
    rhs = sub(mul(sub(Const(n), mul(Const(2), Var(names[n - 2]))), tv), xv)
    relations.append(sub(gens[n - 1], rhs))
    return relations


# diagonal systems ------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class DiagonalSystem:
    velocities: Tuple[Expr, ...]
    variables: Tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "velocities", tuple(as_expr(v) for v in self.velocities))
        object.__setattr__(self, "variables", tuple(self.variables))
        if len(self.velocities) != len(self.variables):
            raise DimensionError("one velocity per Riemann invariant is required")

    @property
    def n(self) -> int:
        return len(self.velocities)

    @cached_property
    def _program(self) -> Program:
        return Program(self.velocities)

    def evaluate(self, point: Sequence[float]) -> List[float]:
        return self._program(dict(zip(self.variables, point)))


def n2_diagonal_system(names=("r1", "r2")) -> DiagonalSystem:
    """v1 = 2 r2, v2 = 2 r1."""
    r1, r2 = (Var(n) for n in names)
    return DiagonalSystem((mul(Const(2), r2), mul(Const(2), r1)), tuple(names))


def _check_distinct(values: Sequence[float], tol: float = 1e-12) -> None:
    scale = 1.0 + max(abs(v) for v in values)
    for j in range(len(values)):
        for k in range(j + 1, len(values)):
            if abs(values[j] - values[k]) <= tol * scale:
                raise CoincidingVelocitiesError(j, k, values[j])


def semi_hamiltonian_residual(system: DiagonalSystem, point: Sequence[float]) -> float:
    """max over i != j != k of |d_i(d_j v_k / (v_j - v_k)) - d_j(d_i v_k / (v_i - v_k))|.

    Systems with n <= 2 have no triples and give 0.
    """
    _check_distinct(system.evaluate(point))
    n = system.n
    if n < 3:
        return 0.0
    v, names = system.velocities, system.variables
    exprs = []
    for k in range(n):
        for i in range(n):
            for j in range(i + 1, n):
                if k in (i, j):
                    continue
                left = differentiate(div(differentiate(v[k], names[j]), sub(v[j], v[k])), names[i])
                right = differentiate(div(differentiate(v[k], names[i]), sub(v[i], v[k])), names[j])
                exprs.append(sub(left, right))
    values = Program(exprs)(dict(zip(names, point)))
    return float(max(abs(r) for r in values))


def weak_nonlinearity_check(system: Optional[DiagonalSystem] = None, rng: Optional[np.random.Generator] = None,
                            samples: int = 20, tol: float = 1e-12) -> bool:
    """True when each v_i does not depend on the i-th invariant."""
    system = system if system is not None else n2_diagonal_system()
    rng = rng if rng is not None else np.random.default_rng(0)
    for i, name in enumerate(system.variables):
        derivative = differentiate(system.velocities[i], name)
        if is_const(derivative, 0):
            continue
        points = rng.uniform(0.1, 2.0, size=(samples, system.n))
        values = Program([derivative]).evaluate_arrays(
            {v: points[:, k] for k, v in enumerate(system.variables)}, on_error="nan")[0]
        if not np.all(np.abs(np.broadcast_to(values, (samples,))) <= tol):
            return False
    return True


# n = 2 ---------------------------------------------------------------------

def riemann_invariants_n2(a0: float, a1: float) -> Tuple[float, float]:
    """(r1, r2) with a0 = 1 - r1 - r2, a1**2 = -4 r1 r2 and r1 < r2."""
    if a1 == 0:
        raise DegenerateMetricError("a1 = g vanishes; Riemann invariants are undefined")
    s = 1.0 - a0
    root = math.hypot(s, a1)
    return (s - root) / 2.0, (s + root) / 2.0


def n2_velocities(r1: float, r2: float) -> Tuple[float, float]:
    return 2.0 * r2, 2.0 * r1


def characteristic_coordinates_n2(a0: float, a1: float) -> Tuple[float, float]:
    """Coordinates 1 - a0 -/+ sqrt((1 - a0)^2 + a1^2) bringing the Psi-equation to canonical form.

    They are twice the Riemann invariants and are used only for that equation.
    """
    s = 1.0 - a0
    root = math.hypot(s, a1)
    return s - root, s + root


def psi_equation_n2(psi, names=("a0", "a1")) -> Expr:
    """a1 Psi_00 - 2(a0 - 1) Psi_01 - a1 Psi_11 + Psi_1 (zero for admissible Psi)."""
    psi = as_expr(psi)
    a0, a1 = (Var(n) for n in names)
    p0, p1 = differentiate(psi, names[0]), differentiate(psi, names[1])
    p00, p01, p11 = differentiate(p0, names[0]), differentiate(p0, names[1]), differentiate(p1, names[1])
    return add(mul(a1, p00), mul(Const(-2), sub(a0, ONE), p01), mul(Const(-1), a1, p11), p1)


def flow_from_potential_n2(psi, names=("a0", "a1")) -> SymmetryFlow:
    """n=2 commuting flow with w1 = Psi_a0, w2 = Psi_a1."""
    psi = as_expr(psi)
    return build_W(2, (differentiate(psi, names[0]), differentiate(psi, names[1])), names)


# spectra -------------------------------------------------------------------

@dataclass
class Spectrum:
    eigenvalues: np.ndarray
    hyperbolic: bool


def eigenvalues_V(system, point: Sequence[float], tol: float = 1e-10) -> Spectrum:
    """Eigenvalues at a point; hyperbolic means real and pairwise distinct."""
    matrix = system.evaluate(point) if hasattr(system, "evaluate") else np.asarray(system, dtype=float)
    eig = np.linalg.eigvals(matrix).astype(complex)
    real = bool(np.all(np.abs(eig.imag) <= tol))
    distinct = all(abs(eig[i] - eig[j]) > tol for i in range(len(eig)) for j in range(i + 1, len(eig)))
    return Spectrum(eig, real and distinct)


__all__ = [
    "GENERATOR_NAMES",
    "a_names",
    "QuasiLinearSystem",
    "SymmetryFlow",
    "DiagonalSystem",
    "PdeEquation",
    "PdeResidualReport",
    "Spectrum",
    "build_V",
    "build_W",
    "commutator_residual",
    "symmetry_pde_equations",
    "symmetry_pde_residual",
    "sample_a_points",
    "hodograph_relations",
    "n2_diagonal_system",
    "semi_hamiltonian_residual",
    "weak_nonlinearity_check",
    "riemann_invariants_n2",
    "n2_velocities",
    "characteristic_coordinates_n2",
    "psi_equation_n2",
    "flow_from_potential_n2",
    "eigenvalues_V",
]
