"""Metrics, momentum polynomials, Poisson brackets and curvature on surfaces.

A `MomentumPoly` of degree n stores coefficients c_0..c_n meaning
    sum_k c_k * p1**(n-k) * p2**k
with c_k expressions in the two coordinates.
"""
import logging
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from typing import Dict, List, Mapping, NamedTuple, Optional, Sequence, Tuple

import numpy as np

from .errors import DegenerateMetricError, NormalizationError
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
    free_variables,
    is_const,
    mul,
    neg,
    postvisitor,
    power,
    sub,
    substitute,
)

logger = logging.getLogger(__name__)

MOMENTA = ("p1", "p2")
HALF = Const(Fraction(1, 2))


class PhasePoint(NamedTuple):
    u1: float
    u2: float
    p1: float
    p2: float

    def as_array(self) -> np.ndarray:
        return np.array(self, dtype=float)


def _coords(coordinates) -> Tuple[str, str]:
    coordinates = tuple(coordinates)
    if len(coordinates) != 2 or len(set(coordinates)) != 2:
        raise ValueError(f"expected two distinct coordinate names, got {coordinates!r}")
    if set(coordinates) & set(MOMENTA):
        raise ValueError("coordinate names clash with the momentum names p1, p2")
    return coordinates


@dataclass(frozen=True, eq=False)
class Metric2D:
    """g11 du1^2 + 2 g12 du1 du2 + g22 du2^2."""

    g11: Expr
    g12: Expr
    g22: Expr
    coordinates: Tuple[str, str] = ("x", "y")

    def __post_init__(self):
        object.__setattr__(self, "g11", as_expr(self.g11))
        object.__setattr__(self, "g12", as_expr(self.g12))
        object.__setattr__(self, "g22", as_expr(self.g22))
        object.__setattr__(self, "coordinates", _coords(self.coordinates))

    @classmethod
    def identity(cls, coordinates=("x", "y")) -> "Metric2D":
        return cls(ONE, ZERO, ONE, coordinates)

    @classmethod
    def conformal(cls, factor, coordinates=("x", "y")) -> "Metric2D":
        factor = as_expr(factor)
        return cls(factor, ZERO, factor, coordinates)

    @classmethod
    def semi_geodesic(cls, g, coordinates=("t", "x")) -> "Metric2D":
        """g**2 dt^2 + dx^2."""
        return cls(power(g, 2), ZERO, ONE, coordinates)

    @property
    def components(self) -> Tuple[Expr, Expr, Expr]:
        return self.g11, self.g12, self.g22

    @cached_property
    def det(self) -> Expr:
        return sub(mul(self.g11, self.g22), power(self.g12, 2))

    @cached_property
    def inverse(self) -> Tuple[Expr, Expr, Expr]:
        """(g^11, g^12, g^22)."""
        d = self.det
        return div(self.g22, d), neg(div(self.g12, d)), div(self.g11, d)

    @cached_property
    def _program(self) -> Program:
        return Program([self.g11, self.g12, self.g22, self.det])

    def evaluate(self, point: Sequence[float]) -> np.ndarray:
        """2x2 matrix of the metric at a coordinate point."""
        g11, g12, g22, d = self._program(dict(zip(self.coordinates, point)))
        if d == 0:
            raise DegenerateMetricError(f"det g vanishes at {tuple(point)}")
        return np.array([[g11, g12], [g12, g22]])

    def free_variables(self) -> frozenset:
        return free_variables(self.g11) | free_variables(self.g12) | free_variables(self.g22)

    def substitute(self, mapping: Mapping[str, object]) -> "Metric2D":
        return Metric2D(*(substitute(c, mapping) for c in self.components), coordinates=self.coordinates)

    def pullback_affine(self, matrix, shift=(0, 0)) -> "Metric2D":
        """Metric in new coordinates u' with u = matrix @ u' + shift (same names)."""
        a = [[as_expr(_exact(v)) for v in row] for row in matrix]
        b = [as_expr(_exact(v)) for v in shift]
        u = [Var(c) for c in self.coordinates]
        mapping = {
            c: add(mul(a[k][0], u[0]), mul(a[k][1], u[1]), b[k])
            for k, c in enumerate(self.coordinates)
        }
        g = [[substitute(self.g11, mapping), substitute(self.g12, mapping)],
             [None, substitute(self.g22, mapping)]]
        g[1][0] = g[0][1]

        def entry(i, j):
            return add(*(mul(a[k][i], a[l][j], g[k][l]) for k in range(2) for l in range(2)))

        return Metric2D(entry(0, 0), entry(0, 1), entry(1, 1), self.coordinates)


def _exact(value):
    if isinstance(value, float) and value.is_integer():
        return int(value)
    return value


@dataclass(frozen=True, eq=False)
class MomentumPoly:
    coefficients: Tuple[Expr, ...]
    coordinates: Tuple[str, str] = ("x", "y")

    def __post_init__(self):
        coefficients = tuple(as_expr(c) for c in self.coefficients)
        if not coefficients:
            raise ValueError("a momentum polynomial needs at least one coefficient")
        object.__setattr__(self, "coefficients", coefficients)
        object.__setattr__(self, "coordinates", _coords(self.coordinates))

    @property
    def degree(self) -> int:
        return len(self.coefficients) - 1

    @classmethod
    def zero(cls, degree: int, coordinates=("x", "y")) -> "MomentumPoly":
        return cls((ZERO,) * (degree + 1), coordinates)

    @classmethod
    def scalar(cls, value, coordinates=("x", "y")) -> "MomentumPoly":
        return cls((as_expr(value),), coordinates)

    @classmethod
    def linear(cls, c1, c2, coordinates=("x", "y")) -> "MomentumPoly":
        """c1*p1 + c2*p2."""
        return cls((as_expr(c1), as_expr(c2)), coordinates)

    def is_structurally_zero(self) -> bool:
        return all(is_const(c, 0) for c in self.coefficients)

    def _check(self, other: "MomentumPoly"):
        if other.coordinates != self.coordinates:
            raise ValueError(f"coordinate mismatch: {self.coordinates} vs {other.coordinates}")

    def __add__(self, other: "MomentumPoly") -> "MomentumPoly":
        self._check(other)
        if other.degree != self.degree:
            raise ValueError(f"cannot add momentum polynomials of degrees {self.degree} and {other.degree}")
        return MomentumPoly(tuple(add(a, b) for a, b in zip(self.coefficients, other.coefficients)), self.coordinates)

    def __neg__(self) -> "MomentumPoly":
        return self.scale(-1)

    def __sub__(self, other: "MomentumPoly") -> "MomentumPoly":
        return self + (-other)

    def scale(self, factor) -> "MomentumPoly":
        factor = as_expr(factor)
        return MomentumPoly(tuple(mul(factor, c) for c in self.coefficients), self.coordinates)

    def __mul__(self, other) -> "MomentumPoly":
        if not isinstance(other, MomentumPoly):
            return self.scale(other)
        self._check(other)
        m, n = self.degree, other.degree
        out = []
        for k in range(m + n + 1):
            terms = [
                mul(self.coefficients[i], other.coefficients[k - i])
                for i in range(max(0, k - n), min(m, k) + 1)
            ]
            out.append(add(*terms))
        return MomentumPoly(tuple(out), self.coordinates)

    def __rmul__(self, other) -> "MomentumPoly":
        return self.scale(other)

    def __pow__(self, exponent: int) -> "MomentumPoly":
        if not isinstance(exponent, int) or exponent < 0:
            raise ValueError("momentum polynomials only take non-negative integer powers")
        result = MomentumPoly.scalar(ONE, self.coordinates)
        for _ in range(exponent):
            result = result * self
        return result

    def map_coefficients(self, fn) -> "MomentumPoly":
        return MomentumPoly(tuple(fn(c) for c in self.coefficients), self.coordinates)

    def diff_coordinate(self, index: int) -> "MomentumPoly":
        name = self.coordinates[index]
        return self.map_coefficients(lambda c: differentiate(c, name))

    def diff_momentum(self, index: int) -> "MomentumPoly":
        n = self.degree
        c = self.coefficients
        if n == 0:
            return MomentumPoly.zero(0, self.coordinates)
        if index == 0:
            out = [mul(Const(n - k), c[k]) for k in range(n)]
        else:
            out = [mul(Const(k), c[k]) for k in range(1, n + 1)]
        return MomentumPoly(tuple(out), self.coordinates)

    def as_expr(self) -> Expr:
        n = self.degree
        p1, p2 = Var(MOMENTA[0]), Var(MOMENTA[1])
        return add(*(mul(c, power(p1, n - k), power(p2, k)) for k, c in enumerate(self.coefficients)))

    @cached_property
    def _program(self) -> Program:
        return Program(self.coefficients)

    def evaluate_coefficients(self, point: Sequence[float]) -> List[float]:
        return self._program(dict(zip(self.coordinates, point)))

    def evaluate(self, state: Sequence[float]) -> float:
        """Value at a phase point (u1, u2, p1, p2)."""
        u1, u2, p1, p2 = state
        n = self.degree
        coeffs = self.evaluate_coefficients((u1, u2))
        return sum(c * p1 ** (n - k) * p2 ** k for k, c in enumerate(coeffs))

    def substitute(self, mapping: Mapping[str, object]) -> "MomentumPoly":
        return self.map_coefficients(lambda c: substitute(c, mapping))

    @classmethod
    def from_expr(cls, expression, forms: Optional[Mapping[str, Tuple[object, object]]] = None,
                  coordinates=("x", "y")) -> "MomentumPoly":
        """Expand an expression that is polynomial in named linear momentum forms.

        `forms` maps names to (c1, c2) meaning c1*p1 + c2*p2; p1 and p2 are
        always available. The result must be homogeneous in the momenta.
        """
        coordinates = _coords(coordinates)
        linear = {MOMENTA[0]: cls.linear(ONE, ZERO, coordinates), MOMENTA[1]: cls.linear(ZERO, ONE, coordinates)}
        for name, (c1, c2) in (forms or {}).items():
            linear[name] = cls.linear(c1, c2, coordinates)
        names = frozenset(linear)
        expression = as_expr(expression)

        def known(node):
            if not (free_variables(node) & names):
                return cls.scalar(node, coordinates)
            return None

        def visit(node, *children):
            if isinstance(node, Var):
                return linear[node.name]
            kind = type(node).__name__
            if kind == "Add":
                terms = [c for c in children if not c.is_structurally_zero()] or [children[0]]
                if len({c.degree for c in terms}) > 1:
                    raise NormalizationError("integral is not homogeneous in the momenta")
                result = terms[0]
                for term in terms[1:]:
                    result = result + term
                return result
            if kind == "Mul":
                result = children[0]
                for child in children[1:]:
                    result = result * child
                return result
            if kind == "Div":
                num, den = children
                if den.degree != 0:
                    raise NormalizationError("momenta may not appear in a denominator")
                return num.map_coefficients(lambda c: div(c, den.coefficients[0]))
            if kind == "Pow":
                base = children[0]
                if base.degree == 0:
                    return cls.scalar(power(base.coefficients[0], node.exponent), coordinates)
                q = node.exponent
                if q.denominator != 1 or q < 0:
                    raise NormalizationError("momentum forms only take non-negative integer powers")
                return base ** int(q)
            if any(c.degree != 0 for c in children):
                raise NormalizationError(f"momenta inside {getattr(node, 'name', kind)}()")
            return cls.scalar(node.rebuild([c.coefficients[0] for c in children]), coordinates)

        return postvisitor(expression, visit, known=known)


def hamiltonian(metric: Metric2D) -> MomentumPoly:
    """H = 1/2 g^{ij} p_i p_j as a degree-2 momentum polynomial."""
    if is_const(metric.det, 0):
        raise DegenerateMetricError("metric determinant is identically zero")
    h11, h12, h22 = metric.inverse
    return MomentumPoly((mul(HALF, h11), h12, mul(HALF, h22)), metric.coordinates)


def poisson_bracket(f: MomentumPoly, h: MomentumPoly) -> MomentumPoly:
    """{F, H} = sum_i F_{u_i} H_{p_i} - F_{p_i} H_{u_i}."""
    if f.coordinates != h.coordinates:
        raise ValueError(f"coordinate mismatch: {f.coordinates} vs {h.coordinates}")
    degree = f.degree + h.degree - 1
    result = MomentumPoly.zero(max(degree, 0), f.coordinates)
    if degree < 0:
        return result
    for i in range(2):
        if h.degree > 0:
            result = result + f.diff_coordinate(i) * h.diff_momentum(i)
        if f.degree > 0:
            result = result - f.diff_momentum(i) * h.diff_coordinate(i)
    return result


def _det3(m) -> Expr:
    return add(
        mul(m[0][0], sub(mul(m[1][1], m[2][2]), mul(m[1][2], m[2][1]))),
        neg(mul(m[0][1], sub(mul(m[1][0], m[2][2]), mul(m[1][2], m[2][0])))),
        mul(m[0][2], sub(mul(m[1][0], m[2][1]), mul(m[1][1], m[2][0]))),
    )


def gauss_curvature(metric: Metric2D) -> Expr:
    """Gauss curvature by the Brioschi formula."""
    u, v = metric.coordinates
    E, F, G = metric.components
    d = differentiate
    Eu, Ev = d(E, u), d(E, v)
    Fu, Fv = d(F, u), d(F, v)
    Gu, Gv = d(G, u), d(G, v)
    Evv, Fuv, Guu = d(Ev, v), d(Fu, v), d(Gu, u)

    a = [
        [add(mul(-HALF.value, Evv), Fuv, mul(-HALF.value, Guu)), mul(HALF, Eu), sub(Fu, mul(HALF, Ev))],
        [sub(Fv, mul(HALF, Gu)), E, F],
        [mul(HALF, Gv), F, G],
    ]
    b = [
        [ZERO, mul(HALF, Ev), mul(HALF, Gu)],
        [mul(HALF, Ev), E, F],
        [mul(HALF, Gu), F, G],
    ]
    return div(sub(_det3(a), _det3(b)), power(metric.det, 2))


def scalar_curvature(metric: Metric2D, sign: int = 1) -> Expr:
    """R = 2K (times `sign` for the opposite curvature convention)."""
    return mul(Const(2 * sign), gauss_curvature(metric))


def semi_geodesic_assembly(g, a: Sequence, n: int, coordinates=("t", "x")) -> Tuple[Metric2D, MomentumPoly]:
    """Metric g^2 dt^2 + dx^2 and F = sum_k a_k / g^(n-k) p1^(n-k) p2^k."""
    g = as_expr(g)
    a = [as_expr(c) for c in a]
    if n < 1 or len(a) != n + 1:
        raise NormalizationError(f"expected {n + 1} coefficients a_0..a_{n}, got {len(a)}")
    if not is_const(a[n], 1):
        raise NormalizationError("a_n must be the constant 1")
    if a[n - 1] is not g and str(a[n - 1]) != str(g):
        raise NormalizationError("a_(n-1) must equal g")
    metric = Metric2D.semi_geodesic(g, coordinates)
    coefficients = tuple(div(a[k], power(g, n - k)) for k in range(n + 1))
    return metric, MomentumPoly(coefficients, metric.coordinates)


# sampling -------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class Region:
    """Sampling box minus a neighbourhood of singular curves phi = 0.

    The distance to a curve is estimated as |phi| / |grad phi|.
    """

    box: Tuple[Tuple[float, float], Tuple[float, float]]
    singular_loci: Tuple[Expr, ...] = ()
    margin: float = 0.1
    coordinates: Tuple[str, str] = ("x", "y")

    def __post_init__(self):
        box = tuple((float(lo), float(hi)) for lo, hi in self.box)
        if len(box) != 2 or any(lo > hi for lo, hi in box):
            raise ValueError(f"invalid sampling box {self.box!r}")
        object.__setattr__(self, "box", box)
        object.__setattr__(self, "singular_loci", tuple(as_expr(p) for p in self.singular_loci))
        object.__setattr__(self, "coordinates", _coords(self.coordinates))

    @cached_property
    def _program(self) -> Program:
        exprs = []
        for phi in self.singular_loci:
            exprs.append(phi)
            exprs.extend(differentiate(phi, c) for c in self.coordinates)
        return Program(exprs)

    def distances(self, points: np.ndarray) -> np.ndarray:
        """Smallest normalized distance of each point to the singular loci."""
        points = np.atleast_2d(np.asarray(points, dtype=float))
        result = np.full(len(points), np.inf)
        if not self.singular_loci:
            return result
        values = self._program.evaluate_arrays(
            {self.coordinates[0]: points[:, 0], self.coordinates[1]: points[:, 1]}, on_error="nan"
        )
        for k in range(len(self.singular_loci)):
            phi, d1, d2 = values[3 * k: 3 * k + 3]
            norm = np.hypot(d1, d2)
            with np.errstate(divide="ignore", invalid="ignore"):
                dist = np.where(norm > 0, np.abs(phi) / norm, np.where(phi == 0, 0.0, np.inf))
            dist = np.where(np.isnan(dist), 0.0, dist)
            result = np.minimum(result, dist)
        return result

    def signed_distances(self, point: Sequence[float]) -> np.ndarray:
        """phi / |grad phi| for each singular locus at one point; the sign tells the side."""
        values = self._program({self.coordinates[0]: float(point[0]), self.coordinates[1]: float(point[1])})
        result = np.empty(len(self.singular_loci))
        for k in range(len(self.singular_loci)):
            phi, d1, d2 = values[3 * k: 3 * k + 3]
            norm = np.hypot(d1, d2)
            result[k] = phi / norm if norm > 0 else (0.0 if phi == 0 else np.copysign(np.inf, phi))
        return result

    def contains(self, points: np.ndarray, margin: Optional[float] = None) -> np.ndarray:
        points = np.atleast_2d(np.asarray(points, dtype=float))
        margin = self.margin if margin is None else margin
        (x0, x1), (y0, y1) = self.box
        inside = (points[:, 0] >= x0) & (points[:, 0] <= x1) & (points[:, 1] >= y0) & (points[:, 1] <= y1)
        return inside & (self.distances(points) >= margin)

    def sample(self, rng: np.random.Generator, count: int, max_batches: int = 200) -> np.ndarray:
        """`count` uniform points of the box that keep clear of the loci."""
        (x0, x1), (y0, y1) = self.box
        found: List[np.ndarray] = []
        total = 0
        for _ in range(max_batches):
            if total >= count:
                break
            batch = np.column_stack([rng.uniform(x0, x1, count), rng.uniform(y0, y1, count)])
            keep = batch[self.contains(batch)]
            found.append(keep)
            total += len(keep)
        if total < count:
            raise ValueError(f"region yielded only {total} admissible points out of {count} requested")
        return np.concatenate(found)[:count]


@dataclass
class BracketStats:
    samples: int
    evaluated: int
    skipped: int
    max_relative: float
    mean_relative: float
    worst_point: Optional[Tuple[float, float]] = None
    tolerance: Optional[float] = None

    @property
    def passed(self) -> bool:
        if self.evaluated == 0:
            return False
        return self.tolerance is None or self.max_relative <= self.tolerance

    def to_dict(self) -> Dict[str, object]:
        return {
            "samples": self.samples,
            "evaluated": self.evaluated,
            "skipped": self.skipped,
            "max_relative": self.max_relative,
            "mean_relative": self.mean_relative,
            "worst_point": list(self.worst_point) if self.worst_point is not None else None,
            "tolerance": self.tolerance,
            "passed": self.passed,
        }


def bracket_residuals(f: MomentumPoly, h: MomentumPoly, points: np.ndarray,
                      parameters: Optional[Mapping[str, object]] = None) -> np.ndarray:
    """Relative residual |{F,H}_k| / (1 + sum |F_j| + sum |H_j|), max over k, per point.

    `parameters` assigns any further variables (arrays broadcast against the
    points). Points where evaluation fails give NaN.
    """
    bracket = poisson_bracket(f, h)
    points = np.atleast_2d(np.asarray(points, dtype=float))
    nb = len(bracket.coefficients)
    program = Program(bracket.coefficients + f.coefficients + h.coefficients)
    assignment = dict(parameters or {})
    assignment[f.coordinates[0]] = points[:, 0]
    assignment[f.coordinates[1]] = points[:, 1]
    values = program.evaluate_arrays(assignment, on_error="nan")
    values = np.array([np.broadcast_to(v, (len(points),)) for v in values])
    scale = 1.0 + np.abs(values[nb:]).sum(axis=0)
    return np.abs(values[:nb]).max(axis=0) / scale


def bracket_residual_stats(f: MomentumPoly, h: MomentumPoly, points: np.ndarray,
                           tolerance: Optional[float] = None) -> BracketStats:
    points = np.atleast_2d(np.asarray(points, dtype=float))
    residuals = bracket_residuals(f, h, points)
    ok = np.isfinite(residuals)
    evaluated = int(ok.sum())
    if evaluated < len(points):
        logger.warning("bracket check skipped %d of %d points (evaluation failed)", len(points) - evaluated, len(points))
    if evaluated == 0:
        return BracketStats(len(points), 0, len(points), float("nan"), float("nan"), None, tolerance)
    worst = int(np.nanargmax(np.where(ok, residuals, -np.inf)))
    return BracketStats(
        samples=len(points),
        evaluated=evaluated,
        skipped=len(points) - evaluated,
        max_relative=float(residuals[worst]),
        mean_relative=float(residuals[ok].mean()),
        worst_point=(float(points[worst, 0]), float(points[worst, 1])),
        tolerance=tolerance,
    )


def relative_error(value: np.ndarray, reference: np.ndarray) -> np.ndarray:
    value, reference = np.asarray(value, dtype=float), np.asarray(reference, dtype=float)
    return np.abs(value - reference) / np.maximum(np.abs(reference), np.finfo(float).tiny)


__all__ = [
    "MOMENTA",
    "PhasePoint",
    "Metric2D",
    "MomentumPoly",
    "Region",
    "BracketStats",
    "hamiltonian",
    "poisson_bracket",
    "gauss_curvature",
    "scalar_curvature",
    "semi_geodesic_assembly",
    "bracket_residuals",
    "bracket_residual_stats",
    "relative_error",
]
