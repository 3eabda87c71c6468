"""Catalog of worked examples as executable data.

Every entry is one of three kinds:
  - explicit-metric: a metric g and a polynomial integral F, checked by {F,H} = 0
  - implicit-hodograph: an implicit system for a_0..a_{n-1} on the (t, x) plane,
    solved by continuation from an anchor, with optional generators P, R, S, T
  - family: a parameterized builder that hydrates to an explicit entry

Expressions are kept as text in the same format the JSON configs use, so the
built-ins and user files go through one parser.
"""
import logging
from dataclasses import dataclass, field, replace
from fractions import Fraction
from functools import lru_cache
from typing import Callable, Dict, List, Mapping, Optional, Sequence, Tuple

from src.core.criteria import CONSISTENT, OBSTRUCTED
from src.core.errors import ConfigError, UnknownExampleError
from src.core.expr import (
    Expr,
    Var,
    add,
    as_expr,
    cos,
    div,
    exp,
    free_variables,
    mul,
    power,
    sin,
    sub,
    substitute,
    variables,
)
from src.core.expr_text import parse
from src.core.flows import a_names, hodograph_relations
from src.core.geometry import Metric2D, MomentumPoly, Region
from src.core.hodograph import GridSpec, ImplicitSystem

logger = logging.getLogger(__name__)

EXPLICIT = "explicit-metric"
IMPLICIT = "implicit-hodograph"
FAMILY = "family"
KINDS = (EXPLICIT, IMPLICIT, FAMILY)


@dataclass(frozen=True)
class Anchor:
    """A point (t, x) with a solution a of the implicit system there."""

    t: float
    x: float
    a: Tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "t", float(self.t))
        object.__setattr__(self, "x", float(self.x))
        object.__setattr__(self, "a", tuple(float(v) for v in self.a))

    def as_dict(self) -> Dict[str, object]:
        return {"t": self.t, "x": self.x, "a": list(self.a)}


@dataclass(frozen=True)
class Preset:
    constants: Mapping[str, float]
    anchor: Anchor
    grid: Optional[GridSpec] = None
    description: str = ""


@dataclass(frozen=True, eq=False)
class ExampleEntry:
    id: str
    kind: str
    degree: int
    description: str = ""
    coordinates: Tuple[str, str] = ("x", "y")
    metric: Optional[Metric2D] = None
    integral: Optional[MomentumPoly] = None
    curvature: Optional[Expr] = None
    region: Optional[Region] = None
    system: Optional[ImplicitSystem] = None
    generators: Tuple[Expr, ...] = ()
    constants: Mapping[str, float] = field(default_factory=dict)
    anchor: Optional[Anchor] = None
    grid: Optional[GridSpec] = None
    presets: Mapping[str, Preset] = field(default_factory=dict)
    parameters: Mapping[str, object] = field(default_factory=dict)
    initial_state: Optional[Tuple[float, float, float, float]] = None
    expected_verdict: Optional[str] = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"{self.id}: unknown kind {self.kind!r}; expected one of {', '.join(KINDS)}")
        object.__setattr__(self, "constants", {k: float(v) for k, v in self.constants.items()})
        object.__setattr__(self, "generators", tuple(as_expr(g) for g in self.generators))
        if self.kind == IMPLICIT:
            if self.system is None or self.anchor is None:
                raise ConfigError(f"{self.id}: implicit entries need a system and an anchor")
            if len(self.anchor.a) != self.system.size:
                raise ConfigError(f"{self.id}: anchor has {len(self.anchor.a)} values for {self.system.size} unknowns")
            if self.system.size != self.degree:
                raise ConfigError(f"{self.id}: degree {self.degree} but {self.system.size} unknowns")
        else:
            if self.metric is None or self.integral is None:
                raise ConfigError(f"{self.id}: explicit entries need a metric and an integral")
            if self.integral.degree != self.degree:
                raise ConfigError(f"{self.id}: degree {self.degree} but the integral has degree {self.integral.degree}")

    @property
    def is_implicit(self) -> bool:
        return self.kind == IMPLICIT

    def bound_generators(self) -> Tuple[Expr, ...]:
        """Generators with the entry's constants substituted."""
        if not self.constants:
            return self.generators
        return tuple(substitute(g, self.constants) for g in self.generators)

    def with_constants(self, overrides: Mapping[str, float]) -> "ExampleEntry":
        if not overrides:
            return self
        unknown = sorted(set(overrides) - set(self.constants))
        if unknown:
            available = ", ".join(sorted(self.constants)) or "none"
            raise ConfigError(f"{self.id}: unknown constant {unknown[0]!r} (available: {available})")
        constants = {**self.constants, **{k: float(v) for k, v in overrides.items()}}
        system = self.system.with_constants(**constants) if self.system is not None else None
        return replace(self, constants=constants, system=system)

    def with_preset(self, name: str) -> "ExampleEntry":
        if name not in self.presets:
            raise ConfigError(f"{self.id}: unknown preset {name!r} (available: {', '.join(self.presets) or 'none'})")
        preset = self.presets[name]
        entry = self.with_constants(preset.constants)
        return replace(entry, anchor=preset.anchor, grid=preset.grid or entry.grid)

    def metadata(self) -> Dict[str, object]:
        return {
            "id": self.id,
            "kind": self.kind,
            "degree": self.degree,
            "description": self.description,
            "constants": dict(self.constants),
            "parameters": dict(self.parameters),
            "presets": list(self.presets),
        }


# helpers ---------------------------------------------------------------------

def _parse_all(texts: Sequence[str]) -> Tuple[Expr, ...]:
    return tuple(parse(text) for text in texts)


def _scaled_integral(alpha: str, coefficients: Sequence[str], coordinates=("x", "y")) -> MomentumPoly:
    alpha = parse(alpha)
    return MomentumPoly(tuple(mul(alpha, parse(c)) for c in coefficients), coordinates)


def _metric(g11: str, g12: str, g22: str, coordinates=("x", "y")) -> Metric2D:
    return Metric2D(parse(g11), parse(g12), parse(g22), coordinates)


def _region(box, loci: Sequence[str] = (), margin: float = 0.1, coordinates=("x", "y")) -> Region:
    return Region(box, _parse_all(loci), margin, coordinates)


def _implicit(entry_id: str, equations: Sequence[Expr], n: int, constants: Mapping[str, float],
              anchor: Anchor, grid: GridSpec, generators: Sequence[Expr] = (), description: str = "",
              presets: Optional[Mapping[str, Preset]] = None) -> ExampleEntry:
    system = ImplicitSystem(tuple(equations), a_names(n), constants)
    return ExampleEntry(
        id=entry_id,
        kind=IMPLICIT,
        degree=n,
        description=description,
        coordinates=("t", "x"),
        system=system,
        generators=tuple(generators),
        constants=constants,
        anchor=anchor,
        grid=grid,
        presets=presets or {},
    )


# explicit examples -----------------------------------------------------------

def _ex0_family(n=3) -> ExampleEntry:
    try:
        n = int(n)
    except (TypeError, ValueError):
        raise ConfigError(f"ex0-family: parameter n must be an integer, got {n!r}") from None
    if n not in (3, 4, 5):
        raise ConfigError(f"ex0-family: n must be 3, 4 or 5, got {n}")
    x, y = variables("x y")
    theta = mul(n + 1, y)
    s, c = sin(theta), cos(theta)
    s2, c2 = sin(mul(2, theta)), cos(mul(2, theta))
    scale = exp(mul(Fraction(4 * (n + 1), n), x))
    g11 = mul(scale, add(mul(2 * n * n, power(s, 2)), mul(8, power(c, 2))))
    g12 = mul(scale, n * (n + 1) * (n - 2), s2)
    g22 = mul(scale, n * n, add(n * n - 2 * n + 2, mul(n * (n - 2), c2)))
    metric = Metric2D(g11, g12, g22)
    denominator = add(3 * n - 2, mul(n - 2, c2))
    prefactor = mul(exp(mul(Fraction(-(n * n + 3 * n + 2), n), x)), power(denominator, -1 - n))
    first = MomentumPoly.linear(mul(n, s), mul(2, c))
    second = MomentumPoly.linear(mul(n * (n - 2), s2), sub(mul(n - 2, c2), n + 2))
    integral = (first ** n * second).scale(prefactor)
    return ExampleEntry(
        id="ex0-family",
        kind=FAMILY,
        degree=n + 1,
        description=f"Darboux-type metric with an integral of degree n+1 (n={n})",
        metric=metric,
        integral=integral,
        region=_region(((-0.5, 0.5), (-1.0, 1.0))),
        parameters={"n": n},
        initial_state=(0.0, 0.1, 0.3, 0.2),
        expected_verdict=OBSTRUCTED,
    )


def _ex2_explicit() -> ExampleEntry:
    return ExampleEntry(
        id="ex2-explicit",
        kind=EXPLICIT,
        degree=3,
        description="cubic integral, singular along y^2 = 2x",
        metric=_metric("4*x^2 + y^2", "3*y*(1 + 2*x)", "9*(1 + y^2)"),
        integral=_scaled_integral("(y^2 - 2*x)^(-3)", [
            "27*(y^4 - 2*y^2*(1 + x) - 2)",
            "18*y*(4*x^2 - 2*y^2*(x - 1) + 2*x + 3)",
            "-6*(y^4 + 4*x^3 - y^2*(2*x^2 - 4*x - 3))",
            "2*y^3*(2*x + 1)",
        ]),
        curvature=parse("(y^2 + 2*x + 6)/(9*(y^2 - 2*x)^3)"),
        region=_region(((-2.0, 2.0), (-2.0, 2.0)), ["y^2 - 2*x"]),
        initial_state=(1.0, 1.0, 0.7, -0.3),
        expected_verdict=OBSTRUCTED,
    )


def _ex7_explicit() -> ExampleEntry:
    return ExampleEntry(
        id="ex7-explicit",
        kind=EXPLICIT,
        degree=4,
        description="quartic integral, singular along 25y^2 + 160x = 16",
        metric=_metric("64*(10*x - 1)^2 + 100*y^2", "240*y*(5*x - 1)", "9*(25*y^2 + 16)"),
        integral=_scaled_integral("(25*y^2 + 160*x - 16)^(-4)", [
            "81*(125*(5*x - 6)*y^4 - 320*(5*x - 1)*y^2 + 256)",
            "-27*y*(1875*y^4 + 400*(100*x^2 - 80*x + 3)*y^2 - 1024*(50*x^2 - 10*x + 3))",
            "72*(125*(80*x - 3)*y^4 + 80*(1500*x^3 - 800*x^2 + 95*x + 12)*y^2 - 512*(10*x - 1)^2*x)",
            "24*y*(625*y^4 - 200*(700*x^2 - 100*x - 7)*y^2 - 128*(10*x - 1)^2*(100*x^2 - 20*x + 3))",
            "4096*(10*x - 1)^4*x + 2560*(10*x - 1)^2*(20*x - 3)*y^2 - 2000*(40*x - 9)*y^4",
        ]),
        curvature=parse("25*(25*y^2 - 160*x + 208)/(9*(25*y^2 + 160*x - 16)^3)"),
        region=_region(((-1.0, 1.0), (-1.0, 1.0)), ["25*y^2 + 160*x - 16"]),
        initial_state=(0.5, 0.5, 0.3, -0.2),
        expected_verdict=OBSTRUCTED,
    )


EX9_INTEGRAL = ("(3*y*alpha^5 - 3*(2*x + 5)*alpha^4*beta - 24*y*alpha^3*beta^2 + 8*x*alpha^2*beta^3"
                " + 8*y*alpha*beta^4 + 8*beta^5)/(y^2 - 2*x - 5)^5")
EX9_FORMS = {"alpha": ("10*y", "-(2*x + 5)"), "beta": ("10", "-y")}


def _ex9_explicit() -> ExampleEntry:
    forms = {name: (parse(c1), parse(c2)) for name, (c1, c2) in EX9_FORMS.items()}
    return ExampleEntry(
        id="ex9-explicit",
        kind=EXPLICIT,
        degree=5,
        description="quintic integral in product form, singular along y^2 = 2x + 5",
        metric=_metric("(2*x + 5)^2 + y^2", "20*y*(x + 3)", "100*(y^2 + 1)"),
        integral=MomentumPoly.from_expr(parse(EX9_INTEGRAL), forms),
        curvature=parse("(y^2 + 2*x + 25)/(100*(y^2 - 2*x - 5)^3)"),
        region=_region(((-2.0, 2.0), (-2.0, 2.0)), ["y^2 - 2*x - 5"]),
        initial_state=(0.0, 0.0, 1.0, 0.5),
        expected_verdict=OBSTRUCTED,
    )


def _n1_family(f="2 + sin(s)") -> ExampleEntry:
    """g = f(t - x); F = p1 + p2 is linear, so the metric has a Killing field."""
    profile = parse(f) if isinstance(f, str) else as_expr(f)
    extra = free_variables(profile) - {"s"}
    if extra:
        raise ConfigError(f"n1-family: the profile may only depend on s, found {', '.join(sorted(extra))}")
    g = substitute(profile, {"s": sub(Var("t"), Var("x"))})
    return ExampleEntry(
        id="n1-family",
        kind=FAMILY,
        degree=1,
        description="n = 1: metric f(t-x)^2 dt^2 + dx^2 with the linear integral p1 + p2",
        coordinates=("t", "x"),
        metric=Metric2D.semi_geodesic(g),
        integral=MomentumPoly.linear(1, 1, ("t", "x")),
        region=_region(((-1.0, 1.0), (-1.0, 1.0)), coordinates=("t", "x")),
        parameters={"f": str(profile)},
        initial_state=(0.0, 0.0, 0.5, 0.5),
        expected_verdict=CONSISTENT,
    )


def _liouville_n2(f="x^2", g="y^2 + 1") -> ExampleEntry:
    """(f(x) + g(y))(dx^2 + dy^2) with F = (g p1^2 - f p2^2)/(f + g)."""
    fx, gy = parse(f), parse(g)
    if not free_variables(fx) <= {"x"} or not free_variables(gy) <= {"y"}:
        raise ConfigError("liouville-n2: f must depend on x only and g on y only")
    total = add(fx, gy)
    return ExampleEntry(
        id="liouville-n2",
        kind=FAMILY,
        degree=2,
        description="Liouville metric with its quadratic integral",
        metric=Metric2D.conformal(total),
        integral=MomentumPoly((div(gy, total), 0, div(mul(-1, fx), total))),
        region=Region(((-1.5, 1.5), (-1.5, 1.5)), (total,)),
        parameters={"f": str(fx), "g": str(gy)},
        initial_state=(0.5, 0.5, 0.4, -0.3),
    )


# implicit examples -----------------------------------------------------------

EX1_EQUATIONS = (
    "2*a0 + a2",
    "k*(a1 + 3*log(a2)) - t",
    "2*x + k*(2*a1^2 + 3*a2^2)",
)
EX1_GENERATORS = (
    "k*(2*a0 + a2)",
    "k*(a1 + 3*log(a2))",
    "k*(3*a2^2/2 - a0*(2*a0 + a2) + (3 - a1)*a1 + (9 - 6*a1)*log(a2))",
)

# shared by ex1-implicit and ex3-implicit with its default constants
N3_LOG_GRID = GridSpec(-0.1, 0.1, -1.8, -1.6, 11, 11)


def _ex1_implicit() -> ExampleEntry:
    return _implicit(
        "ex1-implicit",
        _parse_all(EX1_EQUATIONS),
        3,
        {"k": 1.0},
        Anchor(0.0, -1.5, (-0.5, 0.0, 1.0)),
        N3_LOG_GRID,
        generators=_parse_all(EX1_GENERATORS),
        description="n = 3, logarithmic generators",
    )


EX3_P = "k1*(5*a0^2 + a1^2 + a2^2 + 2*a0*a2) + k2*(2*a0 + a2) + 2*k1*a1 + k3"
EX3_R = "2*k1*a1*(a0 + a2) + 2*k1*(a0 + 5*a2) + k2*a1 + k4 + 3*k2*log(a2)"
EX3_CUBIC = ("k1*(-10*a0^3 + 5*a2^3 - 3*a0^2*a2 + 6*a0*a1^2 + 9*a1^2*a2) - 6*k2*a0^2 + 3*k2*a1^2"
             " + 9*k2*a2^2/2 - 18*k1*a0*a1 - 3*k2*a0*a2 + 12*k1*a1*a2 - 6*(3*k1 + k3)*a0 + 3*k3*a2"
             " - 9*k4 + 3*k5")


def _ex3_implicit() -> ExampleEntry:
    p, r, cubic = parse(EX3_P), parse(EX3_R), parse(EX3_CUBIC)
    t, x = variables("t x")
    a1 = Var("a1")
    # S follows from the third relation: cubic = -3x together with R = t
    s = add(mul(sub(3, mul(2, a1)), r), div(cubic, 3))
    equations = (p, sub(r, t), add(cubic, mul(3, x)))
    constants = {"k1": 0.0, "k2": 1.0, "k3": 0.0, "k4": 0.0, "k5": 0.0}
    quadratic = Preset(
        {"k1": 1.0, "k2": 0.0, "k3": 0.0, "k4": 0.0, "k5": 0.0},
        Anchor(8.0, -2.0 / 3.0, (0.0, -1.0, 1.0)),
        GridSpec(7.95, 8.05, -0.72, -0.62, 11, 11),
        "k1 = 1: polynomial generators",
    )
    return _implicit(
        "ex3-implicit",
        equations,
        3,
        constants,
        Anchor(0.0, -1.5, (-0.5, 0.0, 1.0)),
        N3_LOG_GRID,
        generators=(p, r, s),
        description="n = 3, five-constant family (default k2 = 1)",
        presets={"quadratic": quadratic},
    )


EX4_GENERATORS = (
    "k1*(k2*(a1 - 3/2)/a2^3 - k4/a2 + k3)",
    "k5 + (4*k1*k4*(2*a1 - 3)*a2^2 + k1*k2*(8*a0*a2 - 8*a2^2 - 3*(3 - 2*a1)^2))/(8*a2^4)",
    "k1*k4*log(a2) - 2*k5*a1 + k1*k3*(a2 - 2*a0) + k6 + k1*(k2*(2*a2^2*(16*a1 - 27)"
    " + 20*a0*a2*(3 - 2*a1) + 3*(2*a1 - 3)^3) + 4*k4*a2^2*(6*a0*a2 - 4*a1*(a1 - 3) - 9))/(8*a2^4)",
)


def _ex4_implicit() -> ExampleEntry:
    generators = _parse_all(EX4_GENERATORS)
    return _implicit(
        "ex4-implicit",
        hodograph_relations(3, generators),
        3,
        {"k1": 1.0, "k2": 1.0, "k3": 0.0, "k4": 0.0, "k5": 0.0, "k6": 0.0},
        Anchor(0.0, 0.75, (1.0, 1.5, 1.0)),
        GridSpec(-0.1, 0.1, 0.65, 0.85, 11, 11),
        generators=generators,
        description="n = 3, rational generators",
    )


EX5_GAMMA = ("60*n4 - 64*a0*(8*a0^2 + 3*a1^2 - 6*a0)*n6 - 40*a2^3*n6 - 6*a2^2*(15*n2 + 8*(2*a0 + 5)*n6)"
             " - 24*a2*((8*a0^2 + 4*a1^2 + 5*a1*a3 - 40)*n6 + 5*(a0 - 3)*n2 + 5*n3) + 60*a2*n5 - 60*a1^2*n2"
             " - 6*a1*a3*(15*n2 + 8*(2*a0 + 5)*n6) - 15*(16*a0^2*n2 - 3*a3^2*(5*n2 + 32*n6) + 8*a0*n5)")
EX5_GENERATORS = (
    "((64*a0^2 + 8*a1^2 + 4*a2^2 + 5*a3^2 + 16*a0*a2 + 8*a1*a3)*n6 - 32*a0*n6 + 5*(4*a0 + a2)*n2 + 5*n5)/5",
    "(8/5*(2*a0 + a2)*n6 + n2)*a1 + ((8/5*a0 + 2*a2 + 4)*n6 + 3*n2/2)*a3 + n1/a3",
    "4/5*(2*a0^2 + a1^2 + 5/4*a2^2 + 35/8*a3^2 + 2*a0*a2 + 5/2*a1*a3)*n6 + a0*n2 + 4*a2*n6 + 3/2*a2*n2"
    " + (6*n2 + n5 + 16*n6)*log(a3) + (2 - a2)/a3^2*n1 + n3",
    "(2*(a2 - 2)^2 - 3*a1*a3)/a3^2*n1 - (n1 + 2*(a2 - 2)*(6*n2 + n5 + 16*n6))*log(a3) + (" + EX5_GAMMA + ")/60",
)
EX5_CONSTANTS = ("n1", "n2", "n3", "n4", "n5", "n6")


def _ex5_implicit() -> ExampleEntry:
    generators = _parse_all(EX5_GENERATORS)
    return _implicit(
        "ex5-implicit",
        hodograph_relations(4, generators),
        4,
        {"n1": 0.0, "n2": 1.0, "n3": 0.0, "n4": 0.0, "n5": -6.0, "n6": 0.0},
        Anchor(0.0, -14.55, (1.8, -1.5, -1.2, 1.0)),
        GridSpec(-0.1, 0.1, -14.65, -14.45, 11, 11),
        generators=generators,
        description="n = 4, six-constant family (n5 = -6 n2, logarithms cancel)",
    )


EX6_EQUATIONS = (
    "a0 - (6*k*log(a3) - t)/(5*k)",
    "a1 + 3*a3/2",
    "a2 + 4*a0",
    "75*k^2*a3^2 + 96*k*(6*k*log(a3) - 2*t - k)*log(a3) + 16*t^2 + 16*k*t + 20*k*x",
)


def _ex6_implicit() -> ExampleEntry:
    k = Var("k")
    mapping = {name: 0 for name in EX5_CONSTANTS}
    mapping["n2"] = k
    generators = tuple(substitute(g, mapping) for g in _parse_all(EX5_GENERATORS))
    return _implicit(
        "ex6-implicit",
        _parse_all(EX6_EQUATIONS),
        4,
        {"k": 1.0},
        Anchor(0.0, -3.75, (0.0, -1.5, 0.0, 1.0)),
        GridSpec(-0.05, 0.05, -4.0, -3.8, 11, 11),
        generators=generators,
        description="n = 4, a3 from a transcendental equation",
    )


EX8_EQUATIONS = (
    "24*a0 + 4*a2 + 3*a4",
    "8*a1 + 6*a3 + 15",
    "8*a0 + 6*a2 + 15*a4",
    "6*a1 + 15*a3 + 105*log(a4) - 8*t/k",
    "96*a0^2 + 16*a1^2 + 12*a2^2 - 30*a3^2 - 105*a4^2 + 32*a0*a2 + 12*a0*a4 + 30*a2*a4 + 120*a1 - 60*a3 - 16*x/k",
)


def _ex8_implicit() -> ExampleEntry:
    return _implicit(
        "ex8-implicit",
        _parse_all(EX8_EQUATIONS),
        5,
        {"k": 1.0},
        Anchor(0.0, -40215.0 / 1568.0, (3.0 / 8.0, -75.0 / 28.0, -3.0, 15.0 / 14.0, 1.0)),
        GridSpec(-0.1, 0.1, -26.1, -25.1, 11, 11),
        description="n = 5, quadratic system with one logarithm",
    )


# registry --------------------------------------------------------------------

_BUILDERS: Dict[str, Callable[..., ExampleEntry]] = {
    "ex0-family": _ex0_family,
    "ex1-implicit": _ex1_implicit,
    "ex2-explicit": _ex2_explicit,
    "ex3-implicit": _ex3_implicit,
    "ex4-implicit": _ex4_implicit,
    "ex5-implicit": _ex5_implicit,
    "ex6-implicit": _ex6_implicit,
    "ex7-explicit": _ex7_explicit,
    "ex8-implicit": _ex8_implicit,
    "ex9-explicit": _ex9_explicit,
    "n1-family": _n1_family,
    "liouville-n2": _liouville_n2,
}
FAMILIES = ("ex0-family", "n1-family", "liouville-n2")


@lru_cache(maxsize=None)
def _build(example_id: str, params: Tuple[Tuple[str, object], ...]) -> ExampleEntry:
    logger.debug("building example %s %s", example_id, dict(params))
    return _BUILDERS[example_id](**dict(params))


def get_example(example_id: str, params: Optional[Mapping[str, object]] = None) -> ExampleEntry:
    """Hydrated entry for `example_id`; `params` only applies to families."""
    if example_id not in _BUILDERS:
        raise UnknownExampleError(example_id, _BUILDERS)
    params = dict(params or {})
    if params and example_id not in FAMILIES:
        raise ConfigError(f"{example_id} takes no parameters, got {', '.join(sorted(params))}")
    try:
        return _build(example_id, tuple(sorted(params.items())))
    except TypeError as exc:
        raise ConfigError(f"{example_id}: bad parameters {params}: {exc}") from None


def list_examples() -> List[Dict[str, object]]:
    """Metadata of every entry, in catalog order."""
    return [get_example(example_id).metadata() for example_id in _BUILDERS]


def example_ids() -> List[str]:
    return list(_BUILDERS)


__all__ = [
    "EXPLICIT",
    "IMPLICIT",
    "FAMILY",
    "Anchor",
    "Preset",
    "ExampleEntry",
    "get_example",
    "list_examples",
    "example_ids",
]
