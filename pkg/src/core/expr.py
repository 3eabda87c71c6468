"""Expression trees with exact differentiation and fast evaluation.

Nodes are immutable and compared by identity, so a differentiated expression
is a DAG that shares the subtrees of its source. All traversals are iterative
(`postvisitor`) because repeated differentiation produces deep graphs.

Simplification is deliberately small: constant folding, neutral elements
(0 in sums, 1 in products, x**1, x**0) and flattening of nested sums and
products. Nothing else is rewritten.
"""
import logging
import math
from fractions import Fraction
from functools import cached_property, singledispatch
from numbers import Number, Rational
from typing import Callable, Dict, Iterable, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from .errors import DomainError, UnassignedVariableError

logger = logging.getLogger(__name__)

Scalar = Union[int, float, Fraction]


class Expr:
    """Base node. Subclasses set `operands` and their own payload."""

    operands: Tuple["Expr", ...] = ()
    kind = "expr"

    def __setattr__(self, name, value):
        raise AttributeError(f"{type(self).__name__} is immutable")

    def _init(self, **fields):
        for key, value in fields.items():
            object.__setattr__(self, key, value)

    # arithmetic -----------------------------------------------------------
    def __add__(self, other):
        return add(self, as_expr(other))

    def __radd__(self, other):
        return add(as_expr(other), self)

    def __sub__(self, other):
        return sub(self, as_expr(other))

    def __rsub__(self, other):
        return sub(as_expr(other), self)

    def __mul__(self, other):
        return mul(self, as_expr(other))

    def __rmul__(self, other):
        return mul(as_expr(other), self)

    def __truediv__(self, other):
        return div(self, as_expr(other))

    def __rtruediv__(self, other):
        return div(as_expr(other), self)

    def __pow__(self, exponent):
        return power(self, exponent)

    def __neg__(self):
        return neg(self)

    def __pos__(self):
        return self

    # queries --------------------------------------------------------------
    @property
    def free_variables(self) -> frozenset:
        return free_variables(self)

    @cached_property
    def _program(self) -> "Program":
        return Program([self])

    def evaluate(self, assignment: Mapping[str, float]) -> float:
        return self._program(assignment)[0]

    def diff(self, var: str) -> "Expr":
        return differentiate(self, var)

    def rebuild(self, operands: Sequence["Expr"]) -> "Expr":
        raise NotImplementedError

    def __str__(self):
        from .expr_text import to_text

        return to_text(self)

    def __repr__(self):
        from .expr_text import summary

        return f"{type(self).__name__}({summary(self)})"


class Const(Expr):
    kind = "const"

    def __init__(self, value: Scalar):
        if isinstance(value, bool):
            raise TypeError("booleans are not expression constants")
        if isinstance(value, Rational):
            value = Fraction(value)
        elif isinstance(value, Number):
            value = float(value)
            if not math.isfinite(value):
                raise ValueError(f"non-finite constant {value!r}")
        else:
            raise TypeError(f"cannot make a constant from {type(value).__name__}")
        self._init(value=value, operands=())

    def rebuild(self, operands):
        return self


class Var(Expr):
    kind = "var"

    def __init__(self, name: str):
        if not isinstance(name, str) or not name.isidentifier():
            raise ValueError(f"invalid variable name {name!r}")
        self._init(name=name, operands=())

    def rebuild(self, operands):
        return self


class Add(Expr):
    kind = "add"

    def __init__(self, *terms: Expr):
        self._init(operands=tuple(terms))

    def rebuild(self, operands):
        return add(*operands)


class Mul(Expr):
    kind = "mul"

    def __init__(self, *factors: Expr):
        self._init(operands=tuple(factors))

    def rebuild(self, operands):
        return mul(*operands)


class Div(Expr):
    kind = "div"

    def __init__(self, numerator: Expr, denominator: Expr):
        self._init(operands=(numerator, denominator))

    def rebuild(self, operands):
        return div(*operands)


class Pow(Expr):
    """Power with a rational exponent."""

    kind = "pow"

    def __init__(self, base: Expr, exponent: Fraction):
        self._init(operands=(base,), exponent=Fraction(exponent))

    def rebuild(self, operands):
        return power(operands[0], self.exponent)


class Function(Expr):
    kind = "function"
    name = ""

    def __init__(self, argument: Expr):
        self._init(operands=(argument,))

    def rebuild(self, operands):
        return FUNCTIONS[self.name](operands[0])


class Log(Function):
    name = "log"


class Exp(Function):
    name = "exp"


class Sin(Function):
    name = "sin"


class Cos(Function):
    name = "cos"


ZERO = Const(0)
ONE = Const(1)


# constructors ---------------------------------------------------------------

def as_expr(value) -> Expr:
    if isinstance(value, Expr):
        return value
    return Const(value)


def const(value: Scalar) -> Const:
    return Const(value)


def var(name: str) -> Var:
    return Var(name)


def variables(names: Union[str, Iterable[str]]) -> Tuple[Var, ...]:
    if isinstance(names, str):
        names = names.replace(",", " ").split()
    return tuple(Var(n) for n in names)


def is_const(e: Expr, value: Optional[Scalar] = None) -> bool:
    if not isinstance(e, Const):
        return False
    return value is None or e.value == value


def add(*terms) -> Expr:
    flat: List[Expr] = []
    total: Scalar = Fraction(0)
    for term in map(as_expr, terms):
        parts = term.operands if isinstance(term, Add) else (term,)
        for part in parts:
            if isinstance(part, Const):
                total = total + part.value
            else:
                flat.append(part)
    if total != 0 or isinstance(total, float) and not flat:
        flat.append(Const(total))
    if not flat:
        return ZERO
    if len(flat) == 1:
        return flat[0]
    return Add(*flat)


def mul(*factors) -> Expr:
    flat: List[Expr] = []
    coeff: Scalar = Fraction(1)
    for factor in map(as_expr, factors):
        parts = factor.operands if isinstance(factor, Mul) else (factor,)
        for part in parts:
            if isinstance(part, Const):
                coeff = coeff * part.value
            else:
                flat.append(part)
    if coeff == 0:
        return ZERO
    if coeff != 1 or isinstance(coeff, float) and not flat:
        flat.insert(0, Const(coeff))
    if not flat:
        return ONE
    if len(flat) == 1:
        return flat[0]
    return Mul(*flat)


def neg(e) -> Expr:
    return mul(Const(-1), e)


def sub(a, b) -> Expr:
    return add(a, neg(b))


def div(numerator, denominator) -> Expr:
    numerator, denominator = as_expr(numerator), as_expr(denominator)
    if is_const(denominator, 0):
        # kept as a node: the error surfaces at evaluation
        return Div(numerator, denominator)
    if is_const(numerator, 0):
        return ZERO
    if is_const(denominator, 1):
        return numerator
    if isinstance(numerator, Const) and isinstance(denominator, Const):
        return Const(numerator.value / denominator.value)
    return Div(numerator, denominator)


def _as_exponent(exponent) -> Fraction:
    if isinstance(exponent, Const):
        exponent = exponent.value
    if isinstance(exponent, Rational):
        return Fraction(exponent)
    if isinstance(exponent, float) and math.isfinite(exponent):
        return Fraction(repr(exponent))
    raise TypeError("power exponents must be rational constants")


def power(base, exponent) -> Expr:
    base, q = as_expr(base), _as_exponent(exponent)
    if q == 0:
        return ONE
    if q == 1:
        return base
    if isinstance(base, Const):
        b = base.value
        if isinstance(b, Fraction) and q.denominator == 1 and (b != 0 or q > 0):
            return Const(b ** int(q))
        if isinstance(b, float) and (b > 0 or (q.denominator == 1 and (b != 0 or q > 0))):
            try:
                return Const(b ** float(q))
            except (OverflowError, ValueError):
                pass
    return Pow(base, q)


def sqrt(e) -> Expr:
    return power(e, Fraction(1, 2))


def log(e) -> Expr:
    e = as_expr(e)
    if is_const(e, 1):
        return ZERO
    return Log(e)


def exp(e) -> Expr:
    e = as_expr(e)
    if is_const(e, 0):
        return ONE
    return Exp(e)


def sin(e) -> Expr:
    e = as_expr(e)
    if is_const(e, 0):
        return ZERO
    return Sin(e)


def cos(e) -> Expr:
    e = as_expr(e)
    if is_const(e, 0):
        return ONE
    return Cos(e)


FUNCTIONS: Dict[str, Callable[[Expr], Expr]] = {
    "log": log,
    "exp": exp,
    "sin": sin,
    "cos": cos,
    "sqrt": sqrt,
}


# traversal ------------------------------------------------------------------

def postvisitor(expr: Expr, visitor, known: Optional[Callable[[Expr], object]] = None):
    """Post-order traversal visiting every distinct node once.

    `visitor(node, *operand_results)`; `known(node)` may short-circuit a node
    by returning a non-None result.
    """
    visited: Dict[Expr, object] = {}
    stack = [expr]
    while stack:
        e = stack[-1]
        if e in visited:
            stack.pop()
            continue
        if known is not None:
            hit = known(e)
            if hit is not None:
                visited[e] = hit
                stack.pop()
                continue
        pending = [o for o in e.operands if o not in visited]
        if pending:
            stack.extend(pending)
        else:
            stack.pop()
            visited[e] = visitor(e, *(visited[o] for o in e.operands))
    return visited[expr]


def _memo(e: Expr, key: str, value):
    e.__dict__[key] = value
    return value


def free_variables(e: Expr) -> frozenset:
    def visit(node, *child_sets):
        if isinstance(node, Var):
            result = frozenset((node.name,))
        else:
            result = frozenset().union(*child_sets)
        return _memo(node, "_free", result)

    return postvisitor(e, visit, known=lambda node: node.__dict__.get("_free"))


# differentiation ------------------------------------------------------------

@singledispatch
def _derivative(node: Expr, d: Sequence[Expr], var: str) -> Expr:
    raise NotImplementedError(f"cannot differentiate {type(node).__name__}")


@_derivative.register(Const)
def _(node, d, var):
    return ZERO


@_derivative.register(Var)
def _(node, d, var):
    return ONE if node.name == var else ZERO


@_derivative.register(Add)
def _(node, d, var):
    return add(*d)


@_derivative.register(Mul)
def _(node, d, var):
    factors = node.operands
    terms = []
    for i, di in enumerate(d):
        if is_const(di, 0):
            continue
        terms.append(mul(*factors[:i], di, *factors[i + 1:]))
    return add(*terms)


@_derivative.register(Div)
def _(node, d, var):
    num, den = node.operands
    dnum, dden = d
    if is_const(dden, 0):
        return div(dnum, den)
    return div(sub(mul(dnum, den), mul(num, dden)), power(den, 2))


@_derivative.register(Pow)
def _(node, d, var):
    q = node.exponent
    return mul(Const(q), power(node.operands[0], q - 1), d[0])


@_derivative.register(Log)
def _(node, d, var):
    return div(d[0], node.operands[0])


@_derivative.register(Exp)
def _(node, d, var):
    return mul(node, d[0])


@_derivative.register(Sin)
def _(node, d, var):
    return mul(cos(node.operands[0]), d[0])


@_derivative.register(Cos)
def _(node, d, var):
    return mul(Const(-1), sin(node.operands[0]), d[0])


def differentiate(e: Expr, var: str) -> Expr:
    """Exact partial derivative of `e` with respect to the variable `var`.

    Derivatives are cached per node, so repeated and mixed partials reuse
    earlier work.
    """
    if not isinstance(var, str) or not var.isidentifier():
        raise ValueError(f"invalid variable name {var!r}")
    free_variables(e)
    key = "_d_" + var

    def known(node):
        cached = node.__dict__.get(key)
        if cached is not None:
            return cached
        if var not in node.__dict__["_free"]:
            return ZERO
        return None

    def visit(node, *child_derivatives):
        result = _derivative(node, child_derivatives, var)
        return _memo(node, key, result)

    return postvisitor(e, visit, known=known)


def gradient(e: Expr, names: Sequence[str]) -> Tuple[Expr, ...]:
    return tuple(differentiate(e, n) for n in names)


def substitute(e: Expr, mapping: Mapping[str, object]) -> Expr:
    """Replace variables by expressions (or numbers); sharing is preserved."""
    replacement = {name: as_expr(value) for name, value in mapping.items()}
    names = set(replacement)

    def known(node):
        return node if not (names & free_variables(node)) else None

    def visit(node, *children):
        if isinstance(node, Var):
            return replacement.get(node.name, node)
        if all(a is b for a, b in zip(children, node.operands)):
            return node
        return node.rebuild(children)

    return postvisitor(e, visit, known=known)


# evaluation -----------------------------------------------------------------

_CONST, _VAR, _ADD, _MUL, _DIV, _POW, _LOG, _EXP, _SIN, _COS = range(10)
_FUNCTION_CODES = {"log": _LOG, "exp": _EXP, "sin": _SIN, "cos": _COS}


class Program:
    """Evaluation schedule for one or more expressions sharing subtrees.

    Calling the program with a mapping of floats returns a list of floats;
    `evaluate_arrays` does the same over numpy arrays (broadcasting).
    """

    def __init__(self, exprs: Sequence[Expr]):
        self.exprs = tuple(as_expr(e) for e in exprs)
        index: Dict[Expr, int] = {}
        steps: List[tuple] = []

        def visit(node, *child_indices):
            if isinstance(node, Const):
                step = (_CONST, (), float(node.value))
            elif isinstance(node, Var):
                step = (_VAR, (), node.name)
            elif isinstance(node, Add):
                step = (_ADD, child_indices, None)
            elif isinstance(node, Mul):
                step = (_MUL, child_indices, None)
            elif isinstance(node, Div):
                step = (_DIV, child_indices, None)
            elif isinstance(node, Pow):
                q = node.exponent
                step = (_POW, child_indices, (float(q), q.denominator == 1))
            elif isinstance(node, Function):
                step = (_FUNCTION_CODES[node.name], child_indices, None)
            else:
                raise NotImplementedError(type(node).__name__)
            index[node] = len(steps)
            steps.append(step + (node,))
            return index[node]

        self.outputs = [postvisitor(e, visit, known=index.get) for e in self.exprs]
        self.steps = steps
        self.variables = frozenset(s[2] for s in steps if s[0] == _VAR)

    def __len__(self):
        return len(self.steps)

    def __call__(self, assignment: Mapping[str, float]) -> List[float]:
        vals: List[float] = [0.0] * len(self.steps)
        for i, (code, args, payload, node) in enumerate(self.steps):
            if code == _MUL:
                v = 1.0
                for j in args:
                    v *= vals[j]
            elif code == _ADD:
                v = 0.0
                for j in args:
                    v += vals[j]
            elif code == _VAR:
                try:
                    v = float(assignment[payload])
                except KeyError:
                    raise UnassignedVariableError(payload) from None
            elif code == _CONST:
                v = payload
            elif code == _POW:
                b = vals[args[0]]
                q, integral = payload
                if b < 0 and not integral:
                    raise DomainError("fractional power of a negative value", node)
                if b == 0 and q < 0:
                    raise DomainError("division by zero", node)
                try:
                    v = b ** (int(q) if integral else q)
                except OverflowError:
                    raise DomainError("overflow", node) from None
                v = float(v)
            elif code == _DIV:
                den = vals[args[1]]
                if den == 0:
                    raise DomainError("division by zero", node)
                v = vals[args[0]] / den
            elif code == _LOG:
                a = vals[args[0]]
                if a <= 0:
                    raise DomainError("log of a non-positive value", node)
                v = math.log(a)
            elif code == _EXP:
                try:
                    v = math.exp(vals[args[0]])
                except OverflowError:
                    raise DomainError("overflow", node) from None
            elif code == _SIN:
                v = math.sin(vals[args[0]])
            else:
                v = math.cos(vals[args[0]])
            vals[i] = v
        return [vals[i] for i in self.outputs]

    def evaluate_arrays(self, assignment: Mapping[str, object], on_error: str = "raise") -> List[np.ndarray]:
        """Vectorized evaluation.

        on_error="raise" raises DomainError for the first failing node;
        on_error="nan" marks failing entries as NaN and keeps going.
        """
        if on_error not in ("raise", "nan"):
            raise ValueError("on_error must be 'raise' or 'nan'")
        arrays = {}
        for name in self.variables:
            if name not in assignment:
                raise UnassignedVariableError(name)
            arrays[name] = np.asarray(assignment[name], dtype=float)
        shape = np.broadcast_shapes(*(a.shape for a in arrays.values())) if arrays else ()

        vals: List[np.ndarray] = [None] * len(self.steps)
        with np.errstate(all="ignore"):
            for i, (code, args, payload, node) in enumerate(self.steps):
                bad = None
                if code == _CONST:
                    v = np.full(shape, payload)
                elif code == _VAR:
                    v = np.broadcast_to(arrays[payload], shape)
                elif code == _ADD:
                    v = vals[args[0]]
                    for j in args[1:]:
                        v = v + vals[j]
                elif code == _MUL:
                    v = vals[args[0]]
                    for j in args[1:]:
                        v = v * vals[j]
                elif code == _DIV:
                    den = vals[args[1]]
                    bad = den == 0
                    v = vals[args[0]] / den
                elif code == _POW:
                    b = vals[args[0]]
                    q, integral = payload
                    bad = (b == 0) & (q < 0)
                    if not integral:
                        bad = bad | (b < 0)
                    v = np.power(b, q)
                elif code == _LOG:
                    a = vals[args[0]]
                    bad = a <= 0
                    v = np.log(a)
                elif code == _EXP:
                    v = np.exp(vals[args[0]])
                    bad = np.isinf(v) & np.isfinite(vals[args[0]])
                elif code == _SIN:
                    v = np.sin(vals[args[0]])
                else:
                    v = np.cos(vals[args[0]])
                if bad is not None and np.any(bad):
                    if on_error == "raise":
                        raise DomainError("domain error in vectorized evaluation", node)
                    v = np.where(bad, np.nan, v)
                vals[i] = v
        return [np.array(vals[i], dtype=float) for i in self.outputs]


def evaluate(e: Expr, assignment: Mapping[str, float]) -> float:
    """Evaluate `e` at a point; raises UnassignedVariableError / DomainError."""
    return as_expr(e).evaluate(assignment)


def evaluate_arrays(e: Expr, assignment: Mapping[str, object], on_error: str = "raise") -> np.ndarray:
    return as_expr(e)._program.evaluate_arrays(assignment, on_error=on_error)[0]


__all__ = [
    "Expr",
    "Const",
    "Var",
    "Add",
    "Mul",
    "Div",
    "Pow",
    "Function",
    "Log",
    "Exp",
    "Sin",
    "Cos",
    "ZERO",
    "ONE",
    "Program",
    "as_expr",
    "const",
    "var",
    "variables",
    "is_const",
    "add",
    "mul",
    "neg",
    "sub",
    "div",
    "power",
    "sqrt",
    "log",
    "exp",
    "sin",
    "cos",
    "postvisitor",
    "free_variables",
    "differentiate",
    "gradient",
    "substitute",
    "evaluate",
    "evaluate_arrays",
]
