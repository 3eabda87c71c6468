"""Text form of expressions: a printer and a parser.

The grammar is ordinary infix arithmetic: numbers, identifiers, + - * /,
powers written `**` or `^`, unary minus, parentheses and the functions
log, exp, sin, cos, sqrt. Exponents must be rational constants.

`parse(to_text(e))` rebuilds a structurally identical tree.
"""
import ast
import logging
from fractions import Fraction
from typing import Iterable, Optional, Tuple

from .errors import ExpressionSyntaxError
from .expr import (
    FUNCTIONS,
    Add,
    Const,
    Div,
    Expr,
    Function,
    Mul,
    Pow,
    Var,
    add,
    as_expr,
    div,
    mul,
    neg,
    postvisitor,
    power,
)

logger = logging.getLogger(__name__)

# precedence levels used by the printer
_SUM, _PRODUCT, _NEGATIVE, _POWER, _ATOM = 1, 2, 3, 4, 5


def _const_text(value) -> Tuple[str, int]:
    if isinstance(value, Fraction):
        if value.denominator == 1:
            return str(value.numerator), (_NEGATIVE if value < 0 else _ATOM)
        return f"{value.numerator}/{value.denominator}", _PRODUCT
    text = repr(float(value))
    return text, (_NEGATIVE if text.startswith("-") else _ATOM)


def _wrap(text: str, prec: int, threshold: int) -> str:
    return f"({text})" if prec <= threshold else text


def _exponent_text(q: Fraction) -> str:
    if q.denominator == 1:
        return str(q.numerator)
    return f"({q.numerator}/{q.denominator})"


def _printer(limit: Optional[int]):
    def clip(text):
        if limit is not None and len(text) > limit:
            return text[:limit] + "..."
        return text

    # each result is (text, precedence, text of the negated node or None)
    def visit(node, *children):
        negated = None
        if isinstance(node, Const):
            text, prec = _const_text(node.value)
            if node.value < 0:
                negated = _const_text(-node.value)[0]
        elif isinstance(node, Var):
            text, prec = node.name, _ATOM
        elif isinstance(node, Add):
            pieces = [children[0][0]]
            for term_text, _, term_negated in children[1:]:
                if term_negated is not None:
                    pieces.append(" - " + term_negated)
                else:
                    pieces.append(" + " + term_text)
            text, prec = "".join(pieces), _SUM
        elif isinstance(node, Mul):
            first = node.operands[0]
            rest = children[1:] if isinstance(first, Const) else children
            rest_text = "*".join(_wrap(t, p, _PRODUCT) for t, p, _ in rest)
            if isinstance(first, Const):
                c = first.value
                if c == -1:
                    text = "-" + rest_text
                    if len(rest) == 1 and rest[0][1] >= _PRODUCT:
                        negated = rest[0][0]
                    else:
                        negated = rest_text
                else:
                    text = _wrap(*_const_text(c), _PRODUCT) + "*" + rest_text
                    if c < 0:
                        negated = _wrap(*_const_text(-c), _PRODUCT) + "*" + rest_text
            else:
                text = rest_text
            prec = _PRODUCT
        elif isinstance(node, Div):
            (lt, lp, _), (rt, rp, _) = children
            text = _wrap(lt, lp, _PRODUCT - 1) + "/" + _wrap(rt, rp, _PRODUCT)
            prec = _PRODUCT
        elif isinstance(node, Pow):
            bt, bp, _ = children[0]
            text = _wrap(bt, bp, _POWER) + "**" + _exponent_text(node.exponent)
            prec = _POWER
        elif isinstance(node, Function):
            text, prec = f"{node.name}({children[0][0]})", _ATOM
        else:
            raise TypeError(f"cannot print {type(node).__name__}")
        return clip(text), prec, (clip(negated) if negated is not None else None)

    return visit


def to_text(e: Expr) -> str:
    return postvisitor(as_expr(e), _printer(None))[0]


def summary(e: Expr, limit: int = 120) -> str:
    """Shortened text for log and error messages."""
    return postvisitor(as_expr(e), _printer(limit))[0]


# parsing --------------------------------------------------------------------

class _Converter:
    def __init__(self, text: str, allowed: Optional[frozenset]):
        self.text = text
        self.allowed = allowed

    def fail(self, node, message):
        col = getattr(node, "col_offset", None)
        where = f" at column {col + 1}" if col is not None else ""
        raise ExpressionSyntaxError(f"{message}{where}: {self.text!r}")

    def convert(self, node) -> Expr:
        if isinstance(node, ast.Expression):
            return self.convert(node.body)
        if isinstance(node, ast.BinOp):
            if isinstance(node.op, (ast.Add, ast.Sub)):
                return self._chain(node, (ast.Add, ast.Sub), self._sum)
            if isinstance(node.op, ast.Mult):
                return self._chain(node, (ast.Mult,), lambda items: mul(*(e for _, e in items)))
            if isinstance(node.op, ast.Div):
                return div(self.convert(node.left), self.convert(node.right))
            if isinstance(node.op, ast.Pow):
                exponent = self.convert(node.right)
                if not isinstance(exponent, Const):
                    self.fail(node.right, "exponent must be a constant")
                return power(self.convert(node.left), exponent)
            self.fail(node, f"unsupported operator {type(node.op).__name__}")
        if isinstance(node, ast.UnaryOp):
            operand = self.convert(node.operand)
            if isinstance(node.op, ast.USub):
                return neg(operand)
            if isinstance(node.op, ast.UAdd):
                return operand
            self.fail(node, f"unsupported operator {type(node.op).__name__}")
        if isinstance(node, ast.Constant):
            value = node.value
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                self.fail(node, f"unsupported literal {value!r}")
            return Const(value)
        if isinstance(node, ast.Name):
            if node.id in FUNCTIONS:
                self.fail(node, f"function {node.id!r} used without an argument")
            if self.allowed is not None and node.id not in self.allowed:
                self.fail(node, f"unknown identifier {node.id!r}")
            return Var(node.id)
        if isinstance(node, ast.Call):
            if not isinstance(node.func, ast.Name) or node.func.id not in FUNCTIONS:
                self.fail(node, "unknown function")
            if node.keywords or len(node.args) != 1:
                self.fail(node, f"{node.func.id} takes exactly one argument")
            return FUNCTIONS[node.func.id](self.convert(node.args[0]))
        self.fail(node, f"unsupported syntax {type(node).__name__}")

    def _chain(self, node, ops, combine):
        # left-leaning chains are unrolled to keep long sums off the call stack
        items = []
        while isinstance(node, ast.BinOp) and isinstance(node.op, ops):
            items.append((node.op, self.convert(node.right)))
            node = node.left
        items.append((None, self.convert(node)))
        items.reverse()
        return combine(items)

    @staticmethod
    def _sum(items):
        return add(*(neg(e) if isinstance(op, ast.Sub) else e for op, e in items))


def parse(text: str, variables: Optional[Iterable[str]] = None) -> Expr:
    """Parse expression text; `variables` optionally restricts identifiers."""
    if not isinstance(text, str):
        # numbers from JSON configs are accepted as constants
        if isinstance(text, (int, float)) and not isinstance(text, bool):
            return Const(text)
        raise ExpressionSyntaxError(f"expected expression text, got {type(text).__name__}")
    source = text.strip().replace("^", "**")
    if not source:
        raise ExpressionSyntaxError("empty expression")
    try:
        tree = ast.parse(source, mode="eval")
    except SyntaxError as exc:
        raise ExpressionSyntaxError(f"invalid expression {text!r}: {exc.msg} at column {exc.offset}") from None
    allowed = frozenset(variables) if variables is not None else None
    return _Converter(text, allowed).convert(tree)


__all__ = ["to_text", "summary", "parse"]
