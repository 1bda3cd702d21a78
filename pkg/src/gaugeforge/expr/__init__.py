"""Analytic scalar fields of the coordinates ``x0..x3``."""

from functools import lru_cache

import numpy as np

from .nodes import (
    FUNCTIONS,
    ONE,
    ZERO,
    Expr,
    ExprDomainError,
    as_expr,
    call,
    const,
    diff,
    param,
    power,
    to_string,
    var,
)
from .parser import ExprSyntaxError, UnknownIdentifierError, parse
from .program import Program, UnboundParameterError, compile_exprs

__all__ = [
    "FUNCTIONS", "ONE", "ZERO", "Expr", "ExprDomainError", "ExprSyntaxError",
    "Program", "UnboundParameterError", "UnknownIdentifierError", "as_expr",
    "call", "compile_exprs", "const", "diff", "evaluate", "gradient", "param",
    "parse", "power", "sum_exprs", "program_for", "to_string", "var", "sin", "cos", "exp", "log",
    "sqrt", "tanh",
]


@lru_cache(maxsize=4096)
def _program_cached(roots: tuple, shape: tuple) -> Program:
    return Program(np.array(roots, dtype=object).reshape(shape))


def program_for(exprs) -> Program:
    """Compiled program for an expression array, memoised on its structure."""
    arr = np.asarray(exprs, dtype=object)
    roots = tuple(as_expr(e) for e in arr.ravel())
    return _program_cached(roots, arr.shape)


def sum_exprs(terms) -> Expr:
    """Sum of expressions by pairwise reduction; zeros are dropped."""
    items = [as_expr(t) for t in terms if t is not ZERO]
    if not items:
        return ZERO
    while len(items) > 1:
        items = [items[i] + items[i + 1] if i + 1 < len(items) else items[i]
                 for i in range(0, len(items), 2)]
    return items[0]


def evaluate(e, x, params=None):
    """Evaluate one expression (or an array of them) at a point or batch."""
    if isinstance(e, str):
        e = parse(e)
    if isinstance(e, (Expr, int, float)):
        out = program_for([e])(x, params)
        return float(out[0]) if out.ndim == 1 else out[..., 0]
    return program_for(e)(x, params)


def gradient(e: Expr) -> list[Expr]:
    return [diff(e, i) for i in range(4)]


def sin(e):
    return call("sin", as_expr(e))


def cos(e):
    return call("cos", as_expr(e))


def exp(e):
    return call("exp", as_expr(e))


def log(e):
    return call("log", as_expr(e))


def sqrt(e):
    return call("sqrt", as_expr(e))


def tanh(e):
    return call("tanh", as_expr(e))
