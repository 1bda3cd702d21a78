"""Immutable expression DAG with exact differentiation.

Nodes are hash-consed: building the same structure twice returns the same
object, so derivatives of large derived quantities share subtrees instead of
copying them. Constant folding happens in the constructors and is the only
simplification performed.
"""

from __future__ import annotations

import math
import weakref

FUNCTIONS = ("sin", "cos", "exp", "log", "sqrt", "tanh")

_BINARY = ("add", "sub", "mul", "div", "pow")

_intern: "weakref.WeakValueDictionary[tuple, Expr]" = weakref.WeakValueDictionary()


class ExprDomainError(ArithmeticError):
    """Evaluation left the domain of an operation (log of 0, sqrt of -1, ...)."""


class Expr:
    """A node of a scalar expression in the coordinates ``x0..x3``.

    Use the module-level constructors (:func:`const`, :func:`var`, ...) or
    Python operators; never instantiate directly.
    """

    __slots__ = ("op", "args", "value", "free", "_hash", "_dcache", "__weakref__")

    op: str
    args: tuple
    value: object
    free: int

    def __new__(cls, op, value, args):
        key = (op, value, args)
        node = _intern.get(key)
        if node is not None:
            return node
        node = object.__new__(cls)
        node.op = op
        node.value = value
        node.args = args
        free = 0
        for a in args:
            free |= a.free
        if op == "var":
            free |= 1 << value
        node.free = free
        node._hash = hash(key)
        node._dcache = {}
        return _intern.setdefault(key, node)

    def __hash__(self):
        return self._hash

    def __eq__(self, other):
        if self is other:
            return True
        if not isinstance(other, Expr) or self._hash != other._hash:
            return False
        return self.op == other.op and self.value == other.value and self.args == other.args

    def __reduce__(self):
        return (parse_printed, (str(self),))

    # arithmetic sugar -------------------------------------------------
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

    def __pow__(self, other):
        return power(self, as_expr(other))

    def __neg__(self):
        return neg(self)

    @property
    def is_const(self) -> bool:
        return self.op == "const"

    def depends_on(self, idx: int) -> bool:
        return bool(self.free >> idx & 1)

    def diff(self, idx: int) -> "Expr":
        return diff(self, idx)

    def __str__(self):
        return to_string(self)

    def __repr__(self):
        return f"Expr({to_string(self)!r})"


def as_expr(v) -> Expr:
    if isinstance(v, Expr):
        return v
    return const(v)


def const(v) -> Expr:
    v = float(v)
    if not math.isfinite(v):
        raise ExprDomainError(f"non-finite constant {v!r}")
    if v == 0.0:
        v = 0.0  # drop the sign of zero so 0 and -0 intern together
    return Expr("const", v, ())


def var(idx: int) -> Expr:
    if idx not in (0, 1, 2, 3):
        raise ValueError(f"coordinate index must be 0..3, got {idx}")
    return Expr("var", idx, ())


def param(name: str) -> Expr:
    return Expr("param", name, ())


ZERO = const(0.0)
ONE = const(1.0)


def _cval(e: Expr):
    return e.value if e.op == "const" else None


def add(a: Expr, b: Expr) -> Expr:
    ca, cb = _cval(a), _cval(b)
    if ca is not None and cb is not None:
        return const(ca + cb)
    if ca == 0.0:
        return b
    if cb == 0.0:
        return a
    if b.op == "neg":
        return sub(a, b.args[0])
    return Expr("add", None, (a, b))


def sub(a: Expr, b: Expr) -> Expr:
    ca, cb = _cval(a), _cval(b)
    if ca is not None and cb is not None:
        return const(ca - cb)
    if cb == 0.0:
        return a
    if ca == 0.0:
        return neg(b)
    if a is b:
        return ZERO
    if b.op == "neg":
        return add(a, b.args[0])
    return Expr("sub", None, (a, b))


def mul(a: Expr, b: Expr) -> Expr:
    ca, cb = _cval(a), _cval(b)
    if ca is not None and cb is not None:
        return const(ca * cb)
    if ca == 0.0 or cb == 0.0:
        return ZERO
    if ca == 1.0:
        return b
    if cb == 1.0:
        return a
    if ca == -1.0:
        return neg(b)
    if cb == -1.0:
        return neg(a)
    return Expr("mul", None, (a, b))


def div(a: Expr, b: Expr) -> Expr:
    ca, cb = _cval(a), _cval(b)
    if cb == 0.0:
        raise ExprDomainError("division by constant zero")
    if ca is not None and cb is not None:
        return const(ca / cb)
    if ca == 0.0:
        return ZERO
    if cb == 1.0:
        return a
    if cb == -1.0:
        return neg(a)
    return Expr("div", None, (a, b))


def power(a: Expr, b: Expr) -> Expr:
    ca, cb = _cval(a), _cval(b)
    if cb == 0.0:
        return ONE
    if cb == 1.0:
        return a
    if ca is not None and cb is not None:
        return const(_pow_checked(ca, cb))
    return Expr("pow", None, (a, b))


def neg(a: Expr) -> Expr:
    if a.op == "const":
        return const(-a.value)
    if a.op == "neg":
        return a.args[0]
    return Expr("neg", None, (a,))


def call(fname: str, a: Expr) -> Expr:
    if fname not in FUNCTIONS:
        raise ValueError(f"unknown function {fname!r}")
    if a.op == "const":
        return const(apply_function(fname, a.value))
    return Expr("call", fname, (a,))


def _pow_checked(x: float, y: float) -> float:
    if x < 0.0 and not float(y).is_integer():
        raise ExprDomainError(f"negative base {x!r} raised to non-integer power {y!r}")
    if x == 0.0 and y < 0.0:
        raise ExprDomainError("zero raised to a negative power")
    try:
        r = math.pow(x, y)
    except OverflowError:
        raise ExprDomainError(f"overflow in {x!r}^{y!r}") from None
    return r


def apply_function(fname: str, v: float) -> float:
    if fname == "log" and v <= 0.0:
        raise ExprDomainError(f"log of nonpositive value {v!r}")
    if fname == "sqrt" and v < 0.0:
        raise ExprDomainError(f"sqrt of negative value {v!r}")
    try:
        return getattr(math, fname)(v)
    except OverflowError:
        raise ExprDomainError(f"overflow in {fname}({v!r})") from None


# differentiation ------------------------------------------------------

def diff(e: Expr, idx: int) -> Expr:
    """Exact partial derivative with respect to coordinate ``x<idx>``."""
    if idx not in (0, 1, 2, 3):
        raise ValueError(f"coordinate index must be 0..3, got {idx}")
    if not e.depends_on(idx):
        return ZERO
    # iterative post-order so deep trees do not hit the recursion limit
    stack = [e]
    while stack:
        node = stack[-1]
        if idx in node._dcache:
            stack.pop()
            continue
        pending = [a for a in node.args if a.depends_on(idx) and idx not in a._dcache]
        if pending:
            stack.extend(pending)
            continue
        stack.pop()
        node._dcache[idx] = _diff_node(node, idx)
    return e._dcache[idx]


def _d(a: Expr, idx: int) -> Expr:
    if not a.depends_on(idx):
        return ZERO
    return a._dcache[idx]


def _diff_node(e: Expr, idx: int) -> Expr:
    op = e.op
    if op == "var":
        return ONE if e.value == idx else ZERO
    if op in ("const", "param"):
        return ZERO
    if op == "add":
        a, b = e.args
        return add(_d(a, idx), _d(b, idx))
    if op == "sub":
        a, b = e.args
        return sub(_d(a, idx), _d(b, idx))
    if op == "neg":
        return neg(_d(e.args[0], idx))
    if op == "mul":
        a, b = e.args
        return add(mul(_d(a, idx), b), mul(a, _d(b, idx)))
    if op == "div":
        a, b = e.args
        da, db = _d(a, idx), _d(b, idx)
        return sub(div(da, b), div(mul(a, db), mul(b, b)))
    if op == "pow":
        a, b = e.args
        da, db = _d(a, idx), _d(b, idx)
        if not b.free:
            # power rule; keeps x^n differentiable at x <= 0 for integer n
            return mul(mul(b, power(a, sub(b, ONE))), da)
        return mul(e, add(mul(db, call("log", a)), div(mul(b, da), a)))
    if op == "call":
        a = e.args[0]
        da = _d(a, idx)
        f = e.value
        if f == "sin":
            inner = call("cos", a)
        elif f == "cos":
            inner = neg(call("sin", a))
        elif f == "exp":
            inner = e
        elif f == "log":
            return div(da, a)
        elif f == "sqrt":
            return div(da, mul(const(2.0), e))
        elif f == "tanh":
            inner = sub(ONE, mul(e, e))
        else:  # pragma: no cover - guarded by call()
            raise ValueError(f)
        return mul(inner, da)
    raise ValueError(f"cannot differentiate node {op!r}")  # pragma: no cover


# printing -------------------------------------------------------------

_PREC = {"add": 1, "sub": 1, "mul": 2, "div": 2, "neg": 3, "pow": 4}
_SYM = {"add": "+", "sub": "-", "mul": "*", "div": "/", "pow": "^"}


def to_string(e: Expr) -> str:
    """Print in the parser's grammar; ``parse(to_string(e))`` rebuilds ``e``."""
    memo: dict[int, tuple[str, int]] = {}
    stack = [e]
    while stack:
        node = stack[-1]
        if id(node) in memo:
            stack.pop()
            continue
        pending = [a for a in node.args if id(a) not in memo]
        if pending:
            stack.extend(pending)
            continue
        stack.pop()
        memo[id(node)] = _print_node(node, memo)
    return memo[id(e)][0]


def _print_node(e: Expr, memo) -> tuple[str, int]:
    op = e.op
    if op == "const":
        s = repr(e.value)
        return (f"({s})", 5) if e.value < 0 else (s, 5)
    if op == "var":
        return f"x{e.value}", 5
    if op == "param":
        return str(e.value), 5
    if op == "call":
        return f"{e.value}({memo[id(e.args[0])][0]})", 5
    if op == "neg":
        s, p = memo[id(e.args[0])]
        return ("-" + (s if p >= 3 else f"({s})")), 3
    a, b = e.args
    sa, pa = memo[id(a)]
    sb, pb = memo[id(b)]
    prec = _PREC[op]
    if op == "pow":
        # right-associative: the left operand needs parens at equal precedence
        left = sa if pa > prec else f"({sa})"
        right = sb if pb >= 3 else f"({sb})"
    else:
        left = sa if pa >= prec else f"({sa})"
        right = sb if pb > prec else f"({sb})"
    return f"{left} {_SYM[op]} {right}", prec


def parse_printed(text: str) -> Expr:
    from .parser import parse

    return parse(text)
