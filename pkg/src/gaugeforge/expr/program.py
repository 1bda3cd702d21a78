"""Flatten expression DAGs into a register program and run it over points.

The program is in single-assignment form: instruction ``i`` writes register
``i`` from registers ``a[i]`` and ``b[i]``. Shared subexpressions appear once.
Execution is delegated to a backend kernel (compiled when available).
"""

from __future__ import annotations

from collections.abc import Mapping

import numpy as np

from .. import _backend
from .nodes import Expr, ExprDomainError, as_expr

OP_CONST, OP_VAR, OP_ADD, OP_SUB, OP_MUL, OP_DIV, OP_POW, OP_NEG = range(8)
OP_SIN, OP_COS, OP_EXP, OP_LOG, OP_SQRT, OP_TANH = range(8, 14)

_BINOP = {"add": OP_ADD, "sub": OP_SUB, "mul": OP_MUL, "div": OP_DIV, "pow": OP_POW}
_FUNOP = {"sin": OP_SIN, "cos": OP_COS, "exp": OP_EXP, "log": OP_LOG, "sqrt": OP_SQRT, "tanh": OP_TANH}
OP_NAMES = {v: k for k, v in {**_BINOP, **_FUNOP, "const": OP_CONST, "var": OP_VAR, "neg": OP_NEG}.items()}


class UnboundParameterError(KeyError):
    pass


class Program:
    """Compiled evaluator for an array of expressions sharing one register file."""

    def __init__(self, exprs):
        arr = np.asarray(exprs, dtype=object)
        self.shape = arr.shape
        roots = [as_expr(e) for e in arr.ravel()]
        index: dict[Expr, int] = {}
        ops, a, b, consts = [], [], [], []
        params: dict[str, list[int]] = {}
        for root in roots:
            stack = [root]
            while stack:
                node = stack[-1]
                if node in index:
                    stack.pop()
                    continue
                pending = [c for c in node.args if c not in index]
                if pending:
                    stack.extend(reversed(pending))
                    continue
                stack.pop()
                slot = len(ops)
                index[node] = slot
                ia = ib = 0
                val = 0.0
                if node.op == "const":
                    code = OP_CONST
                    val = node.value
                elif node.op == "param":
                    code = OP_CONST
                    params.setdefault(node.value, []).append(slot)
                elif node.op == "var":
                    code = OP_VAR
                    ia = node.value
                elif node.op == "neg":
                    code = OP_NEG
                    ia = index[node.args[0]]
                elif node.op == "call":
                    code = _FUNOP[node.value]
                    ia = index[node.args[0]]
                else:
                    code = _BINOP[node.op]
                    ia, ib = index[node.args[0]], index[node.args[1]]
                ops.append(code)
                a.append(ia)
                b.append(ib)
                consts.append(val)
        self.ops = np.asarray(ops, dtype=np.int32)
        self.a = np.asarray(a, dtype=np.int32)
        self.b = np.asarray(b, dtype=np.int32)
        self.consts = np.asarray(consts, dtype=np.float64)
        self.outputs = np.asarray([index[r] for r in roots], dtype=np.int32)
        self.param_slots = {k: np.asarray(v, dtype=np.intp) for k, v in params.items()}

    @property
    def parameters(self) -> frozenset[str]:
        return frozenset(self.param_slots)

    def __len__(self):
        return len(self.ops)

    def _consts_for(self, params: Mapping[str, float] | None):
        if not self.param_slots:
            return self.consts
        c = self.consts.copy()
        for name, slots in self.param_slots.items():
            if params is None or name not in params:
                raise UnboundParameterError(f"parameter {name!r} is not bound")
            c[slots] = float(params[name])
        return c

    def __call__(self, x, params: Mapping[str, float] | None = None, backend=None):
        """Evaluate at one point (shape ``(4,)``) or a batch (shape ``(P, 4)``)."""
        pts = np.asarray(x, dtype=np.float64)
        single = pts.ndim == 1
        pts = np.ascontiguousarray(pts.reshape(-1, 4))
        out = np.empty((pts.shape[0], len(self.outputs)), dtype=np.float64)
        kernel = backend or _backend.current()
        status, instr, point = kernel.run_program(
            self.ops, self.a, self.b, self._consts_for(params), pts, self.outputs, out
        )
        if status:
            op = OP_NAMES.get(int(self.ops[instr]), "?")
            raise ExprDomainError(
                f"domain error in '{op}' (instruction {instr}) at x={pts[point].tolist()}"
            )
        if not np.all(np.isfinite(out)):
            bad = int(np.argwhere(~np.isfinite(out))[0, 0])
            raise ExprDomainError(f"non-finite result at x={pts[bad].tolist()}")
        if single:
            return out[0].reshape(self.shape)
        return out.reshape((pts.shape[0],) + self.shape)


def compile_exprs(exprs) -> Program:
    return Program(exprs)
