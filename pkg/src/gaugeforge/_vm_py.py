"""Pure-Python/numpy register machine; vectorised over the point batch."""

import numpy as np

NAME = "python"


def run_program(ops, a, b, consts, points, outputs, out):
    """Execute the program at every row of ``points``.

    Returns ``(status, instruction, point)``; status 0 on success, 1 when an
    instruction left its domain (the first offending point is reported).
    """
    n = len(ops)
    npts = points.shape[0]
    regs = [None] * n
    cols = [points[:, k] for k in range(4)]
    with np.errstate(all="ignore"):
        for i in range(n):
            op = ops[i]
            if op == 0:
                regs[i] = np.full(npts, consts[i])
                continue
            if op == 1:
                regs[i] = cols[a[i]]
                continue
            x = regs[a[i]]
            bad = None
            if op == 2:
                r = x + regs[b[i]]
            elif op == 3:
                r = x - regs[b[i]]
            elif op == 4:
                r = x * regs[b[i]]
            elif op == 5:
                y = regs[b[i]]
                bad = y == 0.0
                r = x / y
            elif op == 6:
                y = regs[b[i]]
                bad = ((x < 0.0) & (np.floor(y) != y)) | ((x == 0.0) & (y < 0.0))
                r = np.power(x, y)
            elif op == 7:
                r = -x
            elif op == 8:
                r = np.sin(x)
            elif op == 9:
                r = np.cos(x)
            elif op == 10:
                r = np.exp(x)
            elif op == 11:
                bad = x <= 0.0
                r = np.log(x)
            elif op == 12:
                bad = x < 0.0
                r = np.sqrt(x)
            elif op == 13:
                r = np.tanh(x)
            else:
                raise ValueError(f"bad opcode {op}")
            if bad is not None and bad.any():
                return 1, i, int(np.argmax(bad))
            regs[i] = r
    for j, slot in enumerate(outputs):
        out[:, j] = regs[slot]
    return 0, 0, 0
