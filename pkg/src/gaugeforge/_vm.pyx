# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled register machine: loops points outermost, one register file per point."""

from libc.math cimport sin, cos, exp, log, sqrt, tanh, pow, floor

import numpy as np

NAME = "cython"


def run_program(const int[::1] ops, const int[::1] a, const int[::1] b,
                const double[::1] consts, const double[:, ::1] points,
                const int[::1] outputs, double[:, ::1] out):
    cdef Py_ssize_t n = ops.shape[0]
    cdef Py_ssize_t npts = points.shape[0]
    cdef Py_ssize_t nout = outputs.shape[0]
    cdef double[::1] regs = np.empty(max(n, 1), dtype=np.float64)
    cdef Py_ssize_t p, i, j
    cdef int op
    cdef double x, y, r
    for p in range(npts):
        for i in range(n):
            op = ops[i]
            if op == 0:
                regs[i] = consts[i]
                continue
            if op == 1:
                regs[i] = points[p, a[i]]
                continue
            x = regs[a[i]]
            if op == 2:
                r = x + regs[b[i]]
            elif op == 3:
                r = x - regs[b[i]]
            elif op == 4:
                r = x * regs[b[i]]
            elif op == 5:
                y = regs[b[i]]
                if y == 0.0:
                    return 1, i, p
                r = x / y
            elif op == 6:
                y = regs[b[i]]
                if (x < 0.0 and floor(y) != y) or (x == 0.0 and y < 0.0):
                    return 1, i, p
                r = pow(x, y)
            elif op == 7:
                r = -x
            elif op == 8:
                r = sin(x)
            elif op == 9:
                r = cos(x)
            elif op == 10:
                r = exp(x)
            elif op == 11:
                if x <= 0.0:
                    return 1, i, p
                r = log(x)
            elif op == 12:
                if x < 0.0:
                    return 1, i, p
                r = sqrt(x)
            elif op == 13:
                r = tanh(x)
            else:
                raise ValueError("bad opcode %d" % op)
            regs[i] = r
        for j in range(nout):
            out[p, j] = regs[outputs[j]]
    return 0, 0, 0
