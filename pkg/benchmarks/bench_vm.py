"""Compare the compiled expression kernel with the numpy fallback.

    python3 benchmarks/bench_vm.py [--repeat N] [--points N] [--skip-action]

Times three workloads per kernel: single-point evaluation of a 16-entry
tetrad program with its first derivatives (the pattern of the integrator and
the pointwise checks), batched evaluation on an n^4 grid (the pattern of the
action quadrature), and one end-to-end 16^4 action-invariance check.
"""

import argparse
import time

import numpy as np

from gaugeforge import _backend
from gaugeforge import algebra as al
from gaugeforge import expr as E
from gaugeforge import gauge as gg
from gaugeforge import scenario as scn

TETRAD = [
    ["1 + 0.1*sin(x0*x1)", "0.05*x2^2", "0.02*exp(-x3^2)", "0"],
    ["0.03*x0*x1", "1 + 0.1*cos(x2 + x3)", "0", "0.04*sin(x1)"],
    ["0", "0.02*x3*x0", "1/(1 + 0.1*x1^2)", "0.05*x2"],
    ["0.01*x1", "0", "0.03*sqrt(1 + x0^2)", "1 + 0.1*x3*x2"],
]


def tetrad_program():
    entries = [E.parse(s) for row in TETRAD for s in row]
    derivs = [E.diff(e, m) for e in entries for m in range(4)]
    return E.compile_exprs(entries + derivs)


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--repeat", type=int, default=5, help="timing repetitions (best is reported)")
    p.add_argument("--points", type=int, default=16, help="grid points per axis for the batched workload")
    p.add_argument("--calls", type=int, default=2000, help="single-point calls per repetition")
    p.add_argument("--skip-action", action="store_true", help="skip the end-to-end action check")
    args = p.parse_args(argv)

    kernels = _backend.available()
    prog = tetrad_program()
    rng = np.random.default_rng(0)
    singles = rng.uniform(-0.5, 0.5, (args.calls, 4))
    axis = np.linspace(-1, 1, args.points)
    grid = np.stack(np.meshgrid(axis, axis, axis, axis, indexing="ij"), -1).reshape(-1, 4)

    print(f"kernels: {', '.join(sorted(kernels))}; program: {len(prog.ops)} instructions, "
          f"{len(prog.outputs)} outputs")
    rows, batched = [], {}
    for name, kern in sorted(kernels.items()):
        t_single = best_of(lambda: [prog(x, backend=kern) for x in singles], args.repeat) / args.calls
        t_batch = best_of(lambda: prog(grid, backend=kern), args.repeat)
        batched[name] = prog(grid, backend=kern)
        t_action = float("nan")
        if not args.skip_action:
            _backend.use(name)
            sc = scn.load(next(p for p in scn.shipped_scenarios() if p.stem == "poincare_scalar_pair"),
                          grid_points=16)
            t_action = best_of(lambda: gg.action_invariance_check(sc.config, sc.gauge, sc.matter, sc.grid),
                               max(1, args.repeat // 2))
        rows.append((name, t_single * 1e6, t_batch * 1e3, t_action))

    print(f"{'kernel':<8} {'single (us)':>12} {f'{args.points}^4 batch (ms)':>18} {'16^4 action (s)':>16}")
    for name, s, b, a in rows:
        print(f"{name:<8} {s:>12.2f} {b:>18.2f} {a:>16.3f}")
    if len(rows) == 2:
        (_, s0, b0, a0), (_, s1, b1, a1) = rows     # sorted: cython, python
        print(f"speedup  {s1 / s0:>11.1f}x {b1 / b0:>17.1f}x {a1 / a0:>15.1f}x")
        diff = np.max(np.abs(batched["cython"] - batched["python"]) / np.maximum(1.0, np.abs(batched["python"])))
        print(f"max relative difference between kernels: {diff:.1e}")


if __name__ == "__main__":
    main()
