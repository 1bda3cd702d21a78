"""Shared fixtures: random smooth tetrads and the reference algebras."""

import numpy as np
import pytest

from gaugeforge import algebra as al


def random_tetrad(rng: np.random.Generator, amp: float = 0.1) -> list[list[str]]:
    """A near-identity tetrad whose entries are small trigonometric/polynomial bumps."""
    rows = []
    for i in range(4):
        row = []
        for j in range(4):
            a, b, c = rng.uniform(-amp, amp, 3)
            s, t = rng.integers(0, 4, 2)
            term = f"{a:.6f}*sin({1 + b:.6f}*x{s}) + {c:.6f}*x{t}*x{s}"
            row.append(f"1 + {term}" if i == j else term)
        rows.append(row)
    return rows


def random_points(rng: np.random.Generator, n: int, half: float = 0.5) -> np.ndarray:
    return rng.uniform(-half, half, (n, 4))


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(scope="session")
def poincare():
    return al.build_poincare()


@pytest.fixture(scope="session")
def extended():
    return al.build_extended_poincare(al.LambdaVector(0.1))


def applicable_commands(sc) -> list[str]:
    """CLI commands a scenario carries the inputs for."""
    cmds = ["check-algebra", "curvature"]
    if sc.gauge is not None:
        cmds.append("invariance")
    if sc.algebra.has_kind("lorentz") and sc.algebra.has_kind("translation"):
        cmds.append("residuals")
    if sc.particle is not None:
        cmds.append("trajectory")
    return cmds


def pytest_terminal_summary(terminalreporter):
    import sys
    mod = sys.modules.get("test_acceptance")
    if mod is not None and mod.RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in mod.RESULTS:
            terminalreporter.write_line(line)
