"""JSON scenario files: validation against the shipped schema and object construction."""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import jsonschema
import numpy as np

from . import algebra as al
from .dynamics import ParticleState
from .fields import FieldConfig, frame_at
from .gauge import GaugeParams, GridSpec, MatterSpec

log = logging.getLogger(__name__)

NORM_TOL = 1e-10

DEFAULT_TOLERANCES = {
    "jacobi": 1e-12,
    "rep": 1e-12,
    "antisymmetry": 0.0,
    "two_route": 1e-10,
    "split": 1e-12,
    "maxwell": 1e-10,
    "lorentz": 1e-8,
    "einstein": 1e-8,
    "levi_civita": 1e-8,
    "norm_drift": 1e-8,
}


class ScenarioError(ValueError):
    """Malformed or inconsistent scenario (maps to exit code 2)."""


def schema() -> dict:
    text = resources.files("gaugeforge").joinpath("schema/scenario.schema.json").read_text("utf-8")
    return json.loads(text)


def shipped_scenarios() -> list[Path]:
    root = resources.files("gaugeforge").joinpath("scenarios")
    return sorted(Path(str(p)) for p in root.iterdir() if p.name.endswith(".json"))


@dataclass
class Scenario:
    name: str
    raw: dict
    algebra: al.AlgebraSpec
    config: FieldConfig
    gauge: GaugeParams | None = None
    matter: MatterSpec | None = None
    particle: ParticleState | None = None
    tau_max: float | None = None
    dt: float | None = None
    grid: GridSpec | None = None
    points: list = field(default_factory=list)
    checks: tuple = ()
    tolerances: dict = field(default_factory=dict)
    outputs: dict = field(default_factory=dict)
    warnings: list = field(default_factory=list)

    def grid_or(self, n: int) -> GridSpec:
        """The scenario's grid, or the unit box with ``n`` points per axis."""
        return self.grid if self.grid is not None else GridSpec(n=n)

    def tol(self, key: str) -> float:
        return float(self.tolerances.get(key, DEFAULT_TOLERANCES.get(key, 0.0)))


def _build_algebra(spec: dict, kappa: float | None) -> al.AlgebraSpec:
    kind = spec["type"]
    rev = spec.get("reversed_bracket", True)
    k = spec.get("kappa", 0.0) if kappa is None else kappa
    if kind == "poincare":
        return al.build_poincare(reversed_bracket=rev)
    if kind == "extended_poincare":
        return al.build_extended_poincare(al.LambdaVector(float(k)), reversed_bracket=rev)
    if kind == "poincare_u1":
        return al.build_extended_poincare(al.LambdaVector(0.0), reversed_bracket=rev)
    if kind == "so3":
        return al.so3(reversed_bracket=rev)
    if kind == "u1":
        return al.build_custom(["phi"], np.zeros((1, 1, 1)), kinds=("central",), name="u1",
                               reversed_bracket=rev)
    labels = spec.get("labels")
    if not labels:
        raise ScenarioError("custom algebra needs 'labels'")
    table = {(a, b, c): v for a, b, c, v in spec.get("structure_constants", [])}
    reps = {name: np.asarray(m, float) for name, m in spec.get("reps", {}).items()}
    for name, m in reps.items():
        if m.ndim != 3 or m.shape[0] != len(labels) or m.shape[1] != m.shape[2]:
            raise ScenarioError(f"representation {name!r} must be {len(labels)} square matrices")
    try:
        return al.build_custom(labels, table, reps=reps, reversed_bracket=rev,
                               kinds=spec.get("kinds"), name=spec.get("name", "custom"))
    except al.AlgebraError as exc:
        raise ScenarioError(str(exc)) from None


def _normalized_u0(cfg: FieldConfig, x0, u0, warnings: list) -> np.ndarray:
    g = frame_at(cfg, x0).g_down
    u = np.asarray(u0, float)
    n = float(u @ g @ u)
    if not n > 0:
        raise ScenarioError(f"u0 is not timelike at x0 (g(u,u) = {n:.6g})")
    if abs(n - 1.0) > NORM_TOL:
        msg = f"u0 renormalized: g(u,u) was {n:.12g}"
        log.warning(msg)
        warnings.append(msg)
        u = u / math.sqrt(n)
    return u


def load(source, kappa: float | None = None, grid_points: int | None = None,
         epsilon: float | None = None) -> Scenario:
    """Load a scenario from a path, JSON text or an already parsed dict.

    ``kappa``, ``grid_points`` and ``epsilon`` override the file's values.
    """
    if isinstance(source, dict):
        raw = source
    else:
        path = Path(source)
        try:
            raw = json.loads(path.read_text("utf-8"))
        except OSError as exc:
            raise ScenarioError(f"cannot read scenario {path}: {exc.strerror}") from None
        except json.JSONDecodeError as exc:
            raise ScenarioError(f"{path}: invalid JSON ({exc.msg} at line {exc.lineno})") from None
    try:
        jsonschema.validate(raw, schema())
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ScenarioError(f"scenario invalid at {where}: {exc.message}") from None

    alg_spec = raw["algebra"]
    kap = kappa if kappa is not None else alg_spec.get("kappa", 0.0)
    spec = _build_algebra(alg_spec, kap)
    params = dict(raw.get("params", {}))
    for label in raw.get("potentials", {}):
        _check_label(spec, label)
    cfg = FieldConfig.build(spec, raw.get("potentials"), raw.get("tetrad"), kappa=kap,
                            a_elec=raw.get("a_elec"), b_grav=raw.get("b_grav"),
                            translational=raw.get("translational", "tetrad"), params=params)

    sc = Scenario(name=raw.get("name", "scenario"), raw=raw, algebra=spec, config=cfg)
    sc.tolerances = dict(raw.get("tolerances", {}))
    sc.outputs = dict(raw.get("outputs", {}))
    sc.checks = tuple(raw.get("checks", ()))
    sc.points = [np.asarray(p, float) for p in raw.get("points", [])]

    if "gauge" in raw:
        for label in raw["gauge"]["f"]:
            _check_label(spec, label)
        eps = epsilon if epsilon is not None else raw["gauge"].get("epsilon", 1e-3)
        sc.gauge = GaugeParams(raw["gauge"]["f"], eps)
    if "matter" in raw:
        m = raw["matter"]
        for label in m.get("rep", {}):
            _check_label(spec, label)
        sc.matter = MatterSpec(tuple(m["phi"]), float(m.get("mass", 1.0)), m.get("rep", {}))
    if "grid" in raw or grid_points is not None:
        g = raw.get("grid", {})
        sc.grid = GridSpec(tuple(g.get("lower", (-1.0,) * 4)), tuple(g.get("upper", (1.0,) * 4)),
                           int(grid_points if grid_points is not None else g.get("points", 16)))
    if "particle" in raw:
        p = raw["particle"]
        u0 = _normalized_u0(cfg, p["x0"], p["u0"], sc.warnings)
        pk = p.get("kappa", kap)
        sc.particle = ParticleState(p["x0"], u0, float(p.get("m", 1.0)), float(p.get("e", 0.0)), float(pk))
        sc.tau_max = float(p["tau_max"])
        sc.dt = float(p["dt"]) if "dt" in p else None
    return sc


def _check_label(spec: al.AlgebraSpec, label: str):
    try:
        spec.locate(label)
    except al.AlgebraError as exc:
        raise ScenarioError(str(exc)) from None
