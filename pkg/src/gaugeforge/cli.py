"""Command-line front end: ``gaugeforge <command> --scenario FILE``.

Exit codes: 0 all checks pass, 1 a check failed, 2 input error,
3 singular tetrad or metric, 4 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from . import algebra as al
from . import dynamics as dyn
from . import gauge as gg
from . import geometry as geo
from .expr import ExprDomainError, ExprSyntaxError, UnboundParameterError
from .fields import SingularTetradError, frame_at
from .scenario import Scenario, ScenarioError, load

EXIT_OK, EXIT_FAIL, EXIT_INPUT, EXIT_SINGULAR, EXIT_NUMERIC = range(5)
DEFAULT_POINT = (0.1, 0.2, 0.3, 0.4)

log = logging.getLogger("gaugeforge")


class Report:
    """Collects named checks and free-form results for one command."""

    def __init__(self, command: str, scenario: Scenario):
        self.command = command
        self.scenario = scenario
        self.checks: list[dict] = []
        self.data: dict = {}

    def check(self, name: str, value: float, tol: float, passed: bool | None = None, **extra):
        ok = bool(value <= tol) if passed is None else bool(passed)
        self.checks.append({"name": name, "value": float(value), "tolerance": float(tol), "passed": ok, **extra})
        return ok

    @property
    def passed(self) -> bool:
        return all(c["passed"] for c in self.checks)

    def as_dict(self) -> dict:
        return {"command": self.command, "scenario": self.scenario.name, "passed": self.passed,
                "checks": self.checks, "warnings": self.scenario.warnings, **self.data}


def _points(sc: Scenario) -> list[np.ndarray]:
    return sc.points or [np.array(DEFAULT_POINT)]


def _tolist(a):
    return np.asarray(a, float).tolist()


def _scaling_extra(r: gg.ScalingReport) -> dict:
    d = r.as_dict()
    d.pop("passed")
    return d


def _residual_grid(sc: Scenario, args) -> gg.GridSpec:
    # the scan is ~ms per point, so it defaults to 4 points per axis on the scenario box
    box = sc.grid_or(4)
    return gg.GridSpec(box.lower, box.upper, args.grid or 4)


# commands ------------------------------------------------------------

def cmd_check_algebra(sc: Scenario, args) -> Report:
    rep = Report("check-algebra", sc)
    spec = sc.algebra
    tol = sc.tol("jacobi")
    jac = al.jacobi_residual(spec)
    rep.check("jacobi", jac, tol, violations=[
        {"labels": [a, b, c], "value": v} for a, b, c, v in al.jacobi_violations(spec, tol)])
    rep.check("antisymmetry", al.antisymmetry_residual(spec), sc.tol("antisymmetry"))
    for name in sorted(spec.reps):
        rep.check(f"rep:{name}", al.rep_commutator_residual(spec, name), sc.tol("rep"))
    return rep


def cmd_curvature(sc: Scenario, args) -> Report:
    rep = Report("curvature", sc)
    cfg = sc.config
    spec = sc.algebra
    extended = spec.has_kind("lorentz") and spec.has_kind("translation")
    records = []
    worst = {"antisymmetry": 0.0, "two_route": 0.0, "split": 0.0}
    for x in _points(sc):
        gen = geo.generalized_curvature(cfg, x)
        kk = geo.kk_contracted_curvature(cfg, x)
        tors = geo.torsion(cfg, x).T
        rec = {"point": _tolist(x),
               "generalized": {lab: _tolist(gen.values[i]) for i, lab in enumerate(gen.labels)},
               "torsion": _tolist(tors)}
        worst["antisymmetry"] = max(worst["antisymmetry"],
                                    float(np.max(np.abs(gen.values + np.swapaxes(gen.values, 1, 2)))),
                                    float(np.max(np.abs(tors + np.swapaxes(tors, 1, 2)))))
        worst["two_route"] = max(worst["two_route"], float(np.max(np.abs(gen.values - kk.values))))
        if extended:
            FL, FPhi = geo.extended_curvatures(cfg, x)
            Fe, Fg = geo.split_u1(cfg, x)
            rec["lorentz"] = {lab: _tolist(FL.values[i]) for i, lab in enumerate(FL.labels)}
            rec["u1"] = _tolist(FPhi)
            worst["split"] = max(worst["split"], float(np.max(np.abs(FPhi - Fe - cfg.kappa * Fg))))
        records.append(rec)
    rep.check("antisymmetry", worst["antisymmetry"], sc.tol("antisymmetry"))
    rep.check("two_route", worst["two_route"], sc.tol("two_route"))
    if extended:
        rep.check("split", worst["split"], sc.tol("split"))
    rep.data["points"] = records
    return rep


def cmd_invariance(sc: Scenario, args) -> Report:
    rep = Report("invariance", sc)
    if sc.gauge is None:
        raise ScenarioError("invariance needs a 'gauge' block")
    ablation = args.ablate
    if sc.matter is not None:
        if ablation is not None and ablation not in gg.ACTION_ABLATIONS:
            raise ScenarioError(f"ablation {ablation!r} does not apply to the action check; "
                                f"choose from {', '.join(gg.ACTION_ABLATIONS)}")
        r = gg.action_invariance_check(sc.config, sc.gauge, sc.matter, sc.grid_or(16), ablation)
        rep.check("action", r.ratio if not r.exact else 0.0, gg.RATIO_BAND[1], r.passed, **_scaling_extra(r))
    else:
        if ablation is not None and ablation not in gg.COVARIANCE_ABLATIONS:
            raise ScenarioError(f"ablation {ablation!r} does not apply to the covariance check; "
                                f"choose from {', '.join(gg.COVARIANCE_ABLATIONS)}")
        for x in _points(sc):
            r = gg.covariance_scaling_check(sc.config, sc.gauge, x, ablation)
            rep.check("covariance", r.ratio if not r.exact else 0.0, gg.RATIO_BAND[1], r.passed,
                      point=_tolist(x), **_scaling_extra(r))
    return rep


def cmd_residuals(sc: Scenario, args) -> Report:
    rep = Report("residuals", sc)
    cfg = sc.config
    eta = sc.algebra.metric.eta
    if not sc.checks:
        # nothing declared: report the U(1) scan without gating the verdict
        worst, records = dyn.el_residual_u1(cfg, _residual_grid(sc, args))
        rep.data["diagnostics"] = [{"name": "maxwell", "value": worst}]
        rep.data["maxwell"] = records
    for check in sc.checks:
        if check == "maxwell":
            worst, records = dyn.el_residual_u1(cfg, _residual_grid(sc, args))
            rep.check("maxwell", worst, sc.tol("maxwell"))
            rep.data["maxwell"] = records
            continue
        records = []
        for x in _points(sc):
            if check in ("lorentz", "lorentz_vacuum"):
                r = dyn.el_residual_lorentz(cfg, x, connection="vacuum" if check == "lorentz_vacuum" else "config")
                key = "lorentz"
            elif check == "einstein_vacuum":
                r = dyn.generalized_einstein_residual(cfg, x, connection="vacuum")
                key = "einstein"
            elif check == "levi_civita_oracle":
                fr = frame_at(cfg, x)
                vac = np.einsum("as,br,abm->srm", eta, eta, dyn.vacuum_connection(cfg, x))
                omega = np.einsum("ab,brm->arm", eta, dyn.spin_connection_levi_civita(fr))
                r = float(np.max(np.abs(vac + omega)))
                key = "levi_civita"
            else:
                raise ScenarioError(f"check {check!r} is not a residual check")
            records.append({"point": _tolist(x), "residual": r})
        rep.check(check, max(rec["residual"] for rec in records), sc.tol(key))
        rep.data[check] = records
    return rep


def cmd_trajectory(sc: Scenario, args) -> Report:
    rep = Report("trajectory", sc)
    if sc.particle is None:
        raise ScenarioError("trajectory needs a 'particle' block")
    traj = dyn.integrate_particle(sc.config, sc.particle, tau_max=sc.tau_max, dt=sc.dt)
    out = Path(args.output) / sc.outputs.get("trajectory", f"{sc.name}-trajectory.csv")
    traj.to_csv(out)
    spatial = traj.x[:, 1:]
    extent = float(np.max(np.ptp(spatial, axis=0))) or 1.0
    closure = float(np.linalg.norm(spatial[-1] - spatial[0]) / extent)
    rep.data.update({"csv": out.name, "steps": len(traj.tau) - 1, "closure": closure,
                     "final_x": _tolist(traj.x[-1]), "final_u": _tolist(traj.u[-1])})
    rep.check("norm_drift", traj.max_norm_drift, sc.tol("norm_drift"))
    if "closure" in sc.tolerances:
        rep.check("closure", closure, sc.tol("closure"))
    return rep


COMMANDS = {
    "check-algebra": cmd_check_algebra,
    "curvature": cmd_curvature,
    "invariance": cmd_invariance,
    "residuals": cmd_residuals,
    "trajectory": cmd_trajectory,
}


# entry point ---------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="gaugeforge", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("command", choices=sorted(COMMANDS))
    p.add_argument("--scenario", required=True, help="scenario JSON file")
    p.add_argument("--output", default=".", help="directory for reports and CSV files")
    p.add_argument("--epsilon", type=float, help="gauge parameter scale (default from scenario, else 1e-3)")
    p.add_argument("--grid", type=int, help="points per axis for the action quadrature and residual scan")
    p.add_argument("--kappa", type=float, help="override the mixing coupling")
    p.add_argument("--ablate", metavar="NAME", help="drop one term of a transformation law (negative test)")
    p.add_argument("-q", "--quiet", action="store_true", help="only print the verdict")
    return p


def _print_report(rep: Report, quiet: bool):
    if not quiet:
        for c in rep.checks:
            mark = "PASS" if c["passed"] else "FAIL"
            print(f"{mark} {c['name']}: {c['value']:.3e} (tolerance {c['tolerance']:.1e})")
            for v in c.get("violations", []):
                print(f"     violation {'/'.join(v['labels'])}: {v['value']:.3e}")
        for d in rep.data.get("diagnostics", []):
            print(f"diagnostic {d['name']}: {d['value']:.3e}")
        if "closure" in rep.data:
            print(f"closure error {rep.data['closure']:.3e}")
    print(f"{rep.command} {rep.scenario.name}: {'PASS' if rep.passed else 'FAIL'}")


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        if args.grid is not None and args.grid < 2:
            raise ScenarioError("--grid needs at least 2 points per axis")
        if args.epsilon is not None and not args.epsilon > 0:
            raise ScenarioError("--epsilon must be positive")
        outdir = Path(args.output)
        outdir.mkdir(parents=True, exist_ok=True)
        sc = load(args.scenario, kappa=args.kappa, grid_points=args.grid, epsilon=args.epsilon)
        if args.ablate is not None and args.command != "invariance":
            raise ScenarioError("--ablate only applies to the invariance command")
        rep = COMMANDS[args.command](sc, args)
    except (ScenarioError, ExprSyntaxError, UnboundParameterError, al.AlgebraError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except SingularTetradError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SINGULAR
    except (dyn.NumericalError, ExprDomainError, ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"error: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    name = sc.outputs.get("report", f"{sc.name}-{args.command}.json")
    (outdir / name).write_text(json.dumps(rep.as_dict(), indent=2, sort_keys=True) + "\n", "utf-8")
    _print_report(rep, args.quiet)
    return EXIT_OK if rep.passed else EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
