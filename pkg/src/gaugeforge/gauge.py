"""Infinitesimal gauge transformations and epsilon-scaling checks.

A correct covariance or invariance statement shows up numerically as a
residual that is second order in epsilon: halving epsilon divides it by
four. Dropping any term of the transformation laws leaves a first-order
residual, so the halving ratio moves to about 1/2.
"""

from __future__ import annotations

import math
from collections.abc import Mapping
from dataclasses import dataclass, field

import numpy as np

from . import expr as E
from .algebra import AlgebraError, AlgebraSpec
from .fields import DET_THRESHOLD, FieldConfig, SingularTetradError
from .geometry import antisym, curvature_from, quadratic_term

RATIO_BAND = (0.2, 0.3)
EXACT_TOL = 1e-14

COVARIANCE_ABLATIONS = ("curvature-quadratic", "variation-homogeneous",
                        "variation-inhomogeneous", "covariance-rotation")
ACTION_ABLATIONS = ("lambda-factor", "tetrad-variation", "potential-inhomogeneous",
                    "matter-rotation")


@dataclass(frozen=True)
class GaugeParams:
    """Gauge functions ``f^(a)(x)`` keyed by generator label, and the scale epsilon."""

    f: Mapping
    epsilon: float = 1e-3

    def __post_init__(self):
        parsed = {str(k): (E.parse(v) if isinstance(v, str) else E.as_expr(v)) for k, v in self.f.items()}
        object.__setattr__(self, "f", parsed)

    def vector(self, spec: AlgebraSpec) -> np.ndarray:
        """``f^(a)`` as an object array over the algebra's generators."""
        out = np.empty(spec.dim, dtype=object)
        out[:] = E.ZERO
        for label, fx in self.f.items():
            try:
                idx, sign = spec.locate(label)
            except AlgebraError:
                raise
            out[idx] = out[idx] + (fx if sign > 0 else -fx)
        return out

    def scaled(self, epsilon: float) -> "GaugeParams":
        return GaugeParams(self.f, epsilon)


@dataclass(frozen=True)
class ScalingReport:
    """``D(eps)`` and ``D(eps/2)``; passes when both vanish or the ratio lies in the band."""

    d_eps: float
    d_half: float
    epsilon: float
    ablation: str | None = None
    band: tuple = RATIO_BAND
    scale: float = 1.0

    @property
    def exact(self) -> bool:
        return self.d_eps <= EXACT_TOL * self.scale and self.d_half <= EXACT_TOL * self.scale

    @property
    def ratio(self) -> float:
        return self.d_half / self.d_eps if self.d_eps > 0 else math.nan

    @property
    def passed(self) -> bool:
        return self.exact or (self.band[0] <= self.ratio <= self.band[1])

    def as_dict(self) -> dict:
        return {"D_eps": self.d_eps, "D_half": self.d_half, "epsilon": self.epsilon,
                "ratio": None if math.isnan(self.ratio) else self.ratio,
                "exact": self.exact, "passed": self.passed, "ablation": self.ablation}


def _check_ablation(name, allowed):
    if name is not None and name not in allowed:
        raise ValueError(f"unknown ablation {name!r}; choose from {', '.join(allowed)}")


def _derivative_stack(arr: np.ndarray, order: int) -> list[np.ndarray]:
    out = [arr]
    for _ in range(order):
        prev = out[-1]
        nxt = np.empty(prev.shape + (4,), dtype=object)
        for idx in np.ndindex(prev.shape):
            for s in range(4):
                nxt[idx + (s,)] = prev[idx].diff(s)
        out.append(nxt)
    return out


def _eval(arr: np.ndarray, x, params) -> np.ndarray:
    return E.program_for(arr)(x, params)


# internal transformations --------------------------------------------

def _internal_delta(cfg: FieldConfig, gp: GaugeParams, x, ablation=None):
    """``(dA, d(dA))`` of ``delta A = f C A + df`` at ``x`` (unscaled)."""
    spec = cfg.algebra
    fvec = gp.vector(spec)
    fv, df, ddf = (_eval(a, x, cfg.params) for a in _derivative_stack(fvec, 2))
    ddf = 0.5 * (ddf + np.swapaxes(ddf, -1, -2))
    A, dA = cfg.potential_values(x, 1)
    Cs = spec.C_std
    hom = np.einsum("abc,b,cm->am", Cs, fv, A)
    dhom = np.einsum("abc,bs,cm->ams", Cs, df, A) + np.einsum("abc,b,cms->ams", Cs, fv, dA)
    delta, ddelta = np.zeros_like(A), np.zeros_like(dA)
    if ablation != "variation-homogeneous":
        delta, ddelta = delta + hom, ddelta + dhom
    if ablation != "variation-inhomogeneous":
        delta, ddelta = delta + df, ddelta + ddf
    return delta, ddelta, fv


def vary_internal(cfg: FieldConfig, gp: GaugeParams, x) -> dict:
    """``epsilon * (f^(b) C^a_bc A^(c)_mu + d_mu f^(a))`` keyed by label."""
    delta, _, _ = _internal_delta(cfg, gp, np.asarray(x, float))
    return {lab: gp.epsilon * delta[i] for i, lab in enumerate(cfg.algebra.labels)}


def covariance_scaling_check(cfg: FieldConfig, gp: GaugeParams, x, ablation: str | None = None) -> ScalingReport:
    """Residual ``|F(A + eps dA) - F(A) - eps f C F|`` at ``eps`` and ``eps/2``."""
    _check_ablation(ablation, COVARIANCE_ABLATIONS)
    x = np.asarray(x, float)
    Cs = cfg.algebra.C_std
    A, dA = cfg.potential_values(x, 1)
    delta, ddelta, fv = _internal_delta(cfg, gp, x, ablation)
    quad = ablation != "curvature-quadratic"
    F = curvature_from(A, dA, Cs, quad)
    rot = np.einsum("abc,b,cmn->amn", Cs, fv, F)
    if ablation == "covariance-rotation":
        rot = np.zeros_like(rot)

    def D(eps):
        # F(A') - F(A) assembled term by term so that exact cancellations stay exact
        dF = antisym(eps * ddelta)
        if quad:
            dF = dF + (quadratic_term(Cs, A + eps * delta) - quadratic_term(Cs, A))
        return float(np.max(np.abs(dF - eps * rot)))

    eps = gp.epsilon
    scale = max(1.0, float(np.max(np.abs(F))))
    return ScalingReport(D(eps), D(eps / 2), eps, ablation, scale=scale)


# space-time transformations ------------------------------------------

def spacetime_variation_exprs(cfg: FieldConfig, fvec: np.ndarray, ablation: str | None = None):
    """Symbolic ``(delta calA, delta k)`` of the compensating fields, unscaled.

    ``delta calA^a_mu = f^b C^a_bc calA^c_mu + k^nu_mu d_nu f^a - f^b calA^a_s d_mu X^s_b``
    ``delta k^nu_mu = X^nu_a k^s_mu d_s f^a + f^a (k^s_mu d_s X^nu_a - k^nu_s d_mu X^s_a)``
    """
    spec = cfg.algebra
    n = spec.dim
    X = spec.spacetime_action
    dX = spec.action_derivatives()
    Cs = spec.C_std
    A, k = cfg.A, cfg.k
    df = [[fvec[a].diff(s) for s in range(4)] for a in range(n)]
    active = [a for a in range(n) if fvec[a] is not E.ZERO]

    dA = np.empty((n, 4), dtype=object)
    for a in range(n):
        for m in range(4):
            terms = []
            for b in active:
                for c in range(n):
                    if Cs[a, b, c] != 0.0 and A[c, m] is not E.ZERO:
                        terms.append(float(Cs[a, b, c]) * fvec[b] * A[c, m])
            if ablation != "potential-inhomogeneous":
                terms += [k[v, m] * df[a][v] for v in range(4)]
            for b in active:
                terms += [-(fvec[b] * A[a, s] * dX[b][s][m]) for s in range(4)]
            dA[a, m] = E.sum_exprs(terms)

    dk = np.empty((4, 4), dtype=object)
    for v in range(4):
        for m in range(4):
            terms = []
            for a in active:
                terms += [X[a][v] * k[s, m] * df[a][s] for s in range(4)]
                terms += [fvec[a] * k[s, m] * dX[a][v][s] for s in range(4)]
                terms += [-(fvec[a] * k[v, s] * dX[a][s][m]) for s in range(4)]
            dk[v, m] = E.sum_exprs(terms)
    return dA, dk


def vary_spacetime(cfg: FieldConfig, gp: GaugeParams, x) -> tuple[dict, np.ndarray]:
    """``(delta calA keyed by label, delta k)`` at ``x``, scaled by epsilon."""
    x = np.asarray(x, float)
    det = float(np.linalg.det(cfg.tetrad_values(x, 0)[0]))
    if not abs(det) > DET_THRESHOLD:
        raise SingularTetradError(det, x)
    dA, dk = spacetime_variation_exprs(cfg, gp.vector(cfg.algebra))
    dAv = _eval(dA, x, cfg.params) * gp.epsilon
    dkv = _eval(dk, x, cfg.params) * gp.epsilon
    return {lab: dAv[i] for i, lab in enumerate(cfg.algebra.labels)}, dkv


# action invariance ---------------------------------------------------

@dataclass(frozen=True)
class GridSpec:
    """Tensor-product midpoint quadrature box ``[lower, upper]^4`` with ``n`` points per axis."""

    lower: tuple = (-1.0, -1.0, -1.0, -1.0)
    upper: tuple = (1.0, 1.0, 1.0, 1.0)
    n: int = 16

    def __post_init__(self):
        lo = tuple(float(v) for v in np.broadcast_to(self.lower, 4))
        hi = tuple(float(v) for v in np.broadcast_to(self.upper, 4))
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)
        if int(self.n) < 1 or any(not (h > l) for l, h in zip(lo, hi)):
            raise ValueError(f"degenerate quadrature box lower={lo} upper={hi} n={self.n}")
        object.__setattr__(self, "n", int(self.n))

    @property
    def spacing(self) -> np.ndarray:
        return (np.array(self.upper) - np.array(self.lower)) / self.n

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.spacing))

    def points(self) -> np.ndarray:
        axes = [lo + (np.arange(self.n) + 0.5) * h
                for lo, h in zip(self.lower, self.spacing)]
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=1)

    def bump(self, power: int = 8) -> E.Expr:
        """``prod_i sin(pi s_i)^power`` with ``s_i`` the box coordinate in [0, 1].

        All derivatives below ``power`` vanish on the boundary, which keeps the
        midpoint rule accurate for total derivatives.
        """
        out = E.ONE
        for i, (lo, hi) in enumerate(zip(self.lower, self.upper)):
            s = (E.var(i) - lo) / (hi - lo)
            out = out * E.power(E.sin(math.pi * s), E.const(power))
        return out


@dataclass(frozen=True)
class MatterSpec:
    """Real multiplet ``phi^i`` with ``L = 1/2 eta^{mu nu} phi_mu . phi_nu - 1/2 m^2 phi . phi``.

    ``phi_mu = k^nu_mu d_nu phi - calA^(a)_mu X_(a) phi``; ``rep`` maps generator
    labels to their matrices on the multiplet (missing labels act trivially).
    """

    phi: tuple
    mass: float = 1.0
    rep: Mapping = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "phi", tuple(E.parse(v) if isinstance(v, str) else E.as_expr(v) for v in self.phi))
        object.__setattr__(self, "rep", {str(k): np.asarray(v, float) for k, v in self.rep.items()})

    @property
    def size(self) -> int:
        return len(self.phi)

    def matrices(self, spec: AlgebraSpec) -> np.ndarray:
        out = np.zeros((spec.dim, self.size, self.size))
        for label, M in self.rep.items():
            idx, sign = spec.locate(label)
            if M.shape != (self.size, self.size):
                raise ValueError(f"matter matrix for {label!r} has shape {M.shape}")
            out[idx] += sign * M
        return out

    @classmethod
    def scalar_pair(cls, phi, mass: float = 1.0, label: str = "phi") -> "MatterSpec":
        """Two real scalars rotated by the U(1) generator ``label``."""
        return cls(tuple(phi), mass, {label: np.array([[0.0, -1.0], [1.0, 0.0]])})


def _form_variation(base: np.ndarray, delta, xi) -> np.ndarray:
    """``delta - xi^l d_l base`` elementwise (the variation at fixed coordinates)."""
    out = np.empty(base.shape, dtype=object)
    for idx in np.ndindex(base.shape):
        terms = [] if delta is None else [delta[idx]]
        terms += [-(xi[l] * base[idx].diff(l)) for l in range(4) if xi[l] is not E.ZERO]
        out[idx] = E.sum_exprs(terms)
    return out


def lagrangian_density(k, calA, phi, dphi, mats, mass, eta, Lam=None):
    """Pointwise ``Lambda * L`` for batched arrays (leading axis = points)."""
    cov = np.einsum("pvm,piv->pmi", k, dphi)
    if mats.any():
        cov = cov - np.einsum("pam,aij,pj->pmi", calA, mats, phi)
    L = 0.5 * np.einsum("mn,pmi,pni->p", eta, cov, cov) - 0.5 * mass ** 2 * np.einsum("pi,pi->p", phi, phi)
    if Lam is None:
        det = np.linalg.det(k)
        if np.any(np.abs(det) <= DET_THRESHOLD):
            bad = int(np.argmin(np.abs(det)))
            raise SingularTetradError(float(det[bad]), np.zeros(4))
        Lam = 1.0 / det
    return Lam * L


def action_invariance_check(cfg: FieldConfig, gp: GaugeParams, matter: MatterSpec,
                            box: GridSpec | None = None, ablation: str | None = None,
                            localize: bool = True) -> ScalingReport:
    """``|S(eps) - S(0)|`` at ``eps`` and ``eps/2`` with ``S = sum Lambda L h^4``.

    All fields are shifted by their variation at fixed coordinates,
    ``delta - xi^l d_l`` with ``xi = f^(a) X_(a)``. With ``localize`` the gauge
    functions are multiplied by :meth:`GridSpec.bump` so boundary terms drop.
    """
    _check_ablation(ablation, ACTION_ABLATIONS)
    box = box or GridSpec()
    spec = cfg.algebra
    eta = spec.metric.eta
    fvec = gp.vector(spec)
    if localize:
        b = box.bump()
        fvec = np.array([fa if fa is E.ZERO else fa * b for fa in fvec], dtype=object)
    X = spec.spacetime_action
    xi = [E.sum_exprs([fvec[a] * X[a][l] for a in range(spec.dim)
                       if fvec[a] is not E.ZERO and X[a][l] is not E.ZERO]) for l in range(4)]

    mats = matter.matrices(spec)
    used = [a for a in range(spec.dim) if mats[a].any()]
    phi = np.array(matter.phi, dtype=object)

    dA, dk = spacetime_variation_exprs(cfg, fvec, ablation)
    if ablation == "tetrad-variation":
        dk = None
    rot = np.empty(matter.size, dtype=object)
    for i in range(matter.size):
        terms = [float(mats[a, i, j]) * fvec[a] * phi[j]
                 for a in used for j in range(matter.size) if mats[a, i, j] != 0.0]
        rot[i] = E.sum_exprs(terms)
    if ablation == "matter-rotation":
        rot = None

    var_k = _form_variation(cfg.k, dk, xi)
    var_A = _form_variation(cfg.A[used], dA[used] if used else None, xi) if used else np.empty((0, 4), object)
    var_phi = _form_variation(phi, rot, xi)

    def bundle(kk, AA, pp):
        dp = np.array([[pp[i].diff(s) for s in range(4)] for i in range(matter.size)], dtype=object)
        return [kk, AA, pp, dp]

    pts = box.points()
    base = [E.program_for(a)(pts, cfg.params) if a.size else np.zeros((len(pts),) + a.shape)
            for a in bundle(cfg.k, cfg.A[used], phi)]
    delta = [E.program_for(a)(pts, cfg.params) if a.size else np.zeros((len(pts),) + a.shape)
             for a in bundle(var_k, var_A, var_phi)]
    mats_used = mats[used]
    h4 = box.cell_volume

    def density(eps):
        k, A, p, dp = (b + eps * d for b, d in zip(base, delta))
        Lam = 1.0 if ablation == "lambda-factor" else None
        return lagrangian_density(k, A, p, dp, mats_used, matter.mass, eta, Lam)

    s0 = density(0.0)

    def D(eps):
        return abs(float(np.sum(density(eps) - s0)) * h4)

    eps = gp.epsilon
    scale = max(1.0, float(np.sum(np.abs(s0))) * h4)
    return ScalingReport(D(eps), D(eps / 2), eps, ablation, scale=scale)
