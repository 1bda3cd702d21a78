"""Lagrangian densities, field-equation residuals, stress tensors and particle motion."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

import numpy as np

from . import expr as E
from .algebra import LORENTZ_PAIRS, mixing_constants
from .fields import DET_THRESHOLD, FieldConfig, PointFrame, SingularTetradError, frame_at
from .gauge import GridSpec, MatterSpec
from .geometry import (
    CurvatureField,
    extended_curvatures,
    extended_potentials,
    generalized_curvature_from,
    levi_civita_from,
    lorentz_curvature_full,
    torsion_derivative,
    torsion_from,
    u1_curvature_and_derivative,
)

__all__ = [
    "MatterSpec", "NumericalError", "ParticleState", "StressTensors", "Trajectory",
    "covariant_derivative", "el_residual_lorentz", "el_residual_u1", "electrograv_density",
    "generalized_einstein_residual", "integrate_particle", "particle_rhs", "stress_tensors",
    "vacuum_connection", "yang_mills_density",
]


class NumericalError(ArithmeticError):
    pass


# densities -----------------------------------------------------------

def covariant_derivative(cfg: FieldConfig, matter: MatterSpec, phi, dphi, x) -> np.ndarray:
    """``phi^alpha_mu = k^nu_mu phi^alpha_{,nu} - calA^(a)_mu X^alpha_(a)beta phi^beta`` as ``[alpha, mu]``."""
    phi = np.asarray(phi, float)
    dphi = np.asarray(dphi, float)
    if phi.shape != (matter.size,) or dphi.shape != (matter.size, 4):
        raise ValueError(f"matter has {matter.size} components; got phi {phi.shape}, dphi {dphi.shape}")
    k = cfg.tetrad_values(x, 0)[0]
    A = cfg.potential_values(x, 0)[0]
    X = matter.matrices(cfg.algebra)
    return np.einsum("vm,iv->im", k, dphi) - np.einsum("am,aij,j->im", A, X, phi)


def yang_mills_density(curv: CurvatureField, eta: np.ndarray | None = None) -> float:
    """``sum_a F^(a)_{mu nu} F^(a)_{s r} eta^{s mu} eta^{r nu}``."""
    eta = np.diag([1.0, -1.0, -1.0, -1.0]) if eta is None else eta
    F = curv.values
    return float(np.einsum("amn,asr,sm,rn->", F, F, eta, eta))


def electrograv_density(cfg: FieldConfig, x) -> float:
    """``Lambda (g^{mu s} g^{nu r} F^(phi)_{mu nu} F^(phi)_{s r} + k^s_mu k^r_nu F^(mu nu)_{s r})``."""
    fr = frame_at(cfg, x)
    _, FPhi = extended_curvatures(cfg, x)
    FL = lorentz_curvature_full(cfg, x)
    g = fr.g_up
    maxwell = np.einsum("ms,nr,mn,sr->", g, g, FPhi, FPhi)
    lorentz = np.einsum("sm,rn,mnsr->", fr.k, fr.k, FL)
    return float(fr.Lambda * (maxwell + lorentz))


# Maxwell-type equation -------------------------------------------------

def u1_divergence(cfg: FieldConfig, x) -> np.ndarray:
    """``d_s (Lambda F^{mu s})`` with ``F^{mu s} = g^{r mu} g^{l s} F^(phi)_{r l}``."""
    fr = frame_at(cfg, x, 2)
    F, dF = u1_curvature_and_derivative(cfg, x, fr)
    g, dg = fr.g_up, fr.dg_up
    Fup = np.einsum("rm,ls,rl->ms", g, g, F)
    dFup = (np.einsum("rmt,ls,rl->mst", dg, g, F) + np.einsum("rm,lst,rl->mst", g, dg, F)
            + np.einsum("rm,ls,rlt->mst", g, g, dF))
    return np.einsum("s,ms->m", fr.dLambda, Fup) + fr.Lambda * np.einsum("mss->m", dFup)


def el_residual_u1(cfg: FieldConfig, box: GridSpec | None = None) -> tuple[float, list]:
    """Max over the grid of ``|d_s (Lambda F^{mu s})|`` and per-point records."""
    box = box or GridSpec(n=4)
    records = []
    worst = 0.0
    for p in box.points():
        r = float(np.max(np.abs(u1_divergence(cfg, p))))
        records.append({"point": p.tolist(), "residual": r})
        worst = max(worst, r)
    return worst, records


# Lorentz-potential equation and the vacuum connection -----------------

def vacuum_connection_from(T: np.ndarray, eta: np.ndarray, literal: bool = False) -> np.ndarray:
    """``calA_(s r) m = 1/2 T_{m s r} - 1/2 (T_{s r m} - T_{r s m})`` (all frame indices lowered).

    ``literal=True`` uses ``+1/2`` on the bracket instead. That combination is
    not a stationary point of the linear Lagrangian, and it does not match the
    Levi-Civita spin connection.
    """
    Tl = np.einsum("nm,nsr->msr", eta, T)
    first = 0.5 * Tl.transpose(1, 2, 0)
    second = 0.5 * (Tl - Tl.transpose(1, 0, 2))
    return first + second if literal else first - second


def vacuum_connection(cfg: FieldConfig, x, literal: bool = False) -> np.ndarray:
    """Frame Lorentz potentials ``calA^(s r)_m`` (upper pair) solving the vacuum equation."""
    fr = frame_at(cfg, x)
    eta = cfg.algebra.metric.eta
    low = vacuum_connection_from(torsion_from(fr.k, fr.q, fr.dk), eta, literal)
    return np.einsum("as,br,srm->abm", eta, eta, low)


def vacuum_connection_derivative(fr: PointFrame, eta: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Upper-pair vacuum potentials and their coordinate derivatives ``[s, r, m, t]``."""
    T = torsion_from(fr.k, fr.q, fr.dk)
    dT = torsion_derivative(fr)
    A = vacuum_connection_from(T, eta)
    dA = np.stack([vacuum_connection_from(dT[..., t], eta) for t in range(4)], axis=-1)
    up = lambda a: np.einsum("as,br,srm...->abm...", eta, eta, a)  # noqa: E731
    return up(A), up(dA)


def spin_connection_levi_civita(fr: PointFrame) -> np.ndarray:
    """``omega^a_{r m} = q^a_l k^t_m (d_t k^l_r + Gamma^l_{t c} k^c_r)`` (frame indices)."""
    Gam = levi_civita_from(fr.dg_down)
    Gup = np.einsum("ls,tcs->ltc", fr.g_up, Gam)
    return (np.einsum("al,tm,lrt->arm", fr.q, fr.k, fr.dk)
            + np.einsum("al,tm,ltc,cr->arm", fr.q, fr.k, Gup, fr.k))


def with_vacuum_connection(cfg: FieldConfig, x) -> FieldConfig:
    """Copy of ``cfg`` whose Lorentz potentials are the vacuum values frozen at ``x``."""
    A = vacuum_connection(cfg, x)
    pots = {f"{m}{n}": [float(v) for v in A[m, n]] for m, n in LORENTZ_PAIRS}
    spec = cfg.algebra
    newA = cfg.A.copy()
    for label, comps in pots.items():
        idx = spec.index_of(label)
        newA[idx] = [E.const(c) for c in comps]
    return cfg.replace(A=newA)


def el_residual_lorentz(cfg: FieldConfig, x, literal_bracket: bool = False,
                        connection: str = "config") -> float:
    """Max over ``(mu, e, th)`` of the Lorentz-potential field equation.

    ``C^phi_{s,e th} A^(s)_n F^(phi) mu n + k^mu_r T^r_{e th} - k^mu_th T^r_{e r}
    + k^mu_e T^r_{th r} + (k^mu_r k^n_th - k^mu_th k^n_r) A^(r_e)_n
    - (k^mu_r k^n_e - k^mu_e k^n_r) A^(r_th)_n``.

    The last bracket is the (e, th) mirror of the one before it. With
    ``literal_bracket`` it is ``(k^mu_e k^n_r + k^mu_r k^n_e)`` instead.
    ``connection="vacuum"`` substitutes :func:`vacuum_connection` at ``x``.
    """
    x = np.asarray(x, float)
    eta = cfg.algebra.metric.eta
    fr = frame_at(cfg, x)
    k, q = fr.k, fr.q
    T = torsion_from(k, q, fr.dk)
    ep = extended_potentials(cfg, x, fr=fr)
    if connection == "vacuum":
        calL = vacuum_connection(cfg, x)
        L = np.einsum("ern,nm->erm", calL, q)
    elif connection == "config":
        L = ep.lorentz
    else:
        raise ValueError("connection must be 'config' or 'vacuum'")
    _, FPhi = extended_curvatures(cfg, x)
    Fup = np.einsum("rm,ln,rl->mn", fr.g_up, fr.g_up, FPhi)
    Cphi = mixing_constants(cfg.algebra)               # [s, e, th]
    Lm = np.einsum("ek,rkn->ren", eta, L)               # A^(r_e)_n
    tr = np.einsum("rrt->t", T)                         # T^r_{r t}
    res = np.einsum("set,sn,mn->met", Cphi, ep.trans, Fup)
    res = res + np.einsum("mr,ret->met", k, T)
    res = res + np.einsum("mt,e->met", k, tr) - np.einsum("me,t->met", k, tr)
    res = res + np.einsum("mr,nt,ren->met", k, k, Lm) - np.einsum("mt,nr,ren->met", k, k, Lm)
    if literal_bracket:
        res = res - np.einsum("me,nr,rtn->met", k, k, Lm) - np.einsum("mr,ne,rtn->met", k, k, Lm)
    else:
        res = res - np.einsum("mr,ne,rtn->met", k, k, Lm) + np.einsum("me,nr,rtn->met", k, k, Lm)
    return float(np.max(np.abs(res)))


# stress tensors --------------------------------------------------------

@dataclass(frozen=True)
class StressTensors:
    TPhi: np.ndarray   # [nu, mu] = T^nu(phi)_mu
    TMix: np.ndarray   # [nu, mu] = T^nu(mix)_mu


def stress_tensors_from(FPhi, g_up, q, Cphi, L) -> StressTensors:
    """``T(phi) = -F^nu_s F^s_mu + 1/2 delta F_{s l} F^{s l}`` with ``F^nu_s = g^{l nu} F_{s l}``;
    ``T(mix) = 1/2 C^phi_{mu, th e} q^nu_r F^{r t} A^(th e)_t``."""
    mixed = np.einsum("ln,sl->ns", g_up, FPhi)       # F^nu_s
    Fup = np.einsum("sa,lb,sl->ab", g_up, g_up, FPhi)
    inv = float(np.einsum("sl,sl->", FPhi, Fup))
    TPhi = -mixed @ mixed + 0.5 * np.eye(4) * inv
    TMix = 0.5 * np.einsum("mhe,nr,rt,het->nm", Cphi, q, Fup, L)
    return StressTensors(TPhi, TMix)


def stress_tensors(cfg: FieldConfig, x) -> StressTensors:
    fr = frame_at(cfg, x)
    ep = extended_potentials(cfg, x, fr=fr)
    _, FPhi = extended_curvatures(cfg, x)
    return stress_tensors_from(FPhi, fr.g_up, fr.q, mixing_constants(cfg.algebra), ep.lorentz)


# generalized Einstein equation ---------------------------------------

def _lorentz_generalized_curvature(cfg: FieldConfig, x, connection: str):
    """Upper-pair ``calF^(s r)_{mu nu}`` with frame potentials from the config or the vacuum."""
    eta = cfg.algebra.metric.eta
    fr = frame_at(cfg, x, 2)
    T = torsion_from(fr.k, fr.q, fr.dk)
    if connection == "vacuum":
        A, dA = vacuum_connection_derivative(fr, eta)
    else:
        spec = cfg.algebra
        vals = cfg.potential_values(x, 1)
        A = np.zeros((4, 4, 4))
        dA = np.zeros((4, 4, 4, 4))
        for m, n in LORENTZ_PAIRS:
            i = spec.index_of(f"{m}{n}")
            A[m, n], A[n, m] = vals[0][i], -vals[0][i]
            dA[m, n], dA[n, m] = vals[1][i], -vals[1][i]
    # generic curvature on the stored Lorentz labels, then back to ordered pairs
    spec = cfg.algebra
    li = [spec.index_of(f"{m}{n}") for m, n in LORENTZ_PAIRS]
    Cs = spec.C_std[np.ix_(li, li, li)]
    pick = lambda a: np.stack([a[m, n] for m, n in LORENTZ_PAIRS])  # noqa: E731
    Fs = generalized_curvature_from(pick(A), pick(dA), fr.k, T, Cs)
    F = np.zeros((4, 4, 4, 4))
    for i, (m, n) in enumerate(LORENTZ_PAIRS):
        F[m, n], F[n, m] = Fs[i], -Fs[i]
    return fr, F


def generalized_einstein_residual(cfg: FieldConfig, x, matter: MatterSpec | None = None,
                                  L0: str = "linear", connection: str = "vacuum") -> float:
    """Max over ``(e, mu)`` of
    ``calF^(s r)_{mu n} dL0/dcalF^(s r)_{e n} - 1/2 delta^e_mu L0 + 1/2 k^e_x t^x_mu``.

    ``L0 = Lambda s`` (``"linear"``) or ``Lambda s^2`` (``"quadratic"``) with
    ``s = calF^(m n)_{m n}``. Without ``matter`` the source ``t`` is zero.
    """
    if L0 not in ("linear", "quadratic"):
        raise ValueError(f"unsupported L0 form {L0!r}; use 'linear' or 'quadratic'")
    fr, F = _lorentz_generalized_curvature(cfg, x, connection)
    Lam = fr.Lambda
    s = float(np.einsum("mnmn->", F))
    contracted = np.einsum("enmn->em", F)               # calF^(e n)_{mu n}
    if L0 == "linear":
        lhs = Lam * (contracted - 0.5 * np.eye(4) * s)
    else:
        lhs = Lam * (2.0 * s * contracted - 0.5 * np.eye(4) * s * s)
    if matter is not None:
        lhs = lhs + 0.5 * fr.k @ matter_source(cfg, matter, x, fr)
    return float(np.max(np.abs(lhs)))


def matter_source(cfg: FieldConfig, matter: MatterSpec, x, fr: PointFrame | None = None) -> np.ndarray:
    """``t^mu_nu = q^mu_s (-delta^s_nu Lhat + dLhat/dphi_{,s} . phi_r q^r_nu)`` for the scalar multiplet."""
    fr = fr or frame_at(cfg, x)
    eta = cfg.algebra.metric.eta
    prog = E.program_for(list(matter.phi))
    dprog = E.program_for([[p.diff(s) for s in range(4)] for p in matter.phi])
    phi, dphi = prog(x, cfg.params), dprog(x, cfg.params)
    cov = covariant_derivative(cfg, matter, phi, dphi, x)        # [i, mu]
    Lhat = fr.Lambda * (0.5 * np.einsum("mn,im,in->", eta, cov, cov)
                        - 0.5 * matter.mass ** 2 * float(phi @ phi))
    dL = fr.Lambda * np.einsum("mn,in,sm->is", eta, cov, fr.k)   # dLhat / dphi^i_{,s}
    inner = -np.eye(4) * Lhat + np.einsum("is,ir,rn->sn", dL, cov, fr.q)
    return fr.q @ inner


# particle motion -----------------------------------------------------

@dataclass(frozen=True)
class ParticleState:
    x: np.ndarray
    u: np.ndarray
    m: float = 1.0
    e: float = 0.0
    kappa: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "x", np.asarray(self.x, float).copy())
        object.__setattr__(self, "u", np.asarray(self.u, float).copy())


@dataclass(frozen=True)
class Trajectory:
    tau: np.ndarray
    x: np.ndarray
    u: np.ndarray
    norm: np.ndarray

    HEADER = ("tau", "x0", "x1", "x2", "x3", "u0", "u1", "u2", "u3", "norm")

    def to_csv(self, path=None) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.HEADER)
        for t, x, u, n in zip(self.tau, self.x, self.u, self.norm):
            w.writerow([f"{v:.17g}" for v in (t, *x, *u, n)])
        text = buf.getvalue()
        if path is not None:
            with open(path, "w", encoding="utf-8", newline="") as fh:
                fh.write(text)
        return text

    @property
    def max_norm_drift(self) -> float:
        return float(np.max(np.abs(self.norm - self.norm[0])))


class _ForceField:
    """Compiled metric and potential derivatives for the motion equation."""

    def __init__(self, cfg: FieldConfig, a_elec=None, b_grav=None):
        self.cfg = cfg
        self.eta = cfg.algebra.metric.eta
        a = cfg.a_elec if a_elec is None else a_elec
        b = cfg.b_grav if b_grav is None else b_grav
        a = [E.parse(v) if isinstance(v, str) else E.as_expr(v) for v in a]
        b = [E.parse(v) if isinstance(v, str) else E.as_expr(v) for v in b]
        self.dA = E.program_for([[c.diff(s) for s in range(4)] for c in a])
        self.dB = E.program_for([[c.diff(s) for s in range(4)] for c in b])
        self.flat = cfg.is_flat_tetrad

    def metric(self, x):
        if self.flat:
            return self.eta, None
        fr = frame_at(self.cfg, x)
        return fr.g_down, levi_civita_from(fr.dg_down)

    def rhs(self, x, u, m, e, kappa):
        g, Gam = self.metric(x)
        dA = self.dA(x, self.cfg.params)         # [mu, s] = d_s A_mu
        dB = self.dB(x, self.cfg.params)
        Fel = dA - dA.T                          # F_{mu s} = A_{mu,s} - A_{s,mu}
        Fgr = dB - dB.T                          # d_s B_mu - d_mu B_s
        force = -(e / m) * (u @ Fel) - (kappa * e / m) * (u @ Fgr)
        if Gam is not None:
            force = force - np.einsum("m,n,mns->s", u, u, Gam)
        det = np.linalg.det(g)
        if not abs(det) > DET_THRESHOLD:
            raise SingularTetradError(det, x)
        return np.linalg.solve(g, force)

    def norm(self, x, u) -> float:
        g, _ = self.metric(x)
        return float(u @ g @ u)


def particle_rhs(cfg: FieldConfig, state: ParticleState, a_elec=None, b_grav=None) -> np.ndarray:
    """``du/dtau`` at the state's position."""
    return _ForceField(cfg, a_elec, b_grav).rhs(state.x, state.u, state.m, state.e, state.kappa)


def integrate_particle(cfg: FieldConfig, state0: ParticleState, a_elec=None, b_grav=None,
                       tau_max: float = 1.0, dt: float | None = None,
                       drift_tol: float = 1e-6) -> Trajectory:
    """Classic RK4 in proper time for ``(x, u)``; each stage solves ``g a = force``."""
    if not tau_max > 0:
        raise ValueError("tau_max must be positive")
    dt = tau_max / 1e4 if dt is None else float(dt)
    if not dt > 0:
        raise ValueError("dt must be positive")
    nsteps = int(math.ceil(tau_max / dt - 1e-9))
    ff = _ForceField(cfg, a_elec, b_grav)
    m, e, kap = state0.m, state0.e, state0.kappa

    def f(y):
        return np.concatenate([y[4:], ff.rhs(y[:4], y[4:], m, e, kap)])

    y = np.concatenate([state0.x, state0.u])
    taus = np.empty(nsteps + 1)
    ys = np.empty((nsteps + 1, 8))
    norms = np.empty(nsteps + 1)
    taus[0], ys[0], norms[0] = 0.0, y, ff.norm(y[:4], y[4:])
    for i in range(nsteps):
        h = min(dt, tau_max - i * dt) if i == nsteps - 1 else dt
        k1 = f(y)
        k2 = f(y + 0.5 * h * k1)
        k3 = f(y + 0.5 * h * k2)
        k4 = f(y + h * k3)
        y = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if not np.all(np.isfinite(y)):
            raise NumericalError(f"non-finite state at step {i + 1}")
        n = ff.norm(y[:4], y[4:])
        if abs(n - norms[i]) > drift_tol:
            raise NumericalError(f"norm drift {abs(n - norms[i]):.3e} exceeds {drift_tol:g} at step {i + 1}")
        taus[i + 1] = taus[i] + h
        ys[i + 1] = y
        norms[i + 1] = n
    return Trajectory(taus, ys[:, :4], ys[:, 4:], norms)
