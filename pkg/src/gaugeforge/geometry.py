"""Curvatures, torsion and connections at a point.

All derivatives come from exact expression differentiation. Curvature
arrays are indexed ``F[a, mu, nu]`` and the derivative convention follows
``A_{mu,nu} = d A_mu / d x^nu``, so ``F = A_{mu,nu} - A_{nu,mu} + ...``.
Quadratic terms use the usual-ordering constants ``AlgebraSpec.C_std``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import expr as E
from .algebra import PHI_LABEL, AlgebraSpec
from .fields import FieldConfig, PointFrame, frame_at


class GeometryError(ValueError):
    pass


@dataclass(frozen=True)
class CurvatureField:
    values: np.ndarray          # (n, 4, 4), antisymmetric in the last two axes
    labels: tuple
    flavor: str                 # internal | generalized | extended

    def __getitem__(self, label) -> np.ndarray:
        label = "".join(map(str, label)) if isinstance(label, (tuple, list)) else str(label)
        if label in self.labels:
            return self.values[self.labels.index(label)]
        if len(label) == 2 and label[::-1] in self.labels:
            return -self.values[self.labels.index(label[::-1])]
        raise KeyError(label)


@dataclass(frozen=True)
class TorsionField:
    T: np.ndarray               # T[s, mu, nu] = T^s_{mu nu}


# building blocks on plain arrays -------------------------------------

def antisym(a: np.ndarray) -> np.ndarray:
    return a - np.swapaxes(a, -1, -2)


def quadratic_term(Cs: np.ndarray, A: np.ndarray) -> np.ndarray:
    """``1/2 C^a_bc (A^b_mu A^c_nu - A^b_nu A^c_mu)`` summed over all ordered (b, c)."""
    t = np.einsum("abc,bm,cn->amn", Cs, A, A)
    return 0.5 * (t - np.swapaxes(t, -1, -2))


def curvature_from(A: np.ndarray, dA: np.ndarray, Cs: np.ndarray, quadratic: bool = True) -> np.ndarray:
    """``F^a_{mu nu} = A_{mu,nu} - A_{nu,mu} + 1/2 C (A A - A A)``; ``dA[a, mu, s] = d_s A_mu``."""
    F = antisym(dA)
    if quadratic:
        F = F + quadratic_term(Cs, A)
    return F


def torsion_from(k: np.ndarray, q: np.ndarray, dk: np.ndarray) -> np.ndarray:
    """``T^s_{mu nu} = q^s_r (k^r_{mu,t} k^t_nu - k^r_{nu,t} k^t_mu)``."""
    inner = np.einsum("rmt,tn->rmn", dk, k)
    return np.einsum("sr,rmn->smn", q, antisym(inner))


def torsion_derivative(fr: PointFrame) -> np.ndarray:
    """``dT[s, mu, nu, l] = d_l T^s_{mu nu}``; needs a frame built with ``order=2``."""
    if fr.ddk is None:
        raise GeometryError("torsion derivative needs second tetrad derivatives (frame order 2)")
    inner = np.einsum("rmt,tn->rmn", fr.dk, fr.k)
    dinner = np.einsum("rmtl,tn->rmnl", fr.ddk, fr.k) + np.einsum("rmt,tnl->rmnl", fr.dk, fr.dk)
    inner = antisym(inner)
    dinner = dinner - dinner.transpose(0, 2, 1, 3)
    return np.einsum("srl,rmn->smnl", fr.dq, inner) + np.einsum("sr,rmnl->smnl", fr.q, dinner)


def generalized_curvature_from(A, dA, k, T, Cs, quadratic: bool = True) -> np.ndarray:
    """``calF^a_{mu nu} = calA_{mu,s} k^s_nu - calA_{nu,s} k^s_mu + 1/2 C(..) - calA_s T^s_{mu nu}``."""
    F = antisym(np.einsum("ams,sn->amn", dA, k))
    if quadratic:
        F = F + quadratic_term(Cs, A)
    return F - np.einsum("as,smn->amn", A, T)


def frame_to_coordinate(fr: PointFrame, calA, dcalA=None, ddcalA=None):
    """``A_mu = q^nu_mu calA_nu`` with derivatives (product rule through q)."""
    A = np.einsum("...n,nm->...m", calA, fr.q)
    dA = ddA = None
    if dcalA is not None:
        dA = np.einsum("...n,nms->...ms", calA, fr.dq) + np.einsum("...ns,nm->...ms", dcalA, fr.q)
    if ddcalA is not None:
        if fr.ddq is None:
            raise GeometryError("second derivatives need a frame built with order=2")
        ddA = (np.einsum("...n,nmst->...mst", calA, fr.ddq)
               + np.einsum("...nt,nms->...mst", dcalA, fr.dq)
               + np.einsum("...ns,nmt->...mst", dcalA, fr.dq)
               + np.einsum("...nst,nm->...mst", ddcalA, fr.q))
    return A, dA, ddA


# operations on field configurations -----------------------------------

def internal_curvature(cfg: FieldConfig, x, quadratic: bool = True) -> CurvatureField:
    """Yang-Mills curvature of ``calA`` with the tetrad taken as the identity."""
    A, dA = cfg.potential_values(x, 1)
    F = curvature_from(A, dA, cfg.algebra.C_std, quadratic)
    return CurvatureField(F, cfg.algebra.labels, "internal")


def spin_connection(cfg: FieldConfig, rep_name: str, x) -> np.ndarray:
    """``Gamma[alpha, beta, mu] = calA^(a)_mu X^alpha_(a) beta``."""
    X = cfg.algebra.rep(rep_name)
    A = cfg.potential_values(x, 0)[0]
    return np.einsum("am,aij->ijm", A, X)


def curvature_tensor(cfg: FieldConfig, rep_name: str, x) -> np.ndarray:
    """``R[alpha, mu, nu, beta] = F^(a)_{mu nu} X^alpha_(a) beta``."""
    X = cfg.algebra.rep(rep_name)
    F = internal_curvature(cfg, x).values
    return np.einsum("amn,aij->imnj", F, X)


def curvature_tensor_from_connection(cfg: FieldConfig, rep_name: str, x) -> np.ndarray:
    """Same tensor from the connection matrices alone:
    ``d_nu Gamma_mu - d_mu Gamma_nu + [Gamma_mu, Gamma_nu]``.
    """
    X = cfg.algebra.rep(rep_name)
    A, dA = cfg.potential_values(x, 1)
    G = np.einsum("am,aij->mij", A, X)          # Gamma_mu as matrices
    dG = np.einsum("ams,aij->msij", dA, X)      # d_s Gamma_mu
    deriv = dG - dG.transpose(1, 0, 2, 3)       # [mu, nu] -> d_nu G_mu - d_mu G_nu
    comm = np.einsum("mij,njk->mnik", G, G)
    comm = comm - comm.transpose(1, 0, 2, 3)
    return (deriv + comm).transpose(2, 0, 1, 3)


def torsion(cfg: FieldConfig, x) -> TorsionField:
    fr = frame_at(cfg, x)
    return TorsionField(torsion_from(fr.k, fr.q, fr.dk))


def generalized_curvature(cfg: FieldConfig, x, quadratic: bool = True) -> CurvatureField:
    fr = frame_at(cfg, x)
    A, dA = cfg.potential_values(x, 1)
    T = torsion_from(fr.k, fr.q, fr.dk)
    F = generalized_curvature_from(A, dA, fr.k, T, cfg.algebra.C_std, quadratic)
    return CurvatureField(F, cfg.algebra.labels, "generalized")


def kk_contracted_curvature(cfg: FieldConfig, x) -> CurvatureField:
    """``k^s_mu k^r_nu F^(a)_{s r}`` with ``F`` built from ``A = q calA``."""
    fr = frame_at(cfg, x)
    calA, dcalA = cfg.potential_values(x, 1)
    A, dA, _ = frame_to_coordinate(fr, calA, dcalA)
    F = curvature_from(A, dA, cfg.algebra.C_std)
    return CurvatureField(np.einsum("sm,rn,asr->amn", fr.k, fr.k, F), cfg.algebra.labels, "generalized")


# extended (pseudo-extended Poincare) curvatures ----------------------

@dataclass(frozen=True)
class ExtendedPotentials:
    """Coordinate components of the potentials entering the extended curvatures."""

    trans: np.ndarray          # A^(e)_t            (4, 4)
    dtrans: np.ndarray         # d_s A^(e)_t        (4, 4, 4)
    lorentz: np.ndarray        # A^(e r)_mu, all ordered pairs (4, 4, 4)
    dlorentz: np.ndarray       # (4, 4, 4, 4)
    phi: np.ndarray            # total U(1) potential A^(phi)_mu
    dphi: np.ndarray
    elec: np.ndarray           # electromagnetic part (incl. q calA^(phi))
    delec: np.ndarray
    bgrav: np.ndarray
    dbgrav: np.ndarray
    ddphi: np.ndarray | None = None
    ddlorentz: np.ndarray | None = None
    ddtrans: np.ndarray | None = None


def _require_extended(spec: AlgebraSpec):
    if not (spec.has_kind("lorentz") and spec.has_kind("translation")):
        raise GeometryError(f"algebra {spec.name!r} lacks Lorentz/translation generators")


def extended_potentials(cfg: FieldConfig, x, order: int = 1, fr: PointFrame | None = None) -> ExtendedPotentials:
    spec = cfg.algebra
    _require_extended(spec)
    fr = fr or frame_at(cfg, x, order)
    vals = cfg.potential_values(x, order)
    calA, dcalA = vals[0], vals[1]
    ddcalA = vals[2] if order >= 2 else None
    A, dA, ddA = frame_to_coordinate(fr, calA, dcalA, ddcalA)

    L = np.zeros((4, 4, 4))
    dL = np.zeros((4, 4, 4, 4))
    ddL = np.zeros((4, 4, 4, 4, 4)) if order >= 2 else None
    for e in range(4):
        for r in range(4):
            if e == r:
                continue
            idx, sign = spec.locate(f"{e}{r}")
            L[e, r] = sign * A[idx]
            dL[e, r] = sign * dA[idx]
            if ddL is not None:
                ddL[e, r] = sign * ddA[idx]

    if cfg.translational == "tetrad":
        trans = np.eye(4) - fr.q
        dtrans = -fr.dq
        ddtrans = -fr.ddq if order >= 2 else None
    else:
        ti = [spec.index_of(str(m)) for m in range(4)]
        trans, dtrans = A[ti], dA[ti]
        ddtrans = ddA[ti] if order >= 2 else None

    ev, bv = cfg.u1_split_values(x, order)
    kappa = cfg.kappa
    if PHI_LABEL in spec.labels:
        p = spec.index_of(PHI_LABEL)
        elec, delec = A[p] + ev[0], dA[p] + ev[1]
        ddelec = ddA[p] + ev[2] if order >= 2 else None
    else:
        elec, delec = ev[0], ev[1]
        ddelec = ev[2] if order >= 2 else None
    phi = elec + kappa * bv[0]
    dphi = delec + kappa * bv[1]
    ddphi = ddelec + kappa * bv[2] if order >= 2 else None
    return ExtendedPotentials(trans, dtrans, L, dL, phi, dphi, elec, delec, bv[0], bv[1],
                              ddphi, ddL, ddtrans)


def lorentz_curvature_from(L: np.ndarray, dL: np.ndarray, eta: np.ndarray) -> np.ndarray:
    """``F^(e r)_{mu nu} = A^(e r)_{mu,nu} - A^(e r)_{nu,mu}
    - eta_ts (A^(e t)_mu A^(s r)_nu - A^(e t)_nu A^(s r)_mu)`` for all ordered pairs."""
    quad = np.einsum("ts,etx,sry->erxy", eta, L, L)
    return antisym(dL) - antisym(quad)


def mixing_term(trans: np.ndarray, L: np.ndarray, eta: np.ndarray) -> np.ndarray:
    """``eta_ij (A^(j)_mu A^(0i)_nu - A^(j)_nu A^(0i)_mu)``, spatial i, j."""
    t = np.einsum("ij,jm,in->mn", eta[1:, 1:], trans[1:], L[0, 1:])
    return antisym(t)


def mixing_term_derivative(trans, dtrans, L, dL, eta) -> np.ndarray:
    t = (np.einsum("ij,jms,in->mns", eta[1:, 1:], dtrans[1:], L[0, 1:])
         + np.einsum("ij,jm,ins->mns", eta[1:, 1:], trans[1:], dL[0, 1:]))
    return t - t.transpose(1, 0, 2)


def extended_curvatures(cfg: FieldConfig, x) -> tuple[CurvatureField, np.ndarray]:
    """Lorentz curvature (stored pairs ``01..23``) and the U(1) curvature

    ``F^(phi) = A^(phi)_{mu,nu} - A^(phi)_{nu,mu} + kappa eta_ij (A^(j) A^(0i) - ...)``.
    """
    eta = cfg.algebra.metric.eta
    ep = extended_potentials(cfg, x)
    FL = lorentz_curvature_from(ep.lorentz, ep.dlorentz, eta)
    from .algebra import LORENTZ_LABELS, LORENTZ_PAIRS

    stored = np.array([FL[m, n] for m, n in LORENTZ_PAIRS])
    FPhi = antisym(ep.dphi) + cfg.kappa * mixing_term(ep.trans, ep.lorentz, eta)
    return CurvatureField(stored, LORENTZ_LABELS, "extended"), FPhi


def lorentz_curvature_full(cfg: FieldConfig, x) -> np.ndarray:
    """``F[e, r, mu, nu]`` for all ordered Lorentz pairs."""
    ep = extended_potentials(cfg, x)
    return lorentz_curvature_from(ep.lorentz, ep.dlorentz, cfg.algebra.metric.eta)


def u1_curvature_and_derivative(cfg: FieldConfig, x, fr: PointFrame | None = None):
    """``(F^(phi)_{mu nu}, d_s F^(phi)_{mu nu})`` using second derivatives."""
    eta = cfg.algebra.metric.eta
    fr = fr or frame_at(cfg, x, 2)
    ep = extended_potentials(cfg, x, order=2, fr=fr)
    F = antisym(ep.dphi) + cfg.kappa * mixing_term(ep.trans, ep.lorentz, eta)
    ddphi = ep.ddphi                               # [mu, nu, s] = d_s d_nu A_mu
    dF = ddphi - ddphi.transpose(1, 0, 2)
    dF = dF + cfg.kappa * mixing_term_derivative(ep.trans, ep.dtrans, ep.lorentz, ep.dlorentz, eta)
    return F, dF


def split_u1(cfg: FieldConfig, x) -> tuple[np.ndarray, np.ndarray]:
    """``(F^(elec), F^(grav))`` with ``F^(phi) = F^(elec) + kappa F^(grav)``."""
    eta = cfg.algebra.metric.eta
    ep = extended_potentials(cfg, x)
    Felec = antisym(ep.delec)
    Fgrav = antisym(ep.dbgrav) + mixing_term(ep.trans, ep.lorentz, eta)
    return Felec, Fgrav


# metric connection and the weak-field gravitational potential ---------

def levi_civita_from(dg_down: np.ndarray) -> np.ndarray:
    """``Gamma[mu, nu, s] = 1/2 (d_mu g_{nu s} + d_nu g_{mu s} - d_s g_{mu nu})``."""
    d = dg_down  # d[a, b, s] = d_s g_ab
    return 0.5 * (d.transpose(2, 0, 1) + d.transpose(0, 2, 1) - d)


def levi_civita(cfg: FieldConfig, x) -> np.ndarray:
    return levi_civita_from(frame_at(cfg, x).dg_down)


def b_grav_nonrel(g_up: np.ndarray, eta: np.ndarray | None = None) -> np.ndarray:
    """``(B^0, B^i) = (-|h|^2 / 8, -h^i / 2)`` with ``h^i = g^{0i} - eta^{0i}``."""
    eta = np.diag([1.0, -1.0, -1.0, -1.0]) if eta is None else eta
    h = np.asarray(g_up, dtype=float)[0, 1:] - eta[0, 1:]
    return np.concatenate(([-np.dot(h, h) / 8.0], -h / 2.0))


def b_grav_expressions(h, eta: np.ndarray | None = None) -> list:
    """Lower-index ``B_mu = eta_{mu nu} B^nu`` as expressions of a prescribed ``h^i``."""
    eta = np.diag([1.0, -1.0, -1.0, -1.0]) if eta is None else eta
    h = [E.parse(v) if isinstance(v, str) else E.as_expr(v) for v in h]
    up = [-(h[0] * h[0] + h[1] * h[1] + h[2] * h[2]) / 8.0] + [-hi / 2.0 for hi in h]
    return [float(eta[m, m]) * up[m] for m in range(4)]
