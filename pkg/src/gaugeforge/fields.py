"""Gauge potentials and tetrads built from expressions, evaluated pointwise.

Index storage: the tetrad array ``k[nu, mu]`` is ``k^nu_mu`` (row = upper,
tensorial index; column = lower index). Derivatives append axes:
``dk[nu, mu, s] = d_s k^nu_mu``. Potentials ``A[a, mu]`` are the frame
components ``calA^(a)_mu``.
"""

from __future__ import annotations

from collections.abc import Mapping
from dataclasses import dataclass, field

import numpy as np

from . import expr as E
from .algebra import AlgebraSpec

DET_THRESHOLD = 1e-10


class SingularTetradError(ArithmeticError):
    def __init__(self, det, x):
        super().__init__(f"singular tetrad: det k = {det:.3e} at x = {list(map(float, x))}")
        self.det = det
        self.x = np.asarray(x, dtype=float)


def _expr_vector(values, n=4, what="potential") -> np.ndarray:
    out = np.empty(n, dtype=object)
    if values is None:
        out[:] = [E.ZERO] * n
        return out
    values = list(values)
    if len(values) != n:
        raise ValueError(f"{what} needs {n} components, got {len(values)}")
    for i, v in enumerate(values):
        out[i] = v if isinstance(v, E.Expr) else E.parse(v) if isinstance(v, str) else E.const(v)
    return out


def identity_tetrad() -> np.ndarray:
    out = np.empty((4, 4), dtype=object)
    for i in range(4):
        for j in range(4):
            out[i, j] = E.ONE if i == j else E.ZERO
    return out


def _derivative_array(arr: np.ndarray) -> np.ndarray:
    out = np.empty(arr.shape + (4,), dtype=object)
    for idx in np.ndindex(arr.shape):
        for s in range(4):
            out[idx + (s,)] = arr[idx].diff(s)
    return out


@dataclass(frozen=True, eq=False)
class FieldConfig:
    """Potentials ``calA^(a)_mu``, tetrad ``k^nu_mu`` and the U(1) split.

    ``a_elec`` and ``b_grav`` are coordinate components; the full U(1)
    coordinate potential is ``q calA^(phi) + a_elec + kappa * b_grav``.
    ``translational`` selects where the translational potentials of the
    extended curvatures come from: ``"tetrad"`` (``delta - q``) or
    ``"explicit"`` (the translation entries of ``potentials``).
    """

    algebra: AlgebraSpec
    A: np.ndarray
    k: np.ndarray
    kappa: float = 0.0
    a_elec: np.ndarray | None = None
    b_grav: np.ndarray | None = None
    translational: str = "tetrad"
    params: Mapping = field(default_factory=dict)

    def __post_init__(self):
        if self.A.shape != (self.algebra.dim, 4):
            raise ValueError(f"potentials have shape {self.A.shape}, expected {(self.algebra.dim, 4)}")
        if self.k.shape != (4, 4):
            raise ValueError("tetrad must be 4x4")
        if self.translational not in ("tetrad", "explicit"):
            raise ValueError("translational must be 'tetrad' or 'explicit'")
        object.__setattr__(self, "a_elec", _expr_vector(self.a_elec) if not isinstance(self.a_elec, np.ndarray) else self.a_elec)
        object.__setattr__(self, "b_grav", _expr_vector(self.b_grav) if not isinstance(self.b_grav, np.ndarray) else self.b_grav)
        p = dict(self.params)
        p.setdefault("kappa", self.kappa)
        object.__setattr__(self, "params", p)
        object.__setattr__(self, "_cache", {})

    @classmethod
    def build(cls, algebra: AlgebraSpec, potentials: Mapping | None = None, tetrad=None,
              kappa: float | None = None, a_elec=None, b_grav=None,
              translational: str = "tetrad", params: Mapping | None = None) -> "FieldConfig":
        """Assemble from ``{label: [4 expressions]}``; ``"10"`` stores ``-calA^(01)``."""
        A = np.empty((algebra.dim, 4), dtype=object)
        A[:] = E.ZERO
        for label, comps in (potentials or {}).items():
            idx, sign = algebra.locate(label)
            vec = _expr_vector(comps, what=f"potential {label!r}")
            for mu in range(4):
                A[idx, mu] = A[idx, mu] + (vec[mu] if sign > 0 else -vec[mu])
        if tetrad is None:
            k = identity_tetrad()
        else:
            rows = list(tetrad)
            if len(rows) != 4:
                raise ValueError("tetrad must have 4 rows")
            k = np.empty((4, 4), dtype=object)
            for i, row in enumerate(rows):
                k[i] = _expr_vector(row, what="tetrad row")
        if kappa is None:
            kappa = algebra.kappa if np.isfinite(algebra.kappa) else 0.0
        return cls(algebra, A, k, float(kappa), a_elec, b_grav, translational, dict(params or {}))

    def replace(self, **changes) -> "FieldConfig":
        kw = dict(algebra=self.algebra, A=self.A, k=self.k, kappa=self.kappa, a_elec=self.a_elec,
                  b_grav=self.b_grav, translational=self.translational, params=self.params)
        kw.update(changes)
        if "kappa" in changes:
            p = dict(kw["params"])
            p["kappa"] = changes["kappa"]
            kw["params"] = p
        return FieldConfig(**kw)

    # compiled evaluators ------------------------------------------------
    def _program(self, key, builder):
        prog = self._cache.get(key)
        if prog is None:
            prog = E.program_for(builder())
            self._cache[key] = prog
        return prog

    def _derivs(self, base: np.ndarray, order: int) -> list[np.ndarray]:
        arrays = [base]
        for _ in range(order):
            arrays.append(_derivative_array(arrays[-1]))
        return arrays

    def eval_array(self, name: str, base: np.ndarray, x, order: int = 0) -> list[np.ndarray]:
        """Values and up to ``order`` exact derivatives of an expression array."""
        out = []
        for n in range(order + 1):
            prog = self._program((name, n), lambda n=n: self._derivs(base, n)[n])
            out.append(prog(x, self.params))
        return out

    def tetrad_values(self, x, order: int = 1):
        return self.eval_array("k", self.k, x, order)

    def potential_values(self, x, order: int = 1):
        return self.eval_array("A", self.A, x, order)

    def u1_split_values(self, x, order: int = 1):
        return (self.eval_array("a_elec", self.a_elec, x, order),
                self.eval_array("b_grav", self.b_grav, x, order))

    @property
    def is_flat_tetrad(self) -> bool:
        return all(self.k[i, j] is (E.ONE if i == j else E.ZERO) for i in range(4) for j in range(4))


@dataclass(frozen=True)
class PointFrame:
    """Tetrad data at one point; derivative arrays carry the derivative index last."""

    x: np.ndarray
    k: np.ndarray
    q: np.ndarray
    Lambda: float
    g_up: np.ndarray
    g_down: np.ndarray
    dk: np.ndarray
    dq: np.ndarray
    dLambda: np.ndarray
    dg_up: np.ndarray
    dg_down: np.ndarray
    ddk: np.ndarray | None = None
    ddq: np.ndarray | None = None


def frame_from_values(x, k, dk, eta, ddk=None) -> PointFrame:
    det = float(np.linalg.det(k))
    if not abs(det) > DET_THRESHOLD:
        raise SingularTetradError(det, x)
    q = np.linalg.inv(k)
    Lam = float(np.linalg.det(q))
    # d q = -q (d k) q ; d det q = -det q tr(q dk)
    dq = -np.einsum("ab,bcs,cd->ads", q, dk, q)
    dLam = -Lam * np.einsum("ab,bas->s", q, dk)
    g_up = k @ eta @ k.T
    g_down = q.T @ eta @ q
    dg_up = np.einsum("ams,mn,bn->abs", dk, eta, k) + np.einsum("am,mn,bns->abs", k, eta, dk)
    dg_down = np.einsum("mas,mn,nb->abs", dq, eta, q) + np.einsum("ma,mn,nbs->abs", q, eta, dq)
    ddq = None
    if ddk is not None:
        # d_s d_t q = q (dk_s q dk_t + dk_t q dk_s - ddk_st) q
        t1 = np.einsum("ab,bcs,cd,det,ef->afst", q, dk, q, dk, q)
        ddq = t1 + t1.transpose(0, 1, 3, 2) - np.einsum("ab,bcst,cd->adst", q, ddk, q)
    return PointFrame(np.asarray(x, float), k, q, Lam, g_up, g_down, dk, dq, dLam, dg_up, dg_down, ddk, ddq)


def frame_at(cfg: FieldConfig, x, order: int = 1) -> PointFrame:
    """Tetrad, inverse ``q``, ``Lambda = det q`` and the metrics at ``x``."""
    x = np.asarray(x, dtype=float)
    vals = cfg.tetrad_values(x, max(order, 1))
    ddk = vals[2] if order >= 2 else None
    return frame_from_values(x, vals[0], vals[1], cfg.algebra.metric.eta, ddk)


def lambda_derivative(q: np.ndarray, Lam: float, power: int = 1) -> np.ndarray:
    """``dL[nu, mu] = d Lambda / d k^nu_mu`` for ``Lambda = det(q)^power``."""
    return -power * Lam * q.T


def lambda_pde_residual(cfg: FieldConfig, spec: AlgebraSpec, x, power: int = 1) -> tuple[float, float]:
    """Residuals of the two first-order PDEs fixing the volume factor.

    (a) ``(k^s_mu d_s X^nu - k^nu_s d_mu X^s) dL/dk^nu_mu``
    (b) ``X^nu k^s_mu dL/dk^nu_mu + L X^s``
    with ``L = det(q)^power``; ``power=1`` is the solution.
    """
    fr = frame_at(cfg, x)
    Lam = fr.Lambda ** power
    dL = lambda_derivative(fr.q, Lam, power)
    prog = E.program_for([list(g) for g in spec.spacetime_action])
    dprog = E.program_for(spec.action_derivatives())
    X = prog(x, cfg.params)        # X[a, nu]
    dX = dprog(x, cfg.params)      # dX[a, nu, s]
    k = fr.k
    coeff = np.einsum("sm,ans->anm", k, dX) - np.einsum("ns,asm->anm", k, dX)
    res_a = np.einsum("anm,nm->a", coeff, dL)
    res_b = np.einsum("an,sm,nm->as", X, k, dL) + Lam * X
    return float(np.max(np.abs(res_a))), float(np.max(np.abs(res_b)))


def translational_potentials(cfg: FieldConfig, x) -> tuple[np.ndarray, np.ndarray]:
    """``(calA^(mu)_nu = k - delta, A^(e)_t = delta - q)`` at ``x``."""
    fr = frame_at(cfg, x)
    eye = np.eye(4)
    return fr.k - eye, eye - fr.q
