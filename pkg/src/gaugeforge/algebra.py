"""Lie algebras given by structure constants, matrix representations and
space-time actions: Poincare and its central pseudo-extension.

Storage conventions
-------------------
``C[a, b, c]`` holds ``C^a_{bc}``. With ``reversed_bracket=True`` (default)
the constants are those of the ordering ``X_b X_a - X_a X_b = C^c_{ab} X_c``;
with ``False`` they refer to the usual ``[X_b, X_c] = C^a_{bc} X_a``.
:attr:`AlgebraSpec.C_std` always returns the usual-ordering constants and is
what the field formulas consume, so physics does not depend on the switch.

Lorentz generators are stored once per pair in the order
``01, 02, 03, 12, 13, 23``; asking for ``"10"`` returns the ``"01"`` slot with
a sign of -1.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .expr import ZERO, Expr, const, var

LORENTZ_PAIRS = ((0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3))
TRANSLATION_LABELS = ("0", "1", "2", "3")
LORENTZ_LABELS = tuple(f"{m}{n}" for m, n in LORENTZ_PAIRS)
PHI_LABEL = "phi"


class AlgebraError(ValueError):
    pass


@dataclass(frozen=True)
class MetricConvention:
    """Signature ``diag(+1, -1, -1, -1)`` and ``c = 1`` in code units."""

    eta: np.ndarray = field(default_factory=lambda: np.diag([1.0, -1.0, -1.0, -1.0]))
    c: float = 1.0

    def __post_init__(self):
        eta = np.asarray(self.eta, dtype=float)
        if eta.shape != (4, 4) or not np.array_equal(eta, np.diag(np.diag(eta))):
            raise AlgebraError("eta must be a diagonal 4x4 array")
        eta.setflags(write=False)
        object.__setattr__(self, "eta", eta)


DEFAULT_METRIC = MetricConvention()


@dataclass(frozen=True)
class LambdaVector:
    """Coadjoint vector fixing the central term; defaults to ``-kappa * delta^0_mu``.

    Physical context: ``|kappa| <= 6e-12 kg/C``; code units are free.
    """

    kappa: float = 0.0
    lam: tuple | None = None

    @property
    def vector(self) -> np.ndarray:
        if self.lam is not None:
            v = np.asarray(self.lam, dtype=float)
            if v.shape != (4,):
                raise AlgebraError("lambda must be a 4-covector")
            return v
        return np.array([-self.kappa, 0.0, 0.0, 0.0])


@dataclass(frozen=True, eq=False)
class AlgebraSpec:
    labels: tuple
    C: np.ndarray
    kinds: tuple
    reps: dict = field(default_factory=dict)
    spacetime_action: tuple | None = None
    metric: MetricConvention = DEFAULT_METRIC
    reversed_bracket: bool = True
    name: str = "custom"
    kappa: float = 0.0

    def __post_init__(self):
        C = np.array(self.C, dtype=float)
        C.setflags(write=False)
        object.__setattr__(self, "C", C)
        reps = {}
        for k, v in self.reps.items():
            m = np.array(v, dtype=float)
            m.setflags(write=False)
            reps[k] = m
        object.__setattr__(self, "reps", reps)
        object.__setattr__(self, "labels", tuple(str(s) for s in self.labels))
        object.__setattr__(self, "_index", {s: i for i, s in enumerate(self.labels)})

    @property
    def dim(self) -> int:
        return len(self.labels)

    @property
    def C_std(self) -> np.ndarray:
        """Structure constants for ``[X_b, X_c] = C^a_{bc} X_a``."""
        return -self.C if self.reversed_bracket else self.C

    def with_bracket(self, reversed_bracket: bool) -> "AlgebraSpec":
        if reversed_bracket == self.reversed_bracket:
            return self
        return AlgebraSpec(
            self.labels, -self.C, self.kinds, self.reps, self.spacetime_action,
            self.metric, reversed_bracket, self.name, self.kappa,
        )

    def locate(self, label) -> tuple[int, float]:
        """Index and sign of a generator label (``"10"`` -> slot of ``"01"``, -1)."""
        if isinstance(label, (tuple, list)):
            label = "".join(str(i) for i in label)
        label = str(label)
        idx = self._index.get(label)
        if idx is not None:
            return idx, 1.0
        if len(label) == 2 and label[::-1] in self._index:
            idx = self._index[label[::-1]]
            if self.kinds[idx] == "lorentz":
                return idx, -1.0
        if label.lower() in ("phi", "xi", "u1") and PHI_LABEL in self._index:
            return self._index[PHI_LABEL], 1.0
        raise AlgebraError(f"unknown generator label {label!r} in algebra {self.name!r}")

    def index_of(self, label) -> int:
        return self.locate(label)[0]

    def has_kind(self, kind: str) -> bool:
        return kind in self.kinds

    def indices(self, kind: str) -> list[int]:
        return [i for i, k in enumerate(self.kinds) if k == kind]

    def rep(self, name: str) -> np.ndarray:
        try:
            return self.reps[name]
        except KeyError:
            raise AlgebraError(
                f"algebra {self.name!r} has no representation {name!r}; have {sorted(self.reps)}"
            ) from None

    def action_derivatives(self) -> list:
        """``dX[a][nu][sigma] = d X^nu_(a) / d x^sigma`` as expressions."""
        if self.spacetime_action is None:
            raise AlgebraError(f"algebra {self.name!r} carries no space-time action")
        return [[[X.diff(s) for s in range(4)] for X in gen] for gen in self.spacetime_action]


# consistency checks ---------------------------------------------------

def _check_shape(spec: AlgebraSpec):
    n = spec.dim
    if spec.C.shape != (n, n, n):
        raise AlgebraError(f"structure constants have shape {spec.C.shape}, expected {(n, n, n)}")


def jacobi_tensor(spec: AlgebraSpec) -> np.ndarray:
    """``J[d, a, b, c] = sum_e C^e_ab C^d_ec + C^e_bc C^d_ea + C^e_ca C^d_eb``."""
    _check_shape(spec)
    C = spec.C
    t = np.einsum("eab,dec->dabc", C, C)
    return t + t.transpose(0, 2, 3, 1) + t.transpose(0, 3, 1, 2)


def jacobi_residual(spec: AlgebraSpec) -> float:
    J = jacobi_tensor(spec)
    return float(np.max(np.abs(J))) if J.size else 0.0


def jacobi_violations(spec: AlgebraSpec, tol: float = 1e-12) -> list[tuple]:
    """Generator triples ``(a, b, c)`` whose Jacobi sum exceeds ``tol``."""
    J = np.max(np.abs(jacobi_tensor(spec)), axis=0)
    out = []
    for a, b, c in zip(*np.nonzero(J > tol)):
        if a < b < c:
            out.append((spec.labels[a], spec.labels[b], spec.labels[c], float(J[a, b, c])))
    return out


def antisymmetry_residual(spec: AlgebraSpec) -> float:
    _check_shape(spec)
    return float(np.max(np.abs(spec.C + spec.C.transpose(0, 2, 1)))) if spec.dim else 0.0


def rep_commutator_residual(spec: AlgebraSpec, rep_name: str) -> float:
    """Max over generator pairs of the mismatch in the commutation relations.

    With the default reversed bracket this is ``X_b X_a - X_a X_b - C^c_ab X_c``.
    """
    X = spec.rep(rep_name)
    if X.shape[0] != spec.dim:
        raise AlgebraError(f"representation {rep_name!r} has {X.shape[0]} matrices for {spec.dim} generators")
    prod = np.einsum("aij,bjk->abik", X, X)
    comm = prod.transpose(1, 0, 2, 3) - prod  # X_b X_a - X_a X_b
    if not spec.reversed_bracket:
        comm = -comm
    rhs = np.einsum("cab,cij->abij", spec.C, X)
    return float(np.max(np.abs(comm - rhs))) if comm.size else 0.0


# Poincare and its pseudo-extension ------------------------------------

def lorentz_matrix(mu: int, nu: int, eta=None) -> np.ndarray:
    """``S^s_(mu nu) r = delta^s_mu eta_nu r - delta^s_nu eta_mu r``."""
    eta = DEFAULT_METRIC.eta if eta is None else eta
    S = np.zeros((4, 4))
    S[mu, :] += eta[nu, :]
    S[nu, :] -= eta[mu, :]
    return S


def _poincare_std(eta: np.ndarray, dim: int) -> np.ndarray:
    C = np.zeros((dim, dim, dim))
    lor = {}
    for i, (m, n) in enumerate(LORENTZ_PAIRS):
        lor[(m, n)] = (4 + i, 1.0)
        lor[(n, m)] = (4 + i, -1.0)

    def add_M(b, c, m, n, coef):
        if m == n or coef == 0.0:
            return
        idx, s = lor[(m, n)]
        C[idx, b, c] += s * coef

    for (m, n), (bm, _) in ((p, lor[p]) for p in LORENTZ_PAIRS):
        for r in range(4):
            # [M_mn, P_r] = eta_nr P_m - eta_mr P_n
            C[m, bm, r] += eta[n, r]
            C[n, bm, r] -= eta[m, r]
            C[:, r, bm] = -C[:, bm, r]
        for (r, s) in LORENTZ_PAIRS:
            cm = lor[(r, s)][0]
            # [M_mn, M_rs] = eta_nr M_ms - eta_mr M_ns - eta_ns M_mr + eta_ms M_nr
            add_M(bm, cm, m, s, eta[n, r])
            add_M(bm, cm, n, s, -eta[m, r])
            add_M(bm, cm, m, r, -eta[n, s])
            add_M(bm, cm, n, r, eta[m, s])
    return C


def _poincare_action(eta: np.ndarray) -> tuple:
    x = [var(i) for i in range(4)]
    x_low = [float(eta[i, i]) * x[i] for i in range(4)]
    action = []
    for mu in range(4):
        action.append(tuple(const(1.0 if nu == mu else 0.0) for nu in range(4)))
    for (m, n) in LORENTZ_PAIRS:
        comp = []
        for s in range(4):
            e: Expr = ZERO
            if s == m:
                e = e + x_low[n]
            if s == n:
                e = e - x_low[m]
            comp.append(e)
        action.append(tuple(comp))
    return tuple(action)


def _poincare_reps(eta: np.ndarray, dim: int, lam=None) -> dict:
    vec = np.zeros((dim, 4, 4))
    aff_n = 5 if lam is None else 6
    aff = np.zeros((dim, aff_n, aff_n))
    for mu in range(4):
        aff[mu, mu, 4] = 1.0
        if lam is not None:
            aff[mu, 5, 5] = lam[mu]
    for i, (m, n) in enumerate(LORENTZ_PAIRS):
        S = lorentz_matrix(m, n, eta)
        vec[4 + i] = S
        aff[4 + i, :4, :4] = S
    if lam is not None:
        aff[10, 5, 5] = 1.0
    return {"vector": vec, "affine": aff}


def build_poincare(metric: MetricConvention = DEFAULT_METRIC, reversed_bracket: bool = True) -> AlgebraSpec:
    """Ten generators: translations ``0..3`` then Lorentz pairs ``01..23``.

    Representations: ``"vector"`` (Lorentz matrices S, translations act
    trivially) and ``"affine"`` (faithful 5x5).
    """
    eta = metric.eta
    C = _poincare_std(eta, 10)
    return AlgebraSpec(
        labels=TRANSLATION_LABELS + LORENTZ_LABELS,
        C=-C if reversed_bracket else C,
        kinds=("translation",) * 4 + ("lorentz",) * 6,
        reps=_poincare_reps(eta, 10),
        spacetime_action=_poincare_action(eta),
        metric=metric,
        reversed_bracket=reversed_bracket,
        name="poincare",
    )


def build_extended_poincare(
    lv: LambdaVector, metric: MetricConvention = DEFAULT_METRIC, reversed_bracket: bool = True
) -> AlgebraSpec:
    """Poincare plus a central generator ``phi`` with
    ``[M_mn, P_r] = eta_nr P_m - eta_mr P_n + (lambda_n eta_mr - lambda_m eta_nr) phi``.

    The ``"affine"`` representation is 6x6: the translations carry
    ``lambda_r`` on the central block so the relations hold exactly.
    """
    eta = metric.eta
    lam = lv.vector
    C = _poincare_std(eta, 11)
    for i, (m, n) in enumerate(LORENTZ_PAIRS):
        for r in range(4):
            v = lam[n] * eta[m, r] - lam[m] * eta[n, r]
            C[10, 4 + i, r] = v
            C[10, r, 4 + i] = -v
    action = _poincare_action(eta) + ((ZERO,) * 4,)
    return AlgebraSpec(
        labels=TRANSLATION_LABELS + LORENTZ_LABELS + (PHI_LABEL,),
        C=-C if reversed_bracket else C,
        kinds=("translation",) * 4 + ("lorentz",) * 6 + ("central",),
        reps=_poincare_reps(eta, 11, lam),
        spacetime_action=action,
        metric=metric,
        reversed_bracket=reversed_bracket,
        name="extended_poincare",
        kappa=lv.kappa if lv.lam is None else float("nan"),
    )


def build_custom(
    labels,
    structure_constants,
    reps=None,
    spacetime_action=None,
    reversed_bracket: bool = True,
    name: str = "custom",
    kinds=None,
) -> AlgebraSpec:
    """Algebra from a table ``{(a, b, c): value}`` meaning ``C^a_{bc}``, or a full array.

    Table entries are antisymmetrised: giving ``C^a_{bc}`` fills ``C^a_{cb}``
    with the opposite sign unless that entry is given explicitly.
    """
    labels = tuple(str(s) for s in labels)
    n = len(labels)
    if isinstance(structure_constants, dict):
        pos = {s: i for i, s in enumerate(labels)}
        C = np.zeros((n, n, n))
        given = set()
        for key, v in structure_constants.items():
            try:
                a, b, c = (pos[str(k)] for k in key)
            except KeyError as exc:
                raise AlgebraError(f"structure constant refers to unknown label {exc.args[0]!r}") from None
            C[a, b, c] = float(v)
            given.add((a, b, c))
        for (a, b, c) in list(given):
            if (a, c, b) not in given:
                C[a, c, b] = -C[a, b, c]
    else:
        C = np.asarray(structure_constants, dtype=float)
        if C.shape != (n, n, n):
            raise AlgebraError(f"structure constants have shape {C.shape}, expected {(n, n, n)}")
    if kinds is None:
        kinds = ("internal",) * n
    if spacetime_action is None:
        spacetime_action = tuple((ZERO,) * 4 for _ in range(n))
    return AlgebraSpec(
        labels=labels, C=C, kinds=tuple(kinds), reps=dict(reps or {}),
        spacetime_action=spacetime_action, reversed_bracket=reversed_bracket, name=name,
    )


def direct_sum_u1(spec: AlgebraSpec, rep_blocks: dict | None = None) -> AlgebraSpec:
    """Append a central internal ``phi`` generator to ``spec`` (no mixing)."""
    n = spec.dim
    C = np.zeros((n + 1,) * 3)
    C[:n, :n, :n] = spec.C
    reps = {}
    for name, X in (rep_blocks or {}).items():
        reps[name] = np.asarray(X, dtype=float)
    action = None
    if spec.spacetime_action is not None:
        action = spec.spacetime_action + ((ZERO,) * 4,)
    return AlgebraSpec(
        labels=spec.labels + (PHI_LABEL,), C=C, kinds=spec.kinds + ("central",), reps=reps,
        spacetime_action=action, metric=spec.metric, reversed_bracket=spec.reversed_bracket,
        name=spec.name + "+u1",
    )


def mixing_constants(spec: AlgebraSpec) -> np.ndarray:
    """``Cphi[mu, s, r] = C^phi_{mu,(s r)}`` (usual ordering) for all ordered Lorentz pairs."""
    out = np.zeros((4, 4, 4))
    if PHI_LABEL not in spec.labels:
        return out
    p = spec.index_of(PHI_LABEL)
    Cs = spec.C_std
    for mu in range(4):
        t = spec.index_of(str(mu))
        for s in range(4):
            for r in range(4):
                if s != r:
                    b, sign = spec.locate(f"{s}{r}")
                    out[mu, s, r] = sign * Cs[p, t, b]
    return out


def so3(reversed_bracket: bool = True) -> AlgebraSpec:
    """so(3) with ``C^c_ab = epsilon_abc`` in the stored convention; rep ``"adjoint"``."""
    eps = np.zeros((3, 3, 3))
    for (a, b, c), s in (((0, 1, 2), 1), ((1, 2, 0), 1), ((2, 0, 1), 1),
                         ((0, 2, 1), -1), ((2, 1, 0), -1), ((1, 0, 2), -1)):
        eps[a, b, c] = s
    C = eps.transpose(2, 0, 1).copy()  # C[c, a, b] = eps_abc
    # adjoint matrices (X_a)^c_b = -C^c_ab satisfy the stored ordering
    adj = -np.einsum("cab->acb", C) if reversed_bracket else np.einsum("cab->acb", C)
    return build_custom(("1", "2", "3"), C, reps={"adjoint": adj}, reversed_bracket=reversed_bracket, name="so3")
