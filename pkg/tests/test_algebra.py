import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gaugeforge import algebra as al
from gaugeforge import expr as E

ETA = np.diag([1.0, -1.0, -1.0, -1.0])


def constants_from_rep(X: np.ndarray) -> np.ndarray:
    """Oracle: decompose every commutator X_b X_a - X_a X_b in the basis X_c (faithful rep)."""
    n = X.shape[0]
    basis = X.reshape(n, -1).T
    C = np.zeros((n, n, n))
    for a, b in itertools.product(range(n), repeat=2):
        comm = X[b] @ X[a] - X[a] @ X[b]
        coef, *_ = np.linalg.lstsq(basis, comm.ravel(), rcond=None)
        assert np.allclose(basis @ coef, comm.ravel(), atol=1e-12)
        C[:, a, b] = coef
    return C


def brute_jacobi(C: np.ndarray) -> float:
    n = C.shape[0]
    worst = 0.0
    for a, b, c, d in itertools.product(range(n), repeat=4):
        s = sum(C[e, a, b] * C[d, e, c] + C[e, b, c] * C[d, e, a] + C[e, c, a] * C[d, e, b]
                for e in range(n))
        worst = max(worst, abs(s))
    return worst


def test_abelian_jacobi_zero():
    spec = al.build_custom(["a", "b"], np.zeros((2, 2, 2)))
    assert al.jacobi_residual(spec) == 0.0


def test_so3_jacobi():
    spec = al.so3()
    assert al.jacobi_residual(spec) <= 1e-14
    assert brute_jacobi(np.asarray(spec.C)) <= 1e-14
    assert al.rep_commutator_residual(spec, "adjoint") <= 1e-14


def test_poincare_matches_affine_oracle(poincare):
    C = constants_from_rep(poincare.rep("affine"))
    assert np.max(np.abs(C - poincare.C)) <= 1e-12
    assert al.jacobi_residual(poincare) <= 1e-12
    assert brute_jacobi(np.asarray(poincare.C)) <= 1e-12


@pytest.mark.parametrize("kappa", [0.0, 1e-3, 0.1, 1.0])
def test_extended_matches_affine_oracle(kappa):
    spec = al.build_extended_poincare(al.LambdaVector(kappa))
    C = constants_from_rep(spec.rep("affine"))
    assert np.max(np.abs(C - spec.C)) <= 1e-12
    assert al.jacobi_residual(spec) <= 1e-12
    assert al.rep_commutator_residual(spec, "affine") <= 1e-12
    assert al.rep_commutator_residual(spec, "vector") <= 1e-12


def test_poincare_action():
    spec = al.build_poincare()
    X = E.program_for([list(g) for g in spec.spacetime_action])
    v = X([0.0, 2.0, 0.0, 0.0])
    t0 = spec.index_of("0")
    assert v[t0, 1] == 0.0 and v[t0, 0] == 1.0
    # (01) on x^0 at x = (0, 2, 0, 0): eta_1r x^r = -2
    assert v[spec.index_of("01"), 0] == -2.0


def test_vector_rep_is_lorentz_matrix():
    spec = al.build_poincare()
    V = spec.rep("vector")
    for (m, n) in al.LORENTZ_PAIRS:
        S = V[spec.index_of(f"{m}{n}")]
        for s, r in itertools.product(range(4), repeat=2):
            assert S[s, r] == (s == m) * ETA[n, r] - (s == n) * ETA[m, r]
        # S lowered with eta is antisymmetric: the generators preserve eta
        assert np.array_equal(ETA @ S, -(ETA @ S).T)
    assert al.rep_commutator_residual(spec, "vector") <= 1e-12


def test_kappa_zero_is_direct_sum(poincare):
    ext = al.build_extended_poincare(al.LambdaVector(0.0))
    assert np.array_equal(ext.C[:10, :10, :10], poincare.C)
    assert not np.any(ext.C[10])
    summed = al.direct_sum_u1(poincare)
    assert np.array_equal(summed.C, ext.C)


def test_mixing_constant_examples():
    # the example values refer to the usual ordering [X_b, X_c] = C^a_bc X_a
    spec = al.build_extended_poincare(al.LambdaVector(1.0), reversed_bracket=False)
    p, t = spec.index_of("phi"), spec.index_of("1")
    assert spec.C[p, t, spec.index_of("01")] == 1.0
    b, sign = spec.locate("10")
    assert sign * spec.C[p, t, b] == -1.0
    Cphi = al.mixing_constants(spec)
    assert Cphi[1, 0, 1] == 1.0 and Cphi[1, 1, 0] == -1.0


@pytest.mark.parametrize("kappa", [0.3, -2.0])
def test_mixing_formula(kappa):
    # C^phi_{mu,(s r)} = -kappa (eta_r mu delta^0_s - eta_s mu delta^0_r) in the usual ordering
    spec = al.build_extended_poincare(al.LambdaVector(kappa))
    Cphi = al.mixing_constants(spec)
    d0 = np.eye(4)[0]
    want = -kappa * (np.einsum("rm,s->msr", ETA, d0) - np.einsum("sm,r->msr", ETA, d0))
    for s in range(4):
        want[:, s, s] = 0.0
    assert np.max(np.abs(Cphi - want)) <= 1e-15


def test_central_generator_commutes(extended):
    p = extended.index_of("phi")
    assert not np.any(extended.C[:, p, :]) and not np.any(extended.C[:, :, p])


def test_antisymmetry_of_built_algebras(poincare, extended):
    for spec in (poincare, extended, al.so3()):
        assert al.antisymmetry_residual(spec) == 0.0


def test_label_bookkeeping(poincare):
    assert poincare.locate("01") == (poincare.index_of("01"), 1.0)
    assert poincare.locate("10") == (poincare.index_of("01"), -1.0)
    assert poincare.locate((2, 1)) == (poincare.index_of("12"), -1.0)
    with pytest.raises(al.AlgebraError):
        poincare.locate("44")
    with pytest.raises(al.AlgebraError):
        poincare.rep("spinor")


def test_bracket_switch_preserves_physics(extended):
    flipped = extended.with_bracket(False)
    assert np.array_equal(flipped.C_std, extended.C_std)
    assert np.array_equal(flipped.C, -extended.C)
    # the relations of the rep hold in whichever ordering the algebra declares
    assert al.rep_commutator_residual(flipped, "affine") <= 1e-12


def test_corrupted_rep_detected(poincare):
    V = np.array(poincare.rep("vector"))
    V[poincare.index_of("01"), 0, 1] += 0.1
    bad = al.AlgebraSpec(poincare.labels, poincare.C, poincare.kinds, {"vector": V})
    assert al.rep_commutator_residual(bad, "vector") >= 0.05


def test_corrupted_constants_listed():
    spec = al.so3()
    C = np.array(spec.C)
    # C^1_12 = 0.5 on top of so(3) breaks Jacobi
    C[0, 0, 1] += 0.5
    C[0, 1, 0] -= 0.5
    bad = al.build_custom(spec.labels, C)
    assert al.jacobi_residual(bad) > 0.1
    assert al.jacobi_violations(bad)


def test_custom_table_antisymmetrised():
    spec = al.build_custom(["a", "b", "c"], {("c", "a", "b"): 1.0, ("a", "b", "c"): 1.0, ("b", "c", "a"): 1.0})
    C = np.asarray(spec.C)
    assert C[2, 1, 0] == -1.0
    assert al.antisymmetry_residual(spec) == 0.0
    assert al.jacobi_residual(spec) <= 1e-15
    with pytest.raises(al.AlgebraError):
        al.build_custom(["a"], {("a", "z", "a"): 1.0})
    with pytest.raises(al.AlgebraError):
        al.build_custom(["a", "b"], np.zeros((3, 3, 3)))


def test_shape_mismatch_rejected():
    spec = al.AlgebraSpec(("a", "b"), np.zeros((3, 3, 3)), ("internal",) * 2)
    with pytest.raises(al.AlgebraError):
        al.jacobi_residual(spec)


@settings(max_examples=25, deadline=None)
@given(st.floats(-5, 5), st.lists(st.floats(-2, 2), min_size=4, max_size=4))
def test_jacobi_any_lambda(kappa, lam):
    assert al.jacobi_residual(al.build_extended_poincare(al.LambdaVector(kappa))) <= 1e-12
    spec = al.build_extended_poincare(al.LambdaVector(lam=tuple(lam)))
    assert al.jacobi_residual(spec) <= 1e-12
    assert al.rep_commutator_residual(spec, "affine") <= 1e-12
