import csv
import io
import itertools
import math

import numpy as np
import pytest

from gaugeforge import algebra as al
from gaugeforge import dynamics as dyn
from gaugeforge import fields as fl
from gaugeforge import geometry as geo
from gaugeforge.gauge import GridSpec, MatterSpec

from conftest import random_points, random_tetrad
from test_geometry import random_potentials

ETA = np.diag([1.0, -1.0, -1.0, -1.0])
POINCARE = al.build_poincare()


def ext(kappa=0.0):
    return al.build_extended_poincare(al.LambdaVector(kappa))


def diag_tetrad(entry, slot=0):
    rows = [[0] * 4 for _ in range(4)]
    for i in range(4):
        rows[i][i] = 1
    rows[slot][slot] = entry
    return rows


RS = "sqrt(x1^2+x2^2+x3^2)"
SCHWARZSCHILD = [[f"(1+M/(2*{RS}))/(1-M/(2*{RS}))", 0, 0, 0]] + [
    [0] * i + [f"(1+M/(2*{RS}))^(-2)"] + [0] * (3 - i) for i in (1, 2, 3)]
RINDLER = diag_tetrad("1/(1 + 0.3*x1)")
# flat space seen through an x-dependent boost: Ricci-flat but with torsion
CH, SH = "(exp(0.2*x2)+exp(-0.2*x2))/2", "(exp(0.2*x2)-exp(-0.2*x2))/2"
BOOST = [[CH, SH, 0, 0], [SH, CH, 0, 0], [0, 0, 1, 0], [0, 0, 0, 1]]
DIAGONAL_FAMILY = [diag_tetrad("1 + 0.2*sin(x1)"), diag_tetrad("1/(1 + 0.3*x1)"),
                   diag_tetrad("exp(0.1*x2)", 1), diag_tetrad("1 + 0.1*x0^2", 3)]


# covariant derivative and densities ------------------------------------

def test_covariant_derivative_examples():
    m = MatterSpec.scalar_pair(["x0", "x1"], 1.0)
    phi, dphi = np.array([0.3, -0.7]), np.arange(8.0).reshape(2, 4)
    x = np.zeros(4)
    cfg = fl.FieldConfig.build(ext())
    assert np.array_equal(dyn.covariant_derivative(cfg, m, phi, dphi, x), dphi)
    cfg2 = fl.FieldConfig.build(ext(), tetrad=[[2 if i == j else 0 for j in range(4)] for i in range(4)])
    assert np.array_equal(dyn.covariant_derivative(cfg2, m, phi, dphi, x), 2 * dphi)
    a = 0.4
    cfg3 = fl.FieldConfig.build(ext(), {"phi": [a, 0, 0, 0]})
    got = dyn.covariant_derivative(cfg3, m, phi, dphi, x)
    R = np.array([[0.0, -1.0], [1.0, 0.0]])
    assert np.allclose(got[:, 0], dphi[:, 0] - a * R @ phi, atol=1e-15)
    assert np.array_equal(got[:, 1:], dphi[:, 1:])
    with pytest.raises(ValueError):
        dyn.covariant_derivative(cfg, m, phi[:1], dphi, x)


def test_yang_mills_density():
    assert dyn.yang_mills_density(geo.CurvatureField(np.zeros((2, 4, 4)), ("a", "b"), "internal")) == 0.0
    c = 1.5
    F = np.zeros((2, 4, 4))
    F[0, 0, 1], F[0, 1, 0] = c, -c
    assert dyn.yang_mills_density(geo.CurvatureField(F, ("a", "b"), "internal")) == -2 * c * c
    G = np.zeros((2, 4, 4))
    G[1, 2, 3], G[1, 3, 2] = 0.5, -0.5
    total = dyn.yang_mills_density(geo.CurvatureField(F + G, ("a", "b"), "internal"))
    parts = dyn.yang_mills_density(geo.CurvatureField(F, ("a", "b"), "internal")) + \
        dyn.yang_mills_density(geo.CurvatureField(G, ("a", "b"), "internal"))
    assert total == parts


def test_electrograv_density_zero():
    assert dyn.electrograv_density(fl.FieldConfig.build(ext()), np.ones(4)) == 0.0


def test_electrograv_density_plane_wave():
    cfg = fl.FieldConfig.build(ext(), {"phi": [0, 0, "sin(x0-x1)", 0]})
    x = np.array([0.3, -0.2, 0.1, 0.5])
    # independent flat Maxwell: F_{02} = -cos, F_{12} = cos; F_{mn}F^{mn} = 2(|B|^2 - |E|^2)
    E2 = B2 = math.cos(x[0] - x[1]) ** 2
    assert dyn.electrograv_density(cfg, x) == pytest.approx(2 * (B2 - E2), abs=1e-15)
    cfg = fl.FieldConfig.build(ext(), {"phi": [0, "x0", 0, "x2"]})
    # E_1 = F_{10} = 1, B_1 = F_{23} = 1 up to sign: F^2 = 2(B^2 - E^2) = 0; then scale B
    cfg = fl.FieldConfig.build(ext(), {"phi": [0, "x0", 0, "2*x2"]})
    assert dyn.electrograv_density(cfg, x) == pytest.approx(2 * (4 - 1))


def test_electrograv_density_lorentz_term():
    # constant Lorentz potentials on a diagonal tetrad: hand contraction of k k F^(mn)_{sr}
    cfg = fl.FieldConfig.build(ext(), {"01": [0, 0.3, 0, 0], "12": [0, 0, 0.2, 0], "02": [0, 0, 0.5, 0]},
                               diag_tetrad("1 + 0.2*x3"))
    x = np.array([0.1, 0.2, 0.3, 0.4])
    fr = fl.frame_at(cfg, x)
    ep = geo.extended_potentials(cfg, x)
    L = ep.lorentz
    total = 0.0
    for m, n, s, r in itertools.product(range(4), repeat=4):
        F = ep.dlorentz[m, n, s, r] - ep.dlorentz[m, n, r, s]
        F -= sum(ETA[t, u] * (L[m, t, s] * L[u, n, r] - L[m, t, r] * L[u, n, s])
                 for t in range(4) for u in range(4))
        total += fr.k[s, m] * fr.k[r, n] * F
    _, FPhi = geo.extended_curvatures(cfg, x)
    assert not np.any(FPhi)
    assert dyn.electrograv_density(cfg, x) == pytest.approx(fr.Lambda * total, abs=1e-14)
    assert total != 0.0


# Maxwell-type residual ----------------------------------------------------

def test_u1_residual_zero_and_wave():
    assert dyn.el_residual_u1(fl.FieldConfig.build(ext()), GridSpec(n=2))[0] == 0.0
    wave = fl.FieldConfig.build(ext(), {"phi": [0, 0, "sin(x0-x1)", 0]})
    worst, records = dyn.el_residual_u1(wave, GridSpec(n=3))
    assert worst <= 1e-10 and len(records) == 81
    assert set(records[0]) == {"point", "residual"}


def test_u1_residual_non_solution():
    cfg = fl.FieldConfig.build(ext(), {"phi": ["x1^2", 0, 0, 0]})
    assert dyn.el_residual_u1(cfg, GridSpec(n=2))[0] == pytest.approx(2.0, abs=1e-14)


def test_u1_divergence_matches_finite_differences(rng):
    cfg = fl.FieldConfig.build(ext(0.3), random_potentials(rng, ["phi", "01", "13"]), random_tetrad(rng, 0.2))
    x = random_points(rng, 1)[0]

    def LF(p):
        fr = fl.frame_at(cfg, p)
        _, F = geo.extended_curvatures(cfg, p)
        return fr.Lambda * fr.g_up @ F @ fr.g_up.T   # Lambda F^{mu s}

    h = 1e-5
    num = sum((LF(x + h * np.eye(4)[s]) - LF(x - h * np.eye(4)[s]))[:, s] / (2 * h) for s in range(4))
    assert np.max(np.abs(num - dyn.u1_divergence(cfg, x))) <= 1e-8


# Lorentz equation and the vacuum connection --------------------------------

def omega_oracle(cfg, x, h=1e-5):
    """Levi-Civita spin connection from finite differences of k and g."""
    fr = fl.frame_at(cfg, x)
    dk = np.stack([(fl.frame_at(cfg, x + h * np.eye(4)[t]).k - fl.frame_at(cfg, x - h * np.eye(4)[t]).k) / (2 * h)
                   for t in range(4)], axis=-1)
    dg = np.stack([(fl.frame_at(cfg, x + h * np.eye(4)[t]).g_down - fl.frame_at(cfg, x - h * np.eye(4)[t]).g_down)
                   / (2 * h) for t in range(4)], axis=-1)
    Gam = np.zeros((4, 4, 4))                   # Gamma^l_{t c}
    for l, t, c in itertools.product(range(4), repeat=3):
        Gam[l, t, c] = sum(0.5 * fr.g_up[l, s] * (dg[s, t, c] + dg[s, c, t] - dg[t, c, s]) for s in range(4))
    om = np.zeros((4, 4, 4))
    for a, r, m in itertools.product(range(4), repeat=3):
        om[a, r, m] = sum(fr.q[a, l] * fr.k[t, m] * (dk[l, r, t] + sum(Gam[l, t, c] * fr.k[c, r] for c in range(4)))
                          for l in range(4) for t in range(4))
    return om


@pytest.mark.parametrize("tetrad", DIAGONAL_FAMILY + [BOOST])
def test_vacuum_connection_is_minus_levi_civita(tetrad, rng):
    cfg = fl.FieldConfig.build(POINCARE, tetrad=tetrad, params={"M": 0.5})
    for x in random_points(rng, 3):
        vac = dyn.vacuum_connection(cfg, x)
        low = np.einsum("as,br,abm->srm", ETA, ETA, vac)
        assert np.array_equal(low, -low.transpose(1, 0, 2))
        om = np.einsum("ab,brm->arm", ETA, omega_oracle(cfg, x))
        assert np.max(np.abs(low + om)) <= 1e-8
        assert np.max(np.abs(om - np.einsum("ab,brm->arm", ETA, dyn.spin_connection_levi_civita(fl.frame_at(cfg, x))))) <= 1e-8


def test_vacuum_connection_literal_differs(rng):
    cfg = fl.FieldConfig.build(POINCARE, tetrad=DIAGONAL_FAMILY[0])
    x = random_points(rng, 1)[0]
    a, b = dyn.vacuum_connection(cfg, x), dyn.vacuum_connection(cfg, x, literal=True)
    assert np.max(np.abs(a - b)) > 1e-3
    assert not np.any(dyn.vacuum_connection(fl.FieldConfig.build(POINCARE), x))


def test_lorentz_residual_trivial():
    assert dyn.el_residual_lorentz(fl.FieldConfig.build(ext()), np.zeros(4)) == 0.0
    assert dyn.el_residual_lorentz(fl.FieldConfig.build(ext(0.5), {"phi": [0, "x0", 0, 0]}), np.ones(4)) == 0.0


@pytest.mark.parametrize("tetrad", DIAGONAL_FAMILY + [BOOST, RINDLER, SCHWARZSCHILD])
def test_lorentz_residual_vacuum(tetrad, rng):
    cfg = fl.FieldConfig.build(POINCARE, tetrad=tetrad, params={"M": 0.5})
    for x in random_points(rng, 3) + np.array([0, 1.0, 0.5, 0.5]):
        assert dyn.el_residual_lorentz(cfg, x, connection="vacuum") <= 1e-8


def test_lorentz_residual_literal_bracket_fails():
    cfg = fl.FieldConfig.build(POINCARE, tetrad=DIAGONAL_FAMILY[0])
    x = np.array([0.1, 0.4, 0.2, 0.3])
    assert dyn.el_residual_lorentz(cfg, x, literal_bracket=True, connection="vacuum") > 1e-2
    with pytest.raises(ValueError):
        dyn.el_residual_lorentz(cfg, x, connection="other")


def test_lorentz_residual_frozen_vacuum_config():
    cfg = fl.FieldConfig.build(POINCARE, tetrad=DIAGONAL_FAMILY[1])
    x = np.array([0.1, 0.4, 0.2, 0.3])
    frozen = dyn.with_vacuum_connection(cfg, x)
    assert dyn.el_residual_lorentz(frozen, x) <= 1e-12


# stress tensors ---------------------------------------------------------

def test_stress_tensors_zero_field():
    st = dyn.stress_tensors(fl.FieldConfig.build(ext(0.5), {"01": ["x1", 0, 0, 0]}), np.ones(4))
    assert not np.any(st.TPhi) and not np.any(st.TMix)


def test_stress_mix_vanishes_at_kappa_zero(rng):
    cfg = fl.FieldConfig.build(ext(0.0), random_potentials(rng, ["phi", "01", "02", "12"]), random_tetrad(rng))
    assert not np.any(dyn.stress_tensors(cfg, random_points(rng, 1)[0]).TMix)
    cfg = cfg.replace(algebra=ext(0.4), kappa=0.4)
    assert np.any(dyn.stress_tensors(cfg, random_points(rng, 1)[0]).TMix)


def test_stress_flat_electric_field():
    E0 = 0.7
    st = dyn.stress_tensors(fl.FieldConfig.build(ext(), {"phi": [0, f"{E0}*x0", 0, 0]}), np.zeros(4))
    # F_01 = A_{0,1} - A_{1,0} = -E0; the value depends on E0^2 only
    assert st.TPhi[0, 0] == pytest.approx(-2 * E0 * E0, abs=1e-15)


def test_stress_trace_of_displayed_form(rng):
    # the displayed 1/2 normalisation gives trace 3 F_{sl}F^{sl}, not zero
    cfg = fl.FieldConfig.build(ext(), random_potentials(rng, ["phi"]))
    x = random_points(rng, 1)[0]
    _, F = geo.extended_curvatures(cfg, x)
    inv = float(np.einsum("sl,sa,lb,ab->", F, ETA, ETA, F))
    assert np.trace(dyn.stress_tensors(cfg, x).TPhi) == pytest.approx(3 * inv, rel=1e-13)


# generalized Einstein ------------------------------------------------------

def test_einstein_flat():
    cfg = fl.FieldConfig.build(POINCARE)
    assert dyn.generalized_einstein_residual(cfg, np.ones(4)) == 0.0
    assert dyn.generalized_einstein_residual(cfg, np.ones(4), L0="quadratic") == 0.0
    with pytest.raises(ValueError):
        dyn.generalized_einstein_residual(cfg, np.ones(4), L0="cubic")


@pytest.mark.parametrize("tetrad", [RINDLER, BOOST, SCHWARZSCHILD])
def test_einstein_vacuum_ricci_flat(tetrad, rng):
    cfg = fl.FieldConfig.build(POINCARE, tetrad=tetrad, params={"M": 0.5})
    for x in random_points(rng, 3) + np.array([0, 1.0, 0.5, 0.5]):
        assert dyn.generalized_einstein_residual(cfg, x) <= 1e-8


def test_einstein_curved_is_diagnostic(rng):
    cfg = fl.FieldConfig.build(POINCARE, tetrad=random_tetrad(rng, 0.3))
    assert dyn.generalized_einstein_residual(cfg, random_points(rng, 1)[0]) > 1e-4


def test_einstein_with_matter_source():
    cfg = fl.FieldConfig.build(POINCARE)
    m = MatterSpec(("0.5*x1", ), 1.0)
    x = np.array([0.0, 0.2, 0.0, 0.0])
    t = dyn.matter_source(cfg, m, x)
    # flat, free scalar: t^mu_nu = -delta L + eta^{mu a} phi_a phi_nu with phi_1 = 0.5
    L = 0.5 * (-0.25) - 0.5 * 0.01
    want = -np.eye(4) * L
    want[1, 1] += -0.25
    assert np.allclose(t, want, atol=1e-15)
    assert dyn.generalized_einstein_residual(cfg, x, matter=m) == pytest.approx(0.5 * np.max(np.abs(want)))


# particle motion -------------------------------------------------------------

def _flat(a_elec=None, b_grav=None, params=None):
    return fl.FieldConfig.build(POINCARE, a_elec=a_elec, b_grav=b_grav, params=params)


def test_free_particle_straight_line():
    u = np.array([1.25, 0.75, 0, 0])
    traj = dyn.integrate_particle(_flat(), dyn.ParticleState([0, 0, 0, 0], u), tau_max=2.0, dt=0.01)
    assert np.array_equal(traj.u[-1], u)
    assert traj.x[-1] == pytest.approx(2.0 * u, abs=1e-13)


def cyclotron(dt_div):
    B = 2.0
    cfg = _flat(a_elec=[0, "B/2*x2", "-B/2*x1", 0], params={"B": B})
    u0 = np.array([1.25, 0, 0.75, 0])
    T = 2 * math.pi / B                   # proper-time period 2 pi m / (e B)
    traj = dyn.integrate_particle(cfg, dyn.ParticleState([0, 1, 0, 0], u0, 1.0, 1.0), tau_max=T, dt=T / dt_div)
    return traj, T


def test_cyclotron_closure_and_order():
    t1, T = cyclotron(1000)
    t2, _ = cyclotron(2000)
    r = 0.75 / 2.0                        # gamma v m / (e B)
    e1 = np.linalg.norm(t1.x[-1, 1:] - t1.x[0, 1:]) / (2 * r)
    e2 = np.linalg.norm(t2.x[-1, 1:] - t2.x[0, 1:]) / (2 * r)
    assert e1 <= 1e-6
    assert 12 <= e1 / e2 <= 20
    # a circle of radius r in the 1-2 plane; coordinate time advances by gamma T
    centre = 0.5 * (t1.x[0, 1:3] + t1.x[500, 1:3])
    assert np.max(np.abs(np.linalg.norm(t1.x[:, 1:3] - centre, axis=1) - r)) <= 1e-9
    assert t1.x[-1, 0] == pytest.approx(1.25 * T, rel=1e-12)
    assert t1.max_norm_drift <= 1e-10


def test_kappa_force_single_step_oracle():
    kappa, e, m = 0.2, 1.0, 1.0
    h = geo.b_grav_expressions(["0.3*x1", "0.2*x2", 0])
    cfg = _flat(b_grav=h)
    x = np.array([0.0, 0.3, -0.2, 0.1])
    u = np.array([1.25, 0.75, 0.0, 0.0])
    a = dyn.particle_rhs(cfg, dyn.ParticleState(x, u, m, e, kappa))
    # B_0 = -((0.3 x1)^2 + (0.2 x2)^2)/8, B_1 = 0.15 x1, B_2 = 0.1 x2: only G_{0s} = d_s B_0 survives
    G = np.zeros((4, 4))                       # G[mu, s] = d_s B_mu - d_mu B_s
    G[0, 1], G[0, 2] = -0.0225 * x[1], -0.01 * x[2]
    G[1, 0], G[2, 0] = -G[0, 1], -G[0, 2]
    force = -(kappa * e / m) * (u @ G)
    want = np.linalg.solve(ETA, force)
    assert np.max(np.abs(a - want)) <= 1e-10
    assert np.any(want)


def test_weak_field_newtonian():
    g = 1e-3
    cfg = fl.FieldConfig.build(POINCARE, tetrad=diag_tetrad("1/sqrt(1+2*g*x1)"), params={"g": g})
    v = 1e-3
    gamma = 1 / math.sqrt(1 - v * v)
    # moving along the field picks up the a^0 and O(v^2) corrections
    u = np.array([gamma, gamma * v / math.sqrt(2), gamma * v / math.sqrt(2), 0])
    a = dyn.particle_rhs(cfg, dyn.ParticleState(np.zeros(4), u))
    # coordinate acceleration d^2x/dt^2 = (a - u a^0/u^0)/(u^0)^2 against -d phi = (0, -g, 0, 0)
    acc = (a[1:] - u[1:] * a[0] / u[0]) / u[0] ** 2
    assert abs(acc[0] + g) / g <= 1e-4
    assert np.all(np.abs(acc[1:]) <= 1e-4 * g)


def test_weak_field_trajectory():
    g = 1e-3
    cfg = fl.FieldConfig.build(POINCARE, tetrad=diag_tetrad("1/sqrt(1+2*g*x1)"), params={"g": g})
    u0 = np.array([1.0000005, 0, 1e-3, 0])
    u0 = u0 / math.sqrt(u0 @ ETA @ u0)
    traj = dyn.integrate_particle(cfg, dyn.ParticleState(np.zeros(4), u0), tau_max=10.0, dt=1e-3)
    assert len(traj.tau) == 10001
    assert traj.max_norm_drift <= 1e-8
    t = traj.x[-1, 0]
    assert abs(traj.x[-1, 1] + 0.5 * g * t * t) / (0.5 * g * t * t) <= 1e-3


def test_kappa_continuity():
    h = geo.b_grav_expressions(["0.3*x1", "0.2*x2", 0])
    cfg = _flat(b_grav=h)
    u = np.array([1.25, 0.75, 0, 0])

    def run(kappa):
        return dyn.integrate_particle(cfg, dyn.ParticleState([0, 0.3, -0.2, 0.1], u, 1.0, 1.0, kappa),
                                      tau_max=2.0, dt=0.01).x

    x0 = run(0.0)
    d1 = np.max(np.abs(run(1e-6) - x0))
    d2 = np.max(np.abs(run(2e-6) - x0))
    assert 0 < d1 <= 1e-5
    assert d2 / d1 == pytest.approx(2.0, rel=1e-3)


def test_trajectory_csv(tmp_path):
    traj, _ = cyclotron(200)
    path = tmp_path / "t.csv"
    text = traj.to_csv(path)
    assert path.read_text() == text
    rows = list(csv.reader(io.StringIO(text)))
    assert rows[0] == ["tau", "x0", "x1", "x2", "x3", "u0", "u1", "u2", "u3", "norm"]
    assert len(rows) == 202
    back = np.array(rows[1:], dtype=float)
    assert np.array_equal(back[:, 1:5], traj.x) and np.array_equal(back[:, 9], traj.norm)


def test_integrator_errors():
    cfg = fl.FieldConfig.build(POINCARE, tetrad=diag_tetrad("1 - x0", 1))
    with pytest.raises(fl.SingularTetradError):
        dyn.integrate_particle(cfg, dyn.ParticleState([0, 0, 0, 0], [1, 0, 0, 0]), tau_max=2.0, dt=0.01)
    with pytest.raises(ValueError):
        dyn.integrate_particle(_flat(), dyn.ParticleState(np.zeros(4), [1, 0, 0, 0]), tau_max=0.0)
    with pytest.raises(ValueError):
        dyn.integrate_particle(_flat(), dyn.ParticleState(np.zeros(4), [1, 0, 0, 0]), tau_max=1.0, dt=-1)
    strong = _flat(a_elec=[0, "1e4*x2", 0, 0])
    with pytest.raises(dyn.NumericalError):
        dyn.integrate_particle(strong, dyn.ParticleState(np.zeros(4), [1.25, 0, 0.75, 0], 1.0, 1.0),
                               tau_max=1.0, dt=0.1)


def test_default_step_count():
    traj = dyn.integrate_particle(_flat(), dyn.ParticleState(np.zeros(4), [1, 0, 0, 0]), tau_max=1.0)
    assert len(traj.tau) == 10001 and traj.tau[-1] == pytest.approx(1.0, abs=1e-12)
