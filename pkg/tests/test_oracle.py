import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from algebroid_dynamics.algebroid import Subbundle, LieAlgebroid
from algebroid_dynamics.dynamics import pseudo_sode, restricted_hessian, simulate
from algebroid_dynamics.errors import DegenerateConstraintError, InconsistentStateError
from algebroid_dynamics.oracle import (
    ConnectionForm, TangentBundleSystem, dalembert_contracted_residual, multiplier_accel, simulate_oracle,
    trajectory_compare,
)
from algebroid_dynamics.smooth import MatrixField, ScalarField, cos, sin

from conftest import catalog

ORACLE_SYSTEMS = ["free_particle", "nonholonomic_particle", "rolling_disk_full", "chaplygin_sleigh"]


def test_unconstrained_free_particle():
    e = catalog("free_particle")
    qdd, lam = multiplier_accel(e.oracle, [0.3, 0.2], [1.0, -2.0])
    np.testing.assert_array_equal(qdd, 0.0)
    assert lam.size == 0


def test_nonholonomic_particle_multipliers():
    e = catalog("nonholonomic_particle")
    x, xd = np.array([0.0, 1.0, 0.0]), np.array([1.0, 1.0, 1.0])
    qdd, lam = multiplier_accel(e.oracle, x, xd)
    np.testing.assert_allclose(qdd, [-0.5, 0.0, 0.5], atol=1e-15)
    np.testing.assert_allclose(lam, [0.5], atol=1e-15)
    # differentiated constraint: omega . xddot + omegadot . xdot = 0
    om = np.array([-x[1], 0.0, 1.0])
    omdot = np.array([-xd[1], 0.0, 0.0])
    assert om @ qdd + omdot @ xd == pytest.approx(0.0, abs=1e-15)
    # the constraint force lambda omega equals the Euler-Lagrange defect (unit mass, no potential)
    np.testing.assert_allclose(qdd, lam[0] * om, atol=1e-15)


def test_rolling_disk_constant_rates():
    e = catalog("rolling_disk_full")
    rng = np.random.default_rng(0)
    for _ in range(20):
        q = rng.uniform(-3, 3, 4)
        w = rng.uniform(-2, 2, 2)
        qd = e.system.W.injection.value(q) @ w
        qdd, _ = multiplier_accel(e.oracle, q, qd)
        assert abs(qdd[2]) < 1e-14 and abs(qdd[3]) < 1e-14


def test_inconsistent_velocity_rejected():
    e = catalog("nonholonomic_particle")
    with pytest.raises(InconsistentStateError):
        multiplier_accel(e.oracle, [0.0, 1.0, 0.0], [1.0, 1.0, 0.0])


def test_dependent_constraints_rejected():
    L = ScalarField(4, lambda z: 0.5 * (z[2] ** 2 + z[3] ** 2))
    om = MatrixField.constant([[1.0, 0.0], [2.0, 0.0]], 2)
    with pytest.raises(DegenerateConstraintError):
        multiplier_accel(TangentBundleSystem(2, L, om), [0.0, 0.0], [0.0, 1.0])


def test_bad_shapes():
    with pytest.raises(ValueError):
        TangentBundleSystem(2, ScalarField(3, lambda z: z[0]), MatrixField.constant(np.zeros((1, 2)), 2))
    with pytest.raises(ValueError):
        TangentBundleSystem(2, ScalarField(4, lambda z: z[0]), MatrixField.constant(np.zeros((1, 3)), 3))


@pytest.mark.parametrize("name", ORACLE_SYSTEMS)
def test_companion_is_annihilated(name):
    e = catalog(name)
    for s in e.system.sample_states(20):
        assert e.oracle.annihilation_residual(e.system.W, s.x) < 1e-15


@pytest.mark.parametrize("name", ORACLE_SYSTEMS)
def test_derivative_level_agreement(name):
    e = catalog(name)
    S = e.system
    for s in S.sample_states(100, seed=21):
        i, di = S.W.injection.value_and_jacobian(s.x)
        qd = i @ s.w
        qdd, _ = multiplier_accel(e.oracle, s.x, qd)
        # xddot = (d_j i . xdot) w + i f; recover f by least squares on the injection
        f_oracle = np.linalg.lstsq(i, qdd - (di @ qd) @ s.w, rcond=None)[0]
        np.testing.assert_allclose(f_oracle, pseudo_sode(S, s).f, atol=1e-10)


@pytest.mark.parametrize("name", ORACLE_SYSTEMS)
def test_contracted_residual_of_algebroid_solution(name):
    e = catalog(name)
    S = e.system
    for s in S.sample_states(30):
        f = pseudo_sode(S, s).f
        assert dalembert_contracted_residual(e.oracle, S.W, s.x, s.w, f) < 1e-9


def test_contracted_residual_detects_perturbation():
    e = catalog("chaplygin_sleigh")
    S = e.system
    for s in S.sample_states(10):
        f = pseudo_sode(S, s).f
        smin = np.linalg.svd(restricted_hessian(S, s), compute_uv=False)[-1]
        for j in range(S.k):
            bumped = f.copy()
            bumped[j] += 1.0
            assert dalembert_contracted_residual(e.oracle, S.W, s.x, s.w, bumped) >= smin - 1e-12


def test_contracted_residual_free_particle():
    e = catalog("free_particle")
    assert dalembert_contracted_residual(e.oracle, e.system.W, [0.0, 0.0], [1.0, 2.0], [0.0, 0.0]) == 0.0


@pytest.mark.parametrize("name", ["nonholonomic_particle", "rolling_disk_full"])
def test_trajectories_agree(name):
    e = catalog(name)
    S = e.system
    s0 = S.initial
    T = simulate(S, s0, (0.0, 5.0), diagnostics=False)
    To = simulate_oracle(e.oracle, s0.x, S.W.injection.value(s0.x) @ s0.w, (0.0, 5.0))
    n = S.n
    dev, _ = trajectory_compare(T, To, lambda y: np.concatenate([y[:n], S.W.injection.value(y[:n]) @ y[n:]]),
                                lambda y: y)
    assert dev < 1e-6


@pytest.mark.parametrize("name", ["nonholonomic_particle", "rolling_disk_full", "chaplygin_sleigh"])
def test_constraint_drift_small(name):
    e = catalog(name)
    S = e.system
    s0 = S.initial
    To = simulate_oracle(e.oracle, s0.x, S.W.injection.value(s0.x) @ s0.w, (0.0, 10.0))
    assert np.max(To.diagnostics["constraint_drift"]) < 1e-7


class TestConnectionForm:
    def disk(self):
        # s = (x, y), r = (theta, phi): xdot = R cos(theta) phidot -> A^x_phi = -cos(theta)
        coeffs = MatrixField((2, 2), 4, func=lambda q: [[0.0, -cos(q[2])], [0.0, -sin(q[2])]])
        return ConnectionForm(4, (2, 3), (0, 1), coeffs)

    def test_same_rows_as_catalog(self):
        cf = self.disk()
        e = catalog("rolling_disk_full")
        q = np.array([0.1, 0.2, 0.7, -0.3])
        np.testing.assert_allclose(cf.annihilator().value(q), e.oracle.constraints.value(q))
        np.testing.assert_allclose(cf.annihilator().value(q) @ cf.injection().value(q), 0.0, atol=1e-15)

    def test_disk_curvature(self):
        # B^a_IJ = dA^a_I/dr^J - dA^a_J/dr^I, i.e. minus the Atiyah curvature
        B = self.disk().curvature([0.0, 0.0, 0.4, 0.0])
        np.testing.assert_allclose(B[:, 0, 1], [-np.sin(0.4), np.cos(0.4)], atol=1e-15)

    def test_curvature_enters_the_reduced_equations(self):
        # zdot = y xdot: r = (x, y), s = z, A^z_x = -y; L_c = ((1 + y^2) xdot^2 + ydot^2) / 2
        cf = ConnectionForm(3, (0, 1), (2,), MatrixField((1, 2), 3, func=lambda q: [[-q[1], 0.0]]))
        S = catalog("nonholonomic_particle").system
        rng = np.random.default_rng(2)
        for _ in range(10):
            q = rng.uniform(-1, 1, 3)
            w = rng.uniform(-1, 1, 2)
            f = pseudo_sode(S, S.state(q, w)).f
            y, xd, yd = q[1], w[0], w[1]
            zd = y * xd
            B = cf.curvature(q)[0]
            lhs = np.array([f[0] * (1 + y * y) + 2 * y * yd * xd, f[1]])
            dLc_dr = np.array([0.0, y * xd * xd])
            rhs = dLc_dr - np.array([B[0] @ w, B[1] @ w]) * zd
            np.testing.assert_allclose(lhs, rhs, atol=1e-14)

    @settings(max_examples=30, deadline=None)
    @given(st.lists(st.floats(-2, 2), min_size=3, max_size=3))
    def test_curvature_antisymmetric(self, q):
        # zdot = -(y xdot + x^2 ydot) on R^3 with s = z
        coeffs = MatrixField((1, 2), 3, func=lambda x: [[x[1] * x[2], x[0] ** 2]])
        B = ConnectionForm(3, (0, 1), (2,), coeffs).curvature(q)
        np.testing.assert_array_equal(B, -B.transpose(0, 2, 1))

    def test_partition_checked(self):
        with pytest.raises(ValueError):
            ConnectionForm(3, (0,), (0, 2), MatrixField.constant(np.zeros((2, 1)), 3))

    def test_system_matches_algebroid_dynamics(self):
        cf = self.disk()
        L = catalog("rolling_disk_full").oracle.L
        tb = cf.system(L)
        W = Subbundle(LieAlgebroid.tangent(4), 2, cf.injection())
        q = np.array([0.0, 0.0, 0.3, 0.0])
        qd = W.injection.value(q) @ np.array([0.5, 1.5])
        qdd, _ = multiplier_accel(tb, q, qd)
        assert abs(qdd[2]) < 1e-14 and abs(qdd[3]) < 1e-14
