import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from algebroid_dynamics.algebroid import LieAlgebroid, so3_constants
from algebroid_dynamics.errors import DegenerateMetricError, NonConstantRankError
from algebroid_dynamics.integrate import IntegratorOptions, Trajectory
from algebroid_dynamics.optimal_control import (
    DegenerateBaseWarning, ExtremalState, MechanicalLagrangian, eliminate_control,
    extremal_lagrangian_residual, hamiltonian, hamiltonian_stationarity, normal_subbundle,
    pmp_vector_field, simulate_extremal,
)
from algebroid_dynamics.smooth import MatrixField, ScalarField

from conftest import catalog

TIGHT = IntegratorOptions(abs_tol=1e-12, rel_tol=1e-12)


def flat(n, diag=None):
    d = np.ones(n) if diag is None else np.asarray(diag, dtype=float)
    return MatrixField.constant(np.diag(d), n)


def harmonic(k=1.0):
    return MechanicalLagrangian(flat(1), ScalarField(1, lambda x: 0.5 * k * x[0] * x[0]))


def varying_metric():
    # x-dependent metric on R so dg/dx enters the costate equation
    return MechanicalLagrangian(MatrixField((1, 1), 1, func=lambda x: [[1.0 + x[0] * x[0]]]))


class TestEliminateControl:
    def test_identity_metric(self):
        A = LieAlgebroid.tangent(2)
        v = eliminate_control(A, MechanicalLagrangian(flat(2)), [0.0, 0.0], [3.0, 4.0])
        np.testing.assert_array_equal(v, [3.0, 4.0])

    def test_diagonal_metric(self):
        A = LieAlgebroid.tangent(2)
        v = eliminate_control(A, MechanicalLagrangian(flat(2, [1.0, 2.0])), [0.0, 0.0], [2.0, 2.0])
        np.testing.assert_allclose(v, [2.0, 1.0], rtol=0, atol=1e-15)

    @settings(max_examples=50, deadline=None)
    @given(st.lists(st.floats(-3, 3), min_size=4, max_size=4))
    def test_stationarity(self, vals):
        entry = catalog("disk_pmp")
        x, p = np.array(vals[:2]), np.array(vals[2:])
        v = eliminate_control(entry.algebroid, entry.mechanical, x, p)
        r = hamiltonian_stationarity(entry.algebroid, entry.mechanical, x, p, v)
        assert np.max(np.abs(r)) < 1e-12

    def test_non_mechanical_rejected(self):
        A = LieAlgebroid.tangent(1)
        L = ScalarField(2, lambda z: z[1] ** 4)
        with pytest.raises(TypeError):
            eliminate_control(A, L, [0.0], [1.0])
        with pytest.raises(TypeError):
            pmp_vector_field(A, L, ExtremalState([0.0], [1.0]))

    def test_degenerate_metric(self):
        A = LieAlgebroid.tangent(2)
        L = MechanicalLagrangian(flat(2, [1.0, 0.0]))
        with pytest.raises(DegenerateMetricError):
            eliminate_control(A, L, [0.0, 0.0], [1.0, 1.0])


class TestVectorField:
    def test_free_particle(self):
        entry = catalog("free_particle")
        xdot, pdot = pmp_vector_field(entry.algebroid, entry.mechanical, ExtremalState([1.0, 2.0], [0.5, -1.0]))
        np.testing.assert_allclose(xdot, [0.5, -1.0], atol=1e-15)
        np.testing.assert_allclose(pdot, [0.0, 0.0], atol=1e-15)

    def test_harmonic(self):
        xdot, pdot = pmp_vector_field(LieAlgebroid.tangent(1), harmonic(4.0), ExtremalState([0.5], [2.0]))
        np.testing.assert_allclose(xdot, [2.0], atol=1e-15)
        np.testing.assert_allclose(pdot, [-2.0], atol=1e-15)

    def test_position_dependent_metric(self):
        # H = p^2 / (2 (1 + x^2)), so pdot = -dH/dx = p^2 x / (1 + x^2)^2
        x, p = 0.7, 1.3
        xdot, pdot = pmp_vector_field(LieAlgebroid.tangent(1), varying_metric(), ExtremalState([x], [p]))
        np.testing.assert_allclose(xdot, [p / (1 + x * x)], rtol=1e-14)
        np.testing.assert_allclose(pdot, [p * p * x / (1 + x * x) ** 2], rtol=1e-14)

    def test_point_base_warns(self):
        entry = catalog("euler_top")
        with pytest.warns(DegenerateBaseWarning):
            xdot, pdot = pmp_vector_field(entry.algebroid, entry.mechanical, ExtremalState([], []))
        assert xdot.size == 0 and pdot.size == 0

    def test_mismatched_state(self):
        with pytest.raises(ValueError):
            ExtremalState([0.0, 1.0], [1.0])

    def test_oscillator_period(self):
        T = simulate_extremal(LieAlgebroid.tangent(1), harmonic(), ExtremalState([1.0], [0.0]),
                              (0.0, 2 * np.pi), TIGHT)
        np.testing.assert_allclose(T.final, [1.0, 0.0], atol=1e-9)


class TestHamiltonian:
    def test_value(self):
        H = hamiltonian(LieAlgebroid.tangent(1), harmonic(2.0), ExtremalState([1.0], [3.0]))
        assert H == pytest.approx(0.5 * 9 + 1.0, abs=1e-14)

    @pytest.mark.parametrize("case", ["free", "harmonic", "metric", "disk"])
    def test_conserved(self, case):
        if case == "free":
            A, L, e = catalog("free_particle").algebroid, catalog("free_particle").mechanical, \
                ExtremalState([0.0, 0.0], [1.0, -0.5])
        elif case == "harmonic":
            A, L, e = LieAlgebroid.tangent(1), harmonic(), ExtremalState([1.0], [0.3])
        elif case == "metric":
            A, L, e = LieAlgebroid.tangent(1), varying_metric(), ExtremalState([0.2], [1.0])
        else:
            entry = catalog("disk_pmp")
            A, L, e = entry.algebroid, entry.mechanical, ExtremalState([0.1, 0.2], [1.0, 0.5])
        T = simulate_extremal(A, L, e, (0.0, 10.0))
        H = T.diagnostics["hamiltonian"]
        assert np.max(np.abs(H - H[0])) / abs(H[0]) < 1e-8


class TestNormalSubbundle:
    def test_disk_rank(self):
        entry = catalog("disk_pmp")
        rng = np.random.default_rng(0)
        for x in rng.uniform(-np.pi, np.pi, (20, 2)):
            B = normal_subbundle(entry.algebroid, entry.mechanical, x)
            assert B.shape == (4, 2)
            g = entry.mechanical.metric.value(x)
            np.testing.assert_allclose(B.T @ g @ B, np.eye(2), atol=1e-12)

    def test_spans_image(self):
        # the columns of the catalog's normal injection lie in the computed subbundle
        entry = catalog("disk_pmp")
        x = np.array([0.3, -0.4])
        B = normal_subbundle(entry.algebroid, entry.mechanical, x)
        cols = entry.system.W.injection.value(x)
        proj = B @ np.linalg.lstsq(B, cols, rcond=None)[0]
        np.testing.assert_allclose(proj, cols, atol=1e-12)

    def test_zero_anchor(self):
        A = LieAlgebroid.lie_algebra(so3_constants())
        L = MechanicalLagrangian(flat(0, [1.0, 2.0, 3.0]))
        assert normal_subbundle(A, L, []).shape == (3, 0)


class TestExtremalResidual:
    def test_free_particle(self):
        entry = catalog("free_particle")
        T = simulate_extremal(entry.algebroid, entry.mechanical, ExtremalState([0.0, 0.0], [1.0, 0.5]),
                              (0.0, 5.0))
        assert extremal_lagrangian_residual(entry.algebroid, entry.mechanical, T) < 1e-9

    def test_harmonic(self):
        A, L = LieAlgebroid.tangent(1), harmonic()
        T = simulate_extremal(A, L, ExtremalState([1.0], [0.0]), (0.0, 10.0),
                              IntegratorOptions(max_step=0.05))
        assert extremal_lagrangian_residual(A, L, T) < 1e-7

    def test_detects_wrong_costate(self):
        # a trajectory that is not an extremal must be flagged
        A, L = LieAlgebroid.tangent(1), harmonic()
        T = simulate_extremal(A, L, ExtremalState([1.0], [0.0]), (0.0, 5.0), IntegratorOptions(max_step=0.05))
        bad = T.states.copy()
        bad[:, 1] *= 1.5
        fake = Trajectory(T.times, bad, {}, T.layout)
        assert extremal_lagrangian_residual(A, L, fake) > 1e-3

    def test_rank_change(self):
        # anchor x d/dx drops rank at the origin
        A = LieAlgebroid(1, 1, MatrixField((1, 1), 1, func=lambda x: [[x[0]]]),
                         (MatrixField.constant(np.zeros((1, 1)), 1),))
        L = MechanicalLagrangian(flat(1))
        times = np.linspace(0.0, 1.0, 11)
        states = np.column_stack([times - 0.5, np.ones_like(times)])
        with pytest.raises(NonConstantRankError):
            extremal_lagrangian_residual(A, L, Trajectory(times, states, {}, ("x_0", "p_0")))
