import numpy as np
import pytest

from algebroid_dynamics import systems
from algebroid_dynamics.algebroid import validate_algebroid
from algebroid_dynamics.dynamics import energy, pseudo_sode, simulate
from algebroid_dynamics.integrate import IntegratorOptions
from algebroid_dynamics.oracle import multiplier_accel

from conftest import catalog


def test_names_sorted_and_complete():
    names = systems.names()
    assert names == sorted(names)
    assert {"free_particle", "euler_top", "nonholonomic_particle", "rolling_disk_full",
            "rolling_disk_reduced", "chaplygin_sleigh", "disk_pmp"} <= set(names)


def test_unknown_name():
    with pytest.raises(KeyError, match="unknown system"):
        systems.build("pendulum_on_a_cart")


def test_parameters_forwarded():
    e = systems.build("euler_top", inertia=(2.0, 3.0, 5.0))
    f = e.reference_facts["f_at_ones"].value
    np.testing.assert_allclose(pseudo_sode(e.system, e.system.initial).f, f, atol=1e-14)


class TestCatalogInvariants:
    def test_summary(self, entry):
        S = entry.system
        assert entry.summary() == f"{entry.name} n={S.n} m={S.m} k={S.k}"

    def test_dimensions(self, entry):
        S = entry.system
        assert S.k <= S.m
        assert S.W.injection.value(np.zeros(S.n) if S.n else np.zeros(0)).shape == (S.m, S.k)

    def test_initial_state_solvable(self, entry):
        S = entry.system
        assert S.initial is not None
        f = pseudo_sode(S, S.initial).f
        assert f.shape == (S.k,) and np.all(np.isfinite(f))

    def test_axioms(self, entry):
        rep = validate_algebroid(entry.algebroid, entry.system.box, 30, 0)
        assert rep.max_residual < 1e-9

    def test_facts_have_sources(self, entry):
        for fact in entry.reference_facts.values():
            assert fact.source


def test_euler_reference_facts():
    e = catalog("euler_top")
    s = e.system.initial
    np.testing.assert_allclose(pseudo_sode(e.system, s).f, e.reference_facts["f_at_ones"].value, atol=1e-14)
    assert energy(e.system, s) == pytest.approx(e.reference_facts["energy_at_ones"].value, abs=1e-14)


def test_nonholonomic_particle_facts():
    e = catalog("nonholonomic_particle")
    s = e.system.initial
    np.testing.assert_allclose(pseudo_sode(e.system, s).f, e.reference_facts["f_at_initial"].value, atol=1e-14)
    assert energy(e.system, s) == pytest.approx(1.5, abs=1e-14)


@pytest.mark.parametrize("name", ["rolling_disk_reduced", "free_particle"])
def test_vanishing_acceleration(name):
    S = catalog(name).system
    for s in S.sample_states(50, seed=3):
        assert np.max(np.abs(pseudo_sode(S, s).f)) < 1e-12


def test_disk_circle():
    S = catalog("rolling_disk_full").system
    T = simulate(S, S.state([0.0, 0.0, 0.0, 0.0], [1.0, 2.0]), (0.0, 5.0), diagnostics=False)
    centre, radius, dev = systems.circle_fit(T.states[:, :2])
    assert abs(radius - 2.0) < 1e-6 and dev < 1e-6


def test_circle_fit_exact():
    t = np.linspace(0, 3, 40)
    centre, radius, dev = systems.circle_fit(np.column_stack([1 + 2 * np.cos(t), -1 + 2 * np.sin(t)]))
    np.testing.assert_allclose(centre, [1.0, -1.0], atol=1e-12)
    assert radius == pytest.approx(2.0, abs=1e-12) and dev < 1e-12


def test_alpha_roundtrip():
    # fibre coordinates of an admissible velocity: rolling part vanishes
    q = np.array([0.3, -0.2, 0.7, 1.1])
    inj = catalog("rolling_disk_full").system.W.injection.value(q)
    base, fibre = systems.alpha_A(q, inj @ np.array([0.4, -1.3]))
    np.testing.assert_allclose(base, q[2:], atol=0)
    np.testing.assert_allclose(fibre, [0.4, -1.3, 0.0, 0.0], atol=1e-15)


def test_sleigh_energy_and_momentum():
    e = catalog("chaplygin_sleigh")
    S = e.system
    T = simulate(S, S.initial, (0.0, 10.0))
    E = T.diagnostics["energy"]
    assert np.max(np.abs(E - E[0])) / E[0] < 1e-8
    inj = [S.W.injection.value(y[:3]) @ y[3:] for y in T.states]
    P = np.array([systems.sleigh_momentum(y[:3], qd) for y, qd in zip(T.states, inj)])
    assert np.max(np.ptp(P, axis=0)) > 1e-2


@pytest.mark.parametrize("name", ["nonholonomic_particle", "rolling_disk_full", "chaplygin_sleigh",
                                  "free_particle"])
def test_multiplier_companion_agrees(name):
    e = catalog(name)
    S = e.system
    for s in S.sample_states(25, seed=5):
        inj, dinj = S.W.injection.value_and_jacobian(s.x)
        qdot = inj @ s.w
        qdd, _ = multiplier_accel(e.oracle, s.x, qdot)
        f = pseudo_sode(S, s).f
        lifted = inj @ f + np.einsum("akj,j,k->a", dinj, qdot, s.w)
        np.testing.assert_allclose(lifted, qdd, atol=1e-10)
        back = e.to_constrained(s.x, qdot)
        np.testing.assert_allclose(back.w, s.w, atol=1e-12)


def test_disk_pmp_normal_injection():
    e = catalog("disk_pmp")
    x = np.array([0.4, 0.0])
    g = e.mechanical.metric.value(x)
    cols = systems.disk_normal_injection().value(x)
    rho = e.algebroid.anchor_at(x)
    # g^{-1} rho^T spans the same space as the injection columns
    img = np.linalg.solve(g, rho.T)
    assert np.linalg.matrix_rank(np.column_stack([img, cols]), tol=1e-10) == 2
