"""Catalog of ready-made benchmark systems.

Every entry bundles a constrained Lagrangian system with whatever companions
it supports: a classical multiplier formulation on ``TQ``, the principal
bundle data used for reduction, and a mechanical Lagrangian for the
maximum-principle tools.  Parameters default to 1.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .algebroid import LieAlgebroid, PrincipalBundleData, Subbundle, build_atiyah, so3_constants
from .dynamics import ConstrainedState, LagrangianSystem
from .optimal_control import MechanicalLagrangian
from .oracle import TangentBundleSystem
from .smooth import MatrixField, ScalarField, cos, sin


@dataclass(frozen=True)
class ReferenceFact:
    """An expected quantity together with how it was obtained."""

    value: object
    source: str


@dataclass(frozen=True)
class CatalogEntry:
    name: str
    system: LagrangianSystem
    oracle: TangentBundleSystem | None = None
    bundle: PrincipalBundleData | None = None
    mechanical: MechanicalLagrangian | None = None
    reference_facts: dict[str, ReferenceFact] = field(default_factory=dict)
    # maps a companion-oracle state (q, qdot) to this system's (x, w)
    to_constrained: Callable[[np.ndarray, np.ndarray], ConstrainedState] | None = None

    @property
    def algebroid(self) -> LieAlgebroid:
        return self.system.algebroid

    def summary(self) -> str:
        S = self.system
        return f"{self.name} n={S.n} m={S.m} k={S.k}"


def _quadratic(n: int, metric: MatrixField, potential: ScalarField | None = None) -> ScalarField:
    return MechanicalLagrangian(metric, potential).lagrangian(n)


def _diag_metric(diag, n: int) -> MatrixField:
    return MatrixField.constant(np.diag(np.asarray(diag, dtype=float)), n, name="metric")


def _tangent_companion(n: int, L: ScalarField, constraints: MatrixField, name: str) -> TangentBundleSystem:
    return TangentBundleSystem(n, L, constraints, name)


def free_particle(mass: float = 1.0) -> CatalogEntry:
    A = LieAlgebroid.tangent(2)
    metric = _diag_metric([mass, mass], 2)
    L = _quadratic(2, metric)
    S = LagrangianSystem(Subbundle.identity(A), L, name="free_particle",
                         initial=ConstrainedState([0.0, 0.0], [1.0, 0.5]))
    oracle = _tangent_companion(2, L, MatrixField.constant(np.zeros((0, 2)), 2), "free_particle")
    facts = {"f": ReferenceFact(np.zeros(2), "no forces, no constraints")}
    return CatalogEntry("free_particle", S, oracle=oracle, mechanical=MechanicalLagrangian(metric),
                        reference_facts=facts, to_constrained=lambda q, qd: ConstrainedState(q, qd))


def euler_top(inertia=(1.0, 2.0, 3.0)) -> CatalogEntry:
    inertia = np.asarray(inertia, dtype=float)
    A = LieAlgebroid.lie_algebra(so3_constants(), name="so(3)")
    metric = _diag_metric(inertia, 0)
    L = _quadratic(0, metric)
    S = LagrangianSystem(Subbundle.identity(A), L, name="euler_top", w_box=(-2.0, 2.0),
                         initial=ConstrainedState(np.zeros(0), [1.0, 1.0, 1.0]))
    I1, I2, I3 = inertia
    facts = {
        "f_at_ones": ReferenceFact(np.array([(I2 - I3) / I1, (I3 - I1) / I2, (I1 - I2) / I3]),
                                   "Euler rigid-body equations at w=(1,1,1)"),
        "energy_at_ones": ReferenceFact(0.5 * float(inertia.sum()), "1/2 sum I_a w_a^2"),
    }
    return CatalogEntry("euler_top", S, mechanical=MechanicalLagrangian(metric), reference_facts=facts)


def nonholonomic_particle() -> CatalogEntry:
    """Unit-mass particle in ``R^3`` subject to ``zdot = y xdot``."""
    A = LieAlgebroid.tangent(3)
    W = Subbundle(A, 2, MatrixField((3, 2), 3, func=lambda x: [[1.0, 0.0], [0.0, 1.0], [x[1], 0.0]],
                                    name="injection"))
    metric = _diag_metric([1.0, 1.0, 1.0], 3)
    L = _quadratic(3, metric)
    S = LagrangianSystem(W, L, name="nonholonomic_particle",
                         initial=ConstrainedState([0.0, 1.0, 0.0], [1.0, 1.0]))
    omega = MatrixField((1, 3), 3, func=lambda x: [[-x[1], 0.0, 1.0]], name="annihilator")
    oracle = _tangent_companion(3, L, omega, "nonholonomic_particle")
    facts = {
        "f_at_initial": ReferenceFact(np.array([-0.5, 0.0]), "multiplier solution at x=(0,1,0), w=(1,1)"),
        "energy_at_initial": ReferenceFact(1.5, "1/2 |xdot|^2 with xdot=(1,1,1)"),
    }
    return CatalogEntry("nonholonomic_particle", S, oracle=oracle, reference_facts=facts,
                        to_constrained=lambda q, qd: ConstrainedState(q, qd[:2]))


def _disk_full_injection(R):
    # columns: pure turning, and rolling along the heading
    return lambda q: [[0.0, R * cos(q[2])], [0.0, R * sin(q[2])], [1.0, 0.0], [0.0, 1.0]]


def rolling_disk_full(R: float = 1.0, mass: float = 1.0, I: float = 1.0, J: float = 1.0) -> CatalogEntry:
    """Vertical disk on the plane, ``q = (x, y, theta, phi)`` with heading ``theta``."""
    A = LieAlgebroid.tangent(4)
    W = Subbundle(A, 2, MatrixField((4, 2), 4, func=_disk_full_injection(R), name="injection"))
    metric = _diag_metric([mass, mass, I, J], 4)
    L = _quadratic(4, metric)
    S = LagrangianSystem(W, L, name="rolling_disk_full", box=(-np.pi, np.pi),
                         initial=ConstrainedState([0.0, 0.0, 0.0, 0.0], [1.0, 1.0]))
    omega = MatrixField((2, 4), 4, func=lambda q: [[1.0, 0.0, 0.0, -R * cos(q[2])],
                                                    [0.0, 1.0, 0.0, -R * sin(q[2])]],
                        name="annihilator")
    oracle = _tangent_companion(4, L, omega, "rolling_disk_full")
    facts = {"f": ReferenceFact(np.zeros(2), "constant turning and rolling rates"),
             "circle_radius": ReferenceFact("R |phidot / thetadot|", "closed-form constant-speed solution")}
    return CatalogEntry("rolling_disk_full", S, oracle=oracle, reference_facts=facts,
                        to_constrained=lambda q, qd: ConstrainedState(q, qd[2:4]))


def disk_bundle(R: float = 1.0) -> PrincipalBundleData:
    """Translations ``G = R^2`` acting on ``(x, y)``; base ``(theta, phi)``.

    The connection is the rolling constraint: ``A^x_phi = -R cos theta``,
    ``A^y_phi = -R sin theta``.
    """
    conn = MatrixField((2, 2), 2, func=lambda s: [[0.0, -R * cos(s[0])], [0.0, -R * sin(s[0])]],
                       name="connection")
    return PrincipalBundleData(2, 2, np.zeros((2, 2, 2)), conn)


def disk_metric(R: float = 1.0, mass: float = 1.0, I: float = 1.0, J: float = 1.0) -> MatrixField:
    """Invariant kinetic metric in the fibre coordinates ``(thetadot, phidot, vbar_x, vbar_y)``.

    ``vbar = (xdot, ydot) + A (thetadot, phidot)`` so that
    ``(xdot, ydot) = vbar + R phidot (cos theta, sin theta)``.
    """
    def g(s):
        c, sn = cos(s[0]), sin(s[0])
        return [[I, 0.0, 0.0, 0.0],
                [0.0, J + mass * R * R, mass * R * c, mass * R * sn],
                [0.0, mass * R * c, mass, 0.0],
                [0.0, mass * R * sn, 0.0, mass]]

    return MatrixField((4, 4), 2, func=g, name="disk metric")


def alpha_A(q, qdot, R: float = 1.0) -> tuple[np.ndarray, np.ndarray]:
    """Connection isomorphism ``TQ/G -> T(Q/G) (+) g~`` for the rolling disk.

    Returns the base point ``(theta, phi)`` and the fibre vector
    ``(thetadot, phidot, vbar_x, vbar_y)``.
    """
    q = np.asarray(q, dtype=float)
    qdot = np.asarray(qdot, dtype=float)
    th = q[2]
    vbar = qdot[:2] + np.array([-R * np.cos(th), -R * np.sin(th)]) * qdot[3]
    return q[2:4].copy(), np.concatenate([qdot[2:4], vbar])


def rolling_disk_reduced(R: float = 1.0, mass: float = 1.0, I: float = 1.0, J: float = 1.0) -> CatalogEntry:
    P = disk_bundle(R)
    A = build_atiyah(P, name="disk atiyah")
    W = Subbundle(A, 2, MatrixField.constant([[1.0, 0.0], [0.0, 1.0], [0.0, 0.0], [0.0, 0.0]], 2,
                                             name="horizontal"))
    metric = disk_metric(R, mass, I, J)
    L = _quadratic(2, metric)
    S = LagrangianSystem(W, L, name="rolling_disk_reduced", box=(-np.pi, np.pi),
                         initial=ConstrainedState([0.0, 0.0], [1.0, 1.0]))
    facts = {"f": ReferenceFact(np.zeros(2), "reduced equations of the constant-speed disk"),
             "curvature_x_theta_phi": ReferenceFact("R sin theta", "exterior derivative of the connection")}
    return CatalogEntry("rolling_disk_reduced", S, bundle=P, reference_facts=facts)


def chaplygin_sleigh(mass: float = 1.0, a: float = 1.0, I: float = 1.0) -> CatalogEntry:
    """Knife-edge sleigh, ``q = (x, y, theta)``, contact point at distance ``a`` behind the centre of mass."""
    A = LieAlgebroid.tangent(3)
    W = Subbundle(A, 2, MatrixField((3, 2), 3, func=lambda q: [[cos(q[2]), 0.0], [sin(q[2]), 0.0], [0.0, 1.0]],
                                    name="injection"))

    def lag(z):
        th, vx, vy, vth = z[2], z[3], z[4], z[5]
        u = vx - a * sin(th) * vth
        v = vy + a * cos(th) * vth
        return 0.5 * mass * (u * u + v * v) + 0.5 * I * vth * vth

    L = ScalarField(6, lag, name="sleigh")
    S = LagrangianSystem(W, L, name="chaplygin_sleigh", box=(-np.pi, np.pi),
                         initial=ConstrainedState([0.0, 0.0, 0.0], [1.0, 1.0]))
    omega = MatrixField((1, 3), 3, func=lambda q: [[-sin(q[2]), cos(q[2]), 0.0]], name="annihilator")
    oracle = _tangent_companion(3, L, omega, "chaplygin_sleigh")
    facts = {"linear_momentum": ReferenceFact("not conserved", "constraint force does work on translation")}
    return CatalogEntry("chaplygin_sleigh", S, oracle=oracle, reference_facts=facts,
                        to_constrained=lambda q, qd: ConstrainedState(
                            q, [np.cos(q[2]) * qd[0] + np.sin(q[2]) * qd[1], qd[2]]))


def sleigh_momentum(q, qdot, mass: float = 1.0, a: float = 1.0) -> np.ndarray:
    """Linear momentum of the sleigh's centre of mass."""
    th = q[2]
    return mass * np.array([qdot[0] - a * np.sin(th) * qdot[2], qdot[1] + a * np.cos(th) * qdot[2]])


def disk_normal_injection(R: float = 1.0) -> MatrixField:
    """Spanning columns of the normal subbundle of :func:`disk_metric` (with ``J > 0``)."""
    return MatrixField((4, 2), 2, func=lambda s: [[1.0, 0.0], [0.0, 1.0],
                                                  [0.0, -R * cos(s[0])], [0.0, -R * sin(s[0])]],
                       name="normal")


def disk_pmp(R: float = 1.0, mass: float = 1.0, I: float = 1.0, J: float = 1.0) -> CatalogEntry:
    P = disk_bundle(R)
    A = build_atiyah(P, name="disk atiyah")
    metric = disk_metric(R, mass, I, J)
    mech = MechanicalLagrangian(metric)
    W = Subbundle(A, 2, disk_normal_injection(R))
    S = LagrangianSystem(W, mech.lagrangian(2), name="disk_pmp", box=(-np.pi, np.pi),
                         initial=ConstrainedState([0.0, 0.0], [1.0, 1.0]))
    facts = {"normal_rank": ReferenceFact(2, "rank of the anchor")}
    return CatalogEntry("disk_pmp", S, bundle=P, mechanical=mech, reference_facts=facts)


_BUILDERS: dict[str, Callable[..., CatalogEntry]] = {
    "chaplygin_sleigh": chaplygin_sleigh,
    "disk_pmp": disk_pmp,
    "euler_top": euler_top,
    "free_particle": free_particle,
    "nonholonomic_particle": nonholonomic_particle,
    "rolling_disk_full": rolling_disk_full,
    "rolling_disk_reduced": rolling_disk_reduced,
}


def names() -> list[str]:
    return sorted(_BUILDERS)


def build(name: str, **params) -> CatalogEntry:
    try:
        builder = _BUILDERS[name]
    except KeyError:
        raise KeyError(f"unknown system {name!r}; known: {', '.join(names())}") from None
    return builder(**params)


def circle_fit(xy) -> tuple[np.ndarray, float, float]:
    """Least-squares circle through planar points: ``(centre, radius, max radial deviation)``."""
    xy = np.asarray(xy, dtype=float)
    A = np.column_stack([2 * xy, np.ones(len(xy))])
    b = np.sum(xy ** 2, axis=1)
    sol, *_ = np.linalg.lstsq(A, b, rcond=None)
    centre = sol[:2]
    radius = float(np.sqrt(sol[2] + centre @ centre))
    dev = float(np.max(np.abs(np.linalg.norm(xy - centre, axis=1) - radius)))
    return centre, radius, dev
