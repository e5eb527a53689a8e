"""Normal extremals of the maximum principle for mechanical Lagrangians on an algebroid.

Only ``L = 1/2 v^T g(x) v - V(x)`` is admitted, for which the Legendre map is
linear and the eliminated controls ``v* = g^{-1} rho^T p`` fill a linear
subbundle.  The abnormal multiplier is fixed to ``p0 = -1``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.interpolate import make_interp_spline

from .algebroid import LieAlgebroid
from .errors import DegenerateMetricError, NonConstantRankError
from .integrate import IntegratorOptions, Trajectory, integrate
from .smooth import Jet, MatrixField, ScalarField

RANK_TOL = 1e-10


class DegenerateBaseWarning(UserWarning):
    """The algebroid has a point base; the extremal flow is empty."""


@dataclass(frozen=True)
class ExtremalState:
    x: np.ndarray
    p: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "x", np.atleast_1d(np.asarray(self.x, dtype=float)))
        object.__setattr__(self, "p", np.atleast_1d(np.asarray(self.p, dtype=float)))
        if self.x.shape != self.p.shape:
            raise ValueError("x and p must have equal length")
        if not (np.all(np.isfinite(self.x)) and np.all(np.isfinite(self.p))):
            raise ValueError("extremal state must be finite")

    def as_vector(self) -> np.ndarray:
        return np.concatenate([self.x, self.p])


@dataclass(frozen=True)
class MechanicalLagrangian:
    """Fibre metric ``g_ab(x)`` and base potential ``V(x)``."""

    metric: MatrixField
    potential: ScalarField | None = None

    @property
    def m(self) -> int:
        return self.metric.shape[0]

    def potential_grad(self, x) -> np.ndarray:
        if self.potential is None:
            return np.zeros(len(x))
        return self.potential.gradient(x)

    def potential_value(self, x) -> float:
        return 0.0 if self.potential is None else self.potential.value(x)

    def lagrangian(self, n: int) -> ScalarField:
        """``L(x, v)`` as a jet-transparent scalar field of arity ``n + m``."""
        m = self.m
        metric, pot = self.metric, self.potential

        def L(z):
            x, v = z[:n], z[n:]
            g = metric.evaluate(x)
            kin = 0.0
            for a in range(m):
                for b in range(a, m):
                    gab = g[a, b]
                    # skip structural zeros; the metric is symmetric
                    if not isinstance(gab, Jet) and gab == 0.0:
                        continue
                    term = gab * v[a] * v[b]
                    kin = kin + (term if a == b else 2.0 * term)
            out = 0.5 * kin
            if pot is not None:
                out = out - pot.on(x)
            return out

        return ScalarField(n + m, L, name="mechanical")

    def check_metric(self, x) -> np.ndarray:
        g = self.metric.value(x)
        if not np.allclose(g, g.T, rtol=0, atol=1e-12):
            raise DegenerateMetricError("metric is not symmetric")
        ev = np.linalg.eigvalsh(0.5 * (g + g.T))
        if ev.size and not ev[0] > 1e-12 * max(1.0, ev[-1]):
            raise DegenerateMetricError(f"metric not positive definite (min eigenvalue {ev[0]:.3e})")
        return g


def _require_mechanical(L):
    if not isinstance(L, MechanicalLagrangian):
        raise TypeError("only mechanical Lagrangians (metric + potential) have a linear Legendre map")


def eliminate_control(A: LieAlgebroid, L: MechanicalLagrangian, x, p) -> np.ndarray:
    """Fibre maximiser ``v* = g^{-1}(x) rho^T(x) p`` of the Hamiltonian with ``p0 = -1``."""
    _require_mechanical(L)
    x = np.atleast_1d(np.asarray(x, dtype=float)) if A.n else np.zeros(0)
    p = np.atleast_1d(np.asarray(p, dtype=float)) if A.n else np.zeros(0)
    g = L.check_metric(x)
    return np.linalg.solve(g, A.anchor_at(x).T @ p)


def hamiltonian_stationarity(A: LieAlgebroid, L: MechanicalLagrangian, x, p, v) -> np.ndarray:
    """``dH/dv = p_i rho^i_a - dL/dv^a``."""
    g = L.metric.value(x)
    return A.anchor_at(x).T @ np.asarray(p, dtype=float) - g @ np.asarray(v, dtype=float)


def hamiltonian(A: LieAlgebroid, L: MechanicalLagrangian, e: ExtremalState) -> float:
    """``H = p rho v* - L(x, v*) = 1/2 p^T rho g^{-1} rho^T p + V(x)``."""
    v = eliminate_control(A, L, e.x, e.p)
    g = L.metric.value(e.x)
    return float(e.p @ (A.anchor_at(e.x) @ v) - 0.5 * v @ g @ v + L.potential_value(e.x))


def pmp_vector_field(A: LieAlgebroid, L: MechanicalLagrangian, e: ExtremalState
                     ) -> tuple[np.ndarray, np.ndarray]:
    """``xdot = rho v*``, ``pdot_i = -p_j d_i rho^j_a v*^a + dL/dx^i`` at ``v = v*``."""
    _require_mechanical(L)
    if A.n == 0:
        warnings.warn("point base: the extremal flow is empty", DegenerateBaseWarning, stacklevel=2)
        return np.zeros(0), np.zeros(0)
    x, p = e.x, e.p
    v = eliminate_control(A, L, x, p)
    rho, drho = A.anchor.value_and_jacobian(x)       # drho[j, a, i]
    dg = L.metric.jacobian(x)                         # [a, b, i]
    xdot = rho @ v
    dLdx = 0.5 * np.einsum("abi,a,b->i", dg, v, v) - L.potential_grad(x)
    pdot = -np.einsum("j,jai,a->i", p, drho, v) + dLdx
    return xdot, pdot


def extremal_vector_field(A: LieAlgebroid, L: MechanicalLagrangian):
    n = A.n

    def rhs(t, y):
        xdot, pdot = pmp_vector_field(A, L, ExtremalState(y[:n], y[n:]))
        return np.concatenate([xdot, pdot])

    return rhs


def simulate_extremal(A: LieAlgebroid, L: MechanicalLagrangian, e0: ExtremalState, t_span,
                      opts: IntegratorOptions = IntegratorOptions()) -> Trajectory:
    n = A.n
    layout = tuple(f"x_{j}" for j in range(n)) + tuple(f"p_{j}" for j in range(n))
    diag = {"hamiltonian": lambda t, y: hamiltonian(A, L, ExtremalState(y[:n], y[n:]))}
    return integrate(extremal_vector_field(A, L), e0.as_vector(), t_span, opts, diag, layout)


def normal_subbundle(A: LieAlgebroid, L: MechanicalLagrangian, x) -> np.ndarray:
    """g-orthonormal basis (columns) of the image of ``g^{-1} rho^T`` at ``x``."""
    _require_mechanical(L)
    x = np.atleast_1d(np.asarray(x, dtype=float)) if A.n else np.zeros(0)
    g = L.check_metric(x)
    B = np.linalg.solve(g, A.anchor_at(x).T)          # m x n
    if B.size == 0:
        return np.zeros((A.m, 0))
    U, s, _ = np.linalg.svd(B, full_matrices=False)
    r = int(np.sum(s > RANK_TOL * s[0])) if s[0] > 0 else 0
    U = U[:, :r]
    if r == 0:
        return np.zeros((A.m, 0))
    chol = np.linalg.cholesky(U.T @ g @ U)
    return np.linalg.solve(chol, U.T).T


def extremal_lagrangian_residual(A: LieAlgebroid, L: MechanicalLagrangian,
                                 extremal_traj: Trajectory) -> float:
    """Largest contracted Lagrange-d'Alembert residual along a sampled extremal.

    Momenta ``dL/dv(x, v*)`` are differentiated in time with a quintic
    interpolating spline through the accepted samples; the residual is then
    contracted with a basis of the normal subbundle at each sample.
    """
    _require_mechanical(L)
    n = A.n
    if n == 0:
        return 0.0
    T = extremal_traj
    xs, ps = T.states[:, :n], T.states[:, n:]
    vs = np.array([eliminate_control(A, L, x, p) for x, p in zip(xs, ps)])
    mom = np.array([L.metric.value(x) @ v for x, v in zip(xs, vs)])
    k = min(5, len(T.times) - 1)
    if k < 1:
        raise ValueError("need at least two samples")
    dmom = make_interp_spline(T.times, mom, k=k, axis=0).derivative()(T.times)
    worst = 0.0
    rank0 = None
    for x, v, dm in zip(xs, vs, dmom):
        basis = normal_subbundle(A, L, x)
        if rank0 is None:
            rank0 = basis.shape[1]
        elif basis.shape[1] != rank0:
            raise NonConstantRankError(f"anchor rank changes from {rank0} to {basis.shape[1]}")
        rho = A.anchor_at(x)
        dg = L.metric.jacobian(x)
        Lx = 0.5 * np.einsum("abi,a,b->i", dg, v, v) - L.potential_grad(x)
        Lv = L.metric.value(x) @ v
        C = A.structure_at(x)
        res = basis.T @ (dm - rho.T @ Lx + np.einsum("cab,b,c->a", C, v, Lv))
        if res.size:
            worst = max(worst, float(np.max(np.abs(res))))
    return worst
