"""Classical multiplier solver for nonholonomic systems on a tangent bundle.

This module deliberately shares no code path with :mod:`.dynamics` beyond the
differentiation substrate: accelerations come from the KKT system

    [[H, omega^T], [omega, 0]] [xddot, mu] = [dL/dx - d2L/dxdot dx xdot, -omegadot xdot],

with multipliers ``lambda = -mu`` so that the constraint force is
``lambda_b omega^b``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .algebroid import Subbundle
from .errors import DegenerateConstraintError, InconsistentStateError
from .integrate import IntegratorOptions, Trajectory, integrate, trajectory_compare
from .smooth import MatrixField, ScalarField

__all__ = [
    "TangentBundleSystem", "ConnectionForm", "multiplier_accel",
    "dalembert_contracted_residual", "trajectory_compare", "oracle_vector_field", "simulate_oracle",
]


@dataclass(frozen=True)
class TangentBundleSystem:
    """Lagrangian ``L(x, xdot)`` on ``TR^n`` with annihilator rows ``omega^b_i(x)``."""

    n: int
    L: ScalarField
    constraints: MatrixField
    name: str = ""

    def __post_init__(self):
        if self.L.arity != 2 * self.n:
            raise ValueError("Lagrangian must take (x, xdot)")
        if self.constraints.shape[1] != self.n:
            raise ValueError("constraint rows must have n columns")

    @property
    def p(self) -> int:
        return self.constraints.shape[0]

    @property
    def layout(self) -> tuple[str, ...]:
        return tuple(f"x_{j}" for j in range(self.n)) + tuple(f"xdot_{j}" for j in range(self.n))

    def annihilation_residual(self, companion: Subbundle, x) -> float:
        """``max |omega^b_i i^i_A|`` against a companion subbundle."""
        prod = self.constraints.value(x) @ companion.injection.value(x)
        return float(np.max(np.abs(prod))) if prod.size else 0.0


@dataclass(frozen=True)
class ConnectionForm:
    """Constraints ``sdot^a = -A^a_I(x) rdot^I`` on a split ``x = (r, s)``.

    ``r_index`` and ``s_index`` list the coordinate positions of ``r`` and
    ``s``; ``coefficients`` has shape ``(len(s_index), len(r_index))``.
    """

    n: int
    r_index: tuple[int, ...]
    s_index: tuple[int, ...]
    coefficients: MatrixField

    def __post_init__(self):
        if sorted(self.r_index + self.s_index) != list(range(self.n)):
            raise ValueError("r_index and s_index must partition the coordinates")
        if self.coefficients.shape != (len(self.s_index), len(self.r_index)):
            raise ValueError("coefficients must have shape (len(s), len(r))")

    def annihilator(self) -> MatrixField:
        """Rows ``ds^a + A^a_I dr^I``."""
        p, n = len(self.s_index), self.n

        def rows(x):
            A = self.coefficients.evaluate(x)
            out = [[0.0] * n for _ in range(p)]
            for a, sa in enumerate(self.s_index):
                out[a][sa] = 1.0
                for I, rI in enumerate(self.r_index):
                    out[a][rI] = A[a, I]
            return out

        return MatrixField((p, n), n, func=rows, name="annihilator")

    def injection(self) -> MatrixField:
        """Columns ``d/dr^I - A^a_I d/ds^a``."""
        k, n = len(self.r_index), self.n

        def cols(x):
            A = self.coefficients.evaluate(x)
            out = [[0.0] * k for _ in range(n)]
            for I, rI in enumerate(self.r_index):
                out[rI][I] = 1.0
                for a, sa in enumerate(self.s_index):
                    out[sa][I] = -A[a, I]
            return out

        return MatrixField((n, k), n, func=cols, name="injection")

    def curvature(self, x) -> np.ndarray:
        """``B^a_IJ = dA^a_I/dr^J - dA^a_J/dr^I + A^b_I dA^a_J/ds^b - A^b_J dA^a_I/ds^b``."""
        A, dA = self.coefficients.value_and_jacobian(x)
        dr = dA[:, :, list(self.r_index)]   # [a, I, J] = dA^a_I / dr^J
        ds = dA[:, :, list(self.s_index)]   # [a, I, b] = dA^a_I / ds^b
        B = (dr - dr.transpose(0, 2, 1)
             + np.einsum("bI,aJb->aIJ", A, ds) - np.einsum("bJ,aIb->aIJ", A, ds))
        return 0.5 * (B - B.transpose(0, 2, 1))

    def system(self, L: ScalarField, name: str = "") -> TangentBundleSystem:
        return TangentBundleSystem(self.n, L, self.annihilator(), name)


def multiplier_accel(S: TangentBundleSystem, x, xdot, atol: float | None = 1e-8
                     ) -> tuple[np.ndarray, np.ndarray]:
    """Accelerations and multipliers of the Lagrange-d'Alembert equations.

    ``atol`` bounds the admissible constraint violation ``|omega xdot|``; pass
    ``None`` to skip the check (used while integrating, where drift is measured
    separately).
    """
    x = np.asarray(x, dtype=float)
    xdot = np.asarray(xdot, dtype=float)
    n = S.n
    om, dom = S.constraints.value_and_jacobian(x)     # dom[b, i, j]
    p = om.shape[0]
    if atol is not None and p and np.max(np.abs(om @ xdot)) > atol:
        raise InconsistentStateError(f"velocity violates constraints by {np.max(np.abs(om @ xdot)):.3e}")
    _, g, H = S.L.jet(np.concatenate([x, xdot]))
    Lx, Hvv, Hvx = g[:n], H[n:, n:], H[n:, :n]
    K = np.zeros((n + p, n + p))
    K[:n, :n] = Hvv
    K[:n, n:] = om.T
    K[n:, :n] = om
    rhs = np.concatenate([Lx - Hvx @ xdot, -np.einsum("bij,j,i->b", dom, xdot, xdot)])
    try:
        sol = np.linalg.solve(K, rhs)
    except np.linalg.LinAlgError as exc:
        raise DegenerateConstraintError("singular KKT matrix") from exc
    if np.linalg.cond(K) > 1e12:
        raise DegenerateConstraintError(f"KKT matrix condition {np.linalg.cond(K):.3e}")
    return sol[:n], -sol[n:]


def dalembert_contracted_residual(S: TangentBundleSystem, companion: Subbundle, x, w, wdot) -> float:
    """``max_A |iota^i_A (d/dt dL/dxdot^i - dL/dx^i)|`` at the jet ``(x, w, wdot)``."""
    x = np.asarray(x, dtype=float)
    w = np.asarray(w, dtype=float)
    wdot = np.asarray(wdot, dtype=float)
    n = S.n
    io, dio = companion.injection.value_and_jacobian(x)
    xdot = io @ w
    xddot = (dio @ xdot) @ w + io @ wdot
    _, g, H = S.L.jet(np.concatenate([x, xdot]))
    el = H[n:, :n] @ xdot + H[n:, n:] @ xddot - g[:n]
    res = io.T @ el
    return float(np.max(np.abs(res))) if res.size else 0.0


def oracle_vector_field(S: TangentBundleSystem):
    n = S.n

    def rhs(t, y):
        xddot, _ = multiplier_accel(S, y[:n], y[n:], atol=None)
        return np.concatenate([y[n:], xddot])

    return rhs


def simulate_oracle(S: TangentBundleSystem, x0, xdot0, t_span,
                    opts: IntegratorOptions = IntegratorOptions()) -> Trajectory:
    """Integrate the index-reduced multiplier ODE; constraint drift is recorded, not corrected."""
    n = S.n

    def drift(t, y):
        om = S.constraints.value(y[:n])
        return float(np.max(np.abs(om @ y[n:]))) if om.size else 0.0

    def kinetic_energy(t, y):
        return float(y[n:] @ S.L.gradient(y)[n:] - S.L.value(y))

    y0 = np.concatenate([np.asarray(x0, dtype=float), np.asarray(xdot0, dtype=float)])
    return integrate(oracle_vector_field(S), y0, t_span, opts,
                     {"constraint_drift": drift, "energy": kinetic_energy}, S.layout)
