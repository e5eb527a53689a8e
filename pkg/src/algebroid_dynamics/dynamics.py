"""Constrained Lagrangian dynamics on a subbundle of a Lie algebroid.

For a state ``(x, w)`` with ``v = i(x) w`` the fibre acceleration ``f`` of the
pseudo-SODE is obtained from the contracted Lagrange-d'Alembert system

    i^a_A [ d/dt dL/dv^a - rho^i_a dL/dx^i + C^c_ab v^b dL/dv^c ] = 0,

expanded along ``xdot = lambda w``, ``wdot = f``.  The fundamental-form
residual rebuilds the same equation independently from the coefficient blocks
of ``delta theta_L`` and ``delta E_L`` and contracts them with ``(w, f)``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
import scipy.linalg

from .algebroid import LieAlgebroid, Subbundle, sample_box
from .errors import DegenerateLagrangianError
from .integrate import IntegratorOptions, Trajectory, integrate
from .smooth import ScalarField

PIVOT_RATIO = 1e-12


@dataclass(frozen=True)
class ConstrainedState:
    x: np.ndarray
    w: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "x", np.atleast_1d(np.asarray(self.x, dtype=float)))
        object.__setattr__(self, "w", np.atleast_1d(np.asarray(self.w, dtype=float)))
        if not (np.all(np.isfinite(self.x)) and np.all(np.isfinite(self.w))):
            raise ValueError("state entries must be finite")

    def as_vector(self) -> np.ndarray:
        return np.concatenate([self.x, self.w])

    @classmethod
    def from_vector(cls, y, n: int) -> "ConstrainedState":
        y = np.asarray(y, dtype=float)
        return cls(y[:n], y[n:])


@dataclass(frozen=True)
class SodeValue:
    xdot: np.ndarray
    f: np.ndarray


@dataclass(frozen=True)
class LagrangianSystem:
    """A regular Lagrangian ``L(x, v)`` on ``W.parent`` constrained to ``W``.

    ``box`` bounds the base sample region and ``w_box`` the constrained
    velocities used for random recommended states.
    """

    W: Subbundle
    L: ScalarField
    name: str = ""
    box: tuple = (-1.0, 1.0)
    w_box: tuple = (-1.0, 1.0)
    initial: ConstrainedState | None = None
    check_samples: int = 8

    def __post_init__(self):
        if self.L.arity != self.n + self.m:
            raise ValueError(f"Lagrangian arity must be n+m={self.n + self.m}, got {self.L.arity}")
        for s in self.sample_states(self.check_samples, seed=12345):
            M = restricted_hessian(self, s)
            if M.size:
                _lu(M, "restricted Hessian")

    @property
    def algebroid(self) -> LieAlgebroid:
        return self.W.parent

    @property
    def n(self) -> int:
        return self.W.parent.n

    @property
    def m(self) -> int:
        return self.W.parent.m

    @property
    def k(self) -> int:
        return self.W.k

    @property
    def layout(self) -> tuple[str, ...]:
        return tuple(f"x_{j}" for j in range(self.n)) + tuple(f"w_{j}" for j in range(self.k))

    def state(self, x, w) -> ConstrainedState:
        s = ConstrainedState(x, w)
        if s.x.size != self.n or s.w.size != self.k:
            raise ValueError(f"state must have n={self.n}, k={self.k} entries")
        return s

    def sample_states(self, count: int = 100, seed: int = 0) -> list[ConstrainedState]:
        xs = sample_box(self.n, self.box, count, seed)
        if len(xs) == 1 and count > 1:
            xs = np.repeat(xs, count, axis=0)
        rng = np.random.default_rng(seed + 1)
        lo, hi = self.w_box
        ws = rng.uniform(lo, hi, size=(count, self.k))
        return [ConstrainedState(x, w) for x, w in zip(xs, ws)]


class _Local(NamedTuple):
    x: np.ndarray
    w: np.ndarray
    i: np.ndarray       # [a, A]
    di: np.ndarray      # [a, A, j]
    rho: np.ndarray     # [i, a]
    lam: np.ndarray     # [i, A]
    C: np.ndarray       # [c, a, b]
    v: np.ndarray
    L: float
    Lx: np.ndarray
    Lv: np.ndarray
    Lvx: np.ndarray     # [a, i] = d2L/dv^a dx^i
    Lvv: np.ndarray     # [a, b]


def _local(S: LagrangianSystem, s: ConstrainedState) -> _Local:
    A = S.algebroid
    n = S.n
    x, w = s.x, s.w
    i, di = S.W.injection.value_and_jacobian(x)
    rho = A.anchor_at(x)
    v = i @ w
    val, g, H = S.L.jet(np.concatenate([x, v]))
    return _Local(x, w, i, di, rho, rho @ i, A.structure_at(x), v, val,
                  g[:n], g[n:], H[n:, :n], H[n:, n:])


def _lu(M: np.ndarray, what: str):
    with warnings.catch_warnings():
        # exact singularity is reported below through the pivot ratio
        warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
        lu, piv = scipy.linalg.lu_factor(M, check_finite=False)
    d = np.abs(np.diag(lu))
    if d.max() == 0.0 or d.min() < PIVOT_RATIO * d.max():
        raise DegenerateLagrangianError(f"singular {what}", float(np.linalg.cond(M)))
    return lu, piv


def _solve(M: np.ndarray, rhs: np.ndarray, what: str) -> np.ndarray:
    if M.size == 0:
        return np.zeros(0)
    return scipy.linalg.lu_solve(_lu(M, what), rhs, check_finite=False)


def restricted_hessian(S: LagrangianSystem, s: ConstrainedState) -> np.ndarray:
    """``M_AB = i^a_A d2L/dv^a dv^b i^b_B`` at ``s``."""
    loc = _local(S, s)
    return loc.i.T @ loc.Lvv @ loc.i


def _lde_terms(loc: _Local) -> tuple[np.ndarray, np.ndarray]:
    """Restricted Hessian and the f-independent part of the contracted equation."""
    xdot = loc.lam @ loc.w
    idot = loc.di @ xdot                      # [a, A]
    force = loc.rho.T @ loc.Lx - np.einsum("cab,b,c->a", loc.C, loc.v, loc.Lv)
    rhs_a = force - loc.Lvx @ xdot - loc.Lvv @ (idot @ loc.w)
    return loc.i.T @ loc.Lvv @ loc.i, loc.i.T @ rhs_a


def pseudo_sode(S: LagrangianSystem, s: ConstrainedState) -> SodeValue:
    """Base velocity ``lambda w`` and fibre acceleration ``f`` at ``s``."""
    loc = _local(S, s)
    M, rhs = _lde_terms(loc)
    f = _solve(M, rhs, "restricted Hessian")
    return SodeValue(loc.lam @ loc.w, f)


def lagrange_dalembert_residual(S: LagrangianSystem, s: ConstrainedState, f=None) -> float:
    """Infinity norm of the contracted Lagrange-d'Alembert equation for a given ``f``."""
    loc = _local(S, s)
    if f is None:
        f = pseudo_sode(S, s).f
    xdot = loc.lam @ loc.w
    vdot = (loc.di @ xdot) @ loc.w + loc.i @ np.asarray(f, dtype=float)
    dmom = loc.Lvx @ xdot + loc.Lvv @ vdot
    res = loc.i.T @ (dmom - loc.rho.T @ loc.Lx + np.einsum("cab,b,c->a", loc.C, loc.v, loc.Lv))
    return float(np.max(np.abs(res))) if res.size else 0.0


def unconstrained_rhs(A: LieAlgebroid, L: ScalarField, x, v) -> np.ndarray:
    """Fibre acceleration of the unconstrained Lagrangian equations on ``A``."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    v = np.atleast_1d(np.asarray(v, dtype=float))
    n = A.n
    _, g, H = L.jet(np.concatenate([x, v]))
    rho = A.anchor_at(x)
    Lx, Lv, Lvx, Lvv = g[:n], g[n:], H[n:, :n], H[n:, n:]
    rhs = rho.T @ Lx - np.einsum("cab,b,c->a", A.structure_at(x), v, Lv) - Lvx @ (rho @ v)
    return _solve(Lvv, rhs, "Hessian")


def energy(S: LagrangianSystem, s: ConstrainedState) -> float:
    """``E = v^a dL/dv^a - L`` at ``v = i(x) w``."""
    loc = _local(S, s)
    return float(loc.v @ loc.Lv - loc.L)


def theta_tilde(S: LagrangianSystem, s: ConstrainedState) -> np.ndarray:
    """Momenta ``dL/dv^a`` at ``(x, i(x) w)``."""
    return _local(S, s).Lv


def gyroscopic_term(S: LagrangianSystem, s: ConstrainedState) -> np.ndarray:
    """``gamma_A = w^B (D^c_BA - lambda^i_A d_i i^c_B + lambda^i_B d_i i^c_A) dL/dv^c``."""
    loc = _local(S, s)
    D = np.einsum("cba,bB,aA->cBA", loc.C, loc.i, loc.i)
    bracket = (D - np.einsum("iA,cBi->cBA", loc.lam, loc.di)
               + np.einsum("iB,cAi->cBA", loc.lam, loc.di))
    return np.einsum("B,cBA,c->A", loc.w, bracket, loc.Lv)


@dataclass(frozen=True)
class FundamentalForm:
    """Coefficients of ``delta theta_L`` and ``delta E_L`` at a state.

    ``delta theta_L = P_AB X^A ^ X^B - Q_AB X^A ^ W^B`` and
    ``delta E_L = ex_A X^A + ew_A W^A``, with
    ``X^A ^ X^B (Y, Z) = X^A(Y) X^B(Z) - X^A(Z) X^B(Y)``.
    """

    P: np.ndarray
    Q: np.ndarray
    ex: np.ndarray
    ew: np.ndarray

    def contract(self, w, f) -> tuple[np.ndarray, np.ndarray]:
        """Components of ``i_Gamma delta theta_L + delta E_L`` on ``(X^A, W^A)``."""
        w = np.asarray(w, dtype=float)
        f = np.asarray(f, dtype=float)
        on_x = (self.P - self.P.T).T @ w + self.Q @ f + self.ex
        on_w = -self.Q.T @ w + self.ew
        return on_x, on_w


def fundamental_form(S: LagrangianSystem, s: ConstrainedState) -> FundamentalForm:
    loc = _local(S, s)
    i, di, lam, w = loc.i, loc.di, loc.lam, loc.w
    D = np.einsum("cab,aA,bB->cAB", loc.C, i, i)
    idot_w = np.einsum("cCi,C->ci", di, w)             # w^C d_i i^c_C
    P = (np.einsum("iA,bB,ib->AB", lam, i, loc.Lvx.T)
         + np.einsum("iA,ci,bB,bc->AB", lam, idot_w, i, loc.Lvv)
         - 0.5 * np.einsum("cAB,c->AB", D, loc.Lv))
    Q = i.T @ loc.Lvv @ i
    coeff = (loc.Lvx.T @ (i @ w)
             + np.einsum("ai,b,ab->i", idot_w, i @ w, loc.Lvv)
             - loc.Lx)
    ex = lam.T @ coeff
    ew = Q.T @ w
    return FundamentalForm(P, Q, ex, ew)


def fundamental_form_residual(S: LagrangianSystem, s: ConstrainedState, f=None) -> float:
    """Infinity norm of ``i_Gamma delta theta_L + delta E_L`` over the 2k basis covectors."""
    if f is None:
        f = pseudo_sode(S, s).f
    on_x, on_w = fundamental_form(S, s).contract(s.w, f)
    both = np.concatenate([on_x, on_w])
    return float(np.max(np.abs(both))) if both.size else 0.0


def sode_vector_field(S: LagrangianSystem):
    """``(t, y) -> ydot`` for ``y = (x, w)``."""
    n = S.n

    def rhs(t, y):
        sv = pseudo_sode(S, ConstrainedState(y[:n], y[n:]))
        return np.concatenate([sv.xdot, sv.f])

    return rhs


def simulate(S: LagrangianSystem, s0: ConstrainedState, t_span,
             opts: IntegratorOptions = IntegratorOptions(),
             diagnostics: bool = True) -> Trajectory:
    """Integral curve of the pseudo-SODE with energy and fundamental-form diagnostics."""
    n = S.n
    diag = None
    if diagnostics:
        diag = {
            "energy": lambda t, y: energy(S, ConstrainedState(y[:n], y[n:])),
            "ff_residual": lambda t, y: fundamental_form_residual(S, ConstrainedState(y[:n], y[n:])),
        }
    return integrate(sode_vector_field(S), s0.as_vector(), t_span, opts, diag, S.layout)
