"""Lie algebroids, subbundles and the Atiyah construction.

Structure functions are stored as ``m`` matrix slices, slice ``c`` holding
``C^c_ab(x)``.  Stacked arrays use the index order ``C[c, a, b]`` and
Jacobians append the base index last, ``dC[c, a, b, i] = dC^c_ab/dx^i``.
The anchor is ``rho[i, a]`` with Jacobian ``drho[i, a, j]``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import InvalidInputError, SingularInjectionError
from .smooth import MatrixField, ScalarField

SUBALGEBROID_TOL = 1e-10
RANK_TOL = 1e-10


@dataclass(frozen=True)
class LieAlgebroid:
    """Local data ``(rho^i_a(x), C^c_ab(x))`` of a Lie algebroid of rank ``m`` over ``R^n``."""

    n: int
    m: int
    anchor: MatrixField
    structure: tuple[MatrixField, ...]
    name: str = ""

    def __post_init__(self):
        if self.anchor.shape != (self.n, self.m):
            raise InvalidInputError(f"anchor must have shape {(self.n, self.m)}, got {self.anchor.shape}")
        if len(self.structure) != self.m:
            raise InvalidInputError(f"need {self.m} structure slices, got {len(self.structure)}")
        for s in self.structure:
            if s.shape != (self.m, self.m):
                raise InvalidInputError("structure slices must be m x m")
        object.__setattr__(self, "structure", tuple(self.structure))

    def anchor_at(self, x) -> np.ndarray:
        return self.anchor.value(x)

    def structure_at(self, x) -> np.ndarray:
        if self.m == 0:
            return np.zeros((0, 0, 0))
        return np.stack([s.value(x) for s in self.structure])

    def structure_jacobian(self, x) -> np.ndarray:
        if self.m == 0:
            return np.zeros((0, 0, 0, self.n))
        return np.stack([s.jacobian(x) for s in self.structure])

    def sample_points(self, box=None, n_samples: int = 100, seed: int = 0) -> np.ndarray:
        return sample_box(self.n, box, n_samples, seed)

    @classmethod
    def tangent(cls, n: int) -> "LieAlgebroid":
        """Tangent algebroid of ``R^n`` in the coordinate basis."""
        zero = MatrixField.constant(np.zeros((n, n)), n, name="C=0")
        return cls(n, n, MatrixField.constant(np.eye(n), n, name="identity"),
                   tuple(zero for _ in range(n)), name=f"T R^{n}")

    @classmethod
    def lie_algebra(cls, constants, name: str = "") -> "LieAlgebroid":
        """Lie algebra with constants ``constants[c, a, b]`` as an algebroid over a point."""
        C = np.asarray(constants, dtype=float)
        m = C.shape[0]
        slices = tuple(MatrixField.constant(C[c], 0) for c in range(m))
        return cls(0, m, MatrixField.constant(np.zeros((0, m)), 0), slices, name=name)


def sample_box(n: int, box=None, n_samples: int = 100, seed: int = 0) -> np.ndarray:
    """Seeded uniform points of ``[lo, hi]^n``; a point base yields a single empty point."""
    if n == 0:
        return np.zeros((1, 0))
    lo, hi = (-1.0, 1.0) if box is None else box
    lo = np.broadcast_to(np.asarray(lo, dtype=float), (n,))
    hi = np.broadcast_to(np.asarray(hi, dtype=float), (n,))
    rng = np.random.default_rng(seed)
    return rng.uniform(lo, hi, size=(n_samples, n))


def levi_civita() -> np.ndarray:
    eps = np.zeros((3, 3, 3))
    for a, b, c in ((0, 1, 2), (1, 2, 0), (2, 0, 1)):
        eps[a, b, c] = 1.0
        eps[a, c, b] = -1.0
    return eps


def so3_constants() -> np.ndarray:
    """``C[c, a, b] = eps_abc`` for the basis with ``[e_a, e_b] = eps_abc e_c``."""
    return np.einsum("abc->cab", levi_civita())


@dataclass(frozen=True)
class Subbundle:
    """Subbundle ``W`` of rank ``k`` given by the injection ``i^a_A(x)`` into ``parent``."""

    parent: LieAlgebroid
    k: int
    injection: MatrixField

    def __post_init__(self):
        if self.injection.shape != (self.parent.m, self.k):
            raise InvalidInputError(
                f"injection must have shape {(self.parent.m, self.k)}, got {self.injection.shape}")

    @property
    def n(self) -> int:
        return self.parent.n

    @property
    def m(self) -> int:
        return self.parent.m

    @classmethod
    def identity(cls, parent: LieAlgebroid) -> "Subbundle":
        return cls(parent, parent.m, MatrixField.constant(np.eye(parent.m), parent.n, name="identity"))

    def restricted_anchor(self, x) -> np.ndarray:
        """``lambda^i_A = rho^i_a i^a_A``."""
        return self.parent.anchor_at(x) @ self.injection.value(x)

    def induced_structure(self, x) -> np.ndarray:
        """``D[a, B, C] = C^a_bc i^b_B i^c_C``."""
        i = self.injection.value(x)
        return np.einsum("abc,bB,cC->aBC", self.parent.structure_at(x), i, i)

    def rank_at(self, x) -> int:
        i = self.injection.value(x)
        if i.size == 0:
            return 0
        s = np.linalg.svd(i, compute_uv=False)
        return int(np.sum(s > RANK_TOL * s[0])) if s[0] > 0 else 0

    def check_rank(self, points) -> None:
        for x in points:
            if self.rank_at(x) != self.k:
                raise SingularInjectionError(f"injection not of full rank {self.k} at x={np.asarray(x).tolist()}")


@dataclass(frozen=True)
class PrincipalBundleData:
    """Principal connection data for the Atiyah construction.

    ``lie_constants[g, a, b] = C^g_ab`` of the Lie algebra; ``connection`` has
    shape ``(r, n)`` and gives ``A^g_i(x)``.
    """

    n: int
    r: int
    lie_constants: np.ndarray
    connection: MatrixField

    def __post_init__(self):
        C = np.asarray(self.lie_constants, dtype=float)
        if C.shape != (self.r, self.r, self.r):
            raise InvalidInputError(f"lie_constants must have shape {(self.r,) * 3}")
        if self.connection.shape != (self.r, self.n):
            raise InvalidInputError(f"connection must have shape {(self.r, self.n)}")
        object.__setattr__(self, "lie_constants", C)

    def constant_residuals(self) -> tuple[float, float]:
        """Antisymmetry and Jacobi residuals of the Lie constants."""
        C = self.lie_constants
        if self.r == 0:
            return 0.0, 0.0
        anti = float(np.max(np.abs(C + C.transpose(0, 2, 1))))
        T = np.einsum("eab,ced->cabd", C, C)
        jac = T + np.einsum("cbda->cabd", T) + np.einsum("cdab->cabd", T)
        return anti, float(np.max(np.abs(jac)))


@dataclass
class ValidationReport:
    """Worst residual of each algebroid axiom over a set of sample points."""

    residuals: dict[str, float]
    worst_points: dict[str, list[float]]
    n_samples: int
    seed: int
    name: str = ""

    @property
    def max_residual(self) -> float:
        return max(self.residuals.values()) if self.residuals else 0.0

    def failing(self, tol: float) -> list[str]:
        return [k for k, v in self.residuals.items() if not v < tol]

    def passed(self, tol: float) -> bool:
        return not self.failing(tol)

    def to_dict(self) -> dict:
        return {
            "system": self.name,
            "samples": self.n_samples,
            "seed": self.seed,
            "residuals": dict(self.residuals),
            "worst_points": {k: list(v) for k, v in self.worst_points.items()},
            "max_residual": self.max_residual,
        }


AXIOMS = ("antisymmetry", "anchor_compatibility", "jacobi")


def axiom_residuals(A: LieAlgebroid, x) -> dict[str, float]:
    """Residuals of the three coordinate axioms at a single point."""
    x = np.asarray(x, dtype=float)
    rho, drho = A.anchor.value_and_jacobian(x)
    C = A.structure_at(x)
    dC = A.structure_jacobian(x)
    if A.m == 0:
        return dict.fromkeys(AXIOMS, 0.0)
    anti = np.abs(C + C.transpose(0, 2, 1))
    # [rho(e_a), rho(e_b)] - rho([e_a, e_b])
    lie = np.einsum("ibj,ja->iab", drho, rho)
    anchor = lie - lie.transpose(0, 2, 1) - np.einsum("cab,ic->iab", C, rho)
    # [[e_a, e_b], e_d] = (C^e_ab C^c_ed - rho^i_d dC^c_ab/dx^i) e_c, summed cyclically
    T = np.einsum("eab,ced->cabd", C, C) - np.einsum("id,cabi->cabd", rho, dC)
    jac = T + np.einsum("cbda->cabd", T) + np.einsum("cdab->cabd", T)

    def mx(a):
        return float(np.max(a)) if a.size else 0.0

    return {"antisymmetry": mx(anti), "anchor_compatibility": mx(np.abs(anchor)),
            "jacobi": mx(np.abs(jac))}


def validate_algebroid(A: LieAlgebroid, sample_box=None, n_samples: int = 100,
                       seed: int = 0) -> ValidationReport:
    """Sample-based check of antisymmetry, anchor compatibility and Jacobi."""
    if n_samples < 1:
        raise ValueError("n_samples must be at least 1")
    worst = dict.fromkeys(AXIOMS, 0.0)
    where: dict[str, list[float]] = {k: [] for k in AXIOMS}
    points = A.sample_points(sample_box, n_samples, seed)
    for x in points:
        res = axiom_residuals(A, x)
        for k, v in res.items():
            if v > worst[k] or not where[k]:
                worst[k] = max(v, worst[k])
                where[k] = x.tolist()
    return ValidationReport(worst, where, len(points), seed, A.name)


# exterior derivatives -------------------------------------------------------

@dataclass(frozen=True)
class OneForm:
    """1-form on sections, coefficients ``theta_a(x)`` held as a ``(1, m)`` field."""

    coefficients: MatrixField

    @classmethod
    def from_function(cls, m: int, n: int, fn) -> "OneForm":
        return cls(MatrixField((1, m), n, func=lambda x: [list(fn(x))]))

    def at(self, x) -> np.ndarray:
        return self.coefficients.value(x)[0]


def d_function(A: LieAlgebroid, f: ScalarField, x) -> np.ndarray:
    """``(df)_a = rho^i_a df/dx^i``."""
    return A.anchor_at(x).T @ f.gradient(x)


def d_one_form(A: LieAlgebroid, theta: OneForm, x) -> np.ndarray:
    """``(dtheta)_ab = rho^i_a d_i theta_b - rho^i_b d_i theta_a - C^c_ab theta_c``."""
    rho = A.anchor_at(x)
    th, dth = theta.coefficients.value_and_jacobian(x)
    th, dth = th[0], dth[0]  # dth[b, i]
    lie = rho.T @ dth.T  # [a, b] = rho^i_a d_i theta_b
    return lie - lie.T - np.einsum("cab,c->ab", A.structure_at(x), th)


def delta_of_function(W: Subbundle, f: ScalarField, x) -> np.ndarray:
    """``(delta f)_A = lambda^i_A df/dx^i``."""
    return W.restricted_anchor(x).T @ f.gradient(x)


def delta_of_one_form(W: Subbundle, theta: OneForm, x) -> np.ndarray:
    """Pull-back of ``d theta`` along the injection, a k x k antisymmetric array."""
    i = W.injection.value(x)
    return i.T @ d_one_form(W.parent, theta, x) @ i


def d2_residual(A: LieAlgebroid, f: ScalarField, x) -> float:
    """Infinity norm of ``d(df)`` at ``x``; zero on a genuine Lie algebroid."""
    x = np.asarray(x, dtype=float)
    rho, drho = A.anchor.value_and_jacobian(x)
    _, g, H = f.jet(x)
    if A.m == 0:
        return 0.0
    df = rho.T @ g
    # d(df)_b/dx^i = d_i rho^j_b d_j f + rho^j_b d_ij f
    ddf = np.einsum("jbi,j->bi", drho, g) + np.einsum("jb,ji->bi", rho, H)
    lie = rho.T @ ddf.T  # [a, b] = rho^i_a d_i (df)_b
    two = lie - lie.T - np.einsum("cab,c->ab", A.structure_at(x), df)
    return float(np.max(np.abs(two)))


def subalgebroid_defect(W: Subbundle, x) -> tuple[np.ndarray | None, float]:
    """Induced structure ``D[C, A, B]`` (or None) and the closure defect at ``x``.

    The bracket of two injected basis sections, ``[i e_A, i e_B]``, has
    components ``D^c_AB + lambda^i_A d_i i^c_B - lambda^i_B d_i i^c_A``; ``W`` is
    closed under the bracket iff these lie in the column space of ``i``.
    """
    x = np.asarray(x, dtype=float)
    i, di = W.injection.value_and_jacobian(x)
    lam = W.parent.anchor_at(x) @ i
    m, k = i.shape
    if k == 0:
        return np.zeros((0, 0, 0)), 0.0
    T = W.induced_structure(x) + np.einsum("iA,cBi->cAB", lam, di) - np.einsum("iB,cAi->cAB", lam, di)
    Q, R, piv = scipy.linalg.qr(i, mode="economic", pivoting=True)
    diag = np.abs(np.diag(R))
    if diag[0] == 0.0 or np.any(diag < RANK_TOL * diag[0]):
        raise SingularInjectionError(f"injection rank deficient at x={x.tolist()}")
    rhs = T.reshape(m, k * k)
    sol = np.empty((k, k * k))
    sol[piv] = scipy.linalg.solve_triangular(R, Q.T @ rhs)
    resid = rhs - i @ sol
    defect = float(np.max(np.abs(resid))) if resid.size else 0.0
    D = sol.reshape(k, k, k)
    return (D if defect <= SUBALGEBROID_TOL else None), defect


# Atiyah algebroid ------------------------------------------------------------

def curvature(P: PrincipalBundleData, x) -> np.ndarray:
    """``omega[g, i, j] = d_i A^g_j - d_j A^g_i + C^g_ab A^a_j A^b_i``."""
    A, dA = P.connection.value_and_jacobian(x)
    return _curvature(P.lie_constants, A, dA)


def _curvature(C, A, dA):
    # dA[g, j, i] = dA^g_j / dx^i
    om = np.einsum("gji->gij", dA) - dA + np.einsum("gab,aj,bi->gij", C, A, A)
    return 0.5 * (om - om.transpose(0, 2, 1))


def _curvature_jacobian(C, A, dA, HA):
    # HA[g, j, i, k] = d^2 A^g_j / dx^i dx^k
    d = np.einsum("gjik->gijk", HA) - HA
    d = d + np.einsum("gab,ajk,bi->gijk", C, dA, A) + np.einsum("gab,aj,bik->gijk", C, A, dA)
    return 0.5 * (d - d.transpose(0, 2, 1, 3))


def atiyah_structure(P: PrincipalBundleData, x) -> tuple[np.ndarray, np.ndarray]:
    """Stacked ``C[c, a, b]`` and its Jacobian for the Atiyah algebroid at ``x``.

    Fibre basis: ``e_i`` (horizontal lifts, i < n) followed by ``e_g``.
    Brackets: ``[e_i, e_j] = -omega^g_ij e_g``, ``[e_i, e_a] = Gamma^g_ia e_g``
    with ``Gamma^g_ia = C^g_ab A^b_i``, ``[e_a, e_b] = C^g_ab e_g``.
    """
    n, r = P.n, P.r
    m = n + r
    Cg = P.lie_constants
    if n:
        A, dA, HA = P.connection.derivatives(x, order=2)
    else:
        A, dA, HA = np.zeros((r, 0)), np.zeros((r, 0, 0)), np.zeros((r, 0, 0, 0))
    om = _curvature(Cg, A, dA)
    dom = _curvature_jacobian(Cg, A, dA, HA)
    Gam = np.einsum("gab,bi->gia", Cg, A)
    dGam = np.einsum("gab,bik->giak", Cg, dA)
    C = np.zeros((m, m, m))
    dC = np.zeros((m, m, m, n))
    C[n:, :n, :n] = -om
    dC[n:, :n, :n] = -dom
    C[n:, :n, n:] = Gam
    dC[n:, :n, n:] = dGam
    C[n:, n:, :n] = -Gam.transpose(0, 2, 1)
    dC[n:, n:, :n] = -dGam.transpose(0, 2, 1, 3)
    C[n:, n:, n:] = Cg
    return C, dC


def build_atiyah(P: PrincipalBundleData, name: str = "") -> LieAlgebroid:
    """Atiyah algebroid ``TM (+) g~`` of rank ``n + r`` induced by the connection."""
    anti, jac = P.constant_residuals()
    if anti > 1e-12 or jac > 1e-12:
        raise InvalidInputError(
            f"lie_constants are not a Lie algebra (antisymmetry {anti:.2e}, Jacobi {jac:.2e})")
    n, m = P.n, P.n + P.r
    cache: dict = {}

    def stacked(x):
        key = np.asarray(x, dtype=float).tobytes()
        hit = cache.get("last")
        if hit is not None and hit[0] == key:
            return hit[1]
        out = atiyah_structure(P, x)
        cache["last"] = (key, out)
        return out

    def slice_provider(c):
        def provider(x):
            C, dC = stacked(x)
            return C[c], dC[c]
        return provider

    anchor = np.zeros((n, m))
    anchor[:, :n] = np.eye(n)
    slices = tuple(MatrixField((m, m), n, provider=slice_provider(c), name=f"C^{c}")
                   for c in range(m))
    return LieAlgebroid(n, m, MatrixField.constant(anchor, n, name="projection"), slices,
                        name=name or "atiyah")

