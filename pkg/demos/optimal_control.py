"""Normal extremals of the kinetic-energy control problem on the rolling disk.

Controls are the fibre velocities of the Atiyah algebroid, the cost is the
kinetic energy.  Eliminating the controls leaves a Hamiltonian flow on the
costate; its projection solves the constrained Lagrangian equations on the
subbundle spanned by g^{-1} rho^T, which the residual below confirms.

    python3 demos/optimal_control.py
"""

import numpy as np

from algebroid_dynamics import systems
from algebroid_dynamics.algebroid import LieAlgebroid
from algebroid_dynamics.integrate import IntegratorOptions
from algebroid_dynamics.optimal_control import (
    ExtremalState, MechanicalLagrangian, eliminate_control, extremal_lagrangian_residual, normal_subbundle,
    simulate_extremal,
)
from algebroid_dynamics.smooth import MatrixField, ScalarField

disk = systems.build("disk_pmp")
A, L = disk.algebroid, disk.mechanical

e0 = ExtremalState([0.1, 0.2], [1.0, 0.5])
print(f"optimal control at the start: {eliminate_control(A, L, e0.x, e0.p)}")
print(f"normal subbundle basis (g-orthonormal columns):\n{normal_subbundle(A, L, e0.x)}")

T = simulate_extremal(A, L, e0, (0.0, 10.0))
H = T.diagnostics["hamiltonian"]
print(f"\n{len(T)} accepted steps, relative Hamiltonian drift {np.max(np.abs(H - H[0])) / abs(H[0]):.1e}")
print(f"Lagrangian residual along the extremal: {extremal_lagrangian_residual(A, L, T):.1e}")

# corrupt the costate: the residual must notice
bad = T.states.copy()
bad[:, 2:] *= 1.0 + 0.1 * np.sin(T.times)[:, None]
fake = type(T)(T.times, bad, {}, T.layout)
print(f"residual after perturbing the costate:  {extremal_lagrangian_residual(A, L, fake):.1e}")

# harmonic oscillator as a sanity check: x(t) = cos t
osc = MechanicalLagrangian(MatrixField.constant([[1.0]], 1), ScalarField(1, lambda x: 0.5 * x[0] * x[0]))
To = simulate_extremal(LieAlgebroid.tangent(1), osc, ExtremalState([1.0], [0.0]), (0.0, 2 * np.pi),
                       IntegratorOptions(abs_tol=1e-12, rel_tol=1e-12))
print(f"\noscillator after one period: {To.final} (expected [1, 0])")
