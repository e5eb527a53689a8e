"""Free rigid body as a Lagrangian system on the Lie algebra so(3).

The base is a point, so the whole motion is in the fibre: w is the body
angular velocity and the equations of motion are Euler's.  Energy and the
squared angular momentum |I w|^2 are both conserved; rotation about the middle
axis is unstable and the body tumbles.

    python3 demos/euler_top.py
"""

import numpy as np

from algebroid_dynamics import systems
from algebroid_dynamics.dynamics import gyroscopic_term, pseudo_sode, simulate, sode_vector_field
from algebroid_dynamics.integrate import IntegratorOptions, convergence_order

inertia = np.array([1.0, 2.0, 3.0])
top = systems.build("euler_top", inertia=tuple(inertia))
S = top.system

s = S.state([], [1.0, 1.0, 1.0])
print(f"acceleration at w=(1,1,1): {pseudo_sode(S, s).f}")
print(f"gyroscopic force -w x Iw:  {gyroscopic_term(S, s)}")

# almost pure spin about the middle axis
T = simulate(S, S.state([], [0.01, 1.0, 0.01]), (0.0, 40.0), IntegratorOptions(max_step=0.1))
w2 = T.states[:, 1]
flips = int(np.sum(np.diff(np.sign(w2)) != 0))
print(f"\nspin about the middle axis reverses {flips} times in 40 time units")

E = T.diagnostics["energy"]
C = np.sum((inertia * T.states) ** 2, axis=1)
print(f"relative energy drift:           {np.max(np.abs(E - E[0])) / E[0]:.1e}")
print(f"relative |I w|^2 drift:          {np.max(np.abs(C - C[0])) / C[0]:.1e}")
print(f"worst defining-equation residual: {np.max(T.diagnostics['ff_residual']):.1e}")

order = convergence_order(sode_vector_field(S), S.initial.as_vector(), (0.0, 2.0), [0.01, 0.005, 0.0025])
print(f"\nobserved RK4 convergence order: {order:.2f}")
