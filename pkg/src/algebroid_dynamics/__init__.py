"""Constrained Lagrangian mechanics on Lie algebroids.

Algebroid data and forms live in :mod:`.algebroid`, the constrained equations
of motion in :mod:`.dynamics`, a classical multiplier solver for cross-checks
in :mod:`.oracle`, maximum-principle extremals in :mod:`.optimal_control` and
ready-made systems in :mod:`.systems`.
"""

from .algebroid import (
    LieAlgebroid,
    PrincipalBundleData,
    Subbundle,
    ValidationReport,
    build_atiyah,
    curvature,
    subalgebroid_defect,
    validate_algebroid,
)
from .dynamics import (
    ConstrainedState,
    LagrangianSystem,
    energy,
    fundamental_form_residual,
    gyroscopic_term,
    pseudo_sode,
    simulate,
    unconstrained_rhs,
)
from .integrate import IntegratorOptions, Trajectory, integrate, trajectory_compare
from .optimal_control import (
    ExtremalState,
    MechanicalLagrangian,
    eliminate_control,
    extremal_lagrangian_residual,
    normal_subbundle,
    pmp_vector_field,
)
from .oracle import TangentBundleSystem, multiplier_accel, simulate_oracle
from .smooth import MatrixField, ScalarField

__all__ = [
    "LieAlgebroid", "PrincipalBundleData", "Subbundle", "ValidationReport", "build_atiyah",
    "curvature", "subalgebroid_defect", "validate_algebroid",
    "ConstrainedState", "LagrangianSystem", "energy", "fundamental_form_residual",
    "gyroscopic_term", "pseudo_sode", "simulate", "unconstrained_rhs",
    "IntegratorOptions", "Trajectory", "integrate", "trajectory_compare",
    "ExtremalState", "MechanicalLagrangian", "eliminate_control", "extremal_lagrangian_residual",
    "normal_subbundle", "pmp_vector_field",
    "TangentBundleSystem", "multiplier_accel", "simulate_oracle",
    "MatrixField", "ScalarField",
]
