"""Exception hierarchy shared across the package."""


class AlgebroidError(Exception):
    """Base class for all errors raised by this package."""


class InvalidInputError(AlgebroidError, ValueError):
    """Input data violate a structural requirement (e.g. Jacobi for Lie constants)."""


class SingularInjectionError(AlgebroidError):
    """Subbundle injection is rank deficient at the queried point."""


class DegenerateLagrangianError(AlgebroidError):
    """A (restricted) Hessian of the Lagrangian is numerically singular."""

    def __init__(self, message: str, condition: float = float("inf")):
        super().__init__(f"{message} (condition estimate {condition:.3e})")
        self.condition = condition


class DegenerateConstraintError(AlgebroidError):
    """The constrained KKT matrix is singular."""


class InconsistentStateError(AlgebroidError, ValueError):
    """A velocity violates the constraints it is supposed to satisfy."""


class DegenerateMetricError(AlgebroidError):
    """The fibre metric of a mechanical Lagrangian is singular."""


class NonConstantRankError(AlgebroidError):
    """The anchor changes rank along a trajectory."""


class ComparisonError(AlgebroidError, ValueError):
    """Two trajectories cannot be compared (e.g. disjoint time ranges)."""


class IntegrationError(AlgebroidError, RuntimeError):
    """Time integration failed; ``trajectory`` holds the samples produced so far."""

    def __init__(self, message: str, last_time: float, trajectory=None):
        super().__init__(message)
        self.last_time = last_time
        self.trajectory = trajectory


class StiffnessError(IntegrationError):
    """Adaptive step size fell below the underflow threshold."""


class BlowUpError(IntegrationError):
    """The state became non-finite."""
