"""Exception and warning types used across the package."""


class GraphValidationError(ValueError):
    """A mobility graph violates a structural invariant."""


class DisconnectedGraphError(GraphValidationError):
    """A generated or loaded graph is not strongly connected."""


class ReducibleChainError(ValueError):
    """A transition matrix is not irreducible."""


class NumericalError(RuntimeError):
    """A linear solve or eigensolve failed to reach the required accuracy."""


class SolverError(RuntimeError):
    """The trajectory optimizer could not produce a feasible design."""


class StabilityError(ValueError):
    """Queue utilisation at or above one; long-run ages diverge."""


class PeriodicityWarning(UserWarning):
    """Spectral mixing diagnostics are meaningless for periodic chains."""


class QueueBacklogWarning(RuntimeWarning):
    """A dissemination queue grew past the configured backlog threshold."""
