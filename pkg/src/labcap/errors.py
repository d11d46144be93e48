"""Exception hierarchy shared by the pipeline stages."""


class LabcapError(Exception):
    """Base class for all errors raised by the package."""


class ParameterError(LabcapError, ValueError):
    """Inputs violate a documented precondition."""


class ConsistencyError(LabcapError):
    """An internal invariant that should hold by construction was violated."""


class CriticalityError(LabcapError):
    """A computation that needs the critical point was given a non-critical one."""


class RegimeError(LabcapError):
    """The requested quantity is not defined in the current bifurcation regime."""


class ConvergenceError(LabcapError):
    """An iterative solver failed to converge."""

    def __init__(self, message, residual=None, iterations=None):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations


class StageError(LabcapError):
    """Wraps a failure inside the experiment pipeline with the stage name."""

    def __init__(self, stage, cause):
        super().__init__(f"[{stage}] {type(cause).__name__}: {cause}")
        self.stage = stage
        self.cause = cause
