"""Exception hierarchy shared by the solver, diagnostics and I/O layers."""


class LCFlowError(Exception):
    """Base class for all package errors."""


class GridMismatchError(LCFlowError, ValueError):
    """A field does not live on the grid it was paired with."""


class RankError(LCFlowError, ValueError):
    """An operator was applied to a field of the wrong tensor rank."""


class DegenerateGridError(LCFlowError, ValueError):
    pass


class ParameterError(LCFlowError, ValueError):
    """An argument is outside its admissible range."""


class ConstraintViolationError(LCFlowError, ValueError):
    """The director is too far from unit length for the constrained system."""


class GeometryError(LCFlowError, ValueError):
    pass


class RangeError(LCFlowError, ValueError):
    """A requested time window is not covered by the available samples."""


class IncompleteTrajectoryError(LCFlowError, KeyError):
    def __init__(self, channel):
        super().__init__(channel)
        self.channel = channel

    def __str__(self):
        return f"trajectory has no sampled channel {self.channel!r}"


class AlignmentError(LCFlowError, ValueError):
    def __init__(self, message, times=()):
        super().__init__(message)
        self.times = list(times)


class ConfigValidationError(LCFlowError, ValueError):
    """Configuration document failed validation; ``location`` names the key."""

    def __init__(self, message, location=()):
        super().__init__(message)
        self.location = tuple(location)


class DegenerateInitialConditionError(LCFlowError, ValueError):
    pass


class SnapshotFormatError(LCFlowError, ValueError):
    def __init__(self, message, field=None):
        super().__init__(message)
        self.field = field


class StepError(LCFlowError, RuntimeError):
    """A time step produced a state that breaks a solver invariant.

    ``state`` is the last valid state; ``details`` holds the measured
    quantities that triggered the failure.  ``trajectory`` is attached by
    the run loop when the error escapes it.
    """

    def __init__(self, message, state=None, details=None):
        super().__init__(message)
        self.state = state
        self.details = dict(details or {})
        self.trajectory = None


class BlowupSuspected(StepError):
    """Non-finite values or a runaway invariant breach during stepping."""
