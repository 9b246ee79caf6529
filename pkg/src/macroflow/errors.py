"""Exception types shared across the package."""


class MacroflowError(Exception):
    """Base class for all package errors."""


class DomainError(MacroflowError, ValueError):
    """A density or state lies outside the valid domain of a diagram."""


class RootBracketError(MacroflowError):
    """A bracketed root solve could not locate or keep a sign change."""


class VacuumError(MacroflowError):
    """The intermediate state of a Riemann problem leaves the physical domain.

    Carries optional context (cell index, left/right states) so steppers can
    report which edge produced unsolvable data.
    """

    def __init__(self, message, cell=None, left=None, right=None):
        super().__init__(message)
        self.cell = cell
        self.left = left
        self.right = right


class SingularTransformError(MacroflowError):
    """The characteristic transform matrix is not invertible."""


class CFLViolationError(MacroflowError):
    """A step was attempted with a time step exceeding the CFL limit."""


class StepError(MacroflowError):
    """A simulation step failed; wraps the cause with step/cell context."""

    def __init__(self, message, step=None, time=None):
        super().__init__(message)
        self.step = step
        self.time = time


class NetworkError(MacroflowError):
    """Base class for network-simulation errors."""


class FractionSumError(NetworkError):
    """Merge supply-split fractions do not sum to one."""


class NegativeCountError(NetworkError):
    """A zone update produced a negative vehicle count."""


class UnroutableDestinationError(NetworkError):
    """No downstream zone of a connector leads to a particle's destination."""


class ScenarioError(MacroflowError, ValueError):
    """A scenario file failed to parse or validate."""
