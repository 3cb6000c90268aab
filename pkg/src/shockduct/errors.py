"""Exception types shared across the package."""


class ShockductError(Exception):
    """Base class for all package errors."""


class ZeroStrengthError(ShockductError):
    """The two end states coincide; no shock exists."""


class OrientationError(ShockductError):
    """End states ordered for the wrong wave family (need rho_minus > rho_plus)."""


class TailTruncationError(ShockductError):
    """A profile tail (or a quadrature window over it) could not be resolved."""

    def __init__(self, message, achieved=None):
        super().__init__(message)
        self.achieved = achieved


class InsufficientTailError(ShockductError):
    """Too few samples in a tail to fit a decay rate."""


class AmplitudeTooLargeError(ShockductError):
    """Perturbation amplitude violates a positivity bound."""


class BlowupDetectedError(ShockductError):
    """NaN or nonpositive density during time stepping."""

    def __init__(self, message, step=None, t=None):
        super().__init__(message)
        self.step = step
        self.t = t


class SingularDenominatorError(ShockductError):
    """A shift-ODE denominator quadrature crossed zero."""


class TailUnboundedError(ShockductError):
    """A time integrand did not decay; its tail cannot be extrapolated."""


class ZeroMassViolationError(ShockductError):
    """Zero-mode mass drifted far beyond the allowed tolerance."""


class AnsatzOutOfRangeError(ShockductError):
    """Composite ansatz density left its admissible bracket."""


class BoundaryContaminationError(ShockductError):
    """Perturbation at the sponge exceeded the monitored threshold."""


class MultiCrossingError(ShockductError):
    """Zero-mode density crossed the mid level more than once."""


class SnapshotFormatError(ShockductError):
    """Bad magic, version, or layout in a snapshot file."""


class ConfigError(ShockductError):
    """Configuration failed validation; message carries the field path."""
