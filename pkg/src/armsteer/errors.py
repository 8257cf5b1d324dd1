"""Exception types shared across the library."""


class ArmsteerError(Exception):
    """Base class for all library errors."""


class ConfigurationError(ArmsteerError):
    """Invalid model, scenario, or argument (dimension mismatch, bad value).

    ``path`` carries the config location (e.g. ``gains.c_d``) when the error
    originates from a scenario file.
    """

    def __init__(self, message, path=None):
        self.path = path
        super().__init__(f"{path}: {message}" if path else message)


class SingularityError(ArmsteerError):
    """Raised for degenerate geometry with no usable fallback (all-zero Jacobian)."""


class BehindCameraError(ArmsteerError):
    """Feature depth at or below the camera floor; the scenario is invalid."""


class NumericalIntegrityError(ArmsteerError):
    """NaN or infinity entered the simulation state; carries partial telemetry."""

    def __init__(self, message, telemetry=None):
        self.telemetry = telemetry
        super().__init__(message)


class DivergenceError(ArmsteerError):
    """Joint speed exceeded the configured maximum; carries partial telemetry."""

    def __init__(self, message, telemetry=None):
        self.telemetry = telemetry
        super().__init__(message)
