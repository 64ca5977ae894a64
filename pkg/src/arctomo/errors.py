"""Exception and warning types shared across the package."""


class ArctomoError(Exception):
    """Base class for all package-specific errors."""


class DegenerateArc(ArctomoError):
    """Measurement arc has zero or full aperture."""


class NonConvergence(ArctomoError):
    """Transport fixed-point iteration failed to contract."""


class TooCloseToBoundary(ArctomoError):
    """Interior evaluation point violates the boundary-distance guard."""


class EndpointSingular(ArctomoError):
    """Chord evaluation point too close to a chord endpoint."""


class LargeResidual(ArctomoError):
    """Linear-system residual above the configured threshold."""

    def __init__(self, message, residual=None, mode=None):
        super().__init__(message)
        self.residual = residual
        self.mode = mode


class SolveFailure(ArctomoError):
    """Dense factorization failed."""


class InsufficientAngles(ArctomoError):
    """Too few outgoing direction samples for the requested mode depth."""


class ConfigError(ArctomoError):
    """Invalid or inconsistent run configuration."""


class FieldFormatError(ArctomoError):
    """Base class for binary-field file errors."""


class MalformedHeader(FieldFormatError):
    """Field sidecar is missing or unparsable."""


class ShapeMismatch(FieldFormatError):
    """Header shape disagrees with payload or with a companion field."""


class TruncatedPayload(FieldFormatError):
    """Binary payload shorter than the header promises."""


class MeasurementFormatError(ArctomoError):
    """Measurement CSV violates the documented schema."""


class AliasWarning(UserWarning):
    """Angular mode truncation drops non-negligible tail energy."""
