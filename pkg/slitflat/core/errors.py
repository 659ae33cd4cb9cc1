"""Exception hierarchy for surface construction, tracing and the CLI."""


class SlitflatError(Exception):
    """Base class for all errors raised by slitflat."""


class SurfaceValidationError(SlitflatError):
    """Raised when polygon, gluing or slit data do not describe a valid surface."""


class NonConvexPolygon(SurfaceValidationError):
    pass


class EdgeVectorMismatch(SurfaceValidationError):
    pass


class InvalidGluing(SurfaceValidationError):
    pass


class FlipNotAllowed(SurfaceValidationError):
    pass


class DisconnectedSurface(SurfaceValidationError):
    pass


class ConeAngleNotMultipleOf2Pi(SurfaceValidationError):
    pass


class SlitLeavesSurface(SurfaceValidationError):
    pass


class DegenerateSlit(SurfaceValidationError):
    pass


class InvalidHalfTranslation(SurfaceValidationError):
    pass


class SingularMatrix(SlitflatError):
    pass


class AmbiguousStart(SlitflatError):
    """Start point is a cone point and the direction does not pick a single sector."""


class InconsistentSequence(SlitflatError):
    pass


class NoBoundary(SlitflatError):
    pass


class RationalInput(SlitflatError):
    """Continued fraction prefix ended before the requested convergent."""


class UnknownPreset(SlitflatError):
    pass


class SurfaceFormatError(SlitflatError):
    def __init__(self, line_number: int, message: str):
        self.line_number = line_number
        self.message = message
        super().__init__(f"line {line_number}: {message}")


class NonMonotoneDepth(SlitflatError):
    """Derived depth decreased as epsilon grew along a calibration grid."""
