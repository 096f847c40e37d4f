"""Exception types shared across the toolkit."""


class PendellosungError(Exception):
    """Base class for all toolkit errors."""


class NoReflection(PendellosungError):
    """Bragg condition cannot be met (sin(theta) would exceed 1)."""


class ForbiddenReflection(PendellosungError):
    """Operation requested on a reflection with zero structure factor."""


class EmptyWindow(PendellosungError):
    """Wavelength/angle windows do not overlap."""


class FormFactorRangeError(PendellosungError):
    """Momentum transfer outside the tabulated form-factor domain."""


class InsufficientData(PendellosungError):
    """Not enough measurements to constrain the requested fit."""


class DegenerateGeometry(PendellosungError):
    """Geometry carries no signal for the requested parameter (e.g. f=1)."""


class DegenerateAbscissa(PendellosungError):
    """All abscissas coincide; a slope cannot be estimated."""


class SingularDesign(PendellosungError):
    """Fit design matrix is singular (collinear abscissas)."""


class DegenerateDesign(SingularDesign):
    """Measurement set cannot constrain the requested error budget."""


class ConfigError(PendellosungError):
    """Malformed or inconsistent run configuration."""
