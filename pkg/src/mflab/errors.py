"""Exception types shared across the package."""


class MFLabError(Exception):
    """Base class for all package errors."""


class ResolutionError(MFLabError):
    """Field is under-resolved for the requested operation (spectral tail too heavy)."""


class AliasingError(MFLabError):
    """Oscillatory phase or shift is not resolvable on the current grid."""


class DimensionError(MFLabError):
    """Operation only supports a different spatial dimension."""


class NonHermitianError(MFLabError):
    """Matrix deviates from Hermiticity beyond tolerance."""


class GridMismatchError(MFLabError):
    """Operands live on different grids or carry different hbar."""


class ExponentError(MFLabError):
    """Exponent relation required by an inequality does not hold."""


class NotPSDError(MFLabError):
    """Operand must be positive semidefinite."""


class SingularityError(MFLabError):
    """Kernel singularity is not resolvable on the grid (softening too small)."""


class QuadratureError(MFLabError):
    """Adaptive quadrature failed to reach the requested tolerance."""


class FitUnderdeterminedError(MFLabError):
    """Regression requested with fewer than three valid points."""


class NonpositiveError(MFLabError):
    """Log-log regression requires strictly positive error values."""
