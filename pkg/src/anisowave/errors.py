"""Exception types shared across the package."""


class AnisoError(Exception):
    """Base class for all library errors."""


class SingularMatrixError(AnisoError):
    """A matrix required to be invertible has zero determinant."""


class NotUnimodularError(AnisoError):
    """A matrix required to have determinant +-1 does not."""


class InconclusiveError(AnisoError):
    """Exact expansiveness test hit its iteration cap without a decision."""


class IncompatibleDiagonalError(AnisoError):
    """Requested diagonal is not equivalent to the matrix's normal form."""


class BadScalesError(AnisoError):
    """Dilation family scales must satisfy sigma1 > sigma2 > 1."""


class DimMismatchError(AnisoError):
    """Operands have different lattice dimensions."""


class ScaleMismatchError(AnisoError):
    """Univariate filter set scale does not match the requested diagonal."""


class BadIndexError(AnisoError):
    """Filter index outside the bank's index set."""


class BadDigitError(AnisoError):
    """Digit outside the dilation family's index range."""


class DepthZeroError(AnisoError):
    """Full-tree decomposition requires depth >= 1."""


class WindowTooSmallError(AnisoError):
    """Window leaves no boundary-unaffected core for the requested operation."""


class GridTooLargeError(AnisoError):
    """Refinement grid would exceed the configured cell cap."""


class GridMismatchError(AnisoError):
    """Sampled functions live on incompatible grids."""


class InconsistentTreeError(AnisoError):
    """Redundant tree branches disagree beyond tolerance on reconstruction."""


class IncompleteTreeError(AnisoError):
    """Decomposition tree is missing nodes or leaf approximations."""


class OutOfSimplexError(AnisoError):
    """Slope lies outside the admissible simplex."""


class NonTerminationError(AnisoError):
    """Digit extraction exceeded its iteration cap; indicates a logic error."""
