"""Exception and warning types shared across the package."""


class GridlessDoaError(Exception):
    """Base class for all domain errors raised by this package."""


class EstimationFailureError(GridlessDoaError):
    """Too few root/minima candidates to produce the requested estimates."""


class DecompositionShortfallError(GridlessDoaError):
    """The harmonic decomposition found fewer minima than requested."""

    def __init__(self, message: str, found: int, requested: int):
        super().__init__(message)
        self.found = found
        self.requested = requested


class IllConditionedHarmonicsError(GridlessDoaError):
    """Harmonic matrix is numerically rank deficient; powers are unrecoverable."""


class DivergenceError(GridlessDoaError):
    """An iterative solver produced unbounded or non-finite iterates."""


class ConfigError(GridlessDoaError):
    """An experiment configuration is inconsistent or unsupported."""


class NumericalWarning(UserWarning):
    """Non-fatal numerical issue (symmetrization, polynomial deflation, ...)."""


class DegenerateSplitWarning(NumericalWarning):
    """Signal/noise eigenvalue split is ambiguous at working precision."""
