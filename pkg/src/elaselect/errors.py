"""Exception types shared across the toolkit."""


class ElaSelectError(Exception):
    """Base class for all toolkit errors."""


class InvalidProblem(ElaSelectError):
    """Requested benchmark function or instance does not exist."""


class DimensionError(ElaSelectError):
    """Input vector length does not match the expected dimension."""


class SampleSizeError(ElaSelectError):
    """Sample is too small for the requested computation."""


class EmptyTrainingSet(ElaSelectError):
    """Model fitting was attempted on zero rows."""


class NonFiniteInput(ElaSelectError):
    """Training data contains NaN or infinite entries."""


class IncompleteSuite(ElaSelectError):
    """A required (fid, iid) combination is missing from the data."""


class DataJoinError(ElaSelectError):
    """Feature and performance tables do not cover the same instances."""


class EmptyPortfolio(ElaSelectError):
    """A selection was requested over an empty set of algorithms."""


class IncompleteMatrix(ElaSelectError):
    """Prediction data is missing entries required for selector evaluation."""


class PerformanceParseError(ElaSelectError):
    """A performance CSV contains rows that cannot be parsed."""
