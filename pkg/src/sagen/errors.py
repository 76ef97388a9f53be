"""Exception hierarchy. Each family maps to a distinct CLI exit code."""


class SagenError(Exception):
    exit_code = 1


class SchemaError(SagenError):
    """Input does not match the expected columns or layout."""

    exit_code = 3


class IntegrityError(SchemaError):
    """Duplicate or ragged records."""


class DimensionError(SchemaError):
    """Vector or matrix shapes disagree."""


class NumericError(SagenError):
    """Non-finite values, degenerate columns or patterns, failed factorizations."""

    exit_code = 4


class DivergenceError(NumericError):
    def __init__(self, message, iteration=None, sample_index=None):
        super().__init__(message)
        self.iteration = iteration
        self.sample_index = sample_index


class ParameterError(SagenError, ValueError):
    """Argument outside its admissible range."""

    exit_code = 5
