"""Synthetic longitudinal cohorts from small samples via weighted stochastic attention."""

from sagen.errors import (
    DimensionError,
    DivergenceError,
    IntegrityError,
    NumericError,
    ParameterError,
    SagenError,
    SchemaError,
)

__version__ = "0.1.0"

__all__ = [
    "DimensionError",
    "DivergenceError",
    "IntegrityError",
    "NumericError",
    "ParameterError",
    "SagenError",
    "SchemaError",
    "__version__",
]
