"""Adaptive aggregation graph convolutional networks in numpy."""

from ._accel import USE_NUMBA, backend_name
from .errors import (
    AAGCNError,
    DivergenceError,
    NumericalError,
    ResourceError,
    ShapeError,
    UndefinedScoreError,
    ValidationError,
)

__version__ = "0.1.0"
