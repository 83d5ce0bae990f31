"""Continued-fraction digit streams, Farey-map renewal processes, and limit-law experiments."""

__version__ = "0.1.0"

from .bits import BitSource
from .exact import (
    DigitOverflowError,
    DigitStream,
    DyadicInterval,
    LazyReal,
    MobiusState,
    NonGenericPointError,
    StreamExhausted,
    digit_sums,
    digits_of_rational,
    geometric_mean,
)

__all__ = [
    "BitSource",
    "DigitOverflowError",
    "DigitStream",
    "DyadicInterval",
    "LazyReal",
    "MobiusState",
    "NonGenericPointError",
    "StreamExhausted",
    "digit_sums",
    "digits_of_rational",
    "geometric_mean",
    "__version__",
]
