"""
This module defines the exceptions shared by all parts of the package. Every
domain error derives from `TransducerError`, which itself is a `ValueError`,
so callers that only care about "bad model or bad request" can catch either.
"""
from __future__ import annotations


class TransducerError(ValueError):
    """
    Base class of all errors raised because a model, distribution or request
    does not satisfy the requirements of an operation.
    """


class SpecFormatError(TransducerError):
    """Raw spec data is missing keys or holds values of the wrong type."""


class UnknownSymbol(TransducerError):
    """
    A symbol or state label was used that is not declared in the respective
    alphabet or state list.
    """
    def __init__(self, symbol: str, where: str):
        super().__init__(f"Unknown {where} '{symbol}'")
        self.symbol = symbol
        self.where = where


class NegativeProbability(TransducerError):
    """A transition or input probability is smaller than zero."""
    def __init__(self, value: float, where: str):
        super().__init__(f"Negative probability {value} in {where}")
        self.value = value
        self.where = where


class RowNotNormalized(TransducerError):
    """
    The probabilities over all (output, successor) pairs of one state and
    input do not add up to one.
    """
    def __init__(self, state: str, symbol: str, total: float):
        super().__init__(
            f"Transitions from state '{state}' on input '{symbol}' sum to "
            f"{total}, not 1"
        )
        self.state = state
        self.symbol = symbol
        self.total = total


class NonUnifilar(TransducerError):
    """More than one successor for a (state, input, output) triple."""
    def __init__(self, state: str, symbol: str, output: str):
        super().__init__(
            f"State '{state}' has several successors for input '{symbol}' and "
            f"output '{output}'"
        )
        self.state = state
        self.symbol = symbol
        self.output = output


class ImpossibleEmission(TransducerError):
    """The requested output has zero probability for that state and input."""
    def __init__(self, state: str, symbol: str, output: str):
        super().__init__(
            f"State '{state}' never emits '{output}' on input '{symbol}'"
        )
        self.state = state
        self.symbol = symbol
        self.output = output


class ParameterOutOfRange(TransducerError):
    """A model parameter lies outside its admissible (open) interval."""


class InconsistentPartition(TransducerError):
    """Members of one partition class do not share their transition rows."""


class ReducibleChain(TransducerError):
    """The induced chain has no unique stationary distribution."""


class HorizonTooLarge(TransducerError):
    """Exact enumeration was requested beyond the configured horizon cap."""
    def __init__(self, horizon: int, cap: int):
        super().__init__(f"Horizon {horizon} exceeds the cap of {cap}")
        self.horizon = horizon
        self.cap = cap


class HorizonMismatch(TransducerError):
    """Two distributions over output words of different length."""


class AlphabetMismatch(TransducerError):
    """Two distributions over words from different output alphabets."""


class NotPSD(TransducerError):
    """A Gram matrix has a significantly negative eigenvalue."""
    def __init__(self, min_eigenvalue: float):
        super().__init__(
            f"Gram matrix is not positive semidefinite (min eigenvalue "
            f"{min_eigenvalue})"
        )
        self.min_eigenvalue = min_eigenvalue


class DimensionMismatch(TransducerError):
    """Sizes of two objects that must describe the same states differ."""


class NumericalRankFailure(TransducerError):
    """Completing an isometry to a unitary did not produce a unitary."""


class DimensionGuardExceeded(TransducerError):
    """An explicit tensor would be larger than the configured guard."""
    def __init__(self, size: int, guard: int):
        super().__init__(
            f"Refusing to materialize {size} amplitudes (guard is {guard})"
        )
        self.size = size
        self.guard = guard


def error_report(err: Exception) -> dict:
    """Render an error as the JSON-ready report the CLI prints."""
    return {"error": type(err).__name__, "detail": str(err)}
