"""Log-domain carrier for nonnegative reals that overflow or underflow doubles."""

from __future__ import annotations

import math
from dataclasses import dataclass
from numbers import Integral, Real

import numpy as np


def _log_of(x) -> float:
    if x < 0:
        raise ValueError(f"LogNonNegative cannot hold a negative value: {x!r}")
    if x == 0:
        return -math.inf
    # math.log accepts arbitrarily large Python ints without converting to float
    return math.log(x)


@dataclass(frozen=True, order=True)
class LogNonNegative:
    """A nonnegative real ``x`` stored as ``log x``; ``-inf`` encodes zero."""

    log_value: float

    @classmethod
    def from_value(cls, x) -> "LogNonNegative":
        return cls(_log_of(x))

    @classmethod
    def zero(cls) -> "LogNonNegative":
        return cls(-math.inf)

    @classmethod
    def one(cls) -> "LogNonNegative":
        return cls(0.0)

    @property
    def is_zero(self) -> bool:
        return self.log_value == -math.inf

    def __float__(self) -> float:
        return math.exp(self.log_value) if self.log_value < 709.78 else math.inf

    def _coerce(self, other) -> "LogNonNegative":
        if isinstance(other, LogNonNegative):
            return other
        if isinstance(other, (Integral, Real)):
            return LogNonNegative.from_value(other)
        return NotImplemented

    def __add__(self, other) -> "LogNonNegative":
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return LogNonNegative(float(np.logaddexp(self.log_value, other.log_value)))

    __radd__ = __add__

    def __mul__(self, other) -> "LogNonNegative":
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        if self.is_zero or other.is_zero:
            return LogNonNegative.zero()
        return LogNonNegative(self.log_value + other.log_value)

    __rmul__ = __mul__

    def __truediv__(self, other) -> "LogNonNegative":
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        if other.is_zero:
            raise ZeroDivisionError("division by a zero LogNonNegative")
        if self.is_zero:
            return self
        return LogNonNegative(self.log_value - other.log_value)

    def __pow__(self, exponent) -> "LogNonNegative":
        if exponent == 0:
            return LogNonNegative.one()
        if self.is_zero:
            if exponent < 0:
                raise ZeroDivisionError("zero raised to a negative power")
            return self
        return LogNonNegative(self.log_value * float(exponent))

    def rel_close(self, other, rtol: float = 1e-12) -> bool:
        """True when the represented values agree to relative tolerance ``rtol``."""
        other = self._coerce(other)
        if self.is_zero or other.is_zero:
            return self.is_zero and other.is_zero
        return abs(math.expm1(self.log_value - other.log_value)) <= rtol


def logsumexp(values) -> float:
    """Stable ``log(sum(exp(values)))`` with a fixed left-to-right reduction."""
    arr = np.asarray(values, dtype=np.float64)
    if arr.size == 0:
        return -math.inf
    top = float(np.max(arr))
    if not math.isfinite(top):
        return top
    return top + math.log(math.fsum(np.exp(arr - top).tolist()))
