"""Forward-mode dual numbers carrying a full gradient."""

from __future__ import annotations

import math

import numpy as np


class DualNumber:
    """``value + <derivative, eps>`` with a gradient vector as the dual part."""

    __slots__ = ("value", "derivative")

    def __init__(self, value: float, derivative):
        self.value = float(value)
        self.derivative = np.asarray(derivative, dtype=float)

    @classmethod
    def variable(cls, value: float, index: int, dim: int) -> "DualNumber":
        e = np.zeros(dim)
        e[index] = 1.0
        return cls(value, e)

    @classmethod
    def constant(cls, value: float, dim: int) -> "DualNumber":
        return cls(value, np.zeros(dim))

    def _lift(self, other) -> "DualNumber":
        if isinstance(other, DualNumber):
            return other
        return DualNumber(other, np.zeros_like(self.derivative))

    def __add__(self, other):
        other = self._lift(other)
        return DualNumber(self.value + other.value, self.derivative + other.derivative)

    __radd__ = __add__

    def __sub__(self, other):
        other = self._lift(other)
        return DualNumber(self.value - other.value, self.derivative - other.derivative)

    def __rsub__(self, other):
        return self._lift(other) - self

    def __mul__(self, other):
        other = self._lift(other)
        return DualNumber(self.value * other.value,
                          self.value * other.derivative + other.value * self.derivative)

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = self._lift(other)
        if other.value == 0.0:
            raise ZeroDivisionError("division by zero")
        q = self.value / other.value
        return DualNumber(q, (self.derivative - q * other.derivative) / other.value)

    def __rtruediv__(self, other):
        return self._lift(other) / self

    def __neg__(self):
        return DualNumber(-self.value, -self.derivative)

    def __pow__(self, p):
        if isinstance(p, DualNumber):
            raise TypeError("exponent must be a constant")
        p = float(p)
        if p == 0.0:
            return DualNumber(1.0, np.zeros_like(self.derivative))
        if self.value == 0.0 and p < 0:
            raise ZeroDivisionError("0 raised to a negative power")
        if self.value < 0 and not p.is_integer():
            raise ValueError("negative base with non-integer exponent")
        n = int(p) if p.is_integer() else p
        if self.value == 0.0 and n < 1:
            raise ValueError("power is not differentiable at 0")
        v = self.value ** n
        dv = n * self.value ** (n - 1)
        return DualNumber(v, dv * self.derivative)

    def __repr__(self) -> str:
        return f"DualNumber({self.value!r}, {self.derivative!r})"


def sin(x):
    if isinstance(x, DualNumber):
        return DualNumber(math.sin(x.value), math.cos(x.value) * x.derivative)
    return math.sin(x)


def cos(x):
    if isinstance(x, DualNumber):
        return DualNumber(math.cos(x.value), -math.sin(x.value) * x.derivative)
    return math.cos(x)


def exp(x):
    if isinstance(x, DualNumber):
        e = math.exp(x.value)
        return DualNumber(e, e * x.derivative)
    return math.exp(x)
