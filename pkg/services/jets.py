"""Truncated Taylor arithmetic for forward-mode differentiation.

``Jet`` carries a scalar with its gradient and Hessian in k parameters, so
evaluating an expression on jets yields exact second derivatives up to
roundoff. ``ArrayJet`` carries an array with its first derivatives and is
used to differentiate the frame construction itself.
"""

import math
from dataclasses import dataclass
from typing import Any, Callable

import numpy as np

from services.errors import DomainError


@dataclass(frozen=True)
class Jet:
    """Second-order jet val + grad.h + h.hess.h / 2."""

    val: float
    grad: np.ndarray
    hess: np.ndarray

    __array_ufunc__ = None

    @classmethod
    def constant(cls, value: float, k: int) -> "Jet":
        return cls(float(value), np.zeros(k), np.zeros((k, k)))

    @classmethod
    def variable(cls, value: float, index: int, k: int) -> "Jet":
        grad = np.zeros(k)
        grad[index] = 1.0
        return cls(float(value), grad, np.zeros((k, k)))

    def _lift(self, other: Any) -> "Jet":
        if isinstance(other, Jet):
            return other
        return Jet.constant(other, len(self.grad))

    def __add__(self, other: Any) -> "Jet":
        other = self._lift(other)
        return Jet(self.val + other.val, self.grad + other.grad, self.hess + other.hess)

    __radd__ = __add__

    def __neg__(self) -> "Jet":
        return Jet(-self.val, -self.grad, -self.hess)

    def __sub__(self, other: Any) -> "Jet":
        return self + (-self._lift(other))

    def __rsub__(self, other: Any) -> "Jet":
        return self._lift(other) - self

    def __mul__(self, other: Any) -> "Jet":
        other = self._lift(other)
        return Jet(
            self.val * other.val,
            self.val * other.grad + other.val * self.grad,
            self.val * other.hess
            + other.val * self.hess
            + np.outer(self.grad, other.grad)
            + np.outer(other.grad, self.grad),
        )

    __rmul__ = __mul__

    def chain(self, f0: float, f1: float, f2: float) -> "Jet":
        """Compose with a scalar function whose value and derivatives at val are f0, f1, f2."""
        return Jet(f0, f1 * self.grad, f1 * self.hess + f2 * np.outer(self.grad, self.grad))

    def reciprocal(self) -> "Jet":
        if self.val == 0.0:
            raise DomainError("division by zero")
        v = self.val
        return self.chain(1.0 / v, -1.0 / v**2, 2.0 / v**3)

    def __truediv__(self, other: Any) -> "Jet":
        return self * self._lift(other).reciprocal()

    def __rtruediv__(self, other: Any) -> "Jet":
        return self._lift(other) * self.reciprocal()

    def __pow__(self, exponent: int) -> "Jet":
        if exponent == 0:
            return Jet.constant(1.0, len(self.grad))
        if exponent < 0:
            return (self ** (-exponent)).reciprocal()
        v = self.val
        second = exponent * (exponent - 1) * v ** (exponent - 2) if exponent > 1 else 0.0
        return self.chain(v**exponent, exponent * v ** (exponent - 1), second)


def _log_derivatives(v: float) -> tuple[float, float, float]:
    if v <= 0.0:
        raise DomainError(f"log of non-positive value {v!r}")
    return math.log(v), 1.0 / v, -1.0 / v**2


def _sqrt_derivatives(v: float) -> tuple[float, float, float]:
    if v <= 0.0:
        raise DomainError(f"sqrt is not differentiable at {v!r}")
    root = math.sqrt(v)
    return root, 0.5 / root, -0.25 / (root * v)


def _exp_derivatives(v: float) -> tuple[float, float, float]:
    try:
        value = math.exp(v)
    except OverflowError:
        raise DomainError(f"exp overflows at {v!r}")
    return value, value, value


ELEMENTARY: dict[str, Callable[[float], tuple[float, float, float]]] = {
    "sin": lambda v: (math.sin(v), math.cos(v), -math.sin(v)),
    "cos": lambda v: (math.cos(v), -math.sin(v), -math.cos(v)),
    "exp": _exp_derivatives,
    "log": _log_derivatives,
    "sqrt": _sqrt_derivatives,
}


def apply(name: str, argument: Any) -> Any:
    """Evaluate an elementary function on a float or a Jet."""
    if isinstance(argument, Jet):
        return argument.chain(*ELEMENTARY[name](argument.val))
    value = float(argument)
    if name == "sqrt":
        if value < 0.0:
            raise DomainError(f"sqrt of negative value {value!r}")
        return math.sqrt(value)
    return ELEMENTARY[name](value)[0]


def value_of(x: Any) -> float:
    return x.val if isinstance(x, Jet) else float(x)


class ArrayJet:
    """First-order jet of an array: ``tangent[..., s]`` is the derivative along parameter s."""

    __slots__ = ("value", "tangent")
    __array_ufunc__ = None

    def __init__(self, value: Any, tangent: Any):
        self.value = np.asarray(value, dtype=float)
        self.tangent = np.asarray(tangent, dtype=float)
        if self.tangent.shape[:-1] != self.value.shape:
            raise ValueError(
                f"tangent shape {self.tangent.shape} does not extend value shape {self.value.shape}"
            )

    @classmethod
    def constant(cls, value: Any, k: int) -> "ArrayJet":
        value = np.asarray(value, dtype=float)
        return cls(value, np.zeros(value.shape + (k,)))

    @property
    def k(self) -> int:
        return self.tangent.shape[-1]

    def _lift(self, other: Any) -> "ArrayJet":
        if isinstance(other, ArrayJet):
            return other
        return ArrayJet.constant(other, self.k)

    def __getitem__(self, index) -> "ArrayJet":
        return ArrayJet(self.value[index], self.tangent[index])

    def __add__(self, other: Any) -> "ArrayJet":
        other = self._lift(other)
        return ArrayJet(self.value + other.value, self.tangent + other.tangent)

    __radd__ = __add__

    def __neg__(self) -> "ArrayJet":
        return ArrayJet(-self.value, -self.tangent)

    def __sub__(self, other: Any) -> "ArrayJet":
        return self + (-self._lift(other))

    def __rsub__(self, other: Any) -> "ArrayJet":
        return self._lift(other) - self

    def __mul__(self, other: Any) -> "ArrayJet":
        """Elementwise product; one side is usually a scalar jet."""
        other = self._lift(other)
        return ArrayJet(
            self.value * other.value,
            self.value[..., None] * other.tangent + self.tangent * other.value[..., None],
        )

    __rmul__ = __mul__

    def reciprocal(self) -> "ArrayJet":
        if np.any(self.value == 0.0):
            raise DomainError("division by zero")
        return ArrayJet(1.0 / self.value, -self.tangent / np.asarray(self.value**2)[..., None])

    def __truediv__(self, other: Any) -> "ArrayJet":
        return self * self._lift(other).reciprocal()

    def sqrt(self) -> "ArrayJet":
        if np.any(self.value <= 0.0):
            raise DomainError("sqrt is not differentiable at non-positive values")
        root = np.sqrt(self.value)
        return ArrayJet(root, self.tangent / np.asarray(2.0 * root)[..., None])

    def __matmul__(self, other: Any) -> "ArrayJet":
        other = self._lift(other)
        a, b = self.value, other.value
        left = np.moveaxis(np.moveaxis(self.tangent, -1, 0) @ b, 0, -1)
        if b.ndim == 1:
            right = a @ other.tangent
        else:
            right = np.moveaxis(a @ np.moveaxis(other.tangent, -1, 0), 0, -1)
        return ArrayJet(a @ b, left + right)

    def __rmatmul__(self, other: Any) -> "ArrayJet":
        return self._lift(other) @ self

    @property
    def T(self) -> "ArrayJet":  # noqa: N802
        return ArrayJet(self.value.T, np.swapaxes(self.tangent, 0, 1))

    def inv(self) -> "ArrayJet":
        inverse = np.linalg.inv(self.value)
        derivative = -inverse @ np.moveaxis(self.tangent, -1, 0) @ inverse
        return ArrayJet(inverse, np.moveaxis(derivative, 0, -1))

    def dot(self, other: Any) -> "ArrayJet":
        return self @ other

    def norm(self) -> "ArrayJet":
        return self.dot(self).sqrt()
