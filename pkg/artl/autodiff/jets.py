"""Truncated Taylor jets for input derivatives of order <= 2.

Jet components may be floats, numpy arrays or tape ``Node`` handles; arithmetic
is written with plain operators so a jet pushed through a network on a tape
yields θ-gradients of any of its components.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Any

from artl.autodiff import tape as ops
from data_models.architecture import Activation


def _is_zero(x: Any) -> bool:
    return isinstance(x, (int, float)) and x == 0


def _mm(matrix: Any, component: Any) -> Any:
    # derivative seeds of constants stay the scalar 0.0
    return 0.0 if _is_zero(component) else matrix @ component


@dataclass(frozen=True)
class Jet2:
    """value, first and second derivative along one input direction.

    ``d2`` is ``None`` for a first-order jet; the second-order algebra is then
    skipped entirely.
    """

    value: Any
    d1: Any = 0.0
    d2: Any = 0.0

    @classmethod
    def constant(cls, value: Any, order: int = 2) -> "Jet2":
        return cls(value, 0.0, 0.0 if order >= 2 else None)

    @property
    def order(self) -> int:
        return 1 if self.d2 is None else 2

    def _lift(self, other: Any) -> "Jet2":
        return other if isinstance(other, Jet2) else Jet2.constant(other, self.order)

    def __add__(self, other: Any) -> "Jet2":
        o = self._lift(other)
        d2 = None if self.d2 is None or o.d2 is None else self.d2 + o.d2
        return Jet2(self.value + o.value, self.d1 + o.d1, d2)

    __radd__ = __add__

    def __neg__(self) -> "Jet2":
        return Jet2(-self.value, -self.d1, None if self.d2 is None else -self.d2)

    def __sub__(self, other: Any) -> "Jet2":
        return self + (-self._lift(other))

    def __rsub__(self, other: Any) -> "Jet2":
        return self._lift(other) + (-self)

    def __mul__(self, other: Any) -> "Jet2":
        if not isinstance(other, Jet2):
            return Jet2(self.value * other, self.d1 * other, None if self.d2 is None else self.d2 * other)
        d1 = self.d1 * other.value + self.value * other.d1
        if self.d2 is None or other.d2 is None:
            return Jet2(self.value * other.value, d1, None)
        d2 = self.d2 * other.value + 2.0 * (self.d1 * other.d1) + self.value * other.d2
        return Jet2(self.value * other.value, d1, d2)

    __rmul__ = __mul__

    def affine(self, matrix: Any, bias: Any) -> "Jet2":
        return Jet2(
            matrix @ self.value + bias,
            _mm(matrix, self.d1),
            None if self.d2 is None else _mm(matrix, self.d2),
        )

    def derivative(self, k: int) -> Any:
        return (self.value, self.d1, self.d2)[k]


@dataclass(frozen=True)
class CrossJet:
    """Bilinear two-direction jet: value, ∂_a, ∂_b and the mixed term ∂_a∂_b."""

    value: Any
    da: Any = 0.0
    db: Any = 0.0
    dab: Any = 0.0

    def _lift(self, other: Any) -> "CrossJet":
        return other if isinstance(other, CrossJet) else CrossJet(other)

    def __add__(self, other: Any) -> "CrossJet":
        o = self._lift(other)
        return CrossJet(self.value + o.value, self.da + o.da, self.db + o.db, self.dab + o.dab)

    __radd__ = __add__

    def __neg__(self) -> "CrossJet":
        return CrossJet(-self.value, -self.da, -self.db, -self.dab)

    def __sub__(self, other: Any) -> "CrossJet":
        return self + (-self._lift(other))

    def __mul__(self, other: Any) -> "CrossJet":
        if not isinstance(other, CrossJet):
            return CrossJet(self.value * other, self.da * other, self.db * other, self.dab * other)
        return CrossJet(
            self.value * other.value,
            self.da * other.value + self.value * other.da,
            self.db * other.value + self.value * other.db,
            self.dab * other.value + self.da * other.db + self.db * other.da + self.value * other.dab,
        )

    __rmul__ = __mul__

    def affine(self, matrix: Any, bias: Any) -> "CrossJet":
        return CrossJet(matrix @ self.value + bias, _mm(matrix, self.da), _mm(matrix, self.db), _mm(matrix, self.dab))


def activation_value(x: Any, activation: Activation) -> Any:
    if activation is Activation.SIGMOID:
        return ops.sigmoid(x)
    return ops.tanh(x)


def _slopes(s: Any, activation: Activation) -> tuple[Any, Any]:
    """First and second derivative of the activation, written in terms of its output s."""
    if activation is Activation.SIGMOID:
        s1 = s * (1.0 - s)
        return s1, s1 * (1.0 - 2.0 * s)
    s1 = 1.0 - s * s
    return s1, -2.0 * (s * s1)


def activate(jet: Any, activation: Activation) -> Any:
    """Chain rule of an elementwise activation through a jet (or a plain value)."""
    if isinstance(jet, Jet2):
        s = activation_value(jet.value, activation)
        s1, s2 = _slopes(s, activation)
        if jet.d2 is None:
            return Jet2(s, s1 * jet.d1, None)
        return Jet2(s, s1 * jet.d1, s2 * (jet.d1 * jet.d1) + s1 * jet.d2)
    if isinstance(jet, CrossJet):
        s = activation_value(jet.value, activation)
        s1, s2 = _slopes(s, activation)
        return CrossJet(s, s1 * jet.da, s1 * jet.db, s2 * (jet.da * jet.db) + s1 * jet.dab)
    return activation_value(jet, activation)

