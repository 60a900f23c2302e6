"""Array-level reverse-mode differentiation.

A ``Tape`` records every operation applied to ``Node`` handles during a forward
pass. ``Tape.backward`` then sweeps the records in strictly decreasing index
order, pulling adjoints back through the stored local partials (one
vector-Jacobian product per parent).

Plain numpy arrays mixed into an expression are treated as constants, so the
same model code runs on arrays (no tape, forward only) and on Nodes.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from enum import Enum
from typing import Any, Callable, Iterable, Sequence

import numpy as np
from scipy.special import expit

from artl.errors import NumericalOverflowError

logger = logging.getLogger(__name__)

Vjp = Callable[[np.ndarray], np.ndarray]


class OpKind(str, Enum):
    VARIABLE = "variable"
    ADD = "add"
    SUB = "sub"
    MUL = "mul"
    DIV = "div"
    NEG = "neg"
    POW = "pow"
    MATMUL = "matmul"
    TRANSPOSE = "transpose"
    SUM = "sum"
    RESHAPE = "reshape"
    INDEX = "index"
    SIGMOID = "sigmoid"
    TANH = "tanh"
    EXP = "exp"


@dataclass(frozen=True)
class TapeNode:
    index: int
    op: OpKind
    parents: tuple[int, ...]
    value: np.ndarray
    vjps: tuple[Vjp, ...]


class Tape:
    """Append-only record of one forward evaluation. Not shared between threads."""

    def __init__(self) -> None:
        self.nodes: list[TapeNode] = []

    def __len__(self) -> int:
        return len(self.nodes)

    def variable(self, value: Any) -> "Node":
        arr = np.array(value, dtype=np.float64, copy=True)
        return self._append(OpKind.VARIABLE, arr, ())

    def record(self, op: OpKind, value: np.ndarray, inputs: Iterable[tuple[Any, Vjp]]) -> "Node":
        parents = [(x.index, vjp) for x, vjp in inputs if isinstance(x, Node)]
        return self._append(op, value, tuple(parents))

    def _append(self, op: OpKind, value: np.ndarray, parents: tuple[tuple[int, Vjp], ...]) -> "Node":
        index = len(self.nodes)
        value = np.asarray(value, dtype=np.float64)
        if not np.all(np.isfinite(value)):
            raise NumericalOverflowError(index, op.value)
        self.nodes.append(
            TapeNode(
                index=index,
                op=op,
                parents=tuple(p for p, _ in parents),
                value=value,
                vjps=tuple(v for _, v in parents),
            )
        )
        return Node(self, index)

    def backward(self, seeds: Sequence[tuple["Node", Any]]) -> list[np.ndarray | None]:
        """Reverse sweep seeded with output adjoints; returns the adjoint of every node."""
        adjoints: list[np.ndarray | None] = [None] * len(self.nodes)
        if not seeds:
            return adjoints
        for node, seed in seeds:
            if node.tape is not self:
                raise ValueError("Seed node belongs to a different tape")
            g = np.broadcast_to(np.asarray(seed, dtype=np.float64), node.value.shape).copy()
            prev = adjoints[node.index]
            adjoints[node.index] = g if prev is None else prev + g

        start = max(node.index for node, _ in seeds)
        for i in range(start, -1, -1):
            g = adjoints[i]
            if g is None:
                continue
            rec = self.nodes[i]
            if not np.all(np.isfinite(g)):
                raise NumericalOverflowError(i, rec.op.value)
            for parent, vjp in zip(rec.parents, rec.vjps):
                contrib = vjp(g)
                prev = adjoints[parent]
                adjoints[parent] = contrib if prev is None else prev + contrib
        return adjoints

    def gradient(self, output: "Node", wrt: "Node", seed: Any = None) -> np.ndarray:
        if seed is None:
            if output.value.size != 1:
                raise ValueError("A seed is required for non-scalar outputs")
            seed = 1.0
        adj = self.backward([(output, seed)])[wrt.index]
        return np.zeros_like(wrt.value) if adj is None else adj


class Node:
    """Handle to a tape record; supports numpy-style arithmetic."""

    __slots__ = ("tape", "index")
    # make numpy defer to our reflected operators (ndarray @ Node etc.)
    __array_ufunc__ = None

    def __init__(self, tape: Tape, index: int):
        self.tape = tape
        self.index = index

    @property
    def value(self) -> np.ndarray:
        return self.tape.nodes[self.index].value

    @property
    def shape(self) -> tuple[int, ...]:
        return self.value.shape

    @property
    def ndim(self) -> int:
        return self.value.ndim

    @property
    def T(self) -> "Node":
        return transpose(self)

    def __repr__(self) -> str:
        return f"Node(index={self.index}, shape={self.shape})"

    def __add__(self, other):
        return add(self, other)

    def __radd__(self, other):
        return add(other, self)

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(other, self)

    def __mul__(self, other):
        return mul(self, other)

    def __rmul__(self, other):
        return mul(other, self)

    def __truediv__(self, other):
        return div(self, other)

    def __rtruediv__(self, other):
        return div(other, self)

    def __neg__(self):
        return neg(self)

    def __pow__(self, exponent):
        return power(self, exponent)

    def __matmul__(self, other):
        return matmul(self, other)

    def __rmatmul__(self, other):
        return matmul(other, self)

    def __getitem__(self, key):
        return index(self, key)

    def reshape(self, *shape):
        if len(shape) == 1 and isinstance(shape[0], tuple):
            shape = shape[0]
        return reshape(self, shape)

    def sum(self, axis: int | None = None):
        return reduce_sum(self, axis)


def _value(x: Any) -> Any:
    return x.value if isinstance(x, Node) else x


def _tape_of(*xs: Any) -> Tape | None:
    for x in xs:
        if isinstance(x, Node):
            return x.tape
    return None


def _unbroadcast(grad: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    if grad.shape == tuple(shape):
        return grad
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad.reshape(shape)


def add(a, b):
    tape = _tape_of(a, b)
    av, bv = _value(a), _value(b)
    out = av + bv
    if tape is None:
        return out
    sa, sb = np.shape(av), np.shape(bv)
    return tape.record(OpKind.ADD, out, [(a, lambda g: _unbroadcast(g, sa)), (b, lambda g: _unbroadcast(g, sb))])


def sub(a, b):
    tape = _tape_of(a, b)
    av, bv = _value(a), _value(b)
    out = av - bv
    if tape is None:
        return out
    sa, sb = np.shape(av), np.shape(bv)
    return tape.record(OpKind.SUB, out, [(a, lambda g: _unbroadcast(g, sa)), (b, lambda g: _unbroadcast(-g, sb))])


def mul(a, b):
    tape = _tape_of(a, b)
    av, bv = _value(a), _value(b)
    out = av * bv
    if tape is None:
        return out
    sa, sb = np.shape(av), np.shape(bv)
    return tape.record(
        OpKind.MUL,
        out,
        [(a, lambda g: _unbroadcast(g * bv, sa)), (b, lambda g: _unbroadcast(g * av, sb))],
    )


def div(a, b):
    tape = _tape_of(a, b)
    av, bv = _value(a), _value(b)
    out = av / bv
    if tape is None:
        return out
    sa, sb = np.shape(av), np.shape(bv)
    return tape.record(
        OpKind.DIV,
        out,
        [(a, lambda g: _unbroadcast(g / bv, sa)), (b, lambda g: _unbroadcast(-g * av / (bv * bv), sb))],
    )


def neg(a):
    if not isinstance(a, Node):
        return -a
    return a.tape.record(OpKind.NEG, -a.value, [(a, lambda g: -g)])


def power(a, exponent: float):
    if isinstance(exponent, Node):
        raise TypeError("Only constant exponents are supported")
    if not isinstance(a, Node):
        return a**exponent
    av = a.value
    p = float(exponent)
    return a.tape.record(OpKind.POW, av**p, [(a, lambda g: g * p * av ** (p - 1.0))])


def matmul(a, b):
    tape = _tape_of(a, b)
    av, bv = _value(a), _value(b)
    out = av @ bv
    if tape is None:
        return out
    av, bv = np.asarray(av), np.asarray(bv)

    def grad_a(g):
        if av.ndim == 1 and bv.ndim == 1:
            return g * bv
        if bv.ndim == 1:
            return np.outer(g, bv)
        if av.ndim == 1:
            return bv @ g
        return g @ bv.T

    def grad_b(g):
        if av.ndim == 1 and bv.ndim == 1:
            return g * av
        if bv.ndim == 1:
            return av.T @ g
        if av.ndim == 1:
            return np.outer(av, g)
        return av.T @ g

    return tape.record(OpKind.MATMUL, out, [(a, grad_a), (b, grad_b)])


def transpose(a):
    if not isinstance(a, Node):
        return np.transpose(a)
    return a.tape.record(OpKind.TRANSPOSE, a.value.T, [(a, lambda g: g.T)])


def reduce_sum(a, axis: int | None = None):
    if not isinstance(a, Node):
        return np.sum(a, axis=axis)
    shape = a.value.shape

    def grad(g):
        if axis is None:
            return np.full(shape, float(g))
        return np.broadcast_to(np.expand_dims(g, axis), shape).copy()

    return a.tape.record(OpKind.SUM, np.sum(a.value, axis=axis), [(a, grad)])


def reshape(a, shape: tuple[int, ...]):
    if not isinstance(a, Node):
        return np.reshape(a, shape)
    orig = a.value.shape
    return a.tape.record(OpKind.RESHAPE, a.value.reshape(shape), [(a, lambda g: g.reshape(orig))])


def index(a, key):
    if not isinstance(a, Node):
        return a[key]
    av = a.value

    def grad(g):
        out = np.zeros_like(av)
        np.add.at(out, key, g)
        return out

    return a.tape.record(OpKind.INDEX, av[key], [(a, grad)])


def sigmoid(a):
    if not isinstance(a, Node):
        return expit(a)
    s = expit(a.value)
    return a.tape.record(OpKind.SIGMOID, s, [(a, lambda g: g * s * (1.0 - s))])


def tanh(a):
    if not isinstance(a, Node):
        return np.tanh(a)
    t = np.tanh(a.value)
    return a.tape.record(OpKind.TANH, t, [(a, lambda g: g * (1.0 - t * t))])


def exp(a):
    if not isinstance(a, Node):
        return np.exp(a)
    e = np.exp(a.value)
    return a.tape.record(OpKind.EXP, e, [(a, lambda g: g * e)])


def value_of(x: Any) -> np.ndarray:
    """Numeric value of a Node, array or scalar."""
    return np.asarray(_value(x), dtype=np.float64)
