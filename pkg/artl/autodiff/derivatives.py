"""θ-gradients of scalar objectives and exact input derivatives of the network."""
from __future__ import annotations

import logging
from typing import Any, Callable, NamedTuple, Sequence

import numpy as np

from artl.autodiff.jets import CrossJet, Jet2
from artl.autodiff.params import ParamVector
from artl.autodiff.tape import Node, Tape
from artl.errors import InvalidInputError, UnsupportedOrderError
from artl.mlp import check_inputs, check_layout, predict_layers, propagate
from data_models.architecture import MlpArchitecture

logger = logging.getLogger(__name__)

MAX_ORDER = 2


class HovrTermGrad(NamedTuple):
    value: float
    grad: np.ndarray
    at_kink: bool


def grad_scalar(objective: Callable[[Node], Any], theta: ParamVector) -> np.ndarray:
    """∂objective/∂θ by one reverse sweep. Constant objectives give the zero vector."""
    tape = Tape()
    th = tape.variable(theta.values)
    out = objective(th)
    if not isinstance(out, Node):
        return np.zeros_like(theta.values)
    return tape.gradient(out, th)


def validate_multi_index(multi_index: Sequence[int], input_dim: int) -> tuple[int, ...]:
    idx = tuple(int(i) for i in multi_index)
    if len(idx) > MAX_ORDER:
        raise UnsupportedOrderError(f"Input derivatives of order {len(idx)} are not supported (max {MAX_ORDER})")
    for i in idx:
        if not 1 <= i <= input_dim:
            raise InvalidInputError(f"Multi-index entry {i} outside 1..{input_dim}")
    return idx


def _unit(input_dim: int, batch: int, i: int) -> np.ndarray:
    e = np.zeros((input_dim, batch))
    e[i - 1, :] = 1.0
    return e


def _row(component: Any, batch: int) -> Any:
    # a linear network leaves second-order components as the scalar 0.0
    if isinstance(component, (int, float)):
        return np.full(batch, float(component))
    return component[0]


def input_derivative_batch(
    layers: list[tuple[Any, Any]],
    arch: MlpArchitecture,
    Z: np.ndarray,
    multi_index: Sequence[int],
) -> Any:
    """∂^k f/∂x_{i1}…∂x_{ik} at each row of Z (shape (B,)); a Node when layers are on a tape."""
    idx = validate_multi_index(multi_index, arch.input_dim)
    if not idx:
        return predict_layers(layers, arch, Z)
    Zt = check_inputs(Z, arch).T
    J, B = Zt.shape
    if len(idx) == 1:
        out = propagate(layers, arch.activation, Jet2(Zt, _unit(J, B, idx[0]), None))
        return _row(out.d1, B)
    i1, i2 = idx
    if i1 == i2:
        out = propagate(layers, arch.activation, Jet2(Zt, _unit(J, B, i1), 0.0))
        return _row(out.d2, B)
    out = propagate(layers, arch.activation, CrossJet(Zt, _unit(J, B, i1), _unit(J, B, i2), 0.0))
    return _row(out.dab, B)


def input_derivative(
    theta: ParamVector, arch: MlpArchitecture, x: np.ndarray, multi_index: Sequence[int]
) -> float:
    check_layout(theta, arch)
    x = np.asarray(x, dtype=np.float64).reshape(1, -1)
    return float(np.asarray(input_derivative_batch(theta.unflatten(), arch, x, multi_index))[0])


def power_adjoint(d: np.ndarray, q: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """|d|^q, its derivative q|d|^{q-1}sign(d), and the mask of kinks (d == 0).

    The derivative is set to 0 at kinks, a member of the Clarke subdifferential.
    """
    d = np.asarray(d, dtype=np.float64)
    a = np.abs(d)
    kink = a == 0.0
    with np.errstate(divide="ignore", invalid="ignore"):
        adj = q * np.power(a, q - 1.0) * np.sign(d)
    adj = np.where(kink, 0.0, adj)
    return np.power(a, q), adj, kink


def hovr_term_grad(
    theta: ParamVector,
    arch: MlpArchitecture,
    z: np.ndarray,
    multi_index: Sequence[int],
    q: float,
) -> HovrTermGrad:
    """|∇^[k]_i f_θ(z)|^q and its θ-gradient at one point z."""
    if q <= 0:
        raise InvalidInputError(f"q must be positive, got {q}")
    check_layout(theta, arch)
    tape = Tape()
    th = tape.variable(theta.values)
    d = input_derivative_batch(theta.unflatten(th), arch, np.asarray(z, dtype=np.float64).reshape(1, -1), multi_index)
    values, adj, kink = power_adjoint(np.asarray(d.value if isinstance(d, Node) else d), q)
    if isinstance(d, Node) and not kink[0]:
        grad = tape.gradient(d, th, seed=adj)
    else:
        grad = np.zeros_like(theta.values)
    return HovrTermGrad(value=float(values[0]), grad=grad, at_kink=bool(kink[0]))
