"""Higher-order variation (HOV) of the network over the domain box.

C_{k,q}(f_θ) = ∫_Ω Σ_i w_i |∇^[k]_i f_θ(x)|^q dx

is estimated either by Monte Carlo with uniform points (unbiased for the value
and its θ-gradient once multiplied by vol(Ω)) or by a midpoint tensor grid.
"""
from __future__ import annotations

import logging
from typing import Any, NamedTuple

import numpy as np
from numpy.polynomial import Polynomial

from artl.autodiff.derivatives import input_derivative_batch, power_adjoint
from artl.autodiff.params import ParamVector
from artl.autodiff.tape import Node, Tape, value_of
from artl.errors import InvalidConfigError, InvalidInputError, UnsupportedDimensionError
from artl.mlp import check_layout
from data_models.architecture import MlpArchitecture
from data_models.hovr import HovrSpec

logger = logging.getLogger(__name__)

MAX_QUAD_DIM = 3
_QUAD_CHUNK = 8192


class HovrEstimate(NamedTuple):
    estimate: float
    grad: np.ndarray


def hovr_on_tape(
    layers: list[tuple[Any, Any]],
    arch: MlpArchitecture,
    spec: HovrSpec,
    Z: np.ndarray,
) -> tuple[float, list[tuple[Node, np.ndarray]]]:
    """vol·Σ_i w_i·mean_m |d_i(z_m)|^q plus the reverse-sweep seeds for its θ-gradient."""
    M = Z.shape[0]
    vol = spec.domain.volume
    estimate = 0.0
    seeds: list[tuple[Node, np.ndarray]] = []
    for entry in spec.weights:
        if entry.w == 0.0:
            continue
        d = input_derivative_batch(layers, arch, Z, entry.multi_index)
        values, adj, _ = power_adjoint(value_of(d), spec.q)
        scale = vol * entry.w / M
        estimate += scale * float(values.sum())
        if isinstance(d, Node):
            seeds.append((d, scale * adj))
    return estimate, seeds


def mc_hovr_grad(
    theta: ParamVector,
    arch: MlpArchitecture,
    spec: HovrSpec,
    rng: np.random.Generator,
    mc_samples: int | None = None,
) -> HovrEstimate:
    """One Monte-Carlo draw of (C_{k,q}(f_θ), ∇_θ C_{k,q}(f_θ))."""
    M = spec.mc_samples if mc_samples is None else int(mc_samples)
    if M < 1:
        raise InvalidConfigError(f"Monte-Carlo sample count must be >= 1, got {M}")
    check_layout(theta, arch)
    Z = spec.domain.sample(rng, M)
    tape = Tape()
    th = tape.variable(theta.values)
    estimate, seeds = hovr_on_tape(theta.unflatten(th), arch, spec, Z)
    grad = tape.backward(seeds)[th.index]
    return HovrEstimate(estimate=estimate, grad=np.zeros_like(theta.values) if grad is None else grad)


def midpoint_grid(spec: HovrSpec, grid_per_dim: int) -> np.ndarray:
    axes = []
    for lo, hi in zip(spec.domain.lower, spec.domain.upper):
        step = (hi - lo) / grid_per_dim
        axes.append(lo + (np.arange(grid_per_dim) + 0.5) * step)
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.column_stack([m.ravel() for m in mesh])


def quad_hovr(theta: ParamVector, arch: MlpArchitecture, spec: HovrSpec, grid_per_dim: int) -> float:
    """Midpoint-rule tensor-grid value of C_{k,q}(f_θ)."""
    if spec.domain.dim > MAX_QUAD_DIM:
        raise UnsupportedDimensionError(
            f"Grid quadrature supports at most {MAX_QUAD_DIM} dimensions, got {spec.domain.dim}"
        )
    if grid_per_dim < 2:
        raise InvalidInputError(f"grid_per_dim must be >= 2, got {grid_per_dim}")
    check_layout(theta, arch)
    layers = theta.unflatten()
    points = midpoint_grid(spec, grid_per_dim)
    total = 0.0
    for entry in spec.weights:
        if entry.w == 0.0:
            continue
        acc = 0.0
        for start in range(0, points.shape[0], _QUAD_CHUNK):
            d = input_derivative_batch(layers, arch, points[start : start + _QUAD_CHUNK], entry.multi_index)
            acc += float(np.sum(np.abs(np.asarray(d)) ** spec.q))
        total += entry.w * acc / points.shape[0]
    return spec.domain.volume * total


def basis_model_hov(gram: np.ndarray, theta_linear: np.ndarray) -> float:
    """θᵀGθ: the q=2 HOV of a model linear in its parameters, given its derivative Gram matrix."""
    G = np.asarray(gram, dtype=np.float64)
    th = np.asarray(theta_linear, dtype=np.float64).reshape(-1)
    if G.ndim != 2 or G.shape[0] != G.shape[1] or G.shape[0] != th.shape[0]:
        raise InvalidInputError(f"Gram matrix of shape {G.shape} does not match θ of length {th.shape[0]}")
    if not np.allclose(G, G.T, rtol=0.0, atol=1e-12 * max(1.0, float(np.abs(G).max(initial=0.0)))):
        raise InvalidInputError("Gram matrix is not symmetric")
    return float(th @ G @ th)


def monomial_gram(degree: int, k: int, lower: float, upper: float) -> np.ndarray:
    """G_ij = ∫ φ_i^(k) φ_j^(k) dx over [lower, upper] for the monomials φ_i = x^i, i = 0..degree."""
    derivs = [Polynomial.basis(i).deriv(k) for i in range(degree + 1)]
    G = np.zeros((degree + 1, degree + 1))
    for i, pi in enumerate(derivs):
        for j, pj in enumerate(derivs[: i + 1]):
            antider = (pi * pj).integ()
            G[i, j] = G[j, i] = antider(upper) - antider(lower)
    return G


def linear_model_gram(spec: HovrSpec) -> np.ndarray:
    """Gram matrix over θ = (w_1..w_J, b) of the affine model f(x) = w·x + b, for k=1 and q=2."""
    if spec.k != 1:
        raise InvalidInputError("An affine model has a non-zero Gram matrix only for k=1")
    J = spec.domain.dim
    G = np.zeros((J + 1, J + 1))
    for entry in spec.weights:
        j = entry.multi_index[0] - 1
        G[j, j] += spec.domain.volume * entry.w
    return G
