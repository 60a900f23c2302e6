"""Trimmed loss, its augmented (θ, ξ) form, and the baseline robust losses.

With V_h(ξ) = (1/n)·Σ of the (n−h) largest ξ_i², the augmented and regularized
trimmed loss splits as F = U − V_h where

    U(θ, ξ) = (1/n)(‖r(θ) − ξ‖² + ‖ξ‖²) + λ·HOV(f_θ)

is smooth and V_h is convex. Minimising over ξ recovers half the trimmed loss.
All index selections sort by magnitude with a stable sort, so ties resolve by
original index.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from artl.autodiff.params import ParamVector
from artl.errors import InputShapeError, InvalidInputError
from artl.mlp import predict
from artl.rounding import round_half_up
from data_models.architecture import MlpArchitecture

logger = logging.getLogger(__name__)

TUKEY_C = 4.685
HUBER_DELTA = 1.0


@dataclass(frozen=True)
class TrimSpec:
    h: int

    def check(self, n: int) -> None:
        if not 1 <= self.h <= n:
            raise InvalidInputError(f"h must satisfy 1 <= h <= n, got h={self.h}, n={n}")

    @classmethod
    def from_fraction(cls, h_fraction: float, n: int) -> "TrimSpec":
        """h = round(h_fraction·n), clipped into 1..n."""
        return cls(h=min(n, max(1, round_half_up(h_fraction, n))))


@dataclass(frozen=True)
class AugmentedState:
    theta: ParamVector
    xi: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "xi", np.asarray(self.xi, dtype=np.float64).reshape(-1))

    @classmethod
    def initial(cls, theta: ParamVector, n: int) -> "AugmentedState":
        return cls(theta=theta, xi=np.zeros(n))

    @property
    def flat(self) -> np.ndarray:
        return np.concatenate([self.theta.values, self.xi])

    def with_flat(self, flat: np.ndarray) -> "AugmentedState":
        p = len(self.theta)
        return AugmentedState(theta=self.theta.with_values(flat[:p]), xi=flat[p:])


class InnerMin(NamedTuple):
    xi_star: np.ndarray
    value: float


def _as_vector(r: np.ndarray) -> np.ndarray:
    r = np.asarray(r, dtype=np.float64)
    if r.ndim != 1:
        raise InputShapeError(f"Expected a 1-D residual vector, got shape {r.shape}")
    return r


def magnitude_order(v: np.ndarray) -> np.ndarray:
    """Indices sorting |v| ascending; equal magnitudes keep index order."""
    return np.argsort(np.abs(v), kind="stable")


def kept_mask(v: np.ndarray, h: int) -> np.ndarray:
    """Boolean mask of the h entries of smallest magnitude."""
    mask = np.zeros(v.shape[0], dtype=bool)
    mask[magnitude_order(v)[:h]] = True
    return mask


def residuals(theta: ParamVector, arch: MlpArchitecture, X: np.ndarray, y: np.ndarray) -> np.ndarray:
    return np.asarray(y, dtype=np.float64) - predict(theta, arch, X)


def trimmed_loss(r: np.ndarray, h: int) -> float:
    """(1/n)·Σ of the h smallest squared residuals."""
    r = _as_vector(r)
    n = r.shape[0]
    TrimSpec(h).check(n)
    kept = r[magnitude_order(r)[:h]]
    return float(np.sum(kept * kept) / n)


def inner_min_xi(r: np.ndarray, h: int) -> InnerMin:
    """Minimiser of ξ ↦ (1/n)‖r−ξ‖² + T_h(ξ), and the minimum (= T_h(r)/2)."""
    r = _as_vector(r)
    TrimSpec(h).check(r.shape[0])
    xi = r.copy()
    keep = kept_mask(r, h)
    xi[keep] = r[keep] / 2.0
    n = r.shape[0]
    diff = r - xi
    value = float(np.sum(diff * diff) / n) + trimmed_loss(xi, h)
    return InnerMin(xi_star=xi, value=value)


def v_h_value(xi: np.ndarray, h: int) -> float:
    """V_h(ξ) = (1/n)·Σ of the (n−h) largest ξ_i², computed exactly by sorting."""
    xi = _as_vector(xi)
    n = xi.shape[0]
    TrimSpec(h).check(n)
    top = xi[magnitude_order(xi)[h:]]
    return float(np.sum(top * top) / n)


def v_h_subgradient(xi: np.ndarray, h: int) -> np.ndarray:
    xi = _as_vector(xi)
    n = xi.shape[0]
    TrimSpec(h).check(n)
    v = np.zeros(n)
    top = magnitude_order(xi)[h:]
    v[top] = (2.0 / n) * xi[top]
    return v


def artl_value_from_residuals(
    r: np.ndarray, xi: np.ndarray, h: int, hovr_value: float = 0.0, lam: float = 0.0
) -> float:
    r, xi = _as_vector(r), _as_vector(xi)
    if r.shape != xi.shape:
        raise InputShapeError(f"Residuals {r.shape} and xi {xi.shape} differ in length")
    n = r.shape[0]
    diff = r - xi
    smooth = (np.sum(diff * diff) + np.sum(xi * xi)) / n
    return float(smooth + lam * hovr_value - v_h_value(xi, h))


def artl_value(
    state: AugmentedState,
    arch: MlpArchitecture,
    X: np.ndarray,
    y: np.ndarray,
    h: int,
    hovr_value: float,
    lam: float,
) -> float:
    """F(θ, ξ) = (1/n)(‖r(θ)−ξ‖² + ‖ξ‖²) + λ·hovr_value − V_h(ξ)."""
    return artl_value_from_residuals(residuals(state.theta, arch, X, y), state.xi, h, hovr_value, lam)


def huber_loss(r, delta: float = HUBER_DELTA):
    if delta <= 0:
        raise InvalidInputError(f"Huber delta must be positive, got {delta}")
    a = np.abs(r)
    out = np.where(a <= delta, 0.5 * a * a, delta * (a - 0.5 * delta))
    return out if np.ndim(out) else float(out)


def huber_psi(r, delta: float = HUBER_DELTA) -> np.ndarray:
    """d/dr of the Huber loss."""
    return np.clip(r, -delta, delta)


def tukey_loss(r, c: float = TUKEY_C):
    if c <= 0:
        raise InvalidInputError(f"Tukey c must be positive, got {c}")
    a = np.abs(r)
    inside = 1.0 - (np.minimum(a, c) / c) ** 2
    out = np.where(a <= c, (c * c / 6.0) * (1.0 - inside**3), c * c / 6.0)
    return out if np.ndim(out) else float(out)


def tukey_psi(r, c: float = TUKEY_C) -> np.ndarray:
    r = np.asarray(r, dtype=np.float64)
    u = 1.0 - (r / c) ** 2
    return np.where(np.abs(r) <= c, r * u * u, 0.0)


def squared_loss(r):
    out = 0.5 * np.square(r)
    return out if np.ndim(out) else float(out)


def squared_psi(r) -> np.ndarray:
    return np.asarray(r, dtype=np.float64)
