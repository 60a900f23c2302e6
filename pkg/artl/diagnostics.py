"""Convergence diagnostics: criticality measure, randomized stopping time and descent checks.

The criticality of (θ, ξ) is dist(∇U(θ, ξ), {0} × ∂V_h(ξ)). ∂V_h(ξ) is the
convex hull of (2/n)·ξ restricted to the optimal (n−h)-subsets of largest
|ξ_i|: indices strictly above the boundary magnitude are always in, ties at the
boundary enter with weights λ_i ∈ [0, 1] summing to the number of free slots.
"""
from __future__ import annotations

import logging

import numpy as np
from scipy.optimize import brentq

from artl.errors import InvalidConfigError
from artl.losses import AugmentedState, TrimSpec, magnitude_order
from artl.objective import smooth_gradient
from data_models.architecture import MlpArchitecture
from data_models.dataset import Dataset
from data_models.hovr import HovrSpec

logger = logging.getLogger(__name__)


def _tie_weights(u: np.ndarray, c: np.ndarray, slots: int) -> np.ndarray:
    """argmin Σ (u_i − λ_i c_i)² over λ ∈ [0, 1]^m with Σ λ_i = slots (all c_i ≠ 0)."""
    m = u.shape[0]
    if slots <= 0:
        return np.zeros(m)
    if slots >= m:
        return np.ones(m)

    def weights(nu: float) -> np.ndarray:
        return np.clip((c * u - nu) / (c * c), 0.0, 1.0)

    cu = c * u
    lo = float(np.min(cu - c * c)) - 1.0
    hi = float(np.max(cu)) + 1.0
    nu = brentq(lambda t: float(weights(t).sum()) - slots, lo, hi, xtol=1e-14, rtol=1e-14)
    return weights(nu)


def subdifferential_distance(u_theta: np.ndarray, u_xi: np.ndarray, xi: np.ndarray, h: int) -> float:
    """Euclidean distance from (u_θ, u_ξ) to {0} × ∂V_h(ξ)."""
    xi = np.asarray(xi, dtype=np.float64)
    n = xi.shape[0]
    TrimSpec(h).check(n)
    top_count = n - h
    residual = np.asarray(u_xi, dtype=np.float64).copy()
    if top_count > 0:
        mags = np.abs(xi)
        boundary = mags[magnitude_order(xi)[h]]
        above = mags > boundary
        ties = np.flatnonzero(mags == boundary)
        c = (2.0 / n) * xi
        residual[above] -= c[above]
        slots = top_count - int(np.count_nonzero(above))
        if boundary > 0.0 and ties.size:
            lam = _tie_weights(residual[ties], c[ties], slots)
            residual[ties] -= lam * c[ties]
    return float(np.sqrt(np.sum(np.square(u_theta)) + np.sum(np.square(residual))))


def criticality_estimate(
    state: AugmentedState,
    arch: MlpArchitecture,
    data: Dataset,
    trim: TrimSpec,
    hovr: HovrSpec,
    mc_eval_samples: int,
    rng: np.random.Generator,
) -> float:
    """dist(∂U, {0} × ∂V_h) with ∂U estimated from a large Monte-Carlo batch."""
    if mc_eval_samples < 1:
        raise InvalidConfigError(f"mc_eval_samples must be >= 1, got {mc_eval_samples}")
    u, _, _ = smooth_gradient(state, arch, data, hovr, rng, mc_samples=mc_eval_samples)
    p = len(state.theta)
    return subdifferential_distance(u[:p], u[p:], state.xi, trim.h)


def default_l_mu2(rates: np.ndarray) -> float:
    """Lμ₂ proxy such that Lμ₂·max ω = 1."""
    return 1.0 / float(np.max(rates))


def stopping_distribution(rates: np.ndarray, l_mu2: float) -> np.ndarray:
    """ℙ(τ = s) ∝ 2ω_s − Lμ₂ω_s²."""
    rates = np.asarray(rates, dtype=np.float64)
    w = 2.0 * rates - l_mu2 * rates * rates
    if np.any(w <= 0.0):
        raise InvalidConfigError(f"Lμ₂ = {l_mu2} makes some stopping weights non-positive (need ω < 2/Lμ₂)")
    return w / w.sum()


def sample_stopping_time(rates: np.ndarray, l_mu2: float, rng: np.random.Generator) -> int:
    probs = stopping_distribution(rates, l_mu2)
    return int(rng.choice(probs.shape[0], p=probs))


def convergence_bound(f0: float, rates: np.ndarray, l_mu1: float, l_mu2: float) -> float:
    """(2F₀ + Lμ₁Σω²) / Σ(2ω − Lμ₂ω²): bound on the expected squared criticality at τ."""
    rates = np.asarray(rates, dtype=np.float64)
    denom = float(np.sum(2.0 * rates - l_mu2 * rates * rates))
    if denom <= 0.0:
        raise InvalidConfigError("stopping weights must have a positive sum")
    return (2.0 * f0 + l_mu1 * float(np.sum(rates * rates))) / denom


def descent_windows(values: np.ndarray, window: int) -> float:
    """Share of consecutive window pairs whose mean does not increase."""
    values = np.asarray(values, dtype=np.float64)
    count = values.shape[0] // window
    if count < 2:
        return 1.0
    means = values[: count * window].reshape(count, window).mean(axis=1)
    return float(np.mean(np.diff(means) <= 0.0))
