"""Stochastic gradient of the smooth part U and supergradient of V_h at (θ, ξ)."""
from __future__ import annotations

from typing import NamedTuple

import numpy as np

from artl.autodiff.tape import Tape
from artl.hovr import hovr_on_tape
from artl.losses import AugmentedState, v_h_subgradient
from artl.mlp import predict_layers
from data_models.architecture import MlpArchitecture
from data_models.dataset import Dataset
from data_models.hovr import HovrSpec


class ArtlGradient(NamedTuple):
    u: np.ndarray
    v: np.ndarray
    residuals: np.ndarray
    hov_estimate: float

    @property
    def direction(self) -> np.ndarray:
        """u − (0, v): the stochastic gradient–supergradient direction over (θ, ξ)."""
        g = self.u.copy()
        n = self.v.shape[0]
        g[-n:] -= self.v
        return g


def smooth_gradient(
    state: AugmentedState,
    arch: MlpArchitecture,
    data: Dataset,
    hovr: HovrSpec,
    rng: np.random.Generator | None,
    mc_samples: int | None = None,
) -> tuple[np.ndarray, np.ndarray, float]:
    """(∇U over (θ, ξ), residuals, HOV estimate); the HOV term is skipped when λ = 0."""
    n = data.n
    xi = state.xi
    tape = Tape()
    th = tape.variable(state.theta.values)
    layers = state.theta.unflatten(th)
    pred = predict_layers(layers, arch, data.X)
    r = data.y - pred.value
    seeds = [(pred, -(2.0 / n) * (r - xi))]

    hov = 0.0
    if hovr.lam > 0.0:
        M = hovr.mc_samples if mc_samples is None else mc_samples
        Z = hovr.domain.sample(rng, M)
        hov, hov_seeds = hovr_on_tape(layers, arch, hovr, Z)
        seeds += [(node, hovr.lam * seed) for node, seed in hov_seeds]

    g_theta = tape.backward(seeds)[th.index]
    if g_theta is None:
        g_theta = np.zeros_like(state.theta.values)
    g_xi = (2.0 / n) * (xi - r) + (2.0 / n) * xi
    return np.concatenate([g_theta, g_xi]), r, hov


def artl_gradient(
    state: AugmentedState,
    arch: MlpArchitecture,
    data: Dataset,
    h: int,
    hovr: HovrSpec,
    rng: np.random.Generator | None,
    mc_samples: int | None = None,
) -> ArtlGradient:
    u, r, hov = smooth_gradient(state, arch, data, hovr, rng, mc_samples)
    return ArtlGradient(u=u, v=v_h_subgradient(state.xi, h), residuals=r, hov_estimate=hov)
