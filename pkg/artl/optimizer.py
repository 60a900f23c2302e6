"""Stochastic gradient–supergradient descent (SGSD) over (θ, ξ) and its Adam variant.

Both drivers evaluate, at every state (θ^t, ξ^t), the direction
g = ∇U − (0, v_h(ξ)) with a full-batch data term and a Monte-Carlo HOV term,
record diagnostics, and step. The recorded ``F`` reuses that Monte-Carlo HOV
estimate; with ``quad_grid`` set, ``F_quad`` also holds F with the HOV term on a
midpoint grid at every criticality checkpoint. Randomness per iteration comes from its own
``SeedSequence(seed, spawn_key=(stream, t))``, so runs are reproducible and
independent of thread scheduling.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import pandas as pd

from artl.diagnostics import (
    convergence_bound,
    criticality_estimate,
    default_l_mu2,
    sample_stopping_time,
)
from artl.errors import DivergedError, NumericalOverflowError
from artl.hovr import MAX_QUAD_DIM, quad_hovr
from artl.losses import AugmentedState, TrimSpec, artl_value_from_residuals, trimmed_loss
from artl.objective import ArtlGradient, artl_gradient
from artl.schedules import rates
from data_models.architecture import MlpArchitecture
from data_models.dataset import Dataset
from data_models.hovr import HovrSpec
from data_models.run_config import ScheduleKind, ScheduleSpec

logger = logging.getLogger(__name__)

STREAM_HOVR = 1
STREAM_CRITICALITY = 2
STREAM_STOPPING = 3

DIAGNOSTIC_COLUMNS = ["iteration", "F", "F_quad", "trimmed_loss", "hov_estimate", "criticality", "rate", "grad_norm"]


def iteration_rng(seed: int, stream: int, t: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(stream, t)))


@dataclass(frozen=True)
class DiagnosticsSettings:
    criticality_every: int = 100
    criticality_samples: int = 4096
    l_mu1: float = 1.0
    l_mu2: float | None = None
    quad_grid: int | None = None


@dataclass(frozen=True)
class AdamSettings:
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8


@dataclass(frozen=True)
class IterationRecord:
    iteration: int
    F: float
    F_quad: float
    trimmed_loss: float
    hov_estimate: float
    criticality: float
    rate: float
    grad_norm: float


@dataclass
class SgsdReport:
    records: list[IterationRecord]
    final_state: AugmentedState
    stopping_index: int
    stopping_state: AugmentedState
    convergence_bound: float
    extras: dict = field(default_factory=dict)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame([r.__dict__ for r in self.records], columns=DIAGNOSTIC_COLUMNS)

    def criticality_trace(self) -> pd.Series:
        df = self.to_frame()
        return df.set_index("iteration")["criticality"].dropna()

    def running_min_criticality(self) -> pd.Series:
        return self.criticality_trace().cummin()


def _checked_gradient(
    state: AugmentedState,
    arch: MlpArchitecture,
    data: Dataset,
    trim: TrimSpec,
    hovr: HovrSpec,
    rng: np.random.Generator,
    iteration: int,
) -> ArtlGradient:
    try:
        grad = artl_gradient(state, arch, data, trim.h, hovr, rng)
    except NumericalOverflowError as exc:
        raise DivergedError(iteration, str(exc)) from exc
    if not np.all(np.isfinite(grad.u)):
        raise DivergedError(iteration)
    return grad


def sgsd_step(
    state: AugmentedState,
    arch: MlpArchitecture,
    data: Dataset,
    trim: TrimSpec,
    hovr: HovrSpec,
    rate: float,
    rng: np.random.Generator,
    iteration: int = 0,
) -> AugmentedState:
    """(θ, ξ) − ω·(u − (0, v)) for one stochastic direction."""
    trim.check(data.n)
    grad = _checked_gradient(state, arch, data, trim, hovr, rng, iteration)
    return state.with_flat(state.flat - rate * grad.direction)


Update = Callable[[np.ndarray, np.ndarray, float, int], np.ndarray]


def _drive(
    init_state: AugmentedState,
    arch: MlpArchitecture,
    data: Dataset,
    trim: TrimSpec,
    hovr: HovrSpec,
    schedule: ScheduleSpec,
    iterations: int,
    seed: int,
    settings: DiagnosticsSettings,
    update: Update,
    label: str,
) -> SgsdReport:
    if iterations < 0:
        raise ValueError(f"iterations must be >= 0, got {iterations}")
    trim.check(data.n)
    if init_state.xi.shape[0] != data.n:
        raise ValueError(f"xi has length {init_state.xi.shape[0]}, data has {data.n} rows")

    omega = rates(schedule, iterations + 1)
    l_mu2 = settings.l_mu2 if settings.l_mu2 is not None else default_l_mu2(omega)
    tau = sample_stopping_time(omega, l_mu2, iteration_rng(seed, STREAM_STOPPING, 0))

    state = init_state
    stopping_state = init_state
    records: list[IterationRecord] = []
    for t in range(iterations + 1):
        grad = _checked_gradient(state, arch, data, trim, hovr, iteration_rng(seed, STREAM_HOVR, t), t)
        direction = grad.direction
        crit = math.nan
        f_quad = math.nan
        if t % settings.criticality_every == 0 or t == iterations:
            if settings.quad_grid is not None and hovr.domain.dim <= MAX_QUAD_DIM:
                hov = quad_hovr(state.theta, arch, hovr, settings.quad_grid) if hovr.lam > 0.0 else 0.0
                f_quad = artl_value_from_residuals(grad.residuals, state.xi, trim.h, hov, hovr.lam)
            try:
                crit = criticality_estimate(
                    state, arch, data, trim, hovr, settings.criticality_samples,
                    iteration_rng(seed, STREAM_CRITICALITY, t),
                )
            except NumericalOverflowError as exc:
                raise DivergedError(t, str(exc)) from exc
        records.append(
            IterationRecord(
                iteration=t,
                F=artl_value_from_residuals(grad.residuals, state.xi, trim.h, grad.hov_estimate, hovr.lam),
                F_quad=f_quad,
                trimmed_loss=trimmed_loss(grad.residuals, trim.h),
                hov_estimate=grad.hov_estimate if hovr.lam > 0.0 else math.nan,
                criticality=crit,
                rate=float(omega[t]),
                grad_norm=float(np.linalg.norm(direction)),
            )
        )
        if t == tau:
            stopping_state = state
        if t == iterations:
            break
        flat = update(state.flat, direction, float(omega[t]), t)
        if not np.all(np.isfinite(flat)):
            raise DivergedError(t, "non-finite parameters after update")
        state = state.with_flat(flat)
        if t and t % 1000 == 0:
            logger.debug("%s t=%d F=%.6g T_h=%.6g", label, t, records[-1].F, records[-1].trimmed_loss)

    bound = convergence_bound(records[0].F, omega, settings.l_mu1, l_mu2)
    logger.debug("%s finished: F=%.6g tau=%d bound=%.6g", label, records[-1].F, tau, bound)
    return SgsdReport(
        records=records,
        final_state=state,
        stopping_index=tau,
        stopping_state=stopping_state,
        convergence_bound=bound,
    )


def run_sgsd(
    init_state: AugmentedState,
    arch: MlpArchitecture,
    data: Dataset,
    trim: TrimSpec,
    hovr: HovrSpec,
    schedule: ScheduleSpec,
    iterations: int,
    seed: int,
    settings: DiagnosticsSettings = DiagnosticsSettings(),
) -> SgsdReport:
    """Plain SGSD: (θ, ξ) ← (θ, ξ) − ω_t·g_t."""

    def update(flat: np.ndarray, g: np.ndarray, rate: float, t: int) -> np.ndarray:
        return flat - rate * g

    return _drive(init_state, arch, data, trim, hovr, schedule, iterations, seed, settings, update, "sgsd")


def adam_update(adam: AdamSettings = AdamSettings()) -> Update:
    """Adam moment scaling around an arbitrary direction stream."""
    m: np.ndarray | None = None
    v: np.ndarray | None = None

    def update(flat: np.ndarray, g: np.ndarray, rate: float, t: int) -> np.ndarray:
        nonlocal m, v
        if m is None:
            m = np.zeros_like(g)
            v = np.zeros_like(g)
        m = adam.beta1 * m + (1.0 - adam.beta1) * g
        v = adam.beta2 * v + (1.0 - adam.beta2) * g * g
        m_hat = m / (1.0 - adam.beta1 ** (t + 1))
        v_hat = v / (1.0 - adam.beta2 ** (t + 1))
        return flat - rate * m_hat / (np.sqrt(v_hat) + adam.eps)

    return update


def run_adam_artl(
    init_state: AugmentedState,
    arch: MlpArchitecture,
    data: Dataset,
    trim: TrimSpec,
    hovr: HovrSpec,
    base_rate: float,
    step_decay: tuple[float, int],
    iterations: int,
    seed: int,
    settings: DiagnosticsSettings = DiagnosticsSettings(),
    adam: AdamSettings = AdamSettings(),
    schedule: ScheduleSpec | None = None,
) -> SgsdReport:
    """The SGSD direction fed through Adam, with step decay (γ, period) on the base rate.

    ``schedule`` overrides ``base_rate``/``step_decay`` when given.
    """
    if schedule is None:
        gamma, period = step_decay
        schedule = ScheduleSpec(kind=ScheduleKind.STEP_DECAY, base_rate=base_rate, gamma=gamma, period=period)
    return _drive(
        init_state, arch, data, trim, hovr, schedule, iterations, seed, settings, adam_update(adam), "adam"
    )
