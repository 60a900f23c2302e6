"""Baseline trainers: networks fitted by Adam on mean Huber, Tukey or squared loss,
plus a RANSAC-like variant that periodically drops its highest-loss samples.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable

import numpy as np
import pandas as pd

from artl.autodiff.params import ParamVector
from artl.autodiff.tape import Tape
from artl.errors import DivergedError, InvalidConfigError, NumericalOverflowError
from artl.losses import huber_loss, huber_psi, squared_loss, squared_psi, tukey_loss, tukey_psi
from artl.mlp import predict_layers
from artl.optimizer import AdamSettings, adam_update
from artl.rounding import round_half_up
from artl.schedules import learning_rate
from data_models.architecture import MlpArchitecture
from data_models.dataset import Dataset
from data_models.run_config import LossKind, LossSection, ScheduleSpec

logger = logging.getLogger(__name__)

Loss = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class RobustLoss:
    rho: Loss
    psi: Loss


def robust_loss(section: LossSection) -> RobustLoss:
    if section.kind is LossKind.HUBER:
        d = section.huber_delta
        return RobustLoss(lambda r: huber_loss(r, d), lambda r: huber_psi(r, d))
    if section.kind is LossKind.TUKEY:
        c = section.tukey_c
        return RobustLoss(lambda r: tukey_loss(r, c), lambda r: tukey_psi(r, c))
    return RobustLoss(squared_loss, squared_psi)


@dataclass
class BaselineFit:
    theta: ParamVector
    trace: pd.DataFrame


def train_m_estimator(
    theta0: ParamVector,
    arch: MlpArchitecture,
    data: Dataset,
    loss: RobustLoss,
    schedule: ScheduleSpec,
    iterations: int,
    adam: AdamSettings = AdamSettings(),
    phase_length: int | None = None,
    drop_fraction: float = 0.0,
) -> BaselineFit:
    """Adam on (1/|A|)·Σ_{i∈A} ρ(r_i).

    With ``phase_length`` set, A is refreshed at the start of every phase after
    the first by excluding the round(drop_fraction·n) samples of largest current
    loss; the first phase uses every sample.
    """
    n = data.n
    update = adam_update(adam)
    flat = theta0.values.copy()
    active = np.ones(n, dtype=bool)
    rows = []
    for t in range(iterations):
        tape = Tape()
        th = tape.variable(flat)
        try:
            pred = predict_layers(theta0.unflatten(th), arch, data.X)
        except NumericalOverflowError as exc:
            raise DivergedError(t, str(exc)) from exc
        r = data.y - pred.value

        if phase_length and t and t % phase_length == 0:
            drop = round_half_up(drop_fraction, n)
            if drop >= n:
                logger.warning(
                    "Dropping %d of %d samples would empty the active set; keeping the lowest-loss one", drop, n
                )
                drop = n - 1
            active = np.ones(n, dtype=bool)
            if drop:
                losses = np.asarray(loss.rho(r))
                active[np.argsort(-losses, kind="stable")[:drop]] = False

        n_active = int(active.sum())
        seed = np.where(active, -np.asarray(loss.psi(r)) / n_active, 0.0)
        try:
            g = tape.backward([(pred, seed)])[th.index]
        except NumericalOverflowError as exc:
            raise DivergedError(t, str(exc)) from exc
        if g is None or not np.all(np.isfinite(g)):
            raise DivergedError(t)
        rate = learning_rate(schedule, t)
        rows.append((t, float(np.mean(np.asarray(loss.rho(r))[active])), rate, n_active))
        flat = update(flat, g, rate, t)
    trace = pd.DataFrame(rows, columns=["iteration", "loss", "rate", "n_active"])
    return BaselineFit(theta=theta0.with_values(flat), trace=trace)


def _as_kind(section: LossSection, kind: LossKind) -> LossSection:
    return section.model_copy(update={"kind": kind})


def nn_huber(theta0, arch, data, section: LossSection, schedule, iterations, adam=AdamSettings()) -> BaselineFit:
    return train_m_estimator(theta0, arch, data, robust_loss(_as_kind(section, LossKind.HUBER)), schedule, iterations, adam)


def nn_tukey(theta0, arch, data, section: LossSection, schedule, iterations, adam=AdamSettings()) -> BaselineFit:
    return train_m_estimator(theta0, arch, data, robust_loss(_as_kind(section, LossKind.TUKEY)), schedule, iterations, adam)


def nn_ransac(theta0, arch, data, section: LossSection, schedule, iterations, adam=AdamSettings()) -> BaselineFit:
    """Squared loss with phases of ``ransac_phase`` iterations, each excluding the top ``ransac_drop`` share."""
    return train_m_estimator(
        theta0,
        arch,
        data,
        RobustLoss(squared_loss, squared_psi),
        schedule,
        iterations,
        adam,
        phase_length=section.ransac_phase,
        drop_fraction=section.ransac_drop,
    )


def linear_huber(theta0, arch, data, section: LossSection, schedule, iterations, adam=AdamSettings()) -> BaselineFit:
    """Huber loss on the affine model (no hidden layers)."""
    if arch.hidden_widths:
        raise InvalidConfigError("linear_huber expects an architecture without hidden layers")
    return nn_huber(theta0, arch, data, section, schedule, iterations, adam)
