"""Fit one model from a (method-resolved) RunConfig."""
from __future__ import annotations

import logging
from dataclasses import dataclass

import pandas as pd
from pydantic import ValidationError

from artl.autodiff.params import ParamVector
from artl.baselines import linear_huber, nn_huber, nn_ransac, nn_tukey, robust_loss, train_m_estimator
from artl.errors import InvalidConfigError
from artl.losses import AugmentedState, TrimSpec
from artl.mlp import init_params
from artl.optimizer import AdamSettings, DiagnosticsSettings, SgsdReport, run_adam_artl, run_sgsd
from data_models.architecture import DomainBox, MlpArchitecture
from data_models.dataset import Dataset
from data_models.hovr import HovrSpec
from data_models.run_config import LossKind, OptimizerKind, RunConfig

logger = logging.getLogger(__name__)


@dataclass
class FitResult:
    theta: ParamVector
    arch: MlpArchitecture
    hovr: HovrSpec
    trace: pd.DataFrame
    report: SgsdReport | None = None


def diagnostics_settings(config: RunConfig) -> DiagnosticsSettings:
    opt = config.optimizer
    return DiagnosticsSettings(
        criticality_every=opt.criticality_every,
        criticality_samples=opt.criticality_samples,
        l_mu1=opt.l_mu1,
        l_mu2=opt.l_mu2,
        quad_grid=opt.quad_grid,
    )


def adam_settings(config: RunConfig) -> AdamSettings:
    opt = config.optimizer
    return AdamSettings(beta1=opt.beta1, beta2=opt.beta2, eps=opt.eps)


def fit(config: RunConfig, train: Dataset, seed: int, hovr_domain: DomainBox | None = None) -> FitResult:
    """Train the configured method on ``train``; θ⁰ and all sampling derive from ``seed``.

    ``hovr_domain`` defaults to the training set's domain box.
    """
    arch = config.model.to_architecture(train.input_dim)
    theta0 = init_params(arch, seed)
    try:
        hovr = config.hovr.to_spec(hovr_domain or train.domain)
    except ValidationError as exc:
        raise InvalidConfigError(f"hovr: {exc.errors()[0]['msg']}", field="hovr.weights") from exc
    opt = config.optimizer
    kind = config.loss.kind
    logger.debug("Fitting %s (n=%d, |θ|=%d, seed=%d)", kind.value, train.n, len(theta0), seed)

    if kind.uses_trimming:
        trim = TrimSpec.from_fraction(config.loss.h_fraction, train.n)
        state0 = AugmentedState.initial(theta0, train.n)
        if opt.kind is OptimizerKind.SGSD:
            report = run_sgsd(
                state0, arch, train, trim, hovr, opt.schedule, opt.iterations, seed, diagnostics_settings(config)
            )
        else:
            report = run_adam_artl(
                state0,
                arch,
                train,
                trim,
                hovr,
                base_rate=opt.schedule.base_rate,
                step_decay=(opt.schedule.gamma, opt.schedule.period),
                iterations=opt.iterations,
                seed=seed,
                settings=diagnostics_settings(config),
                adam=adam_settings(config),
                schedule=opt.schedule,
            )
        return FitResult(theta=report.final_state.theta, arch=arch, hovr=hovr, trace=report.to_frame(), report=report)

    args = (theta0, arch, train, config.loss, opt.schedule, opt.iterations, adam_settings(config))
    if kind is LossKind.HUBER:
        fitted = nn_huber(*args) if arch.hidden_widths else linear_huber(*args)
    elif kind is LossKind.TUKEY:
        fitted = nn_tukey(*args)
    elif kind is LossKind.RANSAC:
        fitted = nn_ransac(*args)
    else:
        fitted = train_m_estimator(theta0, arch, train, robust_loss(config.loss), opt.schedule, opt.iterations, adam_settings(config))
    return FitResult(theta=fitted.theta, arch=arch, hovr=hovr, trace=fitted.trace)
