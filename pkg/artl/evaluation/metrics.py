from __future__ import annotations

from typing import NamedTuple

import numpy as np
from scipy import stats

from artl.autodiff.params import ParamVector
from artl.errors import EmptyDataError, InvalidInputError, UndefinedCorrelationError
from artl.losses import TrimSpec, trimmed_loss
from artl.mlp import predict
from data_models.architecture import MlpArchitecture
from data_models.dataset import Dataset


class Correlation(NamedTuple):
    pearson: float
    spearman: float


def pmse(theta: ParamVector, arch: MlpArchitecture, test: Dataset) -> float:
    """Predictive mean squared error (1/n_test)·Σ(f_θ(x) − y)²."""
    if test.n == 0:
        raise EmptyDataError("Test set is empty")
    err = predict(theta, arch, test.X) - test.y
    return float(np.mean(err * err))


def robust_validation_score(theta: ParamVector, arch: MlpArchitecture, val: Dataset, h_fraction: float) -> float:
    """Trimmed loss of the validation residuals with h = round(h_fraction·n_val)."""
    if not 0.0 < h_fraction <= 1.0:
        raise InvalidInputError(f"h_fraction must lie in (0, 1], got {h_fraction}")
    r = val.y - predict(theta, arch, val.X)
    return trimmed_loss(r, TrimSpec.from_fraction(h_fraction, val.n).h)


def correlations(a: np.ndarray, b: np.ndarray) -> Correlation:
    """Pearson and Spearman (average ranks for ties)."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1 or a.shape[0] < 3:
        raise InvalidInputError(f"Need two equal-length vectors of at least 3 values, got {a.shape} and {b.shape}")
    if np.ptp(a) == 0.0 or np.ptp(b) == 0.0:
        raise UndefinedCorrelationError("Correlation is undefined for a constant vector")
    pearson = float(np.clip(stats.pearsonr(a, b)[0], -1.0, 1.0))
    spearman = float(np.clip(stats.spearmanr(a, b)[0], -1.0, 1.0))
    return Correlation(pearson=pearson, spearman=spearman)
