from __future__ import annotations

import logging
import math
from decimal import Decimal

import numpy as np
from sklearn.model_selection import train_test_split

from artl.errors import InvalidInputError
from artl.rounding import round_half_up
from data_models.dataset import Dataset

logger = logging.getLogger(__name__)

_STREAM_CONTAMINATION = 20


def split_sizes(n: int, train_fraction: float) -> tuple[int, int]:
    """(n_train, n_test) with n_test = ⌊(1 − train_fraction)·n⌋."""
    if not 0.0 < train_fraction < 1.0:
        raise InvalidInputError(f"train_fraction must lie in (0, 1), got {train_fraction}")
    n_train = math.ceil(Decimal(repr(float(train_fraction))) * n)
    n_test = n - n_train
    if n_train < 1 or n_test < 1:
        raise InvalidInputError(f"Cannot split {n} rows with train_fraction={train_fraction}")
    return n_train, n_test


def _split(data: Dataset, train_fraction: float, seed: int) -> tuple[Dataset, Dataset]:
    _, n_test = split_sizes(data.n, train_fraction)
    train_idx, test_idx = train_test_split(np.arange(data.n), test_size=n_test, random_state=seed, shuffle=True)
    return data.subset(np.sort(train_idx)), data.subset(np.sort(test_idx))


def split_and_contaminate(
    data: Dataset,
    train_fraction: float,
    outlier_fraction: float,
    shift_multiplier: float,
    seed: int,
) -> tuple[Dataset, Dataset]:
    """Random train/test split; round(outlier_fraction·n_train) training targets get +shift·sd(y_train)."""
    train, test = _split(data, train_fraction, seed)
    m = round_half_up(outlier_fraction, train.n)
    if m == 0:
        return train, test
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(_STREAM_CONTAMINATION,)))
    idx = rng.choice(train.n, size=m, replace=False)
    y = train.y.copy()
    y[idx] += shift_multiplier * float(np.std(train.y))
    mask = train.outlier_mask.copy()
    mask[idx] = True
    logger.debug("Contaminated %d of %d training targets (seed %d)", m, train.n, seed)
    return train.with_targets(y, mask, provenance=f"{data.provenance}:contaminated"), test


def train_validation_split(data: Dataset, validation_fraction: float, seed: int) -> tuple[Dataset, Dataset]:
    """Hold out ⌊validation_fraction·n⌋ rows (contamination stays where it is)."""
    return _split(data, 1.0 - validation_fraction, seed)
