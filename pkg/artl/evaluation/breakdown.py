"""Breakdown stress test: HOV of fits trained with and without gross target contamination."""
from __future__ import annotations

import logging
from typing import NamedTuple

import numpy as np

from artl.errors import InvalidInputError
from artl.hovr import quad_hovr
from artl.training import fit
from data_models.dataset import Dataset
from data_models.run_config import RunConfig

logger = logging.getLogger(__name__)

_STREAM_BREAKDOWN = 30


class BreakdownResult(NamedTuple):
    hov_contaminated: float
    hov_clean: float

    @property
    def ratio(self) -> float:
        return self.hov_contaminated / self.hov_clean if self.hov_clean > 0 else float("inf")


def contaminate_targets(clean: Dataset, m: int, magnitude: float, seed: int) -> Dataset:
    """Replace m randomly chosen targets by ``magnitude``."""
    if not 0 <= m <= clean.n:
        raise InvalidInputError(f"m must satisfy 0 <= m <= n, got m={m}, n={clean.n}")
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(_STREAM_BREAKDOWN,)))
    idx = rng.choice(clean.n, size=m, replace=False)
    y = clean.y.copy()
    y[idx] = magnitude
    mask = np.zeros(clean.n, dtype=bool)
    mask[idx] = True
    return clean.with_targets(y, mask, provenance=f"{clean.provenance}:breakdown(m={m})")


def breakdown_stress(
    config: RunConfig,
    clean: Dataset,
    m: int,
    magnitude: float,
    seed: int = 0,
    quad_grid: int = 100,
) -> BreakdownResult:
    """Train on clean and on m-contaminated targets with the same seed; compare grid HOV."""
    contaminated = contaminate_targets(clean, m, magnitude, seed)
    fit_clean = fit(config, clean, seed)
    fit_bad = fit(config, contaminated, seed)
    hov_clean = quad_hovr(fit_clean.theta, fit_clean.arch, fit_clean.hovr, quad_grid)
    hov_bad = quad_hovr(fit_bad.theta, fit_bad.arch, fit_bad.hovr, quad_grid)
    logger.info("Breakdown m=%d magnitude=%g: HOV clean=%.6g contaminated=%.6g", m, magnitude, hov_clean, hov_bad)
    return BreakdownResult(hov_contaminated=hov_bad, hov_clean=hov_clean)
