"""Noisy grids over [0, 2π]² of four reference surfaces, with injected outliers."""
from __future__ import annotations

import logging

import numpy as np

from artl.errors import InvalidConfigError
from artl.rounding import round_half_up
from data_models.architecture import DomainBox
from data_models.dataset import Dataset, SyntheticFunction, SyntheticSpec

logger = logging.getLogger(__name__)

TWO_PI = 2.0 * np.pi
SYNTHETIC_DOMAIN = DomainBox.square(0.0, TWO_PI, 2)

_STREAM_TEST = 10


def _coerce_name(name: str | SyntheticFunction) -> SyntheticFunction:
    try:
        return SyntheticFunction(name)
    except ValueError as exc:
        choices = ", ".join(f.value for f in SyntheticFunction)
        raise InvalidConfigError(f"Unknown synthetic function {name!r} (expected one of {choices})") from exc


def true_function(name: str | SyntheticFunction, x: np.ndarray) -> np.ndarray | float:
    """Evaluate the named surface at a point (shape (2,)) or at the rows of an (n, 2) array."""
    fn = _coerce_name(name)
    x = np.asarray(x, dtype=np.float64)
    x1, x2 = x[..., 0], x[..., 1]
    if fn is SyntheticFunction.CHECKERED:
        out = np.sin(2.0 * x1) * np.cos(2.0 * x2)
    elif fn is SyntheticFunction.VOLCANO:
        out = np.exp(-(((x1 - np.pi) ** 2 + (x2 - np.pi) ** 2 - 1.0) ** 2))
    elif fn is SyntheticFunction.STRIPE:
        out = np.sin(2.0 * (x1 + x2))
    else:
        out = x1 - x2
    return float(out) if np.ndim(out) == 0 else out


def grid_points(side: int) -> np.ndarray:
    """side × side grid with inclusive endpoints 0 and 2π on each axis."""
    axis = np.linspace(0.0, TWO_PI, side)
    g1, g2 = np.meshgrid(axis, axis, indexing="ij")
    return np.column_stack([g1.ravel(), g2.ravel()])


def make_synthetic(spec: SyntheticSpec) -> Dataset:
    rng = np.random.default_rng(spec.seed)
    X = grid_points(spec.side)
    y = np.asarray(true_function(spec.function, X), dtype=np.float64) + rng.normal(0.0, spec.noise_sd, size=spec.n)

    m = round_half_up(spec.outlier_fraction, spec.n)
    mask = np.zeros(spec.n, dtype=bool)
    if m:
        idx = rng.choice(spec.n, size=m, replace=False)
        y[idx] = spec.outlier_level + rng.uniform(-spec.outlier_jitter, spec.outlier_jitter, size=m)
        mask[idx] = True
    logger.debug("Synthetic %s: n=%d, %d outliers (seed %d)", spec.function.value, spec.n, m, spec.seed)
    return Dataset(
        X=X,
        y=y,
        outlier_mask=mask,
        domain=SYNTHETIC_DOMAIN,
        provenance=f"synthetic:{spec.function.value}:seed={spec.seed}",
    )


def make_test_set(name: str | SyntheticFunction, n_test: int, seed: int) -> Dataset:
    """Uniform points over [0, 2π]² with noiseless targets."""
    fn = _coerce_name(name)
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(_STREAM_TEST,)))
    X = SYNTHETIC_DOMAIN.sample(rng, n_test)
    return Dataset(
        X=X,
        y=np.asarray(true_function(fn, X), dtype=np.float64),
        outlier_mask=np.zeros(n_test, dtype=bool),
        domain=SYNTHETIC_DOMAIN,
        provenance=f"synthetic-test:{fn.value}:seed={seed}",
    )
