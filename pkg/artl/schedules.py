from __future__ import annotations

import numpy as np

from data_models.run_config import ScheduleKind, ScheduleSpec


def learning_rate(spec: ScheduleSpec, t: int) -> float:
    """ω_t for iteration t (0-based)."""
    if spec.kind is ScheduleKind.CONSTANT:
        return spec.base_rate
    if spec.kind is ScheduleKind.STEP_DECAY:
        return spec.base_rate * spec.gamma ** (t // spec.period)
    if spec.kind is ScheduleKind.INVERSE_SQRT:
        return spec.base_rate * (1.0 + t) ** -0.5
    return spec.base_rate / (1.0 + t)


def rates(spec: ScheduleSpec, iterations: int) -> np.ndarray:
    """ω_0 … ω_{iterations-1}."""
    return np.array([learning_rate(spec, t) for t in range(iterations)])
