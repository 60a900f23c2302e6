import numpy as np
import pytest
from pydantic import ValidationError

from artl.schedules import learning_rate, rates
from data_models.run_config import ScheduleKind, ScheduleSpec


def test_inverse_sqrt_is_exact():
    spec = ScheduleSpec(kind=ScheduleKind.INVERSE_SQRT, base_rate=0.3)
    for t in (0, 1, 3, 99):
        assert learning_rate(spec, t) == 0.3 * (1.0 + t) ** -0.5


def test_step_decay_halves_each_period():
    spec = ScheduleSpec(kind=ScheduleKind.STEP_DECAY, base_rate=0.01, gamma=0.5, period=1000)
    assert learning_rate(spec, 0) == 0.01
    assert learning_rate(spec, 999) == 0.01
    assert learning_rate(spec, 1000) == pytest.approx(0.005)
    assert learning_rate(spec, 4999) == pytest.approx(0.01 / 16)


def test_constant_and_inverse():
    assert rates(ScheduleSpec(kind=ScheduleKind.CONSTANT, base_rate=0.2), 3).tolist() == [0.2, 0.2, 0.2]
    np.testing.assert_allclose(rates(ScheduleSpec(kind=ScheduleKind.INVERSE, base_rate=1.0), 3), [1, 0.5, 1 / 3])


def test_rates_are_positive():
    spec = ScheduleSpec(kind=ScheduleKind.STEP_DECAY, base_rate=0.01, gamma=0.5, period=1)
    assert np.all(rates(spec, 50) > 0)


@pytest.mark.parametrize("gamma", [0.0, 1.0, 1.5])
def test_step_decay_gamma_range(gamma):
    with pytest.raises(ValidationError):
        ScheduleSpec(kind=ScheduleKind.STEP_DECAY, gamma=gamma)


def test_base_rate_must_be_positive():
    with pytest.raises(ValidationError):
        ScheduleSpec(base_rate=0.0)
