import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from data_models.architecture import Activation, DomainBox, MlpArchitecture
from data_models.run_config import RunConfig

settings.register_profile(
    "fast",
    max_examples=40,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.function_scoped_fixture],
)
settings.register_profile("thorough", max_examples=200, deadline=None)
settings.load_profile("fast")


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


@pytest.fixture
def tanh_arch():
    return MlpArchitecture(input_dim=2, hidden_widths=[5, 4], activation=Activation.TANH)


@pytest.fixture
def sigmoid_arch():
    return MlpArchitecture(input_dim=2, hidden_widths=[6], activation=Activation.SIGMOID)


@pytest.fixture
def linear_arch():
    return MlpArchitecture(input_dim=2, hidden_widths=[])


@pytest.fixture
def unit_square():
    return DomainBox.square(0.0, 1.0, 2)


@pytest.fixture
def tiny_config(tmp_path):
    """A run small enough to train in well under a second."""
    return RunConfig.model_validate(
        {
            "name": "tiny",
            "seeds": [0, 1],
            "data": {"function": "checkered", "n": 16, "outlier_fraction": 0.125, "n_test": 50},
            "model": {"hidden_widths": [3]},
            "hovr": {"k": 1, "lambda": 1e-3, "mc_samples": 4},
            "optimizer": {
                "iterations": 6,
                "criticality_every": 3,
                "criticality_samples": 16,
                "schedule": {"kind": "step_decay", "base_rate": 0.01, "gamma": 0.5, "period": 3},
            },
            "output": {"dir": str(tmp_path / "out"), "grid_resolution": 3},
        }
    )
