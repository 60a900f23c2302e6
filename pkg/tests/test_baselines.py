import numpy as np
import pytest

from artl.baselines import linear_huber, nn_huber, nn_ransac, nn_tukey, robust_loss, train_m_estimator
from artl.errors import DivergedError, InvalidConfigError
from artl.evaluation.metrics import pmse
from artl.mlp import init_params
from data_models.architecture import DomainBox, MlpArchitecture
from data_models.run_config import LossKind, LossSection, ScheduleKind, ScheduleSpec
from support import make_dataset

SCHEDULE = ScheduleSpec(kind=ScheduleKind.STEP_DECAY, base_rate=0.05, gamma=0.5, period=100)


@pytest.fixture
def plane(rng):
    X = rng.uniform(0, 1, size=(30, 2))
    return make_dataset(X, X[:, 0] - X[:, 1], DomainBox.square(0.0, 1.0, 2))


@pytest.mark.parametrize("trainer", [nn_huber, nn_tukey, nn_ransac])
def test_training_reduces_the_loss(sigmoid_arch, plane, trainer):
    theta0 = init_params(sigmoid_arch, 0)
    fitted = trainer(theta0, sigmoid_arch, plane, LossSection(ransac_phase=50), SCHEDULE, 200)
    assert list(fitted.trace.columns) == ["iteration", "loss", "rate", "n_active"]
    assert len(fitted.trace) == 200
    assert fitted.trace["loss"].iloc[-1] < fitted.trace["loss"].iloc[0]
    assert pmse(fitted.theta, sigmoid_arch, plane) < pmse(theta0, sigmoid_arch, plane)


def test_ransac_phases_drop_the_worst_samples(sigmoid_arch, plane):
    section = LossSection(ransac_phase=3, ransac_drop=0.1)
    fitted = nn_ransac(init_params(sigmoid_arch, 1), sigmoid_arch, plane, section, SCHEDULE, 7)
    # first phase keeps everything; later phases drop round(0.1 * 30) = 3
    assert fitted.trace["n_active"].tolist() == [30, 30, 30, 27, 27, 27, 27]


def test_ransac_keeps_one_sample_when_the_drop_covers_everything(sigmoid_arch, caplog):
    X = np.array([[0.2, 0.4], [0.6, 0.8]])
    data = make_dataset(X, np.array([0.0, 5.0]), DomainBox.square(0.0, 1.0, 2))
    section = LossSection(ransac_phase=2, ransac_drop=0.9)
    fitted = nn_ransac(init_params(sigmoid_arch, 0), sigmoid_arch, data, section, SCHEDULE, 4)
    assert fitted.trace["n_active"].tolist() == [2, 2, 1, 1]
    assert np.all(np.isfinite(fitted.trace["loss"]))
    assert np.all(np.isfinite(fitted.theta.values))
    assert "empty the active set" in caplog.text


def test_huber_and_tukey_losses_are_selected():
    r = np.array([0.5, 3.0, 50.0])
    huber = robust_loss(LossSection(kind=LossKind.HUBER, huber_delta=1.0))
    tukey = robust_loss(LossSection(kind=LossKind.TUKEY))
    squared = robust_loss(LossSection(kind=LossKind.MSE))
    np.testing.assert_allclose(huber.rho(r), [0.125, 2.5, 49.5])
    assert tukey.psi(r)[2] == 0.0
    np.testing.assert_allclose(squared.rho(r), 0.5 * r**2)


def test_linear_huber_needs_a_linear_architecture(sigmoid_arch, plane):
    with pytest.raises(InvalidConfigError):
        linear_huber(init_params(sigmoid_arch, 0), sigmoid_arch, plane, LossSection(), SCHEDULE, 1)


def test_linear_huber_fits_a_plane(plane):
    arch = MlpArchitecture(input_dim=2, hidden_widths=[])
    fitted = linear_huber(init_params(arch, 0), arch, plane, LossSection(), SCHEDULE, 400)
    assert pmse(fitted.theta, arch, plane) < 5e-3


def test_non_finite_targets_diverge(sigmoid_arch, plane):
    y = plane.y.copy()
    y[0] = np.inf
    bad = plane.with_targets(y, plane.outlier_mask)
    with pytest.raises(DivergedError) as err:
        train_m_estimator(
            init_params(sigmoid_arch, 0), sigmoid_arch, bad, robust_loss(LossSection(kind=LossKind.MSE)), SCHEDULE, 5
        )
    assert err.value.iteration == 0
