"""Builders shared by the test modules."""
import numpy as np

from artl.autodiff.params import ParamVector
from data_models.architecture import DomainBox, MlpArchitecture
from data_models.dataset import Dataset


def random_theta(arch: MlpArchitecture, seed: int, scale: float = 0.8) -> ParamVector:
    rng = np.random.default_rng(seed)
    return ParamVector.for_architecture(arch, rng.normal(0.0, scale, size=arch.n_params))


def linear_theta(weights, bias: float = 0.0) -> ParamVector:
    w = np.asarray(weights, dtype=np.float64).reshape(1, -1)
    return ParamVector.from_layers([(w, np.array([bias]))])


def make_dataset(X, y, domain: DomainBox | None = None, outlier_mask=None) -> Dataset:
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    mask = np.zeros(X.shape[0], dtype=bool) if outlier_mask is None else np.asarray(outlier_mask, dtype=bool)
    return Dataset(X=X, y=y, outlier_mask=mask, domain=domain or DomainBox.bounding(X))


def central_difference(f, x: np.ndarray, step: float = 1e-6) -> np.ndarray:
    """Central finite-difference gradient of a scalar function of a flat vector."""
    x = np.asarray(x, dtype=np.float64)
    grad = np.zeros_like(x)
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = step
        grad[i] = (f(x + e) - f(x - e)) / (2.0 * step)
    return grad
