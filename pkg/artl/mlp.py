"""Multilayer perceptron f_θ: Ω → R.

The same ``propagate`` walks plain arrays, tape Nodes and jets, so predictions,
θ-gradients and input derivatives all share one definition of the network.
"""
from __future__ import annotations

import logging
from typing import Any

import numpy as np

from artl.autodiff.jets import CrossJet, Jet2, activate
from artl.autodiff.params import ParamVector
from artl.errors import InputShapeError
from data_models.architecture import Activation, MlpArchitecture

logger = logging.getLogger(__name__)


def init_params(arch: MlpArchitecture, seed: int) -> ParamVector:
    """Glorot-uniform weights, zero biases; deterministic given ``seed``."""
    rng = np.random.default_rng(seed)
    layers = []
    for rows, cols in arch.layer_shapes:
        bound = np.sqrt(6.0 / (rows + cols))
        layers.append((rng.uniform(-bound, bound, size=(rows, cols)), np.zeros(rows)))
    theta = ParamVector.from_layers(layers)
    logger.debug("Initialised %d parameters (layout %s, seed %d)", len(theta), theta.layout_string, seed)
    return theta


def check_layout(theta: ParamVector, arch: MlpArchitecture) -> None:
    if list(theta.layout) != arch.layer_shapes:
        raise InputShapeError(
            f"Parameter layout {theta.layout_string} does not match architecture {arch.layer_shapes}"
        )


def propagate(layers: list[tuple[Any, Any]], activation: Activation, h: Any) -> Any:
    """Push a column batch ``h`` (shape (J, B), or a jet of such) through the layers."""
    last = len(layers) - 1
    for q, (W, b) in enumerate(layers):
        h = h.affine(W, b) if isinstance(h, (Jet2, CrossJet)) else W @ h + b
        if q < last:
            h = activate(h, activation)
    return h


def check_inputs(X: np.ndarray, arch: MlpArchitecture) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != arch.input_dim:
        raise InputShapeError(f"Expected inputs with {arch.input_dim} columns, got shape {X.shape}")
    return X


def predict_layers(layers: list[tuple[Any, Any]], arch: MlpArchitecture, X: np.ndarray) -> Any:
    """Predictions for the rows of X; a Node of shape (n,) when ``layers`` live on a tape."""
    X = check_inputs(X, arch)
    return propagate(layers, arch.activation, X.T)[0]


def predict(theta: ParamVector, arch: MlpArchitecture, X: np.ndarray) -> np.ndarray:
    check_layout(theta, arch)
    return np.asarray(predict_layers(theta.unflatten(), arch, X), dtype=np.float64)


def forward(theta: ParamVector, arch: MlpArchitecture, x: np.ndarray) -> float:
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (arch.input_dim,):
        raise InputShapeError(f"Expected a point of dimension {arch.input_dim}, got shape {x.shape}")
    return float(predict(theta, arch, x[None, :])[0])
