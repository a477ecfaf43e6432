"""Feedforward rectifier network predicting the next increment from a raw window."""
import math
from dataclasses import dataclass
from typing import List, Tuple

import numpy as np

from src.config import (
    BYTES_PER_PARAM,
    DEFAULT_BATCH_SIZE,
    DEFAULT_EPOCHS,
    DEFAULT_LEARNING_RATE,
    DEFAULT_MLP_HIDDEN,
    DEFAULT_MLP_INPUT,
    DEFAULT_SEED,
)
from src.core.errors import ConfigError, DimensionMismatchError
from src.core.rng import SplitMix64, derive_seed
from src.core.series import as_values
from .forecaster import Forecaster, supervised_windows
from .neural import ParamLayout, minibatch_descent, uniform_init


@dataclass(frozen=True)
class MlpConfig:
    input_len: int = DEFAULT_MLP_INPUT
    hidden: Tuple[int, ...] = DEFAULT_MLP_HIDDEN
    epochs: int = DEFAULT_EPOCHS
    learning_rate: float = DEFAULT_LEARNING_RATE
    batch_size: int = DEFAULT_BATCH_SIZE
    seed: int = DEFAULT_SEED

    def __post_init__(self):
        object.__setattr__(self, "hidden", tuple(int(h) for h in self.hidden))
        if self.input_len < 1 or any(h < 1 for h in self.hidden):
            raise ConfigError(f"MLP sizes must be positive, got {self.input_len} -> {self.hidden}")
        if self.epochs < 1 or self.batch_size < 1 or not self.learning_rate > 0:
            raise ConfigError("MLP epochs, batch_size and learning_rate must be positive")


def mlp_layout(input_len: int, hidden: Tuple[int, ...]) -> ParamLayout:
    """Weights ``W{i}`` (fan_out x fan_in) and biases ``b{i}`` per layer; the last layer has one output."""
    sizes = [input_len, *hidden, 1]
    entries = []
    for i, (fan_in, fan_out) in enumerate(zip(sizes[:-1], sizes[1:])):
        entries += [(f"W{i}", (fan_out, fan_in)), (f"b{i}", (fan_out,))]
    return ParamLayout(tuple(entries))


def _layer_count(layout: ParamLayout) -> int:
    return len(layout.entries) // 2


def mlp_init(layout: ParamLayout, rng: SplitMix64) -> np.ndarray:
    """He-uniform hidden layers, Glorot-uniform output layer, zero biases."""
    layers = _layer_count(layout)
    bounds = {}
    for i in range(layers):
        fan_out, fan_in = layout.shape(f"W{i}")
        if i < layers - 1:
            bounds[f"W{i}"] = math.sqrt(6.0 / fan_in)
        else:
            bounds[f"W{i}"] = math.sqrt(6.0 / (fan_in + fan_out))
    return uniform_init(layout, bounds, rng)


def mlp_forward(theta: np.ndarray, inputs: np.ndarray, layout: ParamLayout,
                keep_activations: bool = False):
    """Outputs (B,) for inputs (B, input_len); optionally the per-layer activations too."""
    params = layout.unpack(theta)
    inputs = np.atleast_2d(np.asarray(inputs, dtype=np.float64))
    if inputs.shape[1] != layout.shape("W0")[1]:
        raise DimensionMismatchError(
            f"MLP expects {layout.shape('W0')[1]} inputs, got {inputs.shape[1]}")
    activations: List[np.ndarray] = [inputs]
    layers = _layer_count(layout)
    for i in range(layers):
        pre = activations[-1] @ params[f"W{i}"].T + params[f"b{i}"]
        activations.append(np.maximum(pre, 0.0) if i < layers - 1 else pre)
    outputs = activations[-1][:, 0]
    return (outputs, activations) if keep_activations else outputs


def mlp_loss_and_gradient(theta: np.ndarray, inputs: np.ndarray, targets: np.ndarray,
                          layout: ParamLayout) -> Tuple[float, np.ndarray]:
    """Mean squared error of a batch and its gradient by backpropagation."""
    outputs, activations = mlp_forward(theta, inputs, layout, keep_activations=True)
    residual = outputs - targets
    loss = float(np.mean(residual ** 2))

    params = layout.unpack(theta)
    grad, grads = layout.zeros()
    delta = (2.0 / residual.size) * residual[:, None]
    for i in reversed(range(_layer_count(layout))):
        grads[f"W{i}"][...] = delta.T @ activations[i]
        grads[f"b{i}"][...] = delta.sum(axis=0)
        if i:
            delta = (delta @ params[f"W{i}"]) * (activations[i] > 0.0)
    return loss, grad


def mlp_train(train_values, config: MlpConfig, verbose: bool = True) -> np.ndarray:
    """Fit the network on one-step increments with mini-batch gradient descent."""
    layout = mlp_layout(config.input_len, config.hidden)
    inputs, targets = supervised_windows(train_values, config.input_len)
    theta = mlp_init(layout, SplitMix64(derive_seed(config.seed, "init/mlp")))
    theta, _ = minibatch_descent(
        lambda t, x, y: mlp_loss_and_gradient(t, x, y, layout), theta, inputs, targets,
        config.epochs, config.learning_rate, config.batch_size, name="mlp", verbose=verbose)
    return theta


class MlpForecaster(Forecaster):
    name = "mlp"

    def __init__(self, config: MlpConfig = None):
        self.config = config or MlpConfig()
        self.layout = mlp_layout(self.config.input_len, self.config.hidden)
        self.theta = None

    @property
    def min_history(self):
        return self.config.input_len

    @property
    def is_fitted(self):
        return self.theta is not None

    def fit(self, train, validation=None, verbose=True):
        if verbose:
            sizes = " -> ".join(str(s) for s in (self.config.input_len, *self.config.hidden, 1))
            print(f"🔧 Training MLP {sizes} ({self.layout.size} parameters)")
        self.theta = mlp_train(train, self.config, verbose=verbose)
        return self

    def predict_next(self, history):
        values = as_values(history)
        return float(self.predict_batch(values[None, :])[0])

    def predict_batch(self, histories):
        self.check_history(histories.shape[1])
        windows = histories[:, -self.config.input_len:]
        return histories[:, -1] + mlp_forward(self.theta, windows, self.layout)

    def parameter_bytes(self):
        return self.layout.size * BYTES_PER_PARAM
