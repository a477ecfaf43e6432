"""Single-layer LSTM reading one value per step, with a linear readout of the final hidden state.

Gates are stacked in the order input, forget, candidate, output:

    a_t = W [x_t; h_{t-1}] + b
    i, f, o = sigmoid(a_i), sigmoid(a_f), sigmoid(a_o);  g = tanh(a_g)
    c_t = f * c_{t-1} + i * g;  h_t = o * tanh(c_t)
    y = w_out . h_T + b_out

The readout predicts the next increment.
"""
import math
from dataclasses import dataclass
from typing import Tuple

import numpy as np
from scipy.special import expit

from src.config import (
    BYTES_PER_PARAM,
    DEFAULT_BATCH_SIZE,
    DEFAULT_EPOCHS,
    DEFAULT_LEARNING_RATE,
    DEFAULT_LSTM_HIDDEN,
    DEFAULT_LSTM_SEQUENCE,
    DEFAULT_SEED,
)
from src.core.errors import ConfigError
from src.core.rng import SplitMix64, derive_seed
from src.core.series import as_values
from .forecaster import Forecaster, supervised_windows
from .neural import ParamLayout, minibatch_descent, uniform_init


@dataclass(frozen=True)
class LstmConfig:
    hidden_size: int = DEFAULT_LSTM_HIDDEN
    sequence_len: int = DEFAULT_LSTM_SEQUENCE
    epochs: int = DEFAULT_EPOCHS
    learning_rate: float = DEFAULT_LEARNING_RATE
    batch_size: int = DEFAULT_BATCH_SIZE
    seed: int = DEFAULT_SEED

    def __post_init__(self):
        if self.hidden_size < 1 or self.sequence_len < 1:
            raise ConfigError(
                f"LSTM hidden_size and sequence_len must be >= 1, got {self.hidden_size}/{self.sequence_len}")
        if self.epochs < 1 or self.batch_size < 1 or not self.learning_rate > 0:
            raise ConfigError("LSTM epochs, batch_size and learning_rate must be positive")


def lstm_layout(hidden_size: int) -> ParamLayout:
    """``4H (1 + H) + 4H + H + 1`` parameters: gate weights, gate biases, readout."""
    return ParamLayout((
        ("W", (4 * hidden_size, 1 + hidden_size)),
        ("b", (4 * hidden_size,)),
        ("w_out", (hidden_size,)),
        ("b_out", (1,)),
    ))


def lstm_init(layout: ParamLayout, rng: SplitMix64) -> np.ndarray:
    bound = 1.0 / math.sqrt(layout.shape("w_out")[0])
    return uniform_init(layout, {"W": bound, "w_out": bound}, rng)


def lstm_forward(theta: np.ndarray, sequences: np.ndarray, layout: ParamLayout, keep_cache: bool = False):
    """Readout for each row of ``sequences`` (B, T); optionally the per-step cache for BPTT."""
    params = layout.unpack(theta)
    sequences = np.atleast_2d(np.asarray(sequences, dtype=np.float64))
    hidden = layout.shape("w_out")[0]
    weights = params["W"]
    w_input, w_recurrent = weights[:, 0], weights[:, 1:].T

    h = np.zeros((sequences.shape[0], hidden))
    c = np.zeros_like(h)
    cache = []
    for t in range(sequences.shape[1]):
        a = sequences[:, t, None] * w_input + h @ w_recurrent + params["b"]
        i = expit(a[:, :hidden])
        f = expit(a[:, hidden:2 * hidden])
        g = np.tanh(a[:, 2 * hidden:3 * hidden])
        o = expit(a[:, 3 * hidden:])
        c_prev, h_prev = c, h
        c = f * c_prev + i * g
        tanh_c = np.tanh(c)
        h = o * tanh_c
        if keep_cache:
            cache.append((h_prev, c_prev, i, f, g, o, tanh_c))
    outputs = h @ params["w_out"] + params["b_out"][0]
    return (outputs, h, cache) if keep_cache else outputs


def lstm_loss_and_gradient(theta: np.ndarray, sequences: np.ndarray, targets: np.ndarray,
                           layout: ParamLayout) -> Tuple[float, np.ndarray]:
    """Mean squared error of a batch and its gradient by backpropagation through time."""
    outputs, h_last, cache = lstm_forward(theta, sequences, layout, keep_cache=True)
    residual = outputs - targets
    loss = float(np.mean(residual ** 2))

    params = layout.unpack(theta)
    grad, grads = layout.zeros()
    d_out = (2.0 / residual.size) * residual
    grads["w_out"][...] = h_last.T @ d_out
    grads["b_out"][0] = d_out.sum()

    w_recurrent = params["W"][:, 1:]
    dh = d_out[:, None] * params["w_out"][None, :]
    dc = np.zeros_like(dh)
    for t in reversed(range(len(cache))):
        h_prev, c_prev, i, f, g, o, tanh_c = cache[t]
        do = dh * tanh_c
        dc = dc + dh * o * (1.0 - tanh_c ** 2)
        da = np.concatenate([
            dc * g * i * (1.0 - i),
            dc * c_prev * f * (1.0 - f),
            dc * i * (1.0 - g ** 2),
            do * o * (1.0 - o),
        ], axis=1)
        grads["W"][:, 0] += da.T @ sequences[:, t]
        grads["W"][:, 1:] += da.T @ h_prev
        grads["b"] += da.sum(axis=0)
        dh = da @ w_recurrent
        dc = dc * f
    return loss, grad


def lstm_train(train_values, config: LstmConfig, verbose: bool = True) -> np.ndarray:
    """Fit on one-step increments of sequences of ``sequence_len`` values."""
    layout = lstm_layout(config.hidden_size)
    sequences, targets = supervised_windows(train_values, config.sequence_len)
    theta = lstm_init(layout, SplitMix64(derive_seed(config.seed, "init/lstm")))
    theta, _ = minibatch_descent(
        lambda t, x, y: lstm_loss_and_gradient(t, x, y, layout), theta, sequences, targets,
        config.epochs, config.learning_rate, config.batch_size, name="lstm", verbose=verbose)
    return theta


class LstmForecaster(Forecaster):
    name = "lstm"

    def __init__(self, config: LstmConfig = None):
        self.config = config or LstmConfig()
        self.layout = lstm_layout(self.config.hidden_size)
        self.theta = None

    @property
    def min_history(self):
        return self.config.sequence_len

    @property
    def is_fitted(self):
        return self.theta is not None

    def fit(self, train, validation=None, verbose=True):
        if verbose:
            print(f"🔧 Training LSTM hidden={self.config.hidden_size} "
                  f"sequence={self.config.sequence_len} ({self.layout.size} parameters)")
        self.theta = lstm_train(train, self.config, verbose=verbose)
        return self

    def predict_next(self, history):
        values = as_values(history)
        return float(self.predict_batch(values[None, :])[0])

    def predict_batch(self, histories):
        self.check_history(histories.shape[1])
        sequences = histories[:, -self.config.sequence_len:]
        return histories[:, -1] + lstm_forward(self.theta, sequences, self.layout)

    def parameter_bytes(self):
        return self.layout.size * BYTES_PER_PARAM
