"""The Forecaster interface shared by COMET and every baseline.

All forecasters predict the next value from a history of ground-truth or
rolled-out values and read only a trailing window of it, so the
evaluation harness drives every model through :func:`rollout_forecaster`
and never needs a model-specific path.
"""
from abc import ABC, abstractmethod
from typing import Optional, Tuple, Union

import numpy as np

from src.core.errors import ConfigError, InsufficientHistoryError
from src.core.series import TimeSeries, as_values, sliding_windows


class Forecaster(ABC):
    """One-step regressor usable for autoregressive rollout."""

    name = "forecaster"

    @property
    @abstractmethod
    def min_history(self) -> int:
        """Fewest history values :meth:`predict_next` accepts."""

    @property
    def is_fitted(self) -> bool:
        return True

    @abstractmethod
    def fit(self, train: TimeSeries, validation: Optional[TimeSeries] = None,
            verbose: bool = True) -> "Forecaster":
        """Fit on a ground-truth training series; returns self."""

    @abstractmethod
    def predict_next(self, history: Union[TimeSeries, np.ndarray]) -> float:
        """Predict the value following ``history``."""

    def predict_batch(self, histories: np.ndarray) -> np.ndarray:
        """Predict the next value for every row of ``histories`` (equal-length histories)."""
        return np.array([self.predict_next(row) for row in histories])

    @abstractmethod
    def parameter_bytes(self) -> int:
        """Trainable scalars times 4."""

    def memory_bytes(self) -> int:
        """Bytes of stored data needed at inference (0 for purely parametric models)."""
        return 0

    def step_bound(self) -> Optional[float]:
        """Largest possible single-step move, for models that guarantee one."""
        return None

    def check_history(self, available: int):
        if not self.is_fitted:
            raise ValueError(f"{self.name} is not fitted. Call fit() first.")
        if available < self.min_history:
            raise InsufficientHistoryError(self.min_history, available)


def supervised_windows(values: np.ndarray, length: int) -> Tuple[np.ndarray, np.ndarray]:
    """Windows of ``length`` values with the increment that follows each.

    Row j holds ``values[j:j + length]`` and its target is
    ``values[j + length] - values[j + length - 1]``.
    """
    values = as_values(values)
    if values.size <= length:
        raise InsufficientHistoryError(length + 1, values.size, "training series")
    stops = np.arange(length, values.size)
    return sliding_windows(values, length)[stops - length], values[stops] - values[stops - 1]


def rollout_forecaster(model: Forecaster, seed_histories: np.ndarray, horizon: int) -> np.ndarray:
    """Roll any forecaster forward autoregressively.

    Args:
        model: Fitted forecaster
        seed_histories: One history (1-D) or a batch of equal-length histories (2-D)
        horizon: Steps to predict

    Returns:
        Predictions of shape (horizon,) or (batch, horizon)
    """
    if horizon < 1:
        raise ConfigError(f"horizon must be >= 1, got {horizon}")
    seeds = np.asarray(seed_histories, dtype=np.float64)
    single = seeds.ndim == 1
    seeds = np.atleast_2d(seeds)
    model.check_history(seeds.shape[1])

    start = seeds.shape[1]
    buffer = np.empty((seeds.shape[0], start + horizon))
    buffer[:, :start] = seeds
    for step in range(horizon):
        end = start + step
        buffer[:, end] = model.predict_batch(buffer[:, :end])
    predictions = buffer[:, start:]
    return predictions[0] if single else predictions


class PersistenceForecaster(Forecaster):
    """Predicts the last observed value; used to calibrate the evaluation harness."""

    name = "persistence"

    @property
    def min_history(self) -> int:
        return 1

    def fit(self, train, validation=None, verbose=True):
        return self

    def predict_next(self, history):
        values = as_values(history)
        self.check_history(values.size)
        return float(values[-1])

    def predict_batch(self, histories):
        return np.array(histories[:, -1], dtype=np.float64)

    def parameter_bytes(self):
        return 0
