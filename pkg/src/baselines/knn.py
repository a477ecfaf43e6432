"""k-nearest-neighbour regression on raw windows.

Predicts the last value plus the mean next-step increment of the k
training windows closest in L1 distance to the trailing window.
"""
from dataclasses import dataclass

import numpy as np
from sklearn.metrics.pairwise import manhattan_distances

from src.config import BYTES_PER_PARAM, DEFAULT_KNN_K, DEFAULT_KNN_WINDOW
from src.core.errors import ConfigError, InsufficientHistoryError, MemoryTooSmallError
from src.core.series import as_values
from .forecaster import Forecaster, supervised_windows


@dataclass(frozen=True)
class KnnConfig:
    window_len: int = DEFAULT_KNN_WINDOW
    k: int = DEFAULT_KNN_K

    def __post_init__(self):
        if self.window_len < 1:
            raise ConfigError(f"kNN window_len must be >= 1, got {self.window_len}")
        if self.k < 1:
            raise ConfigError(f"kNN k must be >= 1, got {self.k}")


@dataclass(frozen=True)
class KnnStore:
    """Training windows (M x L) and the increment following each."""

    windows: np.ndarray
    increments: np.ndarray

    @property
    def count(self) -> int:
        return int(self.increments.size)


def fit_knn_store(train_values, config: KnnConfig) -> KnnStore:
    windows, increments = supervised_windows(train_values, config.window_len)
    return KnnStore(np.array(windows), np.array(increments))


def knn_neighbors(queries: np.ndarray, store: KnnStore, k: int) -> np.ndarray:
    """Indices of the k nearest stored windows for each query row (ties to the smaller index)."""
    if store.count < k:
        raise MemoryTooSmallError(f"kNN store holds {store.count} windows, k is {k}")
    distances = manhattan_distances(queries, store.windows)
    return np.argsort(distances, axis=1, kind="stable")[:, :k]


def knn_predict(history, store: KnnStore, config: KnnConfig) -> float:
    """Last value plus the mean increment of the k nearest training windows.

    Raises:
        InsufficientHistoryError: If history is shorter than ``window_len``
        MemoryTooSmallError: If the store has fewer than k windows
    """
    values = as_values(history)
    if values.size < config.window_len:
        raise InsufficientHistoryError(config.window_len, values.size)
    neighbors = knn_neighbors(values[None, -config.window_len:], store, config.k)[0]
    return float(values[-1] + np.mean(store.increments[neighbors]))


class KnnForecaster(Forecaster):
    name = "knn"

    def __init__(self, config: KnnConfig = None, store: KnnStore = None):
        self.config = config or KnnConfig()
        self.store = store

    @property
    def min_history(self):
        return self.config.window_len

    @property
    def is_fitted(self):
        return self.store is not None

    def fit(self, train, validation=None, verbose=True):
        self.store = fit_knn_store(train, self.config)
        if verbose:
            print(f"✓ kNN store: {self.store.count} windows of {self.config.window_len} values, k={self.config.k}")
        return self

    def predict_next(self, history):
        self.check_history(as_values(history).size)
        return knn_predict(history, self.store, self.config)

    def predict_batch(self, histories):
        self.check_history(histories.shape[1])
        neighbors = knn_neighbors(histories[:, -self.config.window_len:], self.store, self.config.k)
        return histories[:, -1] + np.mean(self.store.increments[neighbors], axis=1)

    def parameter_bytes(self):
        return 0

    def memory_bytes(self):
        self.check_history(self.min_history)
        return self.store.count * (self.config.window_len + 1) * BYTES_PER_PARAM

    def step_bound(self):
        self.check_history(self.min_history)
        return float(np.max(np.abs(self.store.increments)))
