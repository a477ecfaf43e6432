"""Time-series representation, trailing windows and chronological splits.

Positions follow Python slicing: ``end`` is the exclusive stop of a
history, so ``end`` also equals the number of values available. The
1-based ``x_1..x_t`` of the model description maps to ``values[0..t-1]``
and a window "ending at t" is ``window(series, end=t, length=L)``.
"""
import math
from dataclasses import dataclass, field
from typing import Tuple, Union

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from src.config import (
    DEFAULT_SHORT_LEN,
    DEFAULT_MEDIUM_LEN,
    DEFAULT_LONG_LEN,
    DEFAULT_TRAIN_FRACTION,
    DEFAULT_VALIDATION_FRACTION,
)
from .errors import ConfigError, InsufficientHistoryError, SeriesFormatError, SeriesTooShortError


def _frozen_array(values) -> np.ndarray:
    array = np.array(values, dtype=np.float64, copy=True).reshape(-1)
    array.setflags(write=False)
    return array


@dataclass(frozen=True)
class TimeSeries:
    """Univariate, uniformly sampled real-valued series.

    The values array is copied on construction and made read-only.
    ``allow_empty`` is only used for an empty validation split.
    """

    values: np.ndarray
    allow_empty: bool = field(default=False, repr=False, compare=False)

    def __post_init__(self):
        values = _frozen_array(self.values)
        if values.size == 0 and not self.allow_empty:
            raise SeriesTooShortError("a time series needs at least one value")
        if not np.all(np.isfinite(values)):
            bad = int(np.flatnonzero(~np.isfinite(values))[0])
            raise SeriesFormatError(f"non-finite value at position {bad}")
        object.__setattr__(self, "values", values)

    @property
    def length(self) -> int:
        return int(self.values.size)

    def __len__(self) -> int:
        return self.length

    def __eq__(self, other) -> bool:
        if not isinstance(other, TimeSeries):
            return NotImplemented
        return np.array_equal(self.values, other.values)

    def __hash__(self):
        return hash(self.values.tobytes())

    def __repr__(self) -> str:
        return f"TimeSeries(length={self.length})"


@dataclass(frozen=True)
class WindowSpec:
    """Short / medium / long window lengths for the multi-scale encoders."""

    short_len: int = DEFAULT_SHORT_LEN
    medium_len: int = DEFAULT_MEDIUM_LEN
    long_len: int = DEFAULT_LONG_LEN

    def __post_init__(self):
        if not 0 < self.short_len <= self.medium_len <= self.long_len:
            raise ConfigError(
                "window lengths must satisfy 0 < short <= medium <= long, got "
                f"{self.short_len}/{self.medium_len}/{self.long_len}")

    @property
    def lengths(self) -> Tuple[int, int, int]:
        return (self.short_len, self.medium_len, self.long_len)

    @property
    def total(self) -> int:
        return self.short_len + self.medium_len + self.long_len


@dataclass(frozen=True)
class SplitSpec:
    """Train / validation fractions; the remainder is the test segment."""

    train_fraction: float = DEFAULT_TRAIN_FRACTION
    validation_fraction: float = DEFAULT_VALIDATION_FRACTION

    def __post_init__(self):
        if not 0.0 < self.train_fraction < 1.0:
            raise ConfigError(f"train_fraction must be in (0, 1), got {self.train_fraction}")
        if not 0.0 <= self.validation_fraction < 1.0:
            raise ConfigError(f"validation_fraction must be in [0, 1), got {self.validation_fraction}")
        if self.train_fraction + self.validation_fraction > 1.0:
            raise ConfigError("train_fraction + validation_fraction must be <= 1")


def as_values(series: Union[TimeSeries, np.ndarray]) -> np.ndarray:
    """Return the underlying float array of a series or array-like."""
    if isinstance(series, TimeSeries):
        return series.values
    return np.asarray(series, dtype=np.float64)


def window(series: Union[TimeSeries, np.ndarray], end: int, length: int) -> np.ndarray:
    """Trailing window of ``length`` values ending just before position ``end``.

    Args:
        series: Series (or raw array) to read from
        end: Exclusive stop; the window is ``values[end - length:end]``
        length: Window length

    Returns:
        Array ``[x_{end-length+1}, ..., x_end]`` in 1-based terms

    Raises:
        InsufficientHistoryError: If ``end < length`` or ``end`` is past the series

    Example:
        >>> window(TimeSeries([1, 2, 3, 4, 5]), end=5, length=3)
        array([3., 4., 5.])
    """
    values = as_values(series)
    if length < 1:
        raise ConfigError(f"window length must be >= 1, got {length}")
    if end > values.size:
        raise InsufficientHistoryError(end, values.size, "series")
    if end < length:
        raise InsufficientHistoryError(length, max(end, 0))
    return values[end - length:end]


def sliding_windows(values: np.ndarray, length: int) -> np.ndarray:
    """All trailing windows of ``length`` values; row ``j`` ends at stop ``j + length``."""
    return sliding_window_view(np.asarray(values, dtype=np.float64), length)


def split(series: TimeSeries, spec: SplitSpec = None,
          window_spec: WindowSpec = None) -> Tuple[TimeSeries, TimeSeries, TimeSeries]:
    """Split a series into contiguous chronological train/validation/test segments.

    Every non-empty segment must hold at least ``long_len + 2`` values so
    that windows and increments exist. Only the validation segment may be
    empty (when its fraction is 0).

    Args:
        series: Series to split
        spec: Split fractions (default 0.7 / 0.1 / remainder)
        window_spec: Window lengths that set the minimum segment length

    Returns:
        Tuple (train, validation, test)

    Raises:
        SeriesTooShortError: If any required segment is too short

    Example:
        >>> train, val, test = split(TimeSeries(np.arange(1000.0)))
        >>> len(train), len(val), len(test)
        (700, 100, 200)
    """
    spec = spec or SplitSpec()
    window_spec = window_spec or WindowSpec()
    n = series.length
    minimum = window_spec.long_len + 2

    n_train = int(math.floor(n * spec.train_fraction + 1e-9))
    n_val = int(math.floor(n * spec.validation_fraction + 1e-9))
    n_test = n - n_train - n_val

    for name, size, required in (("train", n_train, True),
                                 ("validation", n_val, spec.validation_fraction > 0),
                                 ("test", n_test, True)):
        if required and size < minimum:
            raise SeriesTooShortError(
                f"{name} segment has {size} values, needs at least {minimum} "
                f"(series length {n})")

    values = series.values
    train = TimeSeries(values[:n_train])
    validation = TimeSeries(values[n_train:n_train + n_val], allow_empty=True)
    test = TimeSeries(values[n_train + n_val:])
    return train, validation, test
