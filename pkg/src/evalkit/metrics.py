"""Horizon errors, drift curves and rollout traces.

An anchor is a history stop ``s`` in the test series: the model sees the
ground truth ``values[:s]`` and rolls forward autoregressively; the error
at horizon h is ``|prediction_h - values[s + h - 1]|``. Anchors start at
``warmup`` and step by ``stride`` while ``s + horizon_limit`` stays inside
the series. h=1 is therefore the teacher-forced one-step error.

Drift at horizon h is the mean absolute error at exactly step h, not an
average over steps 1..h.
"""
from typing import Iterable, List, Optional, Tuple, Union

import numpy as np
import pandas as pd
from sklearn.metrics import mean_absolute_error

from src.config import DEFAULT_ANCHOR_STRIDE, DEFAULT_LONG_LEN
from src.baselines.forecaster import Forecaster, rollout_forecaster
from src.core.errors import ConfigError, HorizonTooLongError, InsufficientHistoryError
from src.core.series import TimeSeries, as_values


def default_warmup(model: Forecaster) -> int:
    return max(DEFAULT_LONG_LEN, model.min_history)


def anchor_stops(length: int, warmup: int, horizon_limit: int, stride: int = DEFAULT_ANCHOR_STRIDE) -> np.ndarray:
    """History stops ``warmup, warmup + stride, ...`` with ``stop + horizon_limit <= length``.

    Raises:
        HorizonTooLongError: If not a single anchor fits
    """
    if horizon_limit < 1 or stride < 1 or warmup < 1:
        raise ConfigError(
            f"horizon, stride and warmup must be >= 1, got {horizon_limit}/{stride}/{warmup}")
    stops = np.arange(warmup, length - horizon_limit + 1, stride, dtype=np.int64)
    if stops.size == 0:
        raise HorizonTooLongError(
            f"horizon {horizon_limit} after a warmup of {warmup} needs at least "
            f"{warmup + horizon_limit} values, series has {length}")
    return stops


def anchored_rollouts(model: Forecaster, test: Union[TimeSeries, np.ndarray], horizon: int,
                      stride: int = DEFAULT_ANCHOR_STRIDE, warmup: Optional[int] = None,
                      horizon_limit: Optional[int] = None) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """One rollout of ``horizon`` steps per anchor, all anchors batched together.

    Each rollout is seeded with the trailing ``warmup`` ground-truth values
    before its anchor; every model reads only trailing windows no longer
    than that.

    Returns:
        Tuple (anchor stops, predictions (A, horizon), actual values (A, horizon))
    """
    values = as_values(test)
    warmup = default_warmup(model) if warmup is None else warmup
    if warmup < model.min_history:
        raise InsufficientHistoryError(model.min_history, warmup, "warmup")
    limit = horizon if horizon_limit is None else max(horizon_limit, horizon)
    stops = anchor_stops(values.size, warmup, limit, stride)

    offsets = np.arange(horizon)
    seeds = values[stops[:, None] - warmup + np.arange(warmup)]
    predictions = rollout_forecaster(model, seeds, horizon)
    actual = values[stops[:, None] + offsets]
    return stops, predictions, actual


def mae_at_horizon(model: Forecaster, test: Union[TimeSeries, np.ndarray], h: int,
                   stride: int = DEFAULT_ANCHOR_STRIDE, warmup: Optional[int] = None,
                   horizon_limit: Optional[int] = None) -> float:
    """Mean absolute error at exactly step ``h`` of autoregressive rollouts.

    Args:
        model: Fitted forecaster
        test: Ground-truth series
        h: Horizon (>= 1)
        stride: Steps between anchors
        warmup: First anchor stop (default: max(long window, model minimum))
        horizon_limit: Anchor-set horizon; pass the drift curve's largest
            horizon to evaluate on the same anchors (default ``h``)

    Raises:
        HorizonTooLongError: If no anchor fits in the series

    Example:
        Persistence on a ramp of slope 1 gives exactly ``h``.
    """
    _, predictions, actual = anchored_rollouts(model, test, h, stride, warmup, horizon_limit)
    return float(mean_absolute_error(actual[:, h - 1], predictions[:, h - 1]))


def drift_curve(model: Forecaster, test: Union[TimeSeries, np.ndarray], horizons: Iterable[int],
                stride: int = DEFAULT_ANCHOR_STRIDE, warmup: Optional[int] = None,
                rollouts: Tuple[np.ndarray, np.ndarray, np.ndarray] = None) -> List[Tuple[int, float]]:
    """Mean absolute drift per horizon from a single rollout per anchor.

    All horizons share the anchor set of the largest one, so
    ``drift_curve(...)[h] == mae_at_horizon(..., h, horizon_limit=max(horizons))``.

    Returns:
        (horizon, mean_abs_drift) pairs with ascending horizons
    """
    horizons = sorted({int(h) for h in horizons})
    if not horizons or horizons[0] < 1:
        raise ConfigError(f"drift horizons must be >= 1, got {horizons}")
    if rollouts is None:
        rollouts = anchored_rollouts(model, test, horizons[-1], stride, warmup)
    _, predictions, actual = rollouts
    return [(h, float(mean_absolute_error(actual[:, h - 1], predictions[:, h - 1]))) for h in horizons]


def step_bound_violations(predictions: np.ndarray, last_values: np.ndarray, bound: float,
                          tolerance: float = 1e-9) -> int:
    """Count rollout steps that move further than ``bound`` from the previous value."""
    predictions = np.atleast_2d(predictions)
    previous = np.concatenate([np.reshape(last_values, (-1, 1)), predictions[:, :-1]], axis=1)
    return int(np.count_nonzero(np.abs(predictions - previous) > bound + tolerance))


def rollout_trace(model: Forecaster, test: Union[TimeSeries, np.ndarray], anchor: int,
                  horizon: int) -> pd.DataFrame:
    """Rollout from history stop ``anchor`` as a ``t,predicted,actual`` table.

    ``t`` is the 0-based position of the predicted value in ``test``;
    ``actual`` is NaN past the end of the series.
    """
    values = as_values(test)
    if anchor > values.size:
        raise InsufficientHistoryError(anchor, values.size, "series for the anchor")
    model.check_history(anchor)
    predictions = rollout_forecaster(model, values[:anchor], horizon)
    positions = np.arange(anchor, anchor + horizon)
    actual = np.full(horizon, np.nan)
    inside = positions < values.size
    actual[inside] = values[positions[inside]]
    return pd.DataFrame({"t": positions, "predicted": predictions, "actual": actual})
