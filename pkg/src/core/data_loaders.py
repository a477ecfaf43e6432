"""Data loading utilities for COMET.

Functions for reading and writing series CSV files and run config files.
"""
from pathlib import Path
from typing import Any, Dict, Union

import numpy as np
import pandas as pd
import yaml

from .errors import ConfigError, SeriesFormatError
from .series import TimeSeries

SERIES_COLUMNS = ["t", "value"]


def load_series(csv_path: Union[str, Path]) -> TimeSeries:
    """Load a series from a ``t,value`` CSV file.

    ``t`` must be the 0-based step index (0, 1, 2, ...) and every value must
    be a finite decimal literal.

    Args:
        csv_path: Path to the CSV file

    Returns:
        TimeSeries with the file's values

    Raises:
        FileNotFoundError: If the file does not exist
        SeriesFormatError: On a wrong header, non-numeric or non-finite
            values, or a ``t`` column that is not 0, 1, 2, ...
    """
    csv_path = Path(csv_path)
    if not csv_path.exists():
        raise FileNotFoundError(f"Series file not found: {csv_path}")

    try:
        df = pd.read_csv(csv_path, dtype=str, keep_default_na=False)
    except (pd.errors.ParserError, pd.errors.EmptyDataError) as e:
        raise SeriesFormatError(f"{csv_path.name}: {e}") from e

    if list(df.columns) != SERIES_COLUMNS:
        raise SeriesFormatError(
            f"{csv_path.name}: header must be 't,value', got {','.join(map(str, df.columns))}")
    if df.empty:
        raise SeriesFormatError(f"{csv_path.name}: no rows")

    t = pd.to_numeric(df["t"], errors="coerce")
    if t.isna().any() or not np.all(t == np.floor(t)):
        raise SeriesFormatError(f"{csv_path.name}: t must be an integer step index")
    steps = t.to_numpy(dtype=np.int64)
    expected = np.arange(steps.size, dtype=np.int64)
    if not np.array_equal(steps, expected):
        bad = int(np.flatnonzero(steps != expected)[0])
        raise SeriesFormatError(
            f"{csv_path.name}: t must be monotonic 0, 1, 2, ... (row {bad} has t={steps[bad]})")

    values = pd.to_numeric(df["value"], errors="coerce").to_numpy(dtype=np.float64)
    if not np.all(np.isfinite(values)):
        bad = int(np.flatnonzero(~np.isfinite(values))[0])
        raise SeriesFormatError(
            f"{csv_path.name}: value at t={bad} is not a finite number ({df['value'].iloc[bad]!r})")

    return TimeSeries(values)


def write_series(series: TimeSeries, csv_path: Union[str, Path]) -> Path:
    """Write a series as ``t,value`` CSV with round-trippable decimals."""
    csv_path = Path(csv_path)
    csv_path.parent.mkdir(parents=True, exist_ok=True)
    df = pd.DataFrame({"t": np.arange(series.length), "value": series.values})
    df.to_csv(csv_path, index=False, float_format="%.17g", lineterminator="\n")
    return csv_path


def load_run_config(config_path: Union[str, Path]) -> Dict[str, Any]:
    """Load a flat ``key: value`` YAML run config.

    Args:
        config_path: Path to the config file

    Returns:
        Dictionary of scalar (or list-of-scalar) settings

    Raises:
        FileNotFoundError: If the file does not exist
        ConfigError: If the file is not a flat mapping
    """
    config_path = Path(config_path)
    if not config_path.exists():
        raise FileNotFoundError(f"Config file not found: {config_path}")

    with open(config_path, "r", encoding="utf-8") as f:
        try:
            data = yaml.safe_load(f)
        except yaml.YAMLError as e:
            raise ConfigError(f"{config_path.name}: {e}") from e

    if data is None:
        return {}
    if not isinstance(data, dict):
        raise ConfigError(f"{config_path.name}: expected a key-value mapping")
    for key, value in data.items():
        if isinstance(value, dict):
            raise ConfigError(f"{config_path.name}: nested section '{key}' is not supported")
    return {str(key).replace("-", "_"): value for key, value in data.items()}
