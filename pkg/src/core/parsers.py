"""Parsing utilities for command-line and config values.

Functions for turning strings such as ``"1,5"`` or ``"1,10:200:10"`` into
typed values.
"""
from typing import Iterable, List, Tuple, Union

from .errors import ConfigError


def parse_int_list(text: Union[str, int, Iterable[int]]) -> List[int]:
    """Parse a comma-separated list of integers with optional ``start:stop:step`` ranges.

    Ranges are inclusive of ``stop`` when it falls on the step grid.

    Args:
        text: String such as ``"1,5"`` or ``"1,10:200:10"``; lists and
            single integers (from YAML) pass through

    Returns:
        List of integers in the given order

    Examples:
        >>> parse_int_list("1,5")
        [1, 5]

        >>> parse_int_list("1,10:30:10")
        [1, 10, 20, 30]
    """
    if isinstance(text, int):
        return [text]
    if not isinstance(text, str):
        return [int(v) for v in text]

    values = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        try:
            if ":" in part:
                pieces = [int(p) for p in part.split(":")]
                if len(pieces) == 2:
                    pieces.append(1)
                start, stop, step = pieces
                if step <= 0:
                    raise ConfigError(f"range step must be positive in '{part}'")
                values.extend(range(start, stop + 1, step))
            else:
                values.append(int(part))
        except ValueError as e:
            if isinstance(e, ConfigError):
                raise
            raise ConfigError(f"cannot parse integer list '{text}'") from e
    if not values:
        raise ConfigError(f"empty integer list '{text}'")
    return values


def parse_float_pair(text: Union[str, Iterable[float]]) -> Tuple[float, float]:
    """Parse ``"low,high"`` into a float tuple.

    Examples:
        >>> parse_float_pair("0.005,0.02")
        (0.005, 0.02)
    """
    if isinstance(text, str):
        parts = [p.strip() for p in text.split(",") if p.strip()]
    else:
        parts = list(text)
    if len(parts) != 2:
        raise ConfigError(f"expected two comma-separated numbers, got '{text}'")
    try:
        return float(parts[0]), float(parts[1])
    except ValueError as e:
        raise ConfigError(f"cannot parse number pair '{text}'") from e


def parse_bool(value: Union[str, bool, int]) -> bool:
    """Parse a config boolean (``true/false/yes/no/1/0``)."""
    if isinstance(value, bool):
        return value
    text = str(value).strip().lower()
    if text in ("true", "yes", "1", "on"):
        return True
    if text in ("false", "no", "0", "off"):
        return False
    raise ConfigError(f"cannot parse boolean '{value}'")
