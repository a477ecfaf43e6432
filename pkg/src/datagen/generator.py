"""Non-stationary, regime-switching "trading-like" series.

Each step applies

    x_{t+1} = x_t + drift_r + kappa (anchor_r - x_t)
              + A sin(2 pi t / P) - A sin(2 pi (t - 1) / P) + sigma_r eps_t

where (drift_r, sigma_r, anchor_r) are redrawn at every regime switch and
regime durations are geometric with the configured mean. The generator is
a pure function of its config; with the same seed it reproduces the same
series bit for bit.
"""
import math
from dataclasses import dataclass
from typing import List, NamedTuple, Tuple

import numpy as np

from src.config import (
    DEFAULT_ANCHOR_SPREAD,
    DEFAULT_CYCLE_AMPLITUDE,
    DEFAULT_CYCLE_PERIOD,
    DEFAULT_DRIFT_RANGE,
    DEFAULT_GEN_LENGTH,
    DEFAULT_LONG_LEN,
    DEFAULT_MEAN_REVERSION,
    DEFAULT_REGIME_DURATION,
    DEFAULT_SEED,
    DEFAULT_START_VALUE,
    DEFAULT_VOLATILITY_RANGE,
)
from src.core.errors import ConfigError
from src.core.rng import SplitMix64
from src.core.series import TimeSeries


class Regime(NamedTuple):
    """Constants of one regime; ``start`` is the step index t where it takes effect."""

    start: int
    duration: int
    drift: float
    volatility: float
    anchor: float


def _ordered_pair(name: str, value) -> Tuple[float, float]:
    low, high = (float(v) for v in value)
    if low > high:
        raise ConfigError(f"{name} must be ordered (low <= high), got ({low}, {high})")
    return low, high


@dataclass(frozen=True)
class GenConfig:
    seed: int = DEFAULT_SEED
    length: int = DEFAULT_GEN_LENGTH
    regime_mean_duration: float = DEFAULT_REGIME_DURATION
    drift_range: Tuple[float, float] = DEFAULT_DRIFT_RANGE
    volatility_range: Tuple[float, float] = DEFAULT_VOLATILITY_RANGE
    mean_reversion_rate: float = DEFAULT_MEAN_REVERSION
    cycle_amplitude: float = DEFAULT_CYCLE_AMPLITUDE
    cycle_period: int = DEFAULT_CYCLE_PERIOD
    anchor_spread: float = DEFAULT_ANCHOR_SPREAD
    start_value: float = DEFAULT_START_VALUE
    long_len: int = DEFAULT_LONG_LEN

    def __post_init__(self):
        object.__setattr__(self, "drift_range", _ordered_pair("drift_range", self.drift_range))
        object.__setattr__(self, "volatility_range", _ordered_pair("volatility_range", self.volatility_range))
        minimum = 2 * (self.long_len + 2)
        if self.length < minimum:
            raise ConfigError(f"length must be >= {minimum}, got {self.length}")
        if self.volatility_range[0] < 0:
            raise ConfigError(f"volatility must be >= 0, got {self.volatility_range}")
        if not self.regime_mean_duration >= 1:
            raise ConfigError(f"regime_mean_duration must be >= 1, got {self.regime_mean_duration}")
        if not 0.0 <= self.mean_reversion_rate < 1.0:
            raise ConfigError(f"mean_reversion_rate must be in [0, 1), got {self.mean_reversion_rate}")
        if self.cycle_amplitude < 0:
            raise ConfigError(f"cycle_amplitude must be >= 0, got {self.cycle_amplitude}")
        if self.cycle_period < 1:
            raise ConfigError(f"cycle_period must be >= 1, got {self.cycle_period}")
        if self.anchor_spread < 0:
            raise ConfigError(f"anchor_spread must be >= 0, got {self.anchor_spread}")
        if not math.isfinite(self.start_value):
            raise ConfigError(f"start_value must be finite, got {self.start_value}")


def generate_with_regimes(config: GenConfig = None) -> Tuple[TimeSeries, List[Regime]]:
    """Generate a series and the regime schedule that produced it.

    Draw order: at each switch drift, volatility, anchor offset and
    duration; then one Gaussian per step (drawn even when volatility is 0).

    Returns:
        Tuple (series of ``config.length`` values, regimes in time order)
    """
    config = config or GenConfig()
    rng = SplitMix64(config.seed)
    values = np.empty(config.length)
    values[0] = config.start_value

    regimes: List[Regime] = []
    remaining = 0
    drift = volatility = anchor = 0.0
    amplitude = config.cycle_amplitude
    omega = 2.0 * math.pi / config.cycle_period
    kappa = config.mean_reversion_rate

    for t in range(config.length - 1):
        x = values[t]
        if remaining == 0:
            drift = rng.uniform(*config.drift_range)
            volatility = rng.uniform(*config.volatility_range)
            anchor = x + rng.uniform(-config.anchor_spread, config.anchor_spread)
            remaining = rng.geometric(config.regime_mean_duration)
            regimes.append(Regime(t, remaining, drift, volatility, anchor))
        cycle = amplitude * math.sin(omega * t) - amplitude * math.sin(omega * (t - 1))
        values[t + 1] = x + drift + kappa * (anchor - x) + cycle + volatility * rng.gaussian()
        remaining -= 1

    return TimeSeries(values), regimes


def generate(config: GenConfig = None) -> TimeSeries:
    """Generate a regime-switching series; see :func:`generate_with_regimes`."""
    return generate_with_regimes(config)[0]
