"""Shared fixtures: small series and tiny models."""
import numpy as np
import pytest

from src.core.comet import init_model
from src.core.rng import SplitMix64
from src.core.series import TimeSeries, WindowSpec
from src.datagen import GenConfig, generate


@pytest.fixture
def small_spec():
    return WindowSpec(3, 5, 8)


@pytest.fixture
def ramp_series():
    return TimeSeries(np.arange(200, dtype=np.float64))


@pytest.fixture
def constant_series():
    return TimeSeries(np.full(200, 1.0))


@pytest.fixture(scope="session")
def generated_series():
    return generate(GenConfig(seed=0, length=800))


@pytest.fixture
def tiny_model(generated_series, small_spec):
    return init_model(TimeSeries(generated_series.values[:300]), small_spec, latent_dim=2, k=3,
                      rng=SplitMix64(0))
