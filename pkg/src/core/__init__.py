"""Core functionality for COMET.

This package contains the series handling and the model itself:

Modules:
- series: TimeSeries, window extraction and chronological splits
- encoder: bias-free linear multi-scale encoders
- memory: transition memory, weighted L1 retrieval and aggregation
- comet: one-step prediction, rollout and footprint accounting
- serialization: the binary model file format
- models: data classes shared by the modules above
- rng: portable SplitMix64 generator
- data_loaders: series CSV and run-config files
- parsers: list/number parsing for flags and config values
- errors: error types with CLI codes
"""
# Series handling
from .series import TimeSeries, WindowSpec, SplitSpec, window, split

# Encoders and memory
from .encoder import encode, encode_multiscale, init_encoder
from .memory import build_memory, weighted_l1_distance, topk, aggregate

# Model
from .comet import init_model, bound_state, correction_term, predict_step, rollout, parameter_count
from .serialization import save_model, load_model

# Data models
from .models import (
    BehaviorEncoding,
    BehaviorState,
    CometModel,
    CorrectionParams,
    EncoderParams,
    MemoryEntry,
    MemoryStore,
    NeighborHit,
    RetrievalParams,
    RolloutResult,
)

# Data loading
from .data_loaders import load_series, write_series, load_run_config
from .rng import SplitMix64, derive_seed

__all__ = [
    # Series
    'TimeSeries',
    'WindowSpec',
    'SplitSpec',
    'window',
    'split',

    # Encoders and memory
    'encode',
    'encode_multiscale',
    'init_encoder',
    'build_memory',
    'weighted_l1_distance',
    'topk',
    'aggregate',

    # Model
    'init_model',
    'bound_state',
    'correction_term',
    'predict_step',
    'rollout',
    'parameter_count',
    'save_model',
    'load_model',

    # Data models
    'BehaviorEncoding',
    'BehaviorState',
    'CometModel',
    'CorrectionParams',
    'EncoderParams',
    'MemoryEntry',
    'MemoryStore',
    'NeighborHit',
    'RetrievalParams',
    'RolloutResult',

    # Data loading
    'load_series',
    'write_series',
    'load_run_config',
    'SplitMix64',
    'derive_seed',
]
