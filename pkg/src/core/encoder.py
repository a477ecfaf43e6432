"""Bias-free linear multi-scale encoders.

Each encoder maps a raw window (no differencing, no normalization) to the
behaviour space R^D with a single matrix-vector product. Encodings are
recomputed from the window at every step and never depend on model state.
"""
from typing import Union

import numpy as np

from .errors import DimensionMismatchError
from .models import BehaviorEncoding, EncoderParams
from .rng import SplitMix64
from .series import TimeSeries, WindowSpec, as_values, window


def encode(window_values: np.ndarray, weights: np.ndarray) -> np.ndarray:
    """Apply one encoder: ``output[d] = sum_j weights[d, j] * window[j]``.

    Args:
        window_values: Window of L raw values
        weights: Encoder matrix of shape (D, L)

    Returns:
        Encoding vector of length D

    Raises:
        DimensionMismatchError: If the window length is not the column count
    """
    window_values = np.asarray(window_values, dtype=np.float64)
    weights = np.asarray(weights, dtype=np.float64)
    if weights.ndim != 2 or window_values.shape != (weights.shape[1],):
        raise DimensionMismatchError(
            f"window of shape {window_values.shape} does not fit encoder of shape {weights.shape}")
    return encode_windows(window_values[None, :], weights)[0]


def encode_windows(windows: np.ndarray, weights: np.ndarray) -> np.ndarray:
    """Encode many windows at once; row j of the result encodes row j of ``windows``.

    Columns are accumulated in a fixed order with elementwise operations
    only, so a window encoded here and through :func:`encode` gives
    bit-identical vectors on every platform.
    """
    windows = np.asarray(windows, dtype=np.float64)
    weights = np.asarray(weights, dtype=np.float64)
    if windows.ndim != 2 or weights.ndim != 2 or windows.shape[1] != weights.shape[1]:
        raise DimensionMismatchError(
            f"windows of shape {windows.shape} do not fit encoder of shape {weights.shape}")
    out = np.zeros((windows.shape[0], weights.shape[0]))
    for j in range(weights.shape[1]):
        out += windows[:, j, None] * weights[None, :, j]
    return out


def encode_multiscale(series: Union[TimeSeries, np.ndarray], end: int, params: EncoderParams,
                      spec: WindowSpec = None) -> BehaviorEncoding:
    """Encode the three trailing windows that stop at ``end``.

    Args:
        series: Series (or raw history array)
        end: Exclusive stop of the history; must be >= ``spec.long_len``
        params: Encoder weights
        spec: Window lengths (default: the encoder's own column counts)

    Returns:
        BehaviorEncoding (z_s, z_m, z_l)

    Raises:
        InsufficientHistoryError: If fewer than ``long_len`` values precede ``end``
    """
    spec = spec or WindowSpec(*params.window_lengths)
    params.check_spec(spec)
    values = as_values(series)
    # Long window first so a short history fails on the longest requirement.
    z_long = encode(window(values, end, spec.long_len), params.weights_long)
    z_medium = encode(window(values, end, spec.medium_len), params.weights_medium)
    z_short = encode(window(values, end, spec.short_len), params.weights_short)
    return BehaviorEncoding(z_short, z_medium, z_long)


def init_encoder(latent_dim: int, spec: WindowSpec, rng: SplitMix64) -> EncoderParams:
    """Draw encoder weights i.i.d. uniform in [-1/L, 1/L] for each L-column encoder.

    Matrices are filled short, medium, long, each in row-major order.
    """
    matrices = [rng.uniform_array((latent_dim, length), -1.0 / length, 1.0 / length)
                for length in spec.lengths]
    return EncoderParams(*matrices)
