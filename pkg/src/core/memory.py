"""Behaviour memory: construction, weighted L1 distance, top-K retrieval, aggregation.

The memory stores every observed transition of the training data as
(z_s, z_m, z_l, dz, dx). At inference a query encoding retrieves its K
nearest entries by a weighted L1 distance and mixes their increments with
softmax weights floored by a uniform component, so the predicted increment
is always a convex combination of increments that really occurred.
"""
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.special import softmax

from .encoder import encode_windows
from .errors import DimensionMismatchError, MemoryTooSmallError, SeriesTooShortError
from .models import (
    AggregateResult,
    BehaviorEncoding,
    EncoderParams,
    MemoryEntry,
    MemoryStore,
    NeighborHit,
    RetrievalParams,
)
from .series import TimeSeries, WindowSpec, as_values, sliding_windows


def memory_stops(series_length: int, spec: WindowSpec) -> np.ndarray:
    """History stops whose transitions are stored: ``long_len + 1 .. length - 1``."""
    return np.arange(spec.long_len + 1, series_length, dtype=np.int64)


def encode_stops(values: np.ndarray, encoder: EncoderParams, spec: WindowSpec,
                 stops: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Encode the three windows ending at each stop; returns three (len(stops), D) arrays."""
    encoded = []
    for length, weights in zip(spec.lengths, encoder.matrices()):
        windows = sliding_windows(values, length)[stops - length]
        encoded.append(encode_windows(windows, weights))
    return tuple(encoded)


def build_memory(series: TimeSeries, encoder: EncoderParams, spec: WindowSpec = None) -> MemoryStore:
    """Build the transition memory from ground-truth data.

    For every 1-based index i from ``long_len + 1`` to ``length - 1`` the entry
    stores the encodings of the windows ending at i, the short-scale increment
    ``z_s(i) - z_s(i-1)`` and the output increment ``x_{i+1} - x_i``.

    Args:
        series: Ground-truth training series
        encoder: Encoder weights
        spec: Window lengths (default 12/24/60)

    Returns:
        MemoryStore with ``length - long_len - 1`` entries in time order

    Raises:
        SeriesTooShortError: If the series has fewer than ``long_len + 2`` values
    """
    spec = spec or WindowSpec()
    encoder.check_spec(spec)
    values = as_values(series)
    if values.size < spec.long_len + 2:
        raise SeriesTooShortError(
            f"memory needs at least {spec.long_len + 2} values, series has {values.size}")

    stops = memory_stops(values.size, spec)
    z_short, z_medium, z_long = encode_stops(values, encoder, spec, stops)
    z_short_prev = encode_windows(sliding_windows(values, spec.short_len)[stops - 1 - spec.short_len],
                                  encoder.weights_short)
    dx = values[stops] - values[stops - 1]
    return MemoryStore(z_short, z_medium, z_long, z_short - z_short_prev, dx)


def _check_dims(query: BehaviorEncoding, latent_dim: int):
    if query.latent_dim != latent_dim:
        raise DimensionMismatchError(
            f"query dimension {query.latent_dim} != memory dimension {latent_dim}")


def l1_to_rows(rows: np.ndarray, z: np.ndarray) -> np.ndarray:
    """L1 distance from vector ``z`` to every row of ``rows``, accumulated column by column."""
    out = np.zeros(rows.shape[0])
    for d in range(rows.shape[1]):
        out += np.abs(rows[:, d] - z[d])
    return out


def weighted_l1_distance(query: BehaviorEncoding, entry: MemoryEntry, params: RetrievalParams) -> float:
    """Weighted L1 distance between a query and one stored entry.

    ``d = w_s |z_s - z_s,i|_1 + w_m |z_m - z_m,i|_1 + w_l |z_l - z_l,i|_1``
    with the effective (positive) weights.

    Example:
        D=1, encoding differences (1, 2, 3), weights (1, 0.5, 2) gives 8.
    """
    _check_dims(query, np.asarray(entry.z_short).size)
    w_short, w_medium, w_long = params.weights
    l1 = [float(l1_to_rows(np.asarray(e, dtype=np.float64)[None, :], q)[0])
          for q, e in zip(query.scales(), (entry.z_short, entry.z_medium, entry.z_long))]
    return w_short * l1[0] + w_medium * l1[1] + w_long * l1[2]


def scale_distances(query: BehaviorEncoding, store: MemoryStore) -> np.ndarray:
    """Unweighted per-scale L1 distances to every entry, shape (3, N)."""
    _check_dims(query, store.latent_dim)
    return np.stack([l1_to_rows(z_store, z)
                     for z, z_store in zip(query.scales(), store.scales())])


def memory_distances(query: BehaviorEncoding, store: MemoryStore, params: RetrievalParams,
                     per_scale: Optional[np.ndarray] = None) -> np.ndarray:
    """Weighted L1 distance from the query to every entry (one linear scan)."""
    if per_scale is None:
        per_scale = scale_distances(query, store)
    w_short, w_medium, w_long = params.weights
    return w_short * per_scale[0] + w_medium * per_scale[1] + w_long * per_scale[2]


def select_neighbors(distances: np.ndarray, k: int, exclude: Optional[int] = None) -> np.ndarray:
    """Indices of the k smallest distances, ties to the smaller index, sorted ascending."""
    available = distances.size - (1 if exclude is not None and 0 <= exclude < distances.size else 0)
    if available < k:
        raise MemoryTooSmallError(f"memory holds {available} usable entries, K is {k}")
    if exclude is not None and 0 <= exclude < distances.size:
        distances = distances.copy()
        distances[exclude] = np.inf
    return np.argsort(distances, kind="stable")[:k]


def topk(query: BehaviorEncoding, store: MemoryStore, params: RetrievalParams,
         exclude: Optional[int] = None) -> List[NeighborHit]:
    """Retrieve the K nearest memory entries by full linear scan.

    Args:
        query: Current behaviour encodings
        store: Memory to search
        params: Distance weights and K
        exclude: Optional entry index to leave out (used for leave-one-out training)

    Returns:
        K hits sorted by (distance, entry_index), alphas unset

    Raises:
        MemoryTooSmallError: If the store has fewer than K entries
    """
    distances = memory_distances(query, store, params)
    indices = select_neighbors(distances, params.k, exclude)
    return [NeighborHit(int(i), float(distances[i])) for i in indices]


def retrieval_weights(distances: np.ndarray, gamma: float) -> Tuple[np.ndarray, np.ndarray]:
    """Softmax over ``-gamma * d`` and its uniform mix ``0.7 * softmax + 0.3 / K``.

    Returns:
        Tuple (softmax weights, mixed weights alpha)
    """
    distances = np.asarray(distances, dtype=np.float64)
    k = distances.size
    raw = softmax(-gamma * distances)
    alpha = RetrievalParams.mix_softmax * raw + RetrievalParams.mix_uniform / k
    return raw, alpha


def aggregate(hits: Sequence[NeighborHit], store: MemoryStore, params: RetrievalParams) -> AggregateResult:
    """Mix the neighbours' increments into memory-anchored transitions.

    ``alpha_i = 0.7 softmax(-gamma d)_i + 0.3 / K``,
    ``dz_mem = sum alpha_i dz_i`` and ``dx_mem = sum alpha_i dx_i``.

    Example:
        K=3, distances (0, 1, 2), gamma=1, dx (1, 2, 3) gives
        alpha = (0.5657, 0.2713, 0.1630) and dx_mem = 1.5973.
    """
    if not hits:
        raise MemoryTooSmallError("aggregation needs at least one neighbour")
    indices = np.array([hit.entry_index for hit in hits], dtype=np.int64)
    distances = np.array([hit.distance for hit in hits], dtype=np.float64)
    _, alpha = retrieval_weights(distances, params.gamma)

    dx = store.dx[indices]
    # Rounding may push a convex combination an ulp outside its hull.
    dx_mem = float(np.clip(alpha @ dx, dx.min(), dx.max()))
    dz_mem = alpha @ store.dz[indices]
    weighted = tuple(NeighborHit(hit.entry_index, hit.distance, float(a)) for hit, a in zip(hits, alpha))
    return AggregateResult(dz_mem, dx_mem, weighted)
