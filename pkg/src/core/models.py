"""Data models for COMET.

EncoderParams / BehaviorEncoding: multi-scale linear encoders and their output
MemoryEntry / MemoryStore: stored transitions used for retrieval
RetrievalParams / NeighborHit / AggregateResult: distance weights and retrieval results
CorrectionParams / BehaviorState / CometModel / RolloutResult: the full model

All arrays are copied to float64 on construction and made read-only, so
instances can be shared between concurrent readers.
"""
import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from src.config import MIX_SOFTMAX, MIX_UNIFORM
from .errors import ConfigError, DimensionMismatchError
from .series import TimeSeries, WindowSpec


def _frozen(values, ndim: int, name: str) -> np.ndarray:
    array = np.array(values, dtype=np.float64, copy=True)
    if array.ndim != ndim:
        raise DimensionMismatchError(f"{name} must be {ndim}-dimensional, got shape {array.shape}")
    if not np.all(np.isfinite(array)):
        raise DimensionMismatchError(f"{name} contains non-finite entries")
    array.setflags(write=False)
    return array


@dataclass(frozen=True)
class EncoderParams:
    """Bias-free linear encoders E_s, E_m, E_l (shapes D x L_s, D x L_m, D x L_l)."""

    weights_short: np.ndarray
    weights_medium: np.ndarray
    weights_long: np.ndarray

    def __post_init__(self):
        for name in ("weights_short", "weights_medium", "weights_long"):
            object.__setattr__(self, name, _frozen(getattr(self, name), 2, name))
        dims = {m.shape[0] for m in self.matrices()}
        if len(dims) != 1 or 0 in dims:
            raise DimensionMismatchError(f"encoder row counts differ: {sorted(dims)}")

    @property
    def latent_dim(self) -> int:
        return int(self.weights_short.shape[0])

    @property
    def window_lengths(self) -> Tuple[int, int, int]:
        return tuple(int(m.shape[1]) for m in self.matrices())

    def matrices(self) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        return (self.weights_short, self.weights_medium, self.weights_long)

    def check_spec(self, spec: WindowSpec) -> None:
        """Raise if column counts do not match the window lengths."""
        if self.window_lengths != spec.lengths:
            raise DimensionMismatchError(
                f"encoder columns {self.window_lengths} do not match windows {spec.lengths}")


@dataclass(frozen=True)
class BehaviorEncoding:
    """The triple (z_s, z_m, z_l) summarizing short, medium and long windows."""

    z_short: np.ndarray
    z_medium: np.ndarray
    z_long: np.ndarray

    def __post_init__(self):
        for name in ("z_short", "z_medium", "z_long"):
            object.__setattr__(self, name, _frozen(getattr(self, name), 1, name))
        if not self.z_short.shape == self.z_medium.shape == self.z_long.shape:
            raise DimensionMismatchError("behavior encodings must share one dimension")

    @property
    def latent_dim(self) -> int:
        return int(self.z_short.size)

    def scales(self) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        return (self.z_short, self.z_medium, self.z_long)


@dataclass(frozen=True)
class MemoryEntry:
    """One stored transition (z_s, z_m, z_l, dz, dx)."""

    z_short: np.ndarray
    z_medium: np.ndarray
    z_long: np.ndarray
    dz: np.ndarray
    dx: float

    def encoding(self) -> BehaviorEncoding:
        return BehaviorEncoding(self.z_short, self.z_medium, self.z_long)


@dataclass(frozen=True)
class MemoryStore:
    """Transition memory, stored column-wise (one row per entry, in source-time order)."""

    z_short: np.ndarray
    z_medium: np.ndarray
    z_long: np.ndarray
    dz: np.ndarray
    dx: np.ndarray

    def __post_init__(self):
        for name in ("z_short", "z_medium", "z_long", "dz"):
            object.__setattr__(self, name, _frozen(getattr(self, name), 2, name))
        object.__setattr__(self, "dx", _frozen(self.dx, 1, "dx"))
        shapes = {a.shape for a in (self.z_short, self.z_medium, self.z_long, self.dz)}
        if len(shapes) != 1 or self.dx.shape[0] != self.z_short.shape[0]:
            raise DimensionMismatchError(f"memory arrays disagree: {sorted(shapes)}, dx {self.dx.shape}")

    @property
    def count(self) -> int:
        return int(self.dx.size)

    def __len__(self) -> int:
        return self.count

    @property
    def latent_dim(self) -> int:
        return int(self.z_short.shape[1])

    def scales(self) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        return (self.z_short, self.z_medium, self.z_long)

    def entry(self, index: int) -> MemoryEntry:
        return MemoryEntry(self.z_short[index], self.z_medium[index], self.z_long[index],
                           self.dz[index], float(self.dx[index]))

    def max_abs_dx(self) -> float:
        """Largest stored |dx|; bounds every single-step move of the model."""
        return float(np.max(np.abs(self.dx))) if self.count else 0.0


@dataclass(frozen=True)
class RetrievalParams:
    """Distance weights, sharpness and neighbourhood size.

    Weights and gamma are stored as unconstrained logs; the effective
    values are ``exp(log_*)`` and therefore always positive.
    """

    log_w_short: float = 0.0
    log_w_medium: float = 0.0
    log_w_long: float = 0.0
    log_gamma: float = 0.0
    k: int = 8

    mix_softmax = MIX_SOFTMAX
    mix_uniform = MIX_UNIFORM

    def __post_init__(self):
        for name in ("log_w_short", "log_w_medium", "log_w_long", "log_gamma"):
            value = float(getattr(self, name))
            if not math.isfinite(value):
                raise ConfigError(f"{name} must be finite, got {value}")
            object.__setattr__(self, name, value)
        if int(self.k) < 1:
            raise ConfigError(f"k must be >= 1, got {self.k}")
        object.__setattr__(self, "k", int(self.k))

    @classmethod
    def from_effective(cls, w_short: float = 1.0, w_medium: float = 1.0, w_long: float = 1.0,
                       gamma: float = 1.0, k: int = 8) -> "RetrievalParams":
        """Build from positive effective values."""
        for name, value in (("w_short", w_short), ("w_medium", w_medium),
                            ("w_long", w_long), ("gamma", gamma)):
            if not value > 0:
                raise ConfigError(f"{name} must be > 0, got {value}")
        return cls(math.log(w_short), math.log(w_medium), math.log(w_long), math.log(gamma), k)

    @property
    def weights(self) -> Tuple[float, float, float]:
        return (math.exp(self.log_w_short), math.exp(self.log_w_medium), math.exp(self.log_w_long))

    @property
    def gamma(self) -> float:
        return math.exp(self.log_gamma)

    def log_vector(self) -> np.ndarray:
        return np.array([self.log_w_short, self.log_w_medium, self.log_w_long, self.log_gamma])


@dataclass(frozen=True)
class NeighborHit:
    """One retrieved entry; ``alpha`` is None until aggregation."""

    entry_index: int
    distance: float
    alpha: Optional[float] = None


@dataclass(frozen=True)
class AggregateResult:
    """Memory-anchored increments and the neighbourhood that produced them."""

    dz_mem: np.ndarray
    dx_mem: float
    hits: Tuple[NeighborHit, ...]

    @property
    def alphas(self) -> np.ndarray:
        return np.array([hit.alpha for hit in self.hits], dtype=np.float64)


@dataclass(frozen=True)
class CorrectionParams:
    """Bias-free correction W_f mapping [z_t; z_s; z_m; z_l] (4D) to R^D."""

    weights: np.ndarray

    def __post_init__(self):
        weights = _frozen(self.weights, 2, "correction weights")
        if weights.shape[1] != 4 * weights.shape[0]:
            raise DimensionMismatchError(f"correction weights must be D x 4D, got {weights.shape}")
        object.__setattr__(self, "weights", weights)

    @property
    def latent_dim(self) -> int:
        return int(self.weights.shape[0])


@dataclass(frozen=True)
class BehaviorState:
    """Internal behaviour state z_t."""

    z: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "z", _frozen(self.z, 1, "state"))

    @classmethod
    def zeros(cls, latent_dim: int) -> "BehaviorState":
        return cls(np.zeros(latent_dim))


@dataclass(frozen=True)
class CometModel:
    """All learned parameters plus the memory store and window lengths."""

    encoder: EncoderParams
    correction: CorrectionParams
    retrieval: RetrievalParams
    memory: MemoryStore
    window_spec: WindowSpec

    def __post_init__(self):
        self.encoder.check_spec(self.window_spec)
        dim = self.encoder.latent_dim
        if self.correction.latent_dim != dim:
            raise DimensionMismatchError(
                f"correction dimension {self.correction.latent_dim} != encoder dimension {dim}")
        if self.memory.count and self.memory.latent_dim != dim:
            raise DimensionMismatchError(
                f"memory dimension {self.memory.latent_dim} != encoder dimension {dim}")

    @property
    def latent_dim(self) -> int:
        return self.encoder.latent_dim

    @property
    def k(self) -> int:
        return self.retrieval.k


@dataclass(frozen=True)
class RolloutResult:
    """Autoregressive predictions with per-step diagnostics.

    ``states`` is an (H, D) trace of the behaviour state after each step,
    present only when requested.
    """

    predictions: TimeSeries
    per_step_dx: np.ndarray
    states: Optional[np.ndarray] = None

    @property
    def horizon(self) -> int:
        return self.predictions.length
