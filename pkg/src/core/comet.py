"""The COMET model: one-step prediction, autoregressive rollout and footprint.

One prediction step:

1. Encode the trailing history into (z_s, z_m, z_l)
2. Compute weighted L1 distances to every memory entry
3. Select the top-K neighbours
4. Aggregate their transitions into (dz_mem, dx_mem)
5. Apply the learned correction W_f [z_t; z_s; z_m; z_l]
6. Update the state ``z_{t+1} = z_t + dz_mem + dz_learned`` and the output
   ``x_{t+1} = x_t + dx_mem``

The output uses only dx_mem, so it never depends on the state or on W_f.
The state is still carried and exposed for diagnostics. Its largest entry is
kept at or below ``STATE_LIMIT`` by rescaling the whole vector, so long
rollouts stay finite even when I + W_f expands the state.
"""
from typing import NamedTuple, Tuple, Union

import numpy as np

from src.config import BYTES_PER_PARAM, DEFAULT_K, DEFAULT_LATENT_DIM, STATE_LIMIT
from .encoder import encode_multiscale, init_encoder
from .errors import ConfigError, DimensionMismatchError, TrainingDivergedError
from .memory import aggregate, build_memory, topk
from .models import (
    AggregateResult,
    BehaviorEncoding,
    BehaviorState,
    CometModel,
    CorrectionParams,
    RetrievalParams,
    RolloutResult,
)
from .rng import SplitMix64
from .series import TimeSeries, WindowSpec, as_values


class ModelFootprint(NamedTuple):
    """Parameter and memory accounting at 4 bytes per stored value."""

    param_count: int
    param_bytes: int
    memory_bytes: int


def init_correction(latent_dim: int, rng: SplitMix64) -> CorrectionParams:
    """Draw W_f i.i.d. uniform in [-1/(4D), 1/(4D)]."""
    bound = 1.0 / (4 * latent_dim)
    return CorrectionParams(rng.uniform_array((latent_dim, 4 * latent_dim), -bound, bound))


def init_model(train_series: TimeSeries, spec: WindowSpec = None, latent_dim: int = DEFAULT_LATENT_DIM,
               k: int = DEFAULT_K, rng: SplitMix64 = None) -> CometModel:
    """Create a freshly initialized model with memory built from ``train_series``.

    Draw order from ``rng``: encoder short, medium, long, then W_f. The
    retrieval parameters start at w_s = w_m = w_l = gamma = 1.

    Args:
        train_series: Ground-truth series the memory is built from
        spec: Window lengths (default 12/24/60)
        latent_dim: Behaviour-space dimension D
        k: Neighbourhood size K
        rng: Seeded generator (default seed 0)

    Returns:
        CometModel ready for prediction or training
    """
    if latent_dim < 1:
        raise ConfigError(f"latent dimension must be >= 1, got {latent_dim}")
    spec = spec or WindowSpec()
    rng = rng or SplitMix64(0)
    encoder = init_encoder(latent_dim, spec, rng)
    correction = init_correction(latent_dim, rng)
    memory = build_memory(train_series, encoder, spec)
    return CometModel(encoder, correction, RetrievalParams(k=k), memory, spec)


def correction_term(state: BehaviorState, encoding: BehaviorEncoding, params: CorrectionParams) -> np.ndarray:
    """Learned correction ``W_f [z_t; z_s; z_m; z_l]`` (concatenated in that order).

    Raises:
        DimensionMismatchError: If the state or encodings do not have dimension D
    """
    dim = params.latent_dim
    if state.z.size != dim or encoding.latent_dim != dim:
        raise DimensionMismatchError(
            f"correction expects dimension {dim}, got state {state.z.size} "
            f"and encoding {encoding.latent_dim}")
    stacked = np.concatenate([state.z, encoding.z_short, encoding.z_medium, encoding.z_long])
    return params.weights @ stacked


def bound_state(z: np.ndarray, limit: float = STATE_LIMIT) -> np.ndarray:
    """Rescale ``z`` so that its largest absolute entry is at most ``limit``.

    Raises:
        TrainingDivergedError: If ``z`` holds NaN or inf
    """
    if not np.all(np.isfinite(z)):
        raise TrainingDivergedError(
            "behaviour state overflowed (non-finite entries after the state update)")
    peak = float(np.max(np.abs(z))) if z.size else 0.0
    if peak > limit:
        return np.clip(z * (limit / peak), -limit, limit)
    return z


def predict_step(model: CometModel, history: Union[TimeSeries, np.ndarray],
                 state: BehaviorState) -> Tuple[float, BehaviorState, AggregateResult]:
    """Advance the model by one step.

    Args:
        model: Trained model
        history: Ground-truth or rolled-out history, at least ``long_len`` values
        state: Incoming behaviour state z_t

    Returns:
        Tuple (x_next, new_state, diagnostics)

    Raises:
        InsufficientHistoryError: If the history is shorter than ``long_len``
        MemoryTooSmallError: If the memory holds fewer than K entries
        TrainingDivergedError: If the state update is not finite
    """
    values = as_values(history)
    encoding = encode_multiscale(values, values.size, model.encoder, model.window_spec)
    hits = topk(encoding, model.memory, model.retrieval)
    diagnostics = aggregate(hits, model.memory, model.retrieval)
    with np.errstate(over="ignore", invalid="ignore"):
        dz_learned = correction_term(state, encoding, model.correction)
        z_next = state.z + diagnostics.dz_mem + dz_learned

    x_next = float(values[-1] + diagnostics.dx_mem)
    new_state = BehaviorState(bound_state(z_next))
    return x_next, new_state, diagnostics


def rollout(model: CometModel, seed_history: Union[TimeSeries, np.ndarray], horizon: int,
            trace_states: bool = False) -> RolloutResult:
    """Generate ``horizon`` predictions autoregressively.

    Each prediction is appended to a working copy of the history and read
    back by the next step. The state starts at zero.

    Args:
        model: Trained model
        seed_history: Ground-truth history, at least ``long_len`` values
        horizon: Number of steps H (>= 1)
        trace_states: If True, keep the state after every step

    Returns:
        RolloutResult with H predictions and the per-step dx_mem trace
    """
    if horizon < 1:
        raise ConfigError(f"horizon must be >= 1, got {horizon}")
    seed_values = as_values(seed_history)
    start = seed_values.size
    buffer = np.empty(start + horizon)
    buffer[:start] = seed_values

    state = BehaviorState.zeros(model.latent_dim)
    per_step_dx = np.empty(horizon)
    states = np.empty((horizon, model.latent_dim)) if trace_states else None

    for step in range(horizon):
        end = start + step
        x_next, state, diagnostics = predict_step(model, buffer[:end], state)
        buffer[end] = x_next
        per_step_dx[step] = diagnostics.dx_mem
        if states is not None:
            states[step] = state.z

    return RolloutResult(TimeSeries(buffer[start:]), per_step_dx, states)


def parameter_count(model: CometModel) -> ModelFootprint:
    """Count learned scalars and stored bytes.

    ``param_count = D (L_s + L_m + L_l) + D * 4D + 4`` (encoders, W_f and
    w_s, w_m, w_l, gamma); bytes assume single precision;
    ``memory_bytes = N (4D + 1) * 4``.

    Example:
        D=8 with 12/24/60 windows gives 1028 parameters, 4112 bytes.
    """
    dim = model.latent_dim
    count = dim * model.window_spec.total + dim * 4 * dim + 4
    memory_bytes = model.memory.count * (4 * dim + 1) * BYTES_PER_PARAM
    return ModelFootprint(count, count * BYTES_PER_PARAM, memory_bytes)
