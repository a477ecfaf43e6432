"""One-step Huber training of the COMET encoders and retrieval parameters.

Every anchor is teacher-forced: windows are always read from the
ground-truth training series, never from a prediction. For anchor stop
``s`` (history ``values[:s]``, target ``values[s]``) the loss is

    L = Huber(x_t + sum_i alpha_i dx_i, x_{t+1})

and its gradient is taken with three simplifications:

- the top-K index set is held constant (straight-through selection)
- memory entries are constants, even though they were encoded with the
  same weights; ``memory_rebuild`` re-encodes them once per epoch
- W_f has no path to the output and is never updated

Each anchor's own transition is left out of its neighbourhood, otherwise
the supervised transition would be retrieved at distance 0.
"""
import math
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, List, Optional, Tuple, Union

import numpy as np
import pandas as pd
from scipy.special import huber as _scipy_huber
from sklearn.metrics import mean_absolute_error

from src.config import (
    CSV_FLOAT_FORMAT,
    DEFAULT_BATCH_SIZE,
    DEFAULT_EPOCHS,
    DEFAULT_HUBER_DELTA,
    DEFAULT_K,
    DEFAULT_LATENT_DIM,
    DEFAULT_LEARNING_RATE,
    DEFAULT_SEED,
)
from src.core.comet import init_model, predict_step
from src.core.encoder import encode_multiscale
from src.core.errors import (
    ConfigError,
    InsufficientHistoryError,
    SeriesTooShortError,
    TrainingDivergedError,
)
from src.core.memory import (
    build_memory,
    encode_stops,
    memory_distances,
    retrieval_weights,
    scale_distances,
    select_neighbors,
)
from src.core.models import (
    BehaviorEncoding,
    BehaviorState,
    CometModel,
    EncoderParams,
    MemoryStore,
    RetrievalParams,
)
from src.core.rng import SplitMix64, derive_seed
from src.core.series import TimeSeries, WindowSpec, as_values, window

# exp() of a log-parameter beyond this overflows double precision
_MAX_LOG_PARAM = 700.0


@dataclass(frozen=True)
class TrainConfig:
    """Optimizer and loss settings for :func:`train`."""

    epochs: int = DEFAULT_EPOCHS
    learning_rate: float = DEFAULT_LEARNING_RATE
    huber_delta: float = DEFAULT_HUBER_DELTA
    seed: int = DEFAULT_SEED
    memory_rebuild: bool = True
    log_every: int = 1
    batch_size: int = DEFAULT_BATCH_SIZE
    leave_one_out: bool = True
    memory_with_validation: bool = True

    def __post_init__(self):
        if int(self.epochs) < 1:
            raise ConfigError(f"epochs must be >= 1, got {self.epochs}")
        if not self.learning_rate > 0:
            raise ConfigError(f"learning_rate must be > 0, got {self.learning_rate}")
        if not self.huber_delta > 0:
            raise ConfigError(f"huber_delta must be > 0, got {self.huber_delta}")
        if int(self.batch_size) < 1:
            raise ConfigError(f"batch_size must be >= 1, got {self.batch_size}")
        if int(self.log_every) < 1:
            raise ConfigError(f"log_every must be >= 1, got {self.log_every}")


@dataclass
class TrainReport:
    """Per-epoch training history.

    ``val_mae`` holds NaN for every epoch when no validation series was given.
    ``best_epoch`` is 1-based and names the epoch whose parameters were kept.
    """

    epoch_losses: List[float] = field(default_factory=list)
    val_mae: List[float] = field(default_factory=list)
    best_epoch: int = 0
    anchors_per_epoch: int = 0
    elapsed: float = 0.0

    @property
    def final_val_mae(self) -> float:
        if not self.best_epoch:
            return float("nan")
        return self.val_mae[self.best_epoch - 1]


@dataclass(frozen=True)
class CometGradient:
    """Gradient of one anchor's Huber loss, plus the forward values that produced it."""

    weights_short: np.ndarray
    weights_medium: np.ndarray
    weights_long: np.ndarray
    log_weights: np.ndarray
    log_gamma: float
    loss: float
    prediction: float
    neighbors: np.ndarray

    def as_vector(self) -> np.ndarray:
        """Flatten in :func:`parameter_vector` order."""
        return np.concatenate([self.weights_short.ravel(), self.weights_medium.ravel(),
                               self.weights_long.ravel(), self.log_weights, [self.log_gamma]])


def huber(prediction, target, delta: float):
    """Huber loss of ``e = prediction - target``.

    ``e**2 / 2`` when ``|e| <= delta``, else ``delta * (|e| - delta / 2)``.

    Example:
        >>> huber(0.5, 0.0, 1.0)
        0.125
        >>> huber(3.0, 0.0, 1.0)
        2.5
    """
    if not delta > 0:
        raise ConfigError(f"huber delta must be > 0, got {delta}")
    error = np.asarray(prediction, dtype=np.float64) - np.asarray(target, dtype=np.float64)
    loss = _scipy_huber(delta, error)
    return float(loss) if np.ndim(loss) == 0 else loss


def huber_derivative(error, delta: float):
    """dHuber/de: the error clipped to [-delta, delta]."""
    return np.clip(error, -delta, delta)


def parameter_vector(model: CometModel) -> np.ndarray:
    """Trainable parameters as one vector: E_s, E_m, E_l (row-major), log w_s/w_m/w_l, log gamma."""
    return np.concatenate([m.ravel() for m in model.encoder.matrices()] + [model.retrieval.log_vector()])


def with_parameters(model: CometModel, theta: np.ndarray, memory: MemoryStore = None) -> CometModel:
    """Copy of ``model`` with trainable parameters taken from ``theta``.

    W_f is carried over unchanged; the memory is kept unless one is given.
    """
    theta = np.asarray(theta, dtype=np.float64)
    dim = model.latent_dim
    matrices = []
    offset = 0
    for length in model.window_spec.lengths:
        matrices.append(theta[offset:offset + dim * length].reshape(dim, length))
        offset += dim * length
    if theta.size != offset + 4:
        raise ConfigError(f"parameter vector has {theta.size} entries, expected {offset + 4}")
    retrieval = RetrievalParams(*theta[offset:offset + 4], k=model.k)
    return CometModel(EncoderParams(*matrices), model.correction, retrieval,
                      memory if memory is not None else model.memory, model.window_spec)


def self_entry(stop: int, spec: WindowSpec) -> int:
    """Index of the memory entry that stores the transition at history stop ``stop``."""
    return stop - (spec.long_len + 1)


def _check_anchor(values: np.ndarray, stop: int, spec: WindowSpec):
    if stop < spec.long_len:
        raise InsufficientHistoryError(spec.long_len, stop)
    if stop >= values.size:
        raise InsufficientHistoryError(stop + 1, values.size, "series for the target value")


def _anchor_gradient(model: CometModel, values: np.ndarray, stop: int, encoding: BehaviorEncoding,
                     delta: float, neighbors: Optional[np.ndarray],
                     exclude: Optional[int]) -> CometGradient:
    memory = model.memory
    retrieval = model.retrieval
    spec = model.window_spec

    per_scale = scale_distances(encoding, memory)
    if neighbors is None:
        distances = memory_distances(encoding, memory, retrieval, per_scale)
        neighbors = select_neighbors(distances, retrieval.k, exclude)
    neighbors = np.asarray(neighbors, dtype=np.int64)

    weights = retrieval.weights
    gamma = retrieval.gamma
    local = per_scale[:, neighbors]
    d = weights[0] * local[0] + weights[1] * local[1] + weights[2] * local[2]
    soft, alpha = retrieval_weights(d, gamma)
    dx = memory.dx[neighbors]

    x_t = values[stop - 1]
    prediction = float(x_t + alpha @ dx)
    error = prediction - values[stop]
    loss = huber(prediction, values[stop], delta)

    psi = float(huber_derivative(error, delta))
    grad_u = psi * RetrievalParams.mix_softmax * soft * (dx - soft @ dx)
    grad_d = -gamma * grad_u

    grad_log_weights = np.array([weights[c] * (grad_d @ local[c]) for c in range(3)])
    grad_log_gamma = float(np.sum(grad_u * (-gamma * d)))

    grad_matrices = []
    for c, (z, z_store, length) in enumerate(zip(encoding.scales(), memory.scales(), spec.lengths)):
        signs = np.sign(z[None, :] - z_store[neighbors])
        grad_z = weights[c] * (grad_d @ signs)
        grad_matrices.append(np.outer(grad_z, window(values, stop, length)))

    return CometGradient(*grad_matrices, grad_log_weights, grad_log_gamma,
                         loss, prediction, neighbors)


def loss_gradient(model: CometModel, stop: int, train_series: Union[TimeSeries, np.ndarray],
                  delta: float = DEFAULT_HUBER_DELTA, neighbors: Optional[np.ndarray] = None,
                  exclude: Optional[int] = None) -> CometGradient:
    """Analytic gradient of one anchor's Huber loss.

    Args:
        model: Current model
        stop: History stop of the anchor; the target is ``values[stop]``
        train_series: Ground-truth series the anchor is read from
        delta: Huber threshold
        neighbors: Fixed neighbour indices (default: retrieve the top K)
        exclude: Memory entry to leave out of retrieval

    Returns:
        CometGradient with respect to the encoder weights and the four
        log-parameters, along with the loss and the prediction

    Raises:
        InsufficientHistoryError: If the anchor has no full window or no target
    """
    values = as_values(train_series)
    _check_anchor(values, stop, model.window_spec)
    encoding = encode_multiscale(values, stop, model.encoder, model.window_spec)
    return _anchor_gradient(model, values, stop, encoding, delta, neighbors, exclude)


def one_step_loss(model: CometModel, stop: int, train_series: Union[TimeSeries, np.ndarray],
                  delta: float = DEFAULT_HUBER_DELTA, neighbors: Optional[np.ndarray] = None,
                  exclude: Optional[int] = None) -> float:
    """Huber loss of one teacher-forced anchor (the quantity :func:`loss_gradient` differentiates)."""
    return loss_gradient(model, stop, train_series, delta, neighbors, exclude).loss


def one_step_mae(model: CometModel, series: Union[TimeSeries, np.ndarray]) -> float:
    """Teacher-forced one-step MAE over every stop of ``series`` that has a full window."""
    values = as_values(series)
    stops = range(model.window_spec.long_len, values.size)
    if not len(stops):
        raise SeriesTooShortError(
            f"one-step MAE needs at least {model.window_spec.long_len + 1} values, got {values.size}")
    state = BehaviorState.zeros(model.latent_dim)
    predictions = [predict_step(model, values[:stop], state)[0] for stop in stops]
    return float(mean_absolute_error(values[stops.start:], predictions))


def _append_log(log_path: Path, epoch: int, loss: float, val_mae: float):
    row = pd.DataFrame([{"epoch": epoch, "mean_loss": loss, "val_mae": val_mae}])
    row.to_csv(log_path, mode="a", header=False, index=False,
               float_format=CSV_FLOAT_FORMAT, na_rep="", lineterminator="\n")


def train(series: TimeSeries,
          window_spec: WindowSpec = None,
          config: TrainConfig = None,
          latent_dim: int = DEFAULT_LATENT_DIM,
          k: int = DEFAULT_K,
          validation: Optional[TimeSeries] = None,
          verbose: bool = True,
          log_path: Optional[Union[str, Path]] = None,
          on_anchor: Optional[Callable[[int, np.ndarray], None]] = None) -> Tuple[CometModel, TrainReport]:
    """Train a COMET model with mini-batch gradient descent on the one-step Huber loss.

    Anchors are visited in chronological order and grouped into batches of
    ``config.batch_size``; each batch applies the mean gradient once.
    Per-anchor gradients are summed in anchor order.

    Args:
        series: Training series; the memory is built from it
        window_spec: Window lengths (default 12/24/60)
        config: Optimizer settings
        latent_dim: Behaviour-space dimension D
        k: Neighbourhood size K
        validation: Optional held-out series for best-epoch selection
        verbose: Print progress
        log_path: CSV file receiving ``epoch,mean_loss,val_mae`` rows
        on_anchor: Called with (stop, history) for every anchor visited

    Returns:
        Tuple (model, report); the model carries the best-validation
        parameters, or the final ones without a validation series

    With ``config.memory_with_validation`` the kept model's memory is
    re-encoded over ``series`` followed by ``validation``, so the two must be
    chronologically contiguous. The validation series is still only used
    for selection while training.

    Raises:
        SeriesTooShortError: If the memory cannot supply K neighbours
        TrainingDivergedError: If the loss or a parameter becomes non-finite
    """
    spec = window_spec or WindowSpec()
    config = config or TrainConfig()
    values = as_values(series)
    held_out = 1 if config.leave_one_out else 0
    required = spec.long_len + 1 + k + held_out
    if values.size < required:
        raise SeriesTooShortError(
            f"training with K={k} needs at least {required} values, series has {values.size}")
    has_validation = validation is not None and validation.length > spec.long_len

    start_time = time.perf_counter()
    rng = SplitMix64(derive_seed(config.seed, "init/comet"))
    model = init_model(series, spec, latent_dim, k, rng)
    theta = parameter_vector(model)
    memory = model.memory
    stops = np.arange(spec.long_len, values.size, dtype=np.int64)

    report = TrainReport(anchors_per_epoch=int(stops.size))
    best = (math.inf, theta, memory)

    if log_path is not None:
        log_path = Path(log_path)
        log_path.parent.mkdir(parents=True, exist_ok=True)
        log_path.write_text("epoch,mean_loss,val_mae\n")

    if verbose:
        print("=" * 70)
        print("🚀 Training COMET")
        print("=" * 70)
        print(f"   Train values: {values.size}, anchors/epoch: {stops.size}, memory entries: {memory.count}")
        print(f"   D={latent_dim}, K={k}, epochs={config.epochs}, lr={config.learning_rate}, "
              f"huber_delta={config.huber_delta}, batch={config.batch_size}")
        if not has_validation:
            print("⚠️  No validation series: keeping the final epoch")

    for epoch in range(1, config.epochs + 1):
        loss_sum = 0.0
        for first in range(0, stops.size, config.batch_size):
            batch = stops[first:first + config.batch_size]
            current = with_parameters(model, theta, memory)
            encoded = encode_stops(values, current.encoder, spec, batch)
            grad_sum = np.zeros_like(theta)
            for row, stop in enumerate(batch):
                stop = int(stop)
                if on_anchor is not None:
                    on_anchor(stop, values[:stop])
                encoding = BehaviorEncoding(encoded[0][row], encoded[1][row], encoded[2][row])
                exclude = self_entry(stop, spec) if config.leave_one_out else None
                gradient = _anchor_gradient(current, values, stop, encoding,
                                            config.huber_delta, None, exclude)
                if not math.isfinite(gradient.loss):
                    raise TrainingDivergedError(
                        f"non-finite loss at epoch {epoch}, anchor {stop}")
                grad_sum += gradient.as_vector()
                loss_sum += gradient.loss
            theta = theta - config.learning_rate * grad_sum / batch.size
            if not np.all(np.isfinite(theta)) or np.any(np.abs(theta[-4:]) > _MAX_LOG_PARAM):
                raise TrainingDivergedError(
                    f"parameters diverged at epoch {epoch}, batch ending at anchor {int(batch[-1])}")

        if config.memory_rebuild:
            memory = build_memory(series, with_parameters(model, theta, memory).encoder, spec)

        mean_loss = loss_sum / stops.size
        val_mae = (one_step_mae(with_parameters(model, theta, memory), validation)
                   if has_validation else float("nan"))
        report.epoch_losses.append(mean_loss)
        report.val_mae.append(val_mae)

        if has_validation:
            if val_mae < best[0]:
                best = (val_mae, theta, memory)
                report.best_epoch = epoch
        else:
            best = (math.inf, theta, memory)
            report.best_epoch = epoch

        if log_path is not None:
            _append_log(log_path, epoch, mean_loss, val_mae)
        if verbose and (epoch % config.log_every == 0 or epoch == config.epochs):
            line = f"[{epoch}/{config.epochs}] loss={mean_loss:.6g}"
            if has_validation:
                line += f"  val_mae={val_mae:.6g}"
            print(line)

    _, theta, memory = best
    trained = with_parameters(model, theta, memory)
    if config.memory_with_validation and validation is not None and validation.length:
        extended = TimeSeries(np.concatenate([values, as_values(validation)]))
        trained = with_parameters(trained, theta, build_memory(extended, trained.encoder, spec))
        if verbose:
            print(f"💾 Memory re-encoded over train + validation: {trained.memory.count} entries")
    report.elapsed = time.perf_counter() - start_time
    if verbose:
        print(f"✓ Training complete in {report.elapsed:.1f}s (kept epoch {report.best_epoch})")
    return trained, report
