"""Central finite-difference checks for every analytic gradient in the project.

The checks run on tiny randomized instances so they finish in well under a
second; ``bench`` runs :func:`preflight_gradient_check` before it trains
anything.
"""
from typing import Callable, Dict, Iterable

import numpy as np

from src.config import GRADCHECK_SEEDS
from src.baselines.lstm import lstm_layout, lstm_loss_and_gradient
from src.baselines.mlp import mlp_layout, mlp_loss_and_gradient
from src.core.comet import init_model
from src.core.errors import GradientCheckError
from src.core.models import RetrievalParams
from src.core.rng import SplitMix64, derive_seed
from src.core.series import TimeSeries, WindowSpec
from .trainer import loss_gradient, one_step_loss, parameter_vector, self_entry, with_parameters

DEFAULT_STEP = 1e-5
DEFAULT_TOLERANCE = 1e-4
RELATIVE_FLOOR = 1e-6


def central_difference(fn: Callable[[np.ndarray], float], x: np.ndarray,
                       step: float = DEFAULT_STEP) -> np.ndarray:
    """Numerical gradient ``(f(x + h e_i) - f(x - h e_i)) / 2h`` for every coordinate."""
    x = np.array(x, dtype=np.float64)
    grad = np.empty_like(x)
    for i in range(x.size):
        original = x[i]
        x[i] = original + step
        f_plus = fn(x)
        x[i] = original - step
        f_minus = fn(x)
        x[i] = original
        grad[i] = (f_plus - f_minus) / (2.0 * step)
    return grad


def relative_error(analytic: np.ndarray, numeric: np.ndarray, floor: float = RELATIVE_FLOOR) -> np.ndarray:
    """Per-coordinate ``|a - n| / max(|a|, |n|, floor)``."""
    analytic = np.asarray(analytic, dtype=np.float64)
    numeric = np.asarray(numeric, dtype=np.float64)
    scale = np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), floor)
    return np.abs(analytic - numeric) / scale


def check_comet_gradient(seed: int, latent_dim: int = 2, k: int = 3, entries: int = 10,
                         delta: float = 10.0, step: float = DEFAULT_STEP) -> float:
    """Largest relative error of :func:`loss_gradient` on a random tiny instance.

    The series is a Gaussian random walk with exactly ``entries`` memory
    entries; the anchor is the last stop, with its own entry excluded. The
    neighbour set found at the base point is held fixed while differencing.
    """
    spec = WindowSpec()
    rng = SplitMix64(derive_seed(seed, "gradcheck/comet"))
    steps = [rng.gaussian() for _ in range(spec.long_len + entries)]
    series = TimeSeries(np.cumsum([1.0] + steps))

    model = init_model(series, spec, latent_dim, k, rng)
    logs = [rng.uniform(-0.5, 0.5) for _ in range(4)]
    model = with_parameters(model, np.concatenate([parameter_vector(model)[:-4], logs]))

    stop = series.length - 1
    exclude = self_entry(stop, spec)
    analytic = loss_gradient(model, stop, series, delta, exclude=exclude)

    def loss_at(theta):
        return one_step_loss(with_parameters(model, theta), stop, series, delta,
                             neighbors=analytic.neighbors)

    numeric = central_difference(loss_at, parameter_vector(model), step)
    return float(np.max(relative_error(analytic.as_vector(), numeric)))


def check_mlp_gradient(seed: int, input_len: int = 3, hidden=(3, 2), batch: int = 5,
                       step: float = DEFAULT_STEP) -> float:
    """Largest relative error of the MLP backward pass on a random tiny network."""
    rng = SplitMix64(derive_seed(seed, "gradcheck/mlp"))
    layout = mlp_layout(input_len, hidden)
    theta = rng.uniform_array(layout.size, -1.0, 1.0)
    inputs = rng.uniform_array((batch, input_len), -1.0, 1.0)
    targets = rng.uniform_array(batch, -1.0, 1.0)

    _, analytic = mlp_loss_and_gradient(theta, inputs, targets, layout)
    numeric = central_difference(lambda t: mlp_loss_and_gradient(t, inputs, targets, layout)[0], theta, step)
    return float(np.max(relative_error(analytic, numeric)))


def check_lstm_gradient(seed: int, hidden_size: int = 1, sequence_len: int = 4, batch: int = 3,
                        step: float = DEFAULT_STEP) -> float:
    """Largest relative error of LSTM backpropagation through time on a random tiny cell."""
    rng = SplitMix64(derive_seed(seed, "gradcheck/lstm"))
    layout = lstm_layout(hidden_size)
    theta = rng.uniform_array(layout.size, -1.0, 1.0)
    sequences = rng.uniform_array((batch, sequence_len), -1.0, 1.0)
    targets = rng.uniform_array(batch, -1.0, 1.0)

    _, analytic = lstm_loss_and_gradient(theta, sequences, targets, layout)
    numeric = central_difference(lambda t: lstm_loss_and_gradient(t, sequences, targets, layout)[0],
                                 theta, step)
    return float(np.max(relative_error(analytic, numeric)))


def preflight_gradient_check(seeds: Iterable[int] = GRADCHECK_SEEDS,
                             tolerance: float = DEFAULT_TOLERANCE,
                             verbose: bool = True) -> Dict[str, float]:
    """Check COMET, MLP and LSTM gradients before an experiment.

    Returns:
        Worst relative error per model

    Raises:
        GradientCheckError: If any model exceeds ``tolerance``
    """
    checks = {"comet": check_comet_gradient, "mlp": check_mlp_gradient, "lstm": check_lstm_gradient}
    seeds = list(seeds)
    worst = {}
    for name, check in checks.items():
        worst[name] = max(check(seed) for seed in seeds)
        if worst[name] > tolerance:
            raise GradientCheckError(
                f"{name} gradient differs from finite differences by {worst[name]:.3g} "
                f"(tolerance {tolerance:g})")
        if verbose:
            print(f"✓ {name} gradient check: max relative error {worst[name]:.2e}")
    return worst
