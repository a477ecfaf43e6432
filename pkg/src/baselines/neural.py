"""Shared plumbing for the from-scratch neural baselines.

Parameters of a network live in one flat vector so that gradient descent
and finite-difference checks treat every architecture the same way;
:class:`ParamLayout` names the slices of that vector.
"""
import math
from dataclasses import dataclass
from typing import Callable, Dict, List, Tuple

import numpy as np

from src.core.errors import DimensionMismatchError, TrainingDivergedError
from src.core.rng import SplitMix64

LossAndGradient = Callable[[np.ndarray, np.ndarray, np.ndarray], Tuple[float, np.ndarray]]


@dataclass(frozen=True)
class ParamLayout:
    """Ordered (name, shape) slices of a flat parameter vector."""

    entries: Tuple[Tuple[str, Tuple[int, ...]], ...]

    @property
    def size(self) -> int:
        return sum(int(np.prod(shape)) for _, shape in self.entries)

    def shape(self, name: str) -> Tuple[int, ...]:
        return dict(self.entries)[name]

    def unpack(self, theta: np.ndarray) -> Dict[str, np.ndarray]:
        """Views into ``theta`` keyed by name (writes go through to ``theta``)."""
        if theta.shape != (self.size,):
            raise DimensionMismatchError(f"parameter vector of shape {theta.shape}, expected ({self.size},)")
        views = {}
        offset = 0
        for name, shape in self.entries:
            count = int(np.prod(shape))
            views[name] = theta[offset:offset + count].reshape(shape)
            offset += count
        return views

    def zeros(self) -> Tuple[np.ndarray, Dict[str, np.ndarray]]:
        theta = np.zeros(self.size)
        return theta, self.unpack(theta)


def uniform_init(layout: ParamLayout, bounds: Dict[str, float], rng: SplitMix64) -> np.ndarray:
    """Fill each named slice uniformly in [-bound, bound]; names missing from ``bounds`` stay zero."""
    theta, views = layout.zeros()
    for name, shape in layout.entries:
        bound = bounds.get(name, 0.0)
        if bound:
            views[name][...] = rng.uniform_array(shape, -bound, bound)
    return theta


def minibatch_descent(loss_and_gradient: LossAndGradient, theta: np.ndarray, inputs: np.ndarray,
                      targets: np.ndarray, epochs: int, learning_rate: float, batch_size: int,
                      name: str = "model", verbose: bool = True) -> Tuple[np.ndarray, List[float]]:
    """Plain chronological mini-batch gradient descent.

    Returns:
        Tuple (final parameters, mean loss per epoch)

    Raises:
        TrainingDivergedError: If a loss or a parameter becomes non-finite
    """
    theta = np.array(theta, dtype=np.float64)
    losses = []
    for epoch in range(1, epochs + 1):
        total = 0.0
        for first in range(0, inputs.shape[0], batch_size):
            batch_inputs = inputs[first:first + batch_size]
            loss, grad = loss_and_gradient(theta, batch_inputs, targets[first:first + batch_size])
            if not math.isfinite(loss):
                raise TrainingDivergedError(f"{name}: non-finite loss at epoch {epoch}, sample {first}")
            theta -= learning_rate * grad
            total += loss * batch_inputs.shape[0]
        if not np.all(np.isfinite(theta)):
            raise TrainingDivergedError(f"{name}: parameters diverged at epoch {epoch}")
        losses.append(total / inputs.shape[0])
        if verbose:
            print(f"   [{epoch}/{epochs}] {name} mse={losses[-1]:.6g}")
    return theta, losses
