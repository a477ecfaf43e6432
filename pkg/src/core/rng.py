"""Portable, seedable random number generation.

All randomness in the project flows through :class:`SplitMix64` so that a
series or an initialization can be reproduced bit-for-bit from its seed in
any language. The generator is the public-domain SplitMix64:

    state += 0x9E3779B97F4A7C15
    z = state
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
    z = (z ^ (z >> 27)) * 0x94D049BB133111EB
    return z ^ (z >> 31)

all arithmetic modulo 2**64. Test vectors for seed 0:

    0xE220A8397B1DCDAF, 0x6E789E6AA1B965F4, 0x06C45D188009454F

Floats use the top 53 bits: ``u = (next_u64() >> 11) * 2**-53`` in [0, 1).
"""
import hashlib
import math
from typing import Tuple, Union

import numpy as np

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB
_INV_2_53 = 1.0 / (1 << 53)


def derive_seed(seed: int, label: str) -> int:
    """Derive an independent 64-bit seed for a named consumer of a run seed.

    Args:
        seed: Run seed
        label: Stable consumer name, e.g. ``"init/comet"``

    Returns:
        64-bit integer seed, identical on every platform
    """
    digest = hashlib.blake2b(f"{int(seed)}:{label}".encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "little")


class SplitMix64:
    """SplitMix64 generator with a few sampling helpers."""

    def __init__(self, seed: int = 0):
        self._state = int(seed) & _MASK64
        self._spare = None

    def next_u64(self) -> int:
        self._state = (self._state + _GOLDEN) & _MASK64
        z = self._state
        z = ((z ^ (z >> 30)) * _MIX1) & _MASK64
        z = ((z ^ (z >> 27)) * _MIX2) & _MASK64
        return z ^ (z >> 31)

    def random(self) -> float:
        """Uniform float in [0, 1)."""
        return (self.next_u64() >> 11) * _INV_2_53

    def uniform(self, low: float, high: float) -> float:
        return low + (high - low) * self.random()

    def uniform_array(self, shape: Union[int, Tuple[int, ...]], low: float, high: float) -> np.ndarray:
        """Array of uniforms filled in C (row-major) order."""
        shape = (shape,) if isinstance(shape, int) else tuple(shape)
        count = int(np.prod(shape)) if shape else 1
        flat = np.fromiter((self.uniform(low, high) for _ in range(count)), dtype=np.float64, count=count)
        return flat.reshape(shape)

    def gaussian(self) -> float:
        """Standard normal via Box-Muller; the second variate is cached."""
        if self._spare is not None:
            value, self._spare = self._spare, None
            return value
        u1 = 1.0 - self.random()  # (0, 1]
        u2 = self.random()
        radius = math.sqrt(-2.0 * math.log(u1))
        angle = 2.0 * math.pi * u2
        self._spare = radius * math.sin(angle)
        return radius * math.cos(angle)

    def geometric(self, mean: float) -> int:
        """Geometric draw on {1, 2, ...} with the given mean (inverse CDF)."""
        if mean <= 1.0:
            return 1
        p = 1.0 / mean
        u = 1.0 - self.random()  # (0, 1]
        return max(1, int(math.ceil(math.log(u) / math.log1p(-p))))
