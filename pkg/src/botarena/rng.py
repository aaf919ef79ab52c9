"""Counter-based, splittable random numbers.

Every random draw is a pure function of a 64-bit key and an integer counter,
so the simulator never holds mutable generator state. Keys are derived
from user seeds with :class:`numpy.random.SeedSequence` and split along an
integer path with :func:`fold`. The bits come from the SplitMix64 output
function applied to ``key + (counter + 1) * golden``. All functions are
vectorised over an array of keys so that a whole batch of environments
draws in one call while each environment's stream stays independent of the
batch it sits in.
"""
from __future__ import annotations

import math

import numba as nb
import numpy as np

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)

# stream purposes
SPAWN = 1
NOISE = 2
POLICY = 3
SCENARIO = 4
EPISODE = 5


@nb.vectorize(["uint64(uint64)"], cache=True)
def _mix(z):
    # SplitMix64 finaliser; uint64 arithmetic wraps
    z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return z ^ (z >> np.uint64(31))


def seed_key(seed: int, *path: int) -> np.uint64:
    """Root key for an integer seed, optionally already split along ``path``."""
    if seed < 0:
        raise ValueError("seeds must be non-negative")
    state = np.random.SeedSequence(int(seed)).generate_state(1, np.uint64)
    key = state[0]
    return fold(np.asarray([key], dtype=np.uint64), *path)[0] if path else key


def fold(keys, *path) -> np.ndarray:
    """Split each key along a path; order of the path matters.

    Path elements are integers or integer arrays broadcast against ``keys``
    (e.g. a per-environment step counter).
    """
    keys = np.array(keys, dtype=np.uint64, ndmin=1)
    with np.errstate(over="ignore"):
        for p in path:
            p = np.asarray(p)
            if p.dtype != np.uint64:
                p = p.astype(np.int64).astype(np.uint64)
            salt = _mix(p * _GOLDEN + _GOLDEN)
            keys = _mix(keys ^ salt)
    return keys


def bits(keys, shape: tuple[int, ...] = ()) -> np.ndarray:
    """Raw uint64 draws with shape ``(len(keys), *shape)``."""
    keys = np.array(keys, dtype=np.uint64, ndmin=1)
    count = int(np.prod(shape, dtype=np.int64)) if shape else 1
    ctr = np.arange(1, count + 1, dtype=np.uint64)
    with np.errstate(over="ignore"):
        out = _mix(keys[:, None] + ctr[None, :] * _GOLDEN)
    return out.reshape((keys.size, *shape))


def uniform(keys, shape: tuple[int, ...] = (), low=0.0, high=1.0) -> np.ndarray:
    """Uniform floats in ``[low, high)`` using the top 53 bits."""
    u = (bits(keys, shape) >> np.uint64(11)).astype(np.float64) * (1.0 / 9007199254740992.0)
    return low + (high - low) * u


def normal(keys, shape: tuple[int, ...] = (), mean=0.0, std=1.0) -> np.ndarray:
    """Box-Muller normals; consumes two uniforms per output."""
    shape = tuple(shape)
    u = uniform(keys, (2, *shape))
    u1 = 1.0 - u[:, 0]  # (0, 1]
    u2 = u[:, 1]
    return mean + std * _box_muller(u1.ravel(), u2.ravel()).reshape(u1.shape)


@nb.njit(cache=True, nogil=True)
def _box_muller(u1, u2):
    # libm per element: numpy's vectorised log is not bit-stable across array lengths
    out = np.empty(u1.shape[0])
    for i in range(u1.shape[0]):
        out[i] = math.sqrt(-2.0 * math.log(u1[i])) * math.cos(2.0 * math.pi * u2[i])
    return out


def integers(keys, high: int, shape: tuple[int, ...] = ()) -> np.ndarray:
    """Integers in ``[0, high)``."""
    if high <= 0:
        raise ValueError("high must be positive")
    return np.minimum((uniform(keys, shape) * high).astype(np.int64), high - 1)


def permutation(key, n: int) -> np.ndarray:
    """Permutation of ``range(n)`` drawn from a single key."""
    return np.argsort(uniform([key], (n,))[0], kind="stable")
