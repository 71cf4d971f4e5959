"""Counter-based random numbers for numba kernels.

Every draw is a pure function of (seed, path, counter), so results do
not depend on how paths are split across threads.
"""

import numpy as np
from numba import njit, uint64

_GOLDEN = uint64(0x9E3779B97F4A7C15)
_M1 = uint64(0xBF58476D1CE4E5B9)
_M2 = uint64(0x94D049BB133111EB)
_TWO53 = 1.0 / 9007199254740992.0


@njit(cache=True, inline="always")
def mix64(z):
    z = uint64(z) + _GOLDEN
    z = (z ^ (z >> uint64(30))) * _M1
    z = (z ^ (z >> uint64(27))) * _M2
    return z ^ (z >> uint64(31))


@njit(cache=True, inline="always")
def path_key(seed, path):
    return mix64(uint64(seed) ^ mix64(uint64(path)))


@njit(cache=True, inline="always")
def uniform(key, counter):
    """Uniform on the open interval (0, 1)."""
    z = mix64(key + uint64(counter) * _GOLDEN)
    return (float(z >> uint64(11)) + 0.5) * _TWO53


@njit(cache=True, inline="always")
def normal(key, counter):
    """Standard normal from two uniforms (counters ``counter`` and ``counter + 1``)."""
    u1 = uniform(key, counter)
    u2 = uniform(key, counter + 1)
    return np.sqrt(-2.0 * np.log(u1)) * np.cos(2.0 * np.pi * u2)


def seed_to_uint64(seed: int) -> int:
    """Fold an arbitrary Python integer into 64 bits."""
    return int(seed) & 0xFFFFFFFFFFFFFFFF


@njit(cache=True, inline="always")
def normal_pair(key, counter):
    """Two independent standard normals from counters ``2 counter`` and ``2 counter + 1``."""
    u1 = uniform(key, 2 * counter)
    u2 = uniform(key, 2 * counter + 1)
    rad = np.sqrt(-2.0 * np.log(u1))
    ang = 2.0 * np.pi * u2
    return rad * np.cos(ang), rad * np.sin(ang)


@njit(cache=True, inline="always")
def substream(key, tag):
    """Independent key for a second stream on the same path."""
    return mix64(key ^ mix64(uint64(tag)))
