"""Counter-based random streams (Philox4x32-10).

A stream is identified by ``(seed, stream_id)``; the ``n``-th block of output
is a pure function of ``(seed, stream_id, n)``. Path kernels give each path its
own ``stream_id`` so results do not depend on how paths are split across
threads or chunks.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit

__all__ = [
    "RngStream",
    "derive_seed",
    "exponential_variate",
    "gaussian_vector",
    "philox4x32",
    "uniform_sphere_point",
]

_MASK32 = np.uint64(0xFFFFFFFF)
_MASK64 = (1 << 64) - 1
_M0 = np.uint64(0xD2511F53)
_M1 = np.uint64(0xCD9E8D57)
_W0 = np.uint64(0x9E3779B9)
_W1 = np.uint64(0xBB67AE85)
_S32 = np.uint64(32)
_S11 = np.uint64(11)
_TWO_M53 = 2.0**-53


@njit(cache=True)
def philox4x32(c0, c1, c2, c3, k0, k1):
    """Ten-round Philox4x32 bijection; all words are uint64 holding 32 bits."""
    for r in range(10):
        if r > 0:
            k0 = (k0 + _W0) & _MASK32
            k1 = (k1 + _W1) & _MASK32
        p0 = _M0 * c0
        p1 = _M1 * c2
        n0 = ((p1 >> _S32) ^ c1 ^ k0) & _MASK32
        n1 = p1 & _MASK32
        n2 = ((p0 >> _S32) ^ c3 ^ k1) & _MASK32
        n3 = p0 & _MASK32
        c0, c1, c2, c3 = n0, n1, n2, n3
    return c0, c1, c2, c3


@njit(cache=True)
def uniform_pair(key, stream, counter):
    """Two doubles in the open interval (0, 1) for block ``counter`` of a stream."""
    c0 = counter & _MASK32
    c1 = counter >> _S32
    c2 = stream & _MASK32
    c3 = stream >> _S32
    o0, o1, o2, o3 = philox4x32(c0, c1, c2, c3, key & _MASK32, key >> _S32)
    w0 = (o1 << _S32) | o0
    w1 = (o3 << _S32) | o2
    u0 = (np.float64(w0 >> _S11) + 0.5) * _TWO_M53
    u1 = (np.float64(w1 >> _S11) + 0.5) * _TWO_M53
    return u0, u1


@njit(cache=True)
def normal_pair(key, stream, counter):
    """Two independent standard normals by the Marsaglia polar method.

    Consumes one or more blocks starting at ``counter`` and returns the next
    unused block index alongside the pair.
    """
    while True:
        u0, u1 = uniform_pair(key, stream, counter)
        counter += np.uint64(1)
        a = 2.0 * u0 - 1.0
        b = 2.0 * u1 - 1.0
        s = a * a + b * b
        if 0.0 < s < 1.0:
            f = math.sqrt(-2.0 * math.log(s) / s)
            return a * f, b * f, counter


@njit(cache=True)
def _fill_uniform(key, stream, counter, out):
    m = out.size
    for j in range((m + 1) // 2):
        u0, u1 = uniform_pair(key, stream, counter + np.uint64(j))
        out[2 * j] = u0
        if 2 * j + 1 < m:
            out[2 * j + 1] = u1


@njit(cache=True)
def _fill_normal(key, stream, counter, out):
    m = out.size
    for j in range((m + 1) // 2):
        z0, z1, counter = normal_pair(key, stream, counter)
        out[2 * j] = z0
        if 2 * j + 1 < m:
            out[2 * j + 1] = z1
    return counter


def _splitmix64(z: int) -> int:
    z = (z + 0x9E3779B97F4A7C15) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def derive_seed(seed: int, tag: int) -> int:
    """Deterministic 64-bit child key for an independent family of streams."""
    return _splitmix64((int(seed) & _MASK64) ^ _splitmix64(int(tag) & _MASK64))


class RngStream:
    """One counter-based random stream.

    Draws advance an internal block counter, so two streams built from the same
    ``(seed, stream_id)`` produce identical sequences.
    """

    def __init__(self, seed: int = 0, stream_id: int = 0):
        seed, stream_id = int(seed), int(stream_id)
        if not (0 <= seed <= _MASK64 and 0 <= stream_id <= _MASK64):
            raise ValueError("seed and stream_id must be unsigned 64-bit integers")
        self.seed = seed
        self.stream_id = stream_id
        self.counter = 0

    def __repr__(self):
        return f"RngStream(seed={self.seed}, stream_id={self.stream_id}, counter={self.counter})"

    def spawn(self, tag: int) -> "RngStream":
        """A fresh stream family keyed by ``(seed, tag)``, independent of this one."""
        return RngStream(derive_seed(self.seed, tag), self.stream_id)

    def uniform(self, size: int) -> np.ndarray:
        out = np.empty(int(size), dtype=np.float64)
        _fill_uniform(np.uint64(self.seed), np.uint64(self.stream_id), np.uint64(self.counter), out)
        self.counter += (out.size + 1) // 2
        return out

    def normal(self, size: int) -> np.ndarray:
        out = np.empty(int(size), dtype=np.float64)
        self.counter = int(
            _fill_normal(np.uint64(self.seed), np.uint64(self.stream_id), np.uint64(self.counter), out)
        )
        return out


def gaussian_vector(rng: RngStream, n: int, t: float, size: int | None = None) -> np.ndarray:
    """Centred Gaussian vector(s) with covariance ``t * I_n``.

    With ``size`` given, returns an array of shape ``(size, n)``.
    """
    if not t > 0.0:
        raise ValueError(f"variance t must be positive, got {t}")
    if n < 1:
        raise ValueError(f"dimension must be >= 1, got {n}")
    count = 1 if size is None else int(size)
    z = rng.normal(count * n).reshape(count, n) * math.sqrt(t)
    return z[0] if size is None else z


def uniform_sphere_point(rng: RngStream, center, r: float, size: int | None = None) -> np.ndarray:
    """Uniform point(s) on the sphere of radius ``r`` about ``center``."""
    if not r > 0.0:
        raise ValueError(f"radius must be positive, got {r}")
    center = np.asarray(center, dtype=float)
    n = center.size
    z = gaussian_vector(rng, n, 1.0, size=1 if size is None else size)
    z /= np.linalg.norm(z, axis=1, keepdims=True)
    pts = center + r * z
    return pts[0] if size is None else pts


def exponential_variate(rng: RngStream, rate: float, size: int | None = None):
    """Exponential variate(s) with the given rate (mean ``1 / rate``)."""
    if not rate > 0.0:
        raise ValueError(f"rate must be positive, got {rate}")
    u = rng.uniform(1 if size is None else size)
    y = -np.log(u) / rate
    return float(y[0]) if size is None else y
