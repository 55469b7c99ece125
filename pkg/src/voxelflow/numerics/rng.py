"""Deterministic random streams.

The generator is pinned to splitmix64-seeded xoshiro256** so that a given
seed produces the identical draw sequence on every platform, independent
of numpy's own generator evolution.
"""

import math

import numpy as np

from ..errors import VoxelflowError

_M64 = (1 << 64) - 1


class BadParam(VoxelflowError):
    """Invalid distribution parameter (bad range, negative sigma, ...)."""


def _splitmix64(state):
    state = (state + 0x9E3779B97F4A7C15) & _M64
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _M64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _M64
    return state, z ^ (z >> 31)


def _rotl(x, k):
    return ((x << k) | (x >> (64 - k))) & _M64


def _fnv1a(text):
    h = 0xCBF29CE484222325
    for b in text.encode("utf-8"):
        h = ((h ^ b) * 0x100000001B3) & _M64
    return h


def derive_seed(seed, *parts):
    """Mix extra components (ints or strings) into a seed.

    Used for per-module and per-epoch stream derivation: one global seed,
    many independent reproducible streams.
    """
    state = seed & _M64
    for part in parts:
        token = _fnv1a(part) if isinstance(part, str) else part & _M64
        _, mixed = _splitmix64(state ^ token)
        state = mixed
    return state


class Rng:
    """xoshiro256** stream, state filled from splitmix64 of the seed."""

    def __init__(self, seed):
        self.seed = seed & _M64
        state = self.seed
        s = []
        for _ in range(4):
            state, word = _splitmix64(state)
            s.append(word)
        self._s = s

    def next_u64(self):
        s0, s1, s2, s3 = self._s
        result = (_rotl((s1 * 5) & _M64, 7) * 9) & _M64
        t = (s1 << 17) & _M64
        s2 ^= s0
        s3 ^= s1
        s1 ^= s2
        s0 ^= s3
        s2 ^= t
        s3 = _rotl(s3, 45)
        self._s = [s0, s1, s2, s3]
        return result

    def next_float(self):
        # 53-bit mantissa double in [0, 1)
        return (self.next_u64() >> 11) * (1.0 / (1 << 53))

    def uniform(self, lo, hi):
        if not lo < hi:
            raise BadParam(f"uniform requires lo < hi, got [{lo}, {hi})")
        return lo + self.next_float() * (hi - lo)

    def normal(self, mu=0.0, sigma=1.0):
        if sigma < 0:
            raise BadParam(f"normal requires sigma >= 0, got {sigma}")
        # Box-Muller, cosine branch only: one pinned value per two draws
        u1 = self.next_float()
        u2 = self.next_float()
        z = math.sqrt(-2.0 * math.log(1.0 - u1)) * math.cos(2.0 * math.pi * u2)
        return mu + sigma * z

    def fill_uniform(self, shape, lo, hi):
        if not lo < hi:
            raise BadParam(f"uniform requires lo < hi, got [{lo}, {hi})")
        n = int(np.prod(shape)) if shape else 1
        out = np.empty(n, dtype=np.float64)
        for i in range(n):
            out[i] = lo + self.next_float() * (hi - lo)
        return out.reshape(shape).astype(np.float32)

    def fill_normal(self, shape, mu, sigma):
        if sigma < 0:
            raise BadParam(f"normal requires sigma >= 0, got {sigma}")
        n = int(np.prod(shape)) if shape else 1
        out = np.empty(n, dtype=np.float64)
        for i in range(n):
            out[i] = self.normal(mu, sigma)
        return out.reshape(shape).astype(np.float32)

    def he_normal(self, shape, fan_in):
        if fan_in <= 0:
            raise BadParam(f"he_normal requires positive fan_in, got {fan_in}")
        return self.fill_normal(shape, 0.0, math.sqrt(2.0 / fan_in))

    def glorot_uniform(self, shape, fan_in, fan_out):
        if fan_in <= 0 or fan_out <= 0:
            raise BadParam("glorot_uniform requires positive fan_in and fan_out")
        bound = math.sqrt(6.0 / (fan_in + fan_out))
        return self.fill_uniform(shape, -bound, bound)

    def randbelow(self, n):
        # modulo draw; bias is negligible for the index ranges used here
        return self.next_u64() % n

    def permutation(self, n):
        """Fisher-Yates shuffle of range(n)."""
        idx = list(range(n))
        for i in range(n - 1, 0, -1):
            j = self.randbelow(i + 1)
            idx[i], idx[j] = idx[j], idx[i]
        return idx
