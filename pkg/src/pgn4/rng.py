"""Seeded, platform-independent random number generation.

All randomness in this package flows through :class:`Rng`, a pure-Python
xoshiro256++ generator seeded through SplitMix64.  The generator is
implemented in-repo (rather than delegating to ``numpy.random``) so that a
64-bit seed reproduces the exact same stream on every platform and numpy
version, which is what makes experiments byte-reproducible.

An ``Rng`` is single-owner: never share one instance between concurrent
consumers.  To fan out, derive independent child streams with
:meth:`Rng.child`, whose seed-mixing rule is fixed and documented there.
"""

from __future__ import annotations

import math

import numpy as np

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15  # SplitMix64 increment (2^64 / golden ratio)


def _mix64(z: int) -> int:
    """SplitMix64 finalizer: scrambles a 64-bit value into a seed-quality one."""
    z = z & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def _rotl(x: int, k: int) -> int:
    return ((x << k) | (x >> (64 - k))) & _MASK64


class Rng:
    """xoshiro256++ generator with SplitMix64 seeding.

    State is four 64-bit words expanded from the seed with SplitMix64.
    Identical seeds produce identical output streams; distinct seeds
    produce streams that differ immediately in practice.
    """

    def __init__(self, seed: int):
        self.seed = seed & _MASK64
        s = self.seed
        state = []
        for _ in range(4):
            s = (s + _GOLDEN) & _MASK64
            state.append(_mix64(s))
        self._s = state

    def __repr__(self) -> str:
        return f"Rng(seed={self.seed})"

    def next_u64(self) -> int:
        """Advance the state once and return 64 random bits."""
        s0, s1, s2, s3 = self._s
        result = (_rotl((s0 + s3) & _MASK64, 23) + s0) & _MASK64
        t = (s1 << 17) & _MASK64
        s2 ^= s0
        s3 ^= s1
        s1 ^= s2
        s0 ^= s3
        s2 ^= t
        s3 = _rotl(s3, 45)
        self._s = [s0, s1, s2, s3]
        return result

    def child(self, index: int) -> "Rng":
        """Derive an independent child stream.

        Seed-derivation rule (fixed): ``child_seed = mix64(parent_seed XOR
        (index + 1) * GOLDEN)`` with SplitMix64's finalizer as ``mix64``.
        Distinct indices give independent streams; parallel consumers must
        each own their own child.
        """
        if index < 0:
            raise ValueError("child index must be >= 0")
        return Rng(_mix64(self.seed ^ (((index + 1) * _GOLDEN) & _MASK64)))

    # ---- floating point draws -------------------------------------------

    def uniform(self, n: int) -> np.ndarray:
        """``n`` doubles uniform on [0, 1), using the top 53 bits per draw."""
        if n < 0:
            raise ValueError("n must be >= 0")
        return np.array(
            [(self.next_u64() >> 11) * 2.0**-53 for _ in range(n)], dtype=np.float64
        )

    def normal(self, n: int, mean: float = 0.0, std: float = 1.0) -> np.ndarray:
        """``n`` draws from N(mean, std^2) via the Box-Muller transform.

        Each pair of outputs consumes two uniforms; the first uniform is
        mapped to (0, 1] so the log is always finite.  For odd ``n`` the
        spare second value of the last pair is discarded.
        """
        if n < 0:
            raise ValueError("n must be >= 0")
        if std < 0:
            raise ValueError(f"std must be >= 0, got {std}")
        out = np.empty(n, dtype=np.float64)
        i = 0
        while i < n:
            u1 = ((self.next_u64() >> 11) + 1) * 2.0**-53  # (0, 1]
            u2 = (self.next_u64() >> 11) * 2.0**-53  # [0, 1)
            r = math.sqrt(-2.0 * math.log(u1))
            theta = 2.0 * math.pi * u2
            out[i] = r * math.cos(theta)
            i += 1
            if i < n:
                out[i] = r * math.sin(theta)
                i += 1
        return out * std + mean

    # ---- integer draws ---------------------------------------------------

    def below(self, bound: int) -> int:
        """One unbiased integer in [0, bound) by masked rejection sampling."""
        if bound <= 0:
            raise ValueError("bound must be positive")
        mask = (1 << (bound - 1).bit_length()) - 1 if bound > 1 else 0
        while True:
            value = self.next_u64() & mask
            if value < bound:
                return value

    def integers(self, n: int, bound: int) -> np.ndarray:
        """``n`` independent integers in [0, bound)."""
        return np.array([self.below(bound) for _ in range(n)], dtype=np.int64)

    def permutation(self, n: int) -> np.ndarray:
        """A uniform permutation of range(n) via Fisher-Yates."""
        perm = np.arange(n, dtype=np.int64)
        for i in range(n - 1, 0, -1):
            j = self.below(i + 1)
            perm[i], perm[j] = perm[j], perm[i]
        return perm

    def partial_permutation(self, n: int, k: int) -> np.ndarray:
        """``k`` distinct indices from range(n), uniformly without replacement.

        Fisher-Yates run for only the first ``k`` positions, so it consumes
        exactly ``k`` draws regardless of ``n``.
        """
        if not 0 <= k <= n:
            raise ValueError(f"need 0 <= k <= n, got k={k}, n={n}")
        pool = np.arange(n, dtype=np.int64)
        for i in range(k):
            j = i + self.below(n - i)
            pool[i], pool[j] = pool[j], pool[i]
        return pool[:k]
