"""Seeded, replayable random streams.

Every stream is a PCG64 generator seeded through ``numpy.random.SeedSequence``
with a spawn key derived from a stream name, so one master seed yields many
independent, named substreams. Only the raw 64-bit output of PCG64 is used;
all distributions are built here on top of a single primitive, the *base
draw*: an open-interval uniform double ``((x >> 11) + 0.5) / 2**53`` in (0, 1).

Base draws consumed per call:

=================  ==========================================
``uniform01``      1
``uniform``        1
``uniform_int``    1
``bernoulli``      1 (also for p = 0 and p = 1)
``rand_sign``      1
``choice``         1
``normal``         2 (Box-Muller, cosine branch only)
``half_normal``    2
``normals(n)``     2n
``unit_vector(d)`` 2d per attempt (attempts repeat on a zero vector)
``beta_symmetric`` variable (two gamma variates by rejection)
=================  ==========================================
"""
from __future__ import annotations

import bisect
import math
import zlib
from typing import Sequence

import numpy as np

from .errors import ConfigurationError

PRNG_ID = "pcg64-seedseq/u53-open/box-muller/v1"

_TWO_PI = 2.0 * math.pi
_SCALE = 2.0**-53
_SEED_LIMIT = 2**64
_BLOCK = 512
_SMALL = 32


def stream_key(name: str) -> int:
    """Stable integer key for a substream name."""
    return zlib.crc32(name.encode("utf-8"))


class RandomStream:
    """A single-owner deterministic random stream.

    Args:
        seed: master seed, ``0 <= seed < 2**64``.
        key: spawn key selecting an independent substream of ``seed``.
    """

    def __init__(self, seed: int, key: Sequence[int] = ()):
        seed = int(seed)
        if not 0 <= seed < _SEED_LIMIT:
            raise ConfigurationError(f"seed must be in [0, 2**64), got {seed}")
        self.seed = seed
        self.key = tuple(int(k) for k in key)
        self._bits = np.random.PCG64(np.random.SeedSequence(seed, spawn_key=self.key))
        # base draws generated ahead of use; the consumed sequence is unaffected
        self._buf: list[float] = []
        self._pos = 0
        self.draw_count = 0

    def __repr__(self) -> str:
        return f"RandomStream(seed={self.seed}, key={self.key}, draws={self.draw_count})"

    # base draws

    def _generate(self, n: int) -> np.ndarray:
        raw = self._bits.random_raw(n)
        return ((raw >> np.uint64(11)).astype(np.float64) + 0.5) * _SCALE

    def uniform01(self) -> float:
        if self._pos >= len(self._buf):
            self._buf = self._generate(_BLOCK).tolist()
            self._pos = 0
        value = self._buf[self._pos]
        self._pos += 1
        self.draw_count += 1
        return value

    def uniforms(self, n: int) -> np.ndarray:
        n = int(n)
        if n <= 0:
            return np.empty(0)
        self.draw_count += n
        take = min(n, len(self._buf) - self._pos)
        head = np.array(self._buf[self._pos:self._pos + take], dtype=np.float64)
        self._pos += take
        if take == n:
            return head
        return np.concatenate([head, self._generate(n - take)])

    # scalar distributions

    def uniform(self, lo: float, hi: float) -> float:
        if lo > hi:
            raise ConfigurationError(f"uniform needs lo <= hi, got [{lo}, {hi}]")
        return lo + (hi - lo) * self.uniform01()

    def uniform_int(self, lo: int, hi: int) -> int:
        """Integer uniform on the closed range ``[lo, hi]``."""
        if lo > hi:
            raise ConfigurationError(f"uniform_int needs lo <= hi, got [{lo}, {hi}]")
        span = hi - lo + 1
        return lo + min(int(self.uniform01() * span), span - 1)

    def bernoulli(self, p: float) -> bool:
        if not 0.0 <= p <= 1.0:
            raise ConfigurationError(f"probability must be in [0, 1], got {p}")
        return self.uniform01() < p

    def rand_sign(self) -> int:
        return -1 if self.uniform01() < 0.5 else 1

    def choice(self, weights: Sequence[float]) -> int:
        """Index ``i`` with probability ``weights[i] / sum(weights)``."""
        cumulative = list(np.cumsum(np.asarray(weights, dtype=float)))
        u = self.uniform01() * cumulative[-1]
        return min(bisect.bisect_right(cumulative, u), len(cumulative) - 1)

    def normal(self) -> float:
        u1 = self.uniform01()
        u2 = self.uniform01()
        return math.sqrt(-2.0 * math.log(u1)) * math.cos(_TWO_PI * u2)

    def half_normal(self) -> float:
        return abs(self.normal())

    # vector distributions

    def normals(self, n: int) -> np.ndarray:
        """``n`` standard normals; pairs of base draws are consumed in order.

        Short vectors go through the scalar path (``math``), long ones through
        numpy; the split depends only on ``n``, so replays are exact.
        """
        n = int(n)
        if n <= _SMALL:
            return np.array([self.normal() for _ in range(n)])
        u = self.uniforms(2 * n)
        return np.sqrt(-2.0 * np.log(u[0::2])) * np.cos(_TWO_PI * u[1::2])

    def unit_vector(self, d: int) -> np.ndarray:
        """Direction uniform on the unit sphere in ``d`` dimensions."""
        if d < 1:
            raise ConfigurationError(f"dimension must be >= 1, got {d}")
        while True:
            if d <= _SMALL:
                r = [self.normal() for _ in range(d)]
                norm = math.sqrt(math.fsum(x * x for x in r))
                if norm > 0.0:
                    return np.array([x / norm for x in r])
            else:
                r = self.normals(d)
                norm = float(np.sqrt(np.dot(r, r)))
                if norm > 0.0:
                    return r / norm

    def log_gamma(self, shape: float) -> float:
        """Logarithm of a Gamma(shape, 1) variate.

        Marsaglia-Tsang squeeze for shape >= 1. Smaller shapes use the boost
        ``G(a) = G(a + 1) * U**(1/a)`` carried out in log space, which stays
        finite even when ``G(a)`` itself would underflow (a < 0.2).
        """
        if shape <= 0:
            raise ConfigurationError(f"gamma shape must be > 0, got {shape}")
        if shape < 1.0:
            return self.log_gamma(shape + 1.0) + math.log(self.uniform01()) / shape
        d = shape - 1.0 / 3.0
        c = 1.0 / math.sqrt(9.0 * d)
        while True:
            x = self.normal()
            v = 1.0 + c * x
            if v <= 0.0:
                continue
            v = v * v * v
            u = self.uniform01()
            if math.log(u) < 0.5 * x * x + d - d * v + d * math.log(v):
                return math.log(d) + math.log(v)

    def beta_symmetric(self, alpha: float) -> float:
        """One draw of ``2 * Beta(alpha, alpha) - 1`` in [-1, 1].

        With ``X, Y ~ Gamma(alpha)``, ``2 X / (X + Y) - 1 = tanh((ln X - ln Y) / 2)``,
        which avoids forming the ratio of two possibly-underflowing gammas.
        """
        if not alpha > 0:
            raise ConfigurationError(f"beta shape must be > 0, got {alpha}")
        lx = self.log_gamma(alpha)
        ly = self.log_gamma(alpha)
        return math.tanh(0.5 * (lx - ly))


class StreamSet:
    """Named substreams split from one master seed.

    Each dynamic owns its substream, so changing one dynamic's probability
    never shifts the draws seen by another. Per-component local dynamics are
    keyed by the component's creation id, not its current list position.
    """

    NAMES = (
        "init",
        "global-shock",
        "dgc-count",
        "var-count",
        "cluster-count",
        "sampling",
        "optimizer",
    )

    def __init__(self, seed: int):
        self.seed = int(seed)
        self._streams = {name: RandomStream(self.seed, (stream_key(name),)) for name in self.NAMES}
        self._local: dict[int, RandomStream] = {}

    def __getitem__(self, name: str) -> RandomStream:
        return self._streams[name]

    def local(self, uid: int) -> RandomStream:
        stream = self._local.get(uid)
        if stream is None:
            stream = RandomStream(self.seed, (stream_key("local"), int(uid)))
            self._local[uid] = stream
        return stream

    def drop_local(self, uid: int) -> None:
        self._local.pop(uid, None)
