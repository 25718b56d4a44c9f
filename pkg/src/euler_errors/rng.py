"""Seeded, shardable random streams.

Every stream is a Philox4x64 counter-based generator keyed by
``SeedSequence(seed, spawn_key=(shard,))``; distinct shard indices give
independent substreams without any coordination between workers.

Normals come from numpy's ziggurat sampler (exact). Uniforms are built from
52 random bits as ``(k + 1/2) / 2**52`` so they never touch 0 or 1.
Cross-language bitwise reproducibility is not a goal.
"""
from __future__ import annotations

import numpy as np

_SEED_MASK = (1 << 64) - 1
_TWO52 = float(1 << 52)


class InvalidParameter(ValueError):
    """Raised when a sampler or path builder receives an out-of-domain argument."""


class Stream:
    """Single-owner random stream identified by ``(seed, shard)``."""

    def __init__(self, seed: int, shard: int = 0):
        if shard < 0:
            raise InvalidParameter(f"shard must be >= 0, got {shard}")
        self.seed = int(seed) & _SEED_MASK
        self.shard = int(shard)
        ss = np.random.SeedSequence(self.seed, spawn_key=(self.shard,))
        self._gen = np.random.Generator(np.random.Philox(ss))

    def __repr__(self) -> str:
        return f"Stream(seed={self.seed}, shard={self.shard})"

    # -- primitives -------------------------------------------------------
    def uniform(self, size=None):
        """Uniform draws strictly inside (0, 1)."""
        k = np.floor(self._gen.random(size) * _TWO52)
        return (k + 0.5) / _TWO52

    def normal(self, size=None):
        """Standard normal draws."""
        return self._gen.standard_normal(size)

    def inverse_gaussian(self, mean, shape, size=None):
        """Inverse-Gaussian IG(mean, shape) draws; ``mean`` may be ``inf`` (Levy law)."""
        return _inverse_gaussian(self, mean, shape, size)

    def levy(self, scale, size=None):
        """Positive 1/2-stable draws ``scale / Z**2``.

        This is the first-passage time of a driftless unit-variance Brownian
        motion to a level at distance ``sqrt(scale)``.
        """
        z = self.normal(size if size is not None else np.shape(scale) or None)
        return np.asarray(scale) / (z * z)


def create_stream(seed: int, shard: int = 0) -> Stream:
    return Stream(seed, shard)


def sample_uniform(s: Stream, size=None):
    return s.uniform(size)


def sample_normal(s: Stream, mu: float = 0.0, sigma: float = 1.0, size=None):
    if sigma < 0:
        raise InvalidParameter(f"sigma must be >= 0, got {sigma}")
    if sigma == 0:
        return mu if size is None else np.full(size, float(mu))
    return mu + sigma * s.normal(size)


def sample_inverse_gaussian(s: Stream, mean_ig: float, shape: float, size=None):
    if not mean_ig > 0 or not shape > 0:
        raise InvalidParameter(f"IG parameters must be positive, got mean={mean_ig}, shape={shape}")
    return s.inverse_gaussian(mean_ig, shape, size)


def _inverse_gaussian(s: Stream, mean, shape, size=None):
    # Michael-Schucany-Haas transformation. The larger root is formed without
    # cancellation and the smaller one is recovered from root1 * root2 = mean**2,
    # which keeps the sampler accurate when mean/shape is huge (or infinite).
    mean = np.asarray(mean, dtype=float)
    shape = np.asarray(shape, dtype=float)
    if size is None:
        size = np.broadcast(mean, shape).shape or None
    z = s.normal(size)
    y = z * z
    u = s.uniform(size)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        r = mean * y / shape
        big = mean * (1.0 + 0.5 * r + 0.5 * np.sqrt(r * (4.0 + r)))
        small = mean * mean / big
        pick_small = u * (mean + small) <= mean
        out = np.where(pick_small, small, mean * mean / small)
        # mean = inf: the law degenerates to shape / Z**2
        out = np.where(np.isinf(mean), shape / y, out)
    if out.ndim == 0:
        return float(out)
    return out
