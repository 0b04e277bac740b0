"""Seeded generation of Gaussian data.

Every random object is a pure function of a shape and a :class:`Seed`. The
bits come from the Philox4x64 counter-based generator keyed by
``(seed.value, seed.stream)``; the top counter word selects a chunk, so
disjoint chunks of one stream can be generated in any order or in parallel.
Normals are produced by Box-Muller from 53-bit uniforms.
"""

import hashlib
from dataclasses import dataclass, field

import numpy as np

from .linalg import numerical_rank

_MASK64 = (1 << 64) - 1
_TWO_PI = 2.0 * np.pi
_INV_2_53 = 1.0 / 9007199254740992.0


@dataclass(frozen=True)
class Seed:
    value: int
    stream: int = 0

    def __post_init__(self):
        for name in ("value", "stream"):
            v = getattr(self, name)
            if not (0 <= int(v) <= _MASK64):
                raise ValueError(f"{name} must be a 64-bit unsigned integer, got {v}")
            object.__setattr__(self, name, int(v))

    def child(self, *path):
        """Derive an independent substream seed labelled by ``path``.

        The label may mix ints and strings. The derivation is a hash, so it
        does not depend on call order.
        """
        h = hashlib.blake2b(digest_size=8)
        h.update(self.stream.to_bytes(8, "little"))
        for p in path:
            h.update(repr(p).encode())
            h.update(b"\x00")
        return Seed(self.value, int.from_bytes(h.digest(), "little"))

    def to_dict(self):
        return {"value": self.value, "stream": self.stream}

    @classmethod
    def from_dict(cls, d):
        return cls(int(d["value"]), int(d.get("stream", 0)))


def as_seed(seed):
    if isinstance(seed, Seed):
        return seed
    if isinstance(seed, dict):
        return Seed.from_dict(seed)
    return Seed(int(seed))


def raw_bits(seed, count, chunk=0):
    """``count`` raw 64-bit words from chunk ``chunk`` of the seed's stream."""
    seed = as_seed(seed)
    bg = np.random.Philox(key=[seed.value, seed.stream], counter=[0, 0, 0, int(chunk)])
    return bg.random_raw(int(count))


def uniforms(seed, count, chunk=0):
    """Uniforms on [0, 1) with 53 random bits each."""
    return (raw_bits(seed, count, chunk) >> np.uint64(11)).astype(np.float64) * _INV_2_53


def normals(seed, count, chunk=0):
    """``count`` standard normals (Box-Muller, both outputs of each pair used)."""
    count = int(count)
    pairs = (count + 1) // 2
    raw = raw_bits(seed, 2 * pairs, chunk).reshape(pairs, 2) >> np.uint64(11)
    u1 = (raw[:, 0].astype(np.float64) + 1.0) * _INV_2_53  # (0, 1]
    u2 = raw[:, 1].astype(np.float64) * _INV_2_53
    r = np.sqrt(-2.0 * np.log(u1))
    theta = _TWO_PI * u2
    out = np.empty((pairs, 2))
    out[:, 0] = r * np.cos(theta)
    out[:, 1] = r * np.sin(theta)
    return out.reshape(-1)[:count]


def sample_gaussian_matrix(n, m, seed):
    """n x m matrix of i.i.d. N(0, 1) entries."""
    if n < 1 or m < 1:
        raise ValueError("n and m must be positive")
    return normals(seed, n * m).reshape(n, m)


@dataclass(frozen=True, eq=False)
class GluskinPolytope:
    """conv{+-G_i}: the columns of ``gamma`` are the generators G_i."""

    gamma: np.ndarray
    seed: Seed = field(default=None)

    def __post_init__(self):
        g = np.array(self.gamma, dtype=float)
        if g.ndim != 2:
            raise ValueError("gamma must be a 2-D array")
        if not np.all(np.isfinite(g)):
            raise ValueError("gamma has non-finite entries")
        g.setflags(write=False)
        object.__setattr__(self, "gamma", g)

    @property
    def n(self):
        return self.gamma.shape[0]

    @property
    def m(self):
        return self.gamma.shape[1]

    @property
    def generators(self):
        return self.gamma

    def is_full_dimensional(self):
        return numerical_rank(self.gamma) == self.n


def sample_gluskin(n, m, seed):
    if n < 2 or m < n:
        raise ValueError("need n >= 2 and m >= n")
    seed = as_seed(seed)
    return GluskinPolytope(sample_gaussian_matrix(n, m, seed), seed)


def sample_unit_directions(n, count, seed):
    """``count`` uniform points on the sphere S^{n-1}, as rows of a (count, n) array.

    The first k rows do not depend on ``count``, so direction sets for the
    same seed are nested.
    """
    if n < 1:
        raise ValueError("n must be positive")
    g = normals(seed, n * count).reshape(count, n)
    norms = np.linalg.norm(g, axis=1, keepdims=True)
    return g / norms
