"""Gaussian measure of cross-polytopes and Gluskin polytopes.

Monte Carlo estimates draw the Gaussian test vectors in fixed-size chunks,
one Philox counter block per chunk, so the estimate depends only on
(polytope, scale, samples, seed) and not on how many workers evaluate the
chunks.
"""

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import signal, special, stats

from . import linalg
from .errors import Degenerate
from .lp import gauge as lp_gauge
from .polytope import CrossPolytope
from .sampling import GluskinPolytope, Seed, as_seed, normals

CHUNK = 8192
CONFIDENCE = 0.99


@dataclass(frozen=True)
class MeasureEstimate:
    estimate: float
    ci_low: float
    ci_high: float
    samples: int
    seed: Seed
    hits: int
    degenerate: bool = False

    @property
    def width(self):
        return self.ci_high - self.ci_low


@dataclass(frozen=True)
class CalibrationConstants:
    """The unspecified universal constants, each with a provenance tag."""

    c_span: float = 0.01
    C_span: float = 1.0
    c_tilt: float = 0.05
    C_p1: float = 1.0
    C_p2: float = 1.0
    c_prime: float = 1.0
    C_prime: float = 1.0
    C_s: float = 1.0
    c_sum: float = 3e-5
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        for name in self.names():
            if not getattr(self, name) > 0:
                raise ValueError(f"constant {name} must be positive")
        prov = {name: "assumed" for name in self.names()}
        prov.update(self.provenance or {})
        object.__setattr__(self, "provenance", prov)

    @staticmethod
    def names():
        return ("c_span", "C_span", "c_tilt", "C_p1", "C_p2", "c_prime", "C_prime", "C_s", "c_sum")

    def replace(self, provenance_tag="assumed", **changes):
        values = {name: getattr(self, name) for name in self.names()}
        values.update(changes)
        prov = dict(self.provenance)
        prov.update({name: provenance_tag for name in changes})
        return CalibrationConstants(**values, provenance=prov)

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, d):
        return cls(**d)


def clopper_pearson(hits, trials, confidence=CONFIDENCE):
    """Exact two-sided binomial interval."""
    a = 1.0 - confidence
    lo = 0.0 if hits == 0 else float(stats.beta.ppf(a / 2, hits, trials - hits + 1))
    hi = 1.0 if hits == trials else float(stats.beta.ppf(1 - a / 2, hits + 1, trials - hits))
    return lo, hi


def _chunk_normals(seed, n, chunk, size):
    return normals(seed, CHUNK * n, chunk=chunk).reshape(CHUNK, n)[:size]


def _chunk_gauges(P, factors, seed, chunk, size):
    g = _chunk_normals(seed, P.n, chunk, size)
    if factors is not None:
        return np.abs(linalg.lu_solve(factors, g.T)).sum(axis=0)
    gens = P.gamma if isinstance(P, GluskinPolytope) else P.generators
    return np.array([lp_gauge(v, gens) for v in g])


def gauge_samples(P, samples, seed, workers=1):
    """Gauge of P at each Gaussian sample (inf where off-span).

    The sample G lies in rho * P iff its gauge is <= rho, so thresholding
    one gauge array at several scales gives pathwise-coupled estimates.
    """
    seed = as_seed(seed)
    factors = None
    if isinstance(P, CrossPolytope):
        if P.degenerate:
            raise Degenerate("cross-polytope is degenerate")
        factors = P.factor()
    elif not isinstance(P, GluskinPolytope):
        raise TypeError(f"unsupported body {type(P).__name__}")
    nchunks = -(-samples // CHUNK)
    sizes = [min(CHUNK, samples - c * CHUNK) for c in range(nchunks)]
    if workers > 1 and nchunks > 1:
        with ThreadPoolExecutor(workers) as ex:
            parts = list(ex.map(lambda c: _chunk_gauges(P, factors, seed, c, sizes[c]), range(nchunks)))
    else:
        parts = [_chunk_gauges(P, factors, seed, c, sizes[c]) for c in range(nchunks)]
    return np.concatenate(parts)


def estimate_from_hits(hits, samples, seed, degenerate=False):
    lo, hi = clopper_pearson(hits, samples)
    return MeasureEstimate(hits / samples, lo, hi, samples, as_seed(seed), int(hits), degenerate)


def gaussian_measure_mc(P, rho, samples, seed, workers=1):
    """Monte Carlo estimate of gamma_n(rho * P) with a 99% Clopper-Pearson interval."""
    if samples < 100:
        raise ValueError("at least 100 samples required")
    if not rho > 0:
        raise ValueError("rho must be positive")
    if isinstance(P, CrossPolytope) and P.degenerate:
        return estimate_from_hits(0, samples, seed, degenerate=True)
    g = gauge_samples(P, samples, seed, workers)
    return estimate_from_hits(int(np.count_nonzero(g <= rho)), samples, seed)


# -------------------------------------------------------------------- oracle


def _trapezoid_conv(fa, fb, step):
    full = signal.fftconvolve(fa, fb)[: fa.size]
    full -= 0.5 * (fa[0] * fb + fb[0] * fa)
    return full * step


def _axis_measure(norms, points):
    y = np.linspace(0.0, 1.0, points + 1)
    step = 1.0 / points
    norms = list(norms)
    last = norms[-1]
    density = None
    for s in norms[:-1]:
        f = 2.0 * s * np.exp(-0.5 * (s * y) ** 2) / math.sqrt(2.0 * math.pi)
        density = f if density is None else _trapezoid_conv(density, f, step)
    tail = special.erf(last * (1.0 - y) / math.sqrt(2.0))
    if density is None:
        return float(tail[0])
    w = np.full(y.size, step)
    w[0] = w[-1] = 0.5 * step
    return float(np.clip(np.sum(w * density * tail), 0.0, 1.0))


def axis_cross_polytope_measure(norms, points=4096):
    """gamma_n(conv{+-norms_i e_i}) = P(sum |g_i| / norms_i <= 1).

    Trapezoidal convolution of the densities of |g_i| / norms_i on a uniform
    grid of [0, 1], with one Richardson step (grids of ``points`` and
    ``2 * points`` cells).
    """
    norms = [float(s) for s in norms]
    if not norms or min(norms) <= 0:
        raise ValueError("norms must be positive")
    coarse = _axis_measure(norms, points)
    fine = _axis_measure(norms, 2 * points)
    return float(np.clip((4.0 * fine - coarse) / 3.0, 0.0, 1.0))


def l1_ball_measure_oracle(n, h):
    """gamma_n(h * B_1^n) = P(sum |g_i| <= h) by numerical convolution."""
    if not (1 <= n <= 32):
        raise ValueError("oracle supports 1 <= n <= 32")
    if not h > 0:
        raise ValueError("h must be positive")
    return axis_cross_polytope_measure([h] * n)


# -------------------------------------------------------------------- bounds


def simple_bound(n, r, h):
    """(e h / (n - r))^(n - r), capped at 1."""
    if not (1 <= r < n) or not h > 0:
        raise ValueError("need 1 <= r < n and h > 0")
    q = n - r
    return math.exp(min(0.0, q * (1.0 + math.log(h) - math.log(q))))


def crosspol2_bound(k, h, delta):
    """(2 e h / k)^((1 - delta) k), capped at 1."""
    if not (0.0 < delta <= 0.5) or k < 1 or not h > 0:
        raise ValueError("need delta in (0, 1/2], k >= 1, h > 0")
    return math.exp(min(0.0, (1.0 - delta) * k * (math.log(2.0 * h / k) + 1.0)))


def crosspol1_bound(k, constants):
    """2 exp(-c_tilt k), capped at 1."""
    if k < 1:
        raise ValueError("k must be positive")
    return min(1.0, 2.0 * math.exp(-constants.c_tilt * k))


def symmetrize(P, r):
    """Keep x_1..x_r; replace each later x_i by its residual against the span of x_1..x_{i-1}.

    The residuals are mutually orthogonal, orthogonal to span{x_1..x_r}, and
    have norms d_i = dist(x_i, span{x_j, j < i}).
    """
    n = P.n
    if not (1 <= r <= n):
        raise ValueError("need 1 <= r <= n")
    if P.degenerate:
        raise Degenerate("cross-polytope is degenerate")
    x = P.generators
    out = x.copy()
    q = linalg.orthonormalize(x[:, :r])
    for i in range(r, n):
        res = linalg.residual(x[:, i], q)
        out[:, i] = res
        q = np.column_stack([q, res / np.linalg.norm(res)])
    return CrossPolytope(out)
