"""Cross-polytopes, containment scales and the coefficient-matrix class.

A cross-polytope ``conv{+-x_1, ..., +-x_n}`` is stored with its generators as
the columns of an n x n array. Coefficient matrices ``A`` (m x n) have columns
with at most n nonzeros and l1 norm at most one; ``Gamma @ A`` maps them to
cross-polytopes inscribed in a Gluskin polytope.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaln

from . import linalg
from .errors import Degenerate, SingularMatrix, TooLarge
from .lp import l1_membership_scale
from .sampling import GluskinPolytope, as_seed, normals, sample_unit_directions, uniforms

L1_TOL = 1e-12


def as_columns(vectors, dim=None):
    """Stack a sequence of vectors as columns; 2-D arrays pass through."""
    if isinstance(vectors, np.ndarray) and vectors.ndim == 2:
        out = np.asarray(vectors, dtype=float)
    else:
        vectors = list(vectors)
        if not vectors:
            return np.zeros((dim or 0, 0))
        out = np.column_stack([np.asarray(v, dtype=float) for v in vectors])
    if dim is not None and out.shape[0] != dim:
        raise ValueError(f"dimension mismatch: expected {dim}, got {out.shape[0]}")
    return out


@dataclass(frozen=True, eq=False)
class CrossPolytope:
    """conv{+-x_i}; generators are the columns of ``generators``."""

    generators: np.ndarray
    degenerate: bool = field(init=False)

    def __post_init__(self):
        x = np.array(as_columns(self.generators), dtype=float)
        if x.ndim != 2 or x.shape[0] != x.shape[1]:
            raise ValueError(f"a cross-polytope in R^n needs n generators, got shape {x.shape}")
        if not np.all(np.isfinite(x)):
            raise ValueError("generators must be finite")
        x.setflags(write=False)
        object.__setattr__(self, "generators", x)
        object.__setattr__(self, "degenerate", linalg.numerical_rank(x) < x.shape[0])

    @property
    def n(self):
        return self.generators.shape[0]

    def vectors(self):
        return [self.generators[:, i] for i in range(self.n)]

    def factor(self):
        if self.degenerate:
            raise Degenerate("cross-polytope generators are linearly dependent")
        return linalg.lu_factor(self.generators)

    def gauge(self, points):
        """l1 norm of the coefficients of ``points`` (columns) in the generator basis."""
        lam = linalg.lu_solve(self.factor(), points)
        return np.abs(lam).sum(axis=0)

    @classmethod
    def standard(cls, n, scale=1.0):
        return cls(scale * np.eye(n))


# ---------------------------------------------------------------- containment


def containment_scale(inner_vertices, outer):
    """Smallest d with every inner vertex in ``d * outer``.

    Nondegenerate cross-polytopes are handled by a linear solve, Gluskin
    polytopes (and degenerate cross-polytopes) by the l1 LP.
    """
    if isinstance(outer, CrossPolytope):
        v = as_columns(inner_vertices, outer.n)
        if v.shape[1] == 0:
            return 0.0
        if not outer.degenerate:
            try:
                return float(outer.gauge(v).max())
            except SingularMatrix:
                pass
        gens = outer.generators
    elif isinstance(outer, GluskinPolytope):
        v = as_columns(inner_vertices, outer.n)
        gens = outer.gamma
    else:
        raise TypeError(f"unsupported outer body {type(outer).__name__}")
    if v.shape[1] == 0:
        return 0.0
    return max(l1_membership_scale(v[:, j], gens).scale for j in range(v.shape[1]))


def inradius_bounds(P, search_directions, seed):
    """(lower, upper) bounds on the largest r with r * B_2^n inside P.

    ``lower = s_min(Gamma^T) / sqrt(m)``: any unit u has
    ``max_i |<u, G_i>| >= ||Gamma^T u|| / sqrt(m)``. ``upper`` is the smallest
    support value ``max_i |<u, G_i>|`` over the sampled directions.
    """
    if not P.is_full_dimensional():
        raise Degenerate("polytope is not full-dimensional")
    lower = linalg.smallest_singular_value(P.gamma.T) / math.sqrt(P.m)
    upper = math.inf
    chunk = max(1, 2_000_000 // max(P.m, 1))
    dirs = sample_unit_directions(P.n, search_directions, seed)
    for start in range(0, search_directions, chunk):
        u = dirs[start:start + chunk]
        upper = min(upper, float(np.abs(u @ P.gamma).max(axis=1).min()))
    return lower, upper


# ------------------------------------------------------- coefficient matrices


@dataclass(frozen=True, eq=False)
class CoefficientMatrix:
    """m x n matrix whose columns have support <= n and l1 norm <= 1."""

    entries: np.ndarray
    max_support: int = None

    def __post_init__(self):
        a = np.array(self.entries, dtype=float)
        if a.ndim != 2:
            raise ValueError("entries must be 2-D")
        limit = self.max_support if self.max_support is not None else a.shape[1]
        if np.any(np.count_nonzero(a, axis=0) > limit):
            raise ValueError(f"a column has more than {limit} nonzeros")
        if np.any(np.abs(a).sum(axis=0) > 1.0 + L1_TOL):
            raise ValueError("a column has l1 norm above 1")
        a.setflags(write=False)
        object.__setattr__(self, "entries", a)
        object.__setattr__(self, "max_support", limit)

    @property
    def m(self):
        return self.entries.shape[0]

    @property
    def n(self):
        return self.entries.shape[1]

    def support(self):
        return np.flatnonzero(np.any(self.entries != 0, axis=1))


def random_coefficient_matrix(m, n, seed, max_support=None):
    """A random element of the class: each column gets a random support of
    size 1..max_support (default n), Gaussian values, and l1 norm uniform in (0, 1]."""
    seed = as_seed(seed)
    max_support = n if max_support is None else max_support
    a = np.zeros((m, n))
    u = uniforms(seed.child("shape"), 2 * n)
    for j in range(n):
        size = 1 + int(u[2 * j] * max_support)
        keys = uniforms(seed.child("rows", j), m)
        rows = np.argsort(keys, kind="stable")[:size]
        vals = normals(seed.child("vals", j), size)
        vals *= (1.0 - u[2 * j + 1]) / np.abs(vals).sum()
        a[rows, j] = vals
    return CoefficientMatrix(a, max_support=max(max_support, n))


def mixed_coefficient_matrix(m, n, alpha, seed):
    """A random element of the class in which every column has both parts
    of the alpha-split: one entry of size in [alpha, 1/2] and n - 1 entries
    below alpha sharing at most the remaining l1 mass."""
    if not (0 < alpha <= 0.5) or n < 2:
        raise ValueError("need alpha in (0, 1/2] and n >= 2")
    seed = as_seed(seed)
    if m < n:
        raise ValueError("need m >= n")
    a = np.zeros((m, n))
    u = uniforms(seed.child("shape"), 3 * n)
    # distinct head rows keep the F1 columns independent
    heads = np.argsort(uniforms(seed.child("heads"), m), kind="stable")[:n]
    for j in range(n):
        others = np.argsort(uniforms(seed.child("rows", j), m), kind="stable")
        rows = np.concatenate([[heads[j]], others[others != heads[j]][:n - 1]])
        vals = normals(seed.child("vals", j), n)
        head = alpha + (0.5 - alpha) * u[3 * j]
        tail = vals[1:] * (1.0 - head) * (0.25 + 0.75 * u[3 * j + 1]) / np.abs(vals[1:]).sum()
        big = np.abs(tail).max()
        if big >= alpha:
            tail *= 0.99 * alpha / big
        a[rows[0], j] = head if u[3 * j + 2] < 0.5 else -head
        a[rows[1:], j] = tail
    return CoefficientMatrix(a)


def round_to_net(A, eps):
    """Round every entry toward zero onto the grid eps * Z.

    Entries within 1e-9 grid units of a grid point snap to it, so grid
    matrices are fixed points despite floating-point division.
    """
    if not (0.0 < eps <= 0.5):
        raise ValueError("eps must lie in (0, 1/2]")
    a = A.entries
    q = a / eps
    nearest = np.round(q)
    k = np.where(np.abs(q - nearest) < 1e-9, nearest, np.trunc(q))
    out = k * eps
    out[a == 0] = 0.0
    return CoefficientMatrix(out + 0.0, max_support=A.max_support)


@dataclass(frozen=True, eq=False)
class SparseSplit:
    f1: CoefficientMatrix
    f2: CoefficientMatrix
    f: CoefficientMatrix
    alpha: float


def decompose_alpha(A, alpha):
    """Split A entrywise at |a| >= alpha into a sparse part and a small part."""
    if not (0.0 < alpha <= 0.5):
        raise ValueError("alpha must lie in (0, 1/2]")
    a = A.entries
    big = np.abs(a) >= alpha
    f1 = np.where(big, a, 0.0)
    f2 = np.where(big, 0.0, a)
    return SparseSplit(
        CoefficientMatrix(f1, A.max_support),
        CoefficientMatrix(f2, A.max_support),
        CoefficientMatrix(np.hstack([f1, f2]), A.max_support),
        alpha,
    )


def verify_decomposition_inclusion(A, alpha, gamma):
    """Largest l1 scale needed to write a column of Gamma A over the columns of Gamma F(A).

    The inclusion A(B_1^n) in F(A)(2 B_1^{2n}) holds iff this is at most 2.
    """
    gamma = np.asarray(gamma, dtype=float)
    if gamma.shape[1] != A.m:
        raise ValueError(f"gamma has {gamma.shape[1]} columns, A has {A.m} rows")
    split = decompose_alpha(A, alpha)
    gens = gamma @ split.f.entries
    points = gamma @ A.entries
    worst = 0.0
    for i in range(A.n):
        if not np.any(A.entries[:, i]):
            continue
        worst = max(worst, l1_membership_scale(points[:, i], gens).scale)
    return worst


def log_binomial(n, k):
    return float(gammaln(n + 1) - gammaln(k + 1) - gammaln(n - k + 1))


def net_cardinality_log_bound(n, m, eps):
    """log of (C(m, n) (eps/3)^(-n))^n, the bound on the net size."""
    return n * (log_binomial(m, n) + n * math.log(3.0 / eps))


def tp_log_bound(n, m, eps, alpha, p):
    """log of the bound on |T_p'|: p sparse columns, n - p small columns."""
    inv = math.floor(1.0 / alpha)
    sparse = log_binomial(m, inv) + (1.0 / alpha) * math.log(3.0 / eps)
    dense = log_binomial(m, n) + n * math.log(3.0 / eps)
    return p * sparse + (n - p) * dense


def tilt_rescale(P, k):
    """4 conv{+-x_1..x_{n-k}, +-(k/n) x_{n-k+1}..x_n}."""
    n = P.n
    if not (1 <= k <= n):
        raise ValueError("need 1 <= k <= n")
    scales = np.full(n, 4.0)
    scales[n - k:] = 4.0 * k / n
    return CrossPolytope(P.generators * scales)


# ------------------------------------------------------------------ crosspol


@dataclass(frozen=True)
class CrosspolVerdict:
    member: str  # "yes" | "no" | "unknown"
    worst_count: int
    witness_permutation: tuple
    mode: str


def _canonical_order(x):
    """Generator order that ignores list order and signs."""
    signed = x.copy()
    for j in range(x.shape[1]):
        nz = np.flatnonzero(signed[:, j])
        if nz.size and signed[nz[0], j] < 0:
            signed[:, j] = -signed[:, j]
    order = sorted(range(x.shape[1]), key=lambda j: tuple(signed[:, j]))
    return np.array(order, dtype=int), signed[:, order]


def _close_flags(x, order, h):
    """Per position i, whether x_{order[i]} is within h of the span of its predecessors."""
    n = x.shape[0]
    flags = []
    q = np.zeros((n, 0))
    for i, j in enumerate(order):
        v = x[:, j]
        r = linalg.residual(v, q)
        flags.append(np.linalg.norm(r) <= h * (1.0 + 1e-12) + 1e-12)
        norm = np.linalg.norm(r)
        if norm > linalg.RANK_TOL * max(1.0, np.linalg.norm(v)):
            q = np.column_stack([q, r / norm])
    return flags


def permutation_count(P, perm, k, h):
    """Number of positions among the last k where the placed generator is within h of the span."""
    x = P.generators
    flags = _close_flags(x, list(perm), h)
    return int(sum(flags[P.n - k:]))


def _exact_worst(x, k, h):
    n = x.shape[1]
    full = (1 << n) - 1
    # orthonormal bases per subset, built from the subset minus its top bit
    bases = {0: np.zeros((n, 0))}
    dist = {}
    for mask in range(1, full + 1):
        top = mask.bit_length() - 1
        rest = mask & ~(1 << top)
        q = bases[rest]
        r = linalg.residual(x[:, top], q)
        norm = np.linalg.norm(r)
        bases[mask] = np.column_stack([q, r / norm]) if norm > linalg.RANK_TOL * max(1.0, np.linalg.norm(x[:, top])) else q
    for mask in range(0, full):
        q = bases[mask]
        for v in range(n):
            if not mask >> v & 1:
                dist[mask, v] = np.linalg.norm(linalg.residual(x[:, v], q))
    best = {0: 0}
    choice = {}
    for mask in range(1, full + 1):
        size = bin(mask).count("1")
        counts = size >= n - k + 1
        val = None
        for v in range(n):
            if mask >> v & 1:
                prev = mask & ~(1 << v)
                c = best[prev] + (1 if counts and dist[prev, v] <= h * (1.0 + 1e-12) + 1e-12 else 0)
                if val is None or c < val:
                    val, arg = c, v
        best[mask] = val
        choice[mask] = arg
    order = []
    mask = full
    while mask:
        v = choice[mask]
        order.append(v)
        mask &= ~(1 << v)
    return best[full], order[::-1]


def crosspol_membership(P, k, h, mode="heuristic", seed=0, restarts=64):
    """Decide whether P belongs to crosspol(k, h).

    For a generator order sigma, count(sigma) is the number of positions
    i in n-k+1..n whose generator lies within h of the span of the earlier
    ones. P is a member iff min over sigma of count(sigma) >= k/4.

    ``mode="exact"`` minimizes over all orders by dynamic programming over
    subsets (n <= 8). ``mode="heuristic"`` tries a greedy adversary and
    ``restarts`` random orders; it can only certify non-membership.
    """
    n = P.n
    if not (1 <= k <= n):
        raise ValueError("need 1 <= k <= n")
    order, x = _canonical_order(P.generators)
    threshold = k / 4.0
    if mode == "exact":
        if n > 8:
            raise TooLarge(f"exact crosspol check limited to n <= 8 (got n={n})")
        worst, perm = _exact_worst(x, k, h)
        witness = tuple(int(order[i]) for i in perm)
        return CrosspolVerdict("yes" if worst >= threshold else "no", int(worst), witness, "exact")
    if mode != "heuristic":
        raise ValueError(f"unknown mode {mode!r}")

    candidates = [_greedy_order(x)]
    seed = as_seed(seed)
    for r in range(restarts):
        keys = uniforms(seed.child("crosspol", r), n)
        candidates.append(list(np.argsort(keys, kind="stable")))
    worst, best_perm = None, None
    for perm in candidates:
        c = int(sum(_close_flags(x, perm, h)[n - k:]))
        if worst is None or c < worst:
            worst, best_perm = c, perm
    witness = tuple(int(order[i]) for i in best_perm)
    return CrosspolVerdict("no" if worst < threshold else "unknown", worst, witness, "heuristic")


def _greedy_order(x):
    """Place next the generator farthest from the span of those already placed."""
    n = x.shape[1]
    remaining = list(range(n))
    placed = []
    q = np.zeros((x.shape[0], 0))
    while remaining:
        d = [np.linalg.norm(linalg.residual(x[:, j], q)) for j in remaining]
        j = remaining[int(np.argmax(d))]
        r = linalg.residual(x[:, j], q)
        norm = np.linalg.norm(r)
        if norm > linalg.RANK_TOL * max(1.0, np.linalg.norm(x[:, j])):
            q = np.column_stack([q, r / norm])
        placed.append(j)
        remaining.remove(j)
    return placed
