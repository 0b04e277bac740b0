"""Seeded frequency experiments for the probabilistic lemmas, tilt-constant
calibration, a micro-scale end-to-end pipeline, and a heuristic upper bound
on the Banach-Mazur distance to the cross-polytope.

Every harness returns an :class:`ExperimentRecord` that can be regenerated
from (name, parameters, seed). Trials draw from ``seed.child(...)``
substreams, so parameter sweeps on a shared seed are pathwise coupled.
"""

import math
import time
from dataclasses import dataclass, field

import numpy as np

from . import linalg
from .errors import Degenerate, InvalidParameters, SingularMatrix
from .lp import gauge as lp_gauge
from .measure import (
    CalibrationConstants,
    clopper_pearson,
    estimate_from_hits,
    gauge_samples,
    crosspol2_bound,
    gaussian_measure_mc,
    simple_bound,
    symmetrize,
)
from .polytope import (
    CoefficientMatrix,
    CrossPolytope,
    crosspol_membership,
    decompose_alpha,
    random_coefficient_matrix,
    round_to_net,
    verify_decomposition_inclusion,
)
from .sampling import GluskinPolytope, as_seed, normals, sample_gaussian_matrix, sample_gluskin, uniforms

COMPARISONS = ("rate>=bound", "rate<=bound", "none")


@dataclass
class ExperimentRecord:
    name: str
    parameters: dict
    seed: object
    trials: int
    empirical_rate: float
    bound_value: float
    constants: CalibrationConstants
    comparison: str = "rate>=bound"
    wall_time: float = 0.0
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.comparison not in COMPARISONS:
            raise ValueError(f"unknown comparison {self.comparison!r}")

    @property
    def passed(self):
        if self.comparison == "rate>=bound":
            return self.empirical_rate >= self.bound_value
        if self.comparison == "rate<=bound":
            return self.empirical_rate <= self.bound_value
        return True

    def results(self):
        """Everything produced by the run, apart from timing."""
        lo, hi = clopper_pearson(round(self.empirical_rate * self.trials), self.trials) if self.trials else (0.0, 1.0)
        return {
            "trials": self.trials,
            "empirical_rate": self.empirical_rate,
            "ci_low": lo,
            "ci_high": hi,
            "bound_value": self.bound_value,
            "comparison": self.comparison,
            "passed": self.passed,
            "extra": self.extra,
        }


def _record(name, parameters, seed, trials, rate, bound, constants, comparison, t0, **extra):
    return ExperimentRecord(
        name=name,
        parameters=parameters,
        seed=as_seed(seed),
        trials=trials,
        empirical_rate=rate,
        bound_value=bound,
        constants=constants,
        comparison=comparison,
        wall_time=time.perf_counter() - t0,
        extra=extra,
    )


def _qr_diag(h):
    """|R_ii| of a QR factorization: distance of column i to the span of columns < i."""
    if h.shape[1] == 0:
        return np.zeros(0)
    r = np.linalg.qr(h, mode="r")
    d = np.abs(np.diag(r))
    if d.size < h.shape[1]:
        d = np.concatenate([d, np.zeros(h.shape[1] - d.size)])
    return d


# ------------------------------------------------------------ span distances


def span_distance_counts(n, u, k, tau, B, trials, seed, random_permutation=False):
    """Per trial, how many of the last k columns of Gamma B (in the chosen
    order) lie within tau sqrt(n - u + k) of the span of the earlier ones."""
    seed = as_seed(seed)
    B = np.asarray(B, dtype=float)
    thr = tau * math.sqrt(n - u + k)
    counts = np.empty(trials, dtype=int)
    for t in range(trials):
        gamma = sample_gaussian_matrix(n, B.shape[0], seed.child("span", t))
        h = gamma @ B
        if random_permutation:
            h = h[:, np.argsort(uniforms(seed.child("perm", t), u), kind="stable")]
        d = _qr_diag(h)
        counts[t] = int(np.count_nonzero(d[u - k:] <= thr))
    return counts


def run_span_distance_experiment(n, u, k, tau, delta, B, trials, seed,
                                 constants=None, random_permutation=False):
    """Frequency of the event that at least (1 - delta) k of the last k
    generated vectors H_i = Gamma col_i(B) are within tau sqrt(n - u + k) of
    the span of their predecessors, against 1 - exp(-c tau^2 delta (n-u+k) k)."""
    t0 = time.perf_counter()
    constants = constants or CalibrationConstants()
    B = np.asarray(B, dtype=float)
    if B.ndim != 2 or B.shape[1] != u:
        raise InvalidParameters("B must be an m x u matrix")
    if not (n / 2 <= u <= n):
        raise InvalidParameters("need n/2 <= u <= n")
    if not (1 <= k <= u / 2):
        raise InvalidParameters("need 1 <= k <= u/2")
    if not (1.0 / k < delta <= 1.0):
        raise InvalidParameters("need delta in (1/k, 1]")
    if tau < constants.C_span:
        raise InvalidParameters("need tau >= C_span")
    if np.any(np.linalg.norm(B, axis=0) > 1.0 + 1e-12):
        raise InvalidParameters("columns of B must have norm at most one")
    if linalg.numerical_rank(B) < u:
        raise InvalidParameters("B must have full rank u")
    counts = span_distance_counts(n, u, k, tau, B, trials, seed, random_permutation)
    rate = float(np.count_nonzero(counts >= (1.0 - delta) * k)) / trials
    bound = 1.0 - math.exp(-constants.c_span * tau ** 2 * delta * (n - u + k) * k)
    params = {"n": n, "u": u, "k": k, "tau": tau, "delta": delta, "m": B.shape[0],
              "random_permutation": random_permutation}
    return _record("span-distance", params, seed, trials, rate, bound, constants, "rate>=bound", t0,
                   min_count=int(counts.min()), mean_count=float(counts.mean()))


# ------------------------------------------------------ discretization slack


def discretization_slacks(n, m, eps, rho, trials, seed):
    seed = as_seed(seed)
    out = np.empty(trials)
    for t in range(trials):
        gamma = sample_gaussian_matrix(n, m, seed.child("slack", t))
        maxnorm = np.linalg.norm(gamma, axis=0).max()
        smin = linalg.smallest_singular_value(gamma.T)
        out[t] = eps * n * maxnorm * rho * math.sqrt(m) / smin
    return out


def run_discretization_slack(n, m, eps, rho, trials, seed, constants=None):
    """Fraction of trials where eps n max_j ||G_j|| rho sqrt(m) / s_min(Gamma^T) <= 1/2."""
    t0 = time.perf_counter()
    constants = constants or CalibrationConstants()
    if not (m >= n >= 2):
        raise InvalidParameters("need m >= n >= 2")
    slacks = discretization_slacks(n, m, eps, rho, trials, seed)
    rate = float(np.count_nonzero(slacks <= 0.5)) / trials
    regime = m <= n ** 10 and eps * rho * n ** 2 <= 1.0
    params = {"n": n, "m": m, "eps": eps, "rho": rho}
    return _record("discretization-slack", params, seed, trials, rate, 0.99, constants,
                   "rate>=bound" if regime else "none", t0,
                   regime_holds=regime, max_slack=float(slacks.max()), median_slack=float(np.median(slacks)))


# ----------------------------------------------------------------- E_A events


def _check_index_sets(n, I1, I2):
    I1, I2 = sorted(set(int(i) for i in I1)), sorted(set(int(i) for i in I2))
    if any(not (0 <= i < n) for i in I1):
        raise InvalidParameters("I1 must be a subset of 0..n-1")
    if any(not (n <= i < 2 * n) for i in I2):
        raise InvalidParameters("I2 must be a subset of n..2n-1")
    if len(I1) + len(I2) != n:
        raise InvalidParameters("|I1 u I2| must equal n")
    return I1, I2


def _split_columns(A, alpha, gamma):
    return gamma @ decompose_alpha(A, alpha).f.entries


def e2_holds(cols, I1, I2, alpha, delta, tau):
    """The E_A^2 count condition for one realization; vacuous if dependent."""
    sel = I1 + I2
    sub = cols[:, sel]
    if linalg.numerical_rank(sub) < len(sel):
        return True
    d = _qr_diag(sub)[len(I1):]
    thr = tau * math.sqrt(alpha * len(I2))
    return np.count_nonzero(d <= thr) >= (1.0 - delta) * len(I2)


def run_event_e2_experiment(n, m, alpha, s_tilde, delta, tau, A, I1, I2, trials, seed, constants=None):
    """Frequency of the E_A^2 count condition for fixed index sets."""
    t0 = time.perf_counter()
    constants = constants or CalibrationConstants()
    if A.m != m or A.n != n:
        raise InvalidParameters("A must be m x n")
    I1, I2 = _check_index_sets(n, I1, I2)
    if not len(I2) > s_tilde:
        raise InvalidParameters("need |I2| > s_tilde")
    seed = as_seed(seed)
    hits = 0
    for t in range(trials):
        cols = _split_columns(A, alpha, sample_gaussian_matrix(n, m, seed.child("e2", t)))
        hits += bool(e2_holds(cols, I1, I2, alpha, delta, tau))
    params = {"n": n, "m": m, "alpha": alpha, "s_tilde": s_tilde, "delta": delta, "tau": tau,
              "I1": I1, "I2": I2}
    return _record("event-e2", params, seed, trials, hits / trials, 1.0 - 1.0 / n, constants, "none", t0)


def run_event_e1_experiment(n, m, alpha, s, s_tilde, A, I1, I2, trials, seed, constants=None,
                            h=None, mode=None):
    """Frequency with which conv{+-col_i(Gamma F(A)), i in I1 u I2} is in
    crosspol(s, h) (exact for n <= 8, otherwise "not refuted" by the
    heuristic adversary). Degenerate selections count as satisfying the event."""
    t0 = time.perf_counter()
    constants = constants or CalibrationConstants()
    if A.m != m or A.n != n:
        raise InvalidParameters("A must be m x n")
    I1, I2 = _check_index_sets(n, I1, I2)
    if len(I1) < n - s_tilde:
        raise InvalidParameters("need |I1| >= n - s_tilde")
    if not (1 <= s <= n):
        raise InvalidParameters("need 1 <= s <= n")
    h = constants.C_span * math.sqrt(2 * s) if h is None else h
    mode = mode or ("exact" if n <= 8 else "heuristic")
    seed = as_seed(seed)
    sel = I1 + I2
    hits = 0
    for t in range(trials):
        cols = _split_columns(A, alpha, sample_gaussian_matrix(n, m, seed.child("e1", t)))
        T = CrossPolytope(cols[:, sel])
        if T.degenerate:
            hits += 1
            continue
        verdict = crosspol_membership(T, s, h, mode=mode, seed=seed.child("adversary", t))
        hits += verdict.member != "no"
    params = {"n": n, "m": m, "alpha": alpha, "s": s, "s_tilde": s_tilde, "h": h, "mode": mode,
              "I1": I1, "I2": I2}
    return _record("event-e1", params, seed, trials, hits / trials, 1.0 - 1.0 / n, constants, "none", t0)


# ------------------------------------------------------ constructed families


def polytope_with_distances(n, distances, seed):
    """Cross-polytope whose generator i sits at distance distances[i] from
    the span of generators 0..i-1 (None: plain Gaussian generator).

    Each prescribed generator is a Gaussian combination of the earlier span
    plus an orthogonal part of the given norm in a random direction.
    """
    seed = as_seed(seed)
    g = normals(seed.child("family"), 2 * n * n).reshape(2 * n, n)
    x = np.zeros((n, n))
    q = np.zeros((n, 0))
    for i, d in enumerate(distances):
        if d is None:
            v = g[i]
        else:
            direction = linalg.residual(g[n + i], q)
            direction /= np.linalg.norm(direction)
            v = q @ (q.T @ g[i]) + d * direction
        x[:, i] = v
        r = linalg.residual(v, q)
        q = np.column_stack([q, r / np.linalg.norm(r)])
    return CrossPolytope(x)


def close_tail_polytope(n, r, h, seed):
    """Generators r+1..n within h of the span of their predecessors."""
    u = uniforms(as_seed(seed).child("dist"), n)
    return polytope_with_distances(n, [None] * r + [h * (0.5 + 0.5 * u[i]) for i in range(r, n)], seed)


def partial_tail_polytope(n, k, h, delta, seed):
    """Among the last k generators, ceil((1 - delta) k) lie within h of the
    span of their predecessors and the rest at distance between 1 and 3."""
    seed = as_seed(seed)
    u = uniforms(seed.child("dist"), n)
    close = math.ceil((1.0 - delta) * k)
    tail = np.argsort(uniforms(seed.child("which"), k), kind="stable")[:close]
    dists = [None] * (n - k)
    for j in range(k):
        dists.append(h * (0.5 + 0.5 * u[j]) if j in tail else 1.0 + 2.0 * u[j])
    return polytope_with_distances(n, dists, seed)


def _bound_check(make, bound, polytopes, samples, seed, workers, tol=1e-3):
    seed = as_seed(seed)
    excess = []
    for i in range(polytopes):
        est = gaussian_measure_mc(make(seed.child("polytope", i)), 1.0, samples, seed.child("mc", i), workers)
        excess.append(est.ci_high - bound)
    violations = int(sum(e > tol for e in excess))
    return {"polytopes": polytopes, "bound_value": bound, "max_excess": float(max(excess)),
            "violations": violations, "passed": violations == 0}


def check_simple_bound(n, r, h, polytopes, samples, seed, workers=1):
    """Upper CI of gamma_n(P) for close-tail polytopes against (e h/(n-r))^(n-r), tolerance 1e-3."""
    return _bound_check(lambda s: close_tail_polytope(n, r, h, s), simple_bound(n, r, h),
                        polytopes, samples, seed, workers)


def check_crosspol2_bound(n, k, h, delta, polytopes, samples, seed, workers=1):
    """Same protocol against (2 e h / k)^((1 - delta) k)."""
    return _bound_check(lambda s: partial_tail_polytope(n, k, h, delta, s), crosspol2_bound(k, h, delta),
                        polytopes, samples, seed, workers)


def check_symmetrization(n, r, polytopes, samples, seed, workers=1):
    """MC measure of symmetrize(P, r) must not fall below that of P by more
    than 3 combined CI widths; P has Gaussian generators."""
    seed = as_seed(seed)
    margins = []
    for i in range(polytopes):
        P = CrossPolytope(normals(seed.child("polytope", i), n * n).reshape(n, n))
        a = gaussian_measure_mc(P, 1.0, samples, seed.child("mc", i, "P"), workers)
        b = gaussian_measure_mc(symmetrize(P, r), 1.0, samples, seed.child("mc", i, "S"), workers)
        margins.append(b.estimate - a.estimate + 3.0 * (a.width + b.width))
    failures = int(sum(g < 0 for g in margins))
    return {"polytopes": polytopes, "min_margin": float(min(margins)), "failures": failures,
            "passed": failures == 0}


# ---------------------------------------------------------- tilt calibration


def tail_family(n, k, h):
    """Axis-aligned cross-polytope: n - k generators of norm h, k of norm h/4.

    Every generator has norm at most h, so every distance to a span is at
    most h and the polytope lies in crosspol(k', h) for every k'.
    """
    if not (1 <= k <= n):
        raise ValueError("need 1 <= k <= n")
    norms = np.full(n, float(h))
    norms[n - k:] = h / 4.0
    return CrossPolytope(np.diag(norms))


def default_h_rule(n, k):
    return float(n)


def _random_rotation(n, seed):
    q, r = np.linalg.qr(normals(seed, n * n).reshape(n, n))
    return q * np.sign(np.diag(r))


def tilt_family_estimates(n_list, k_list, h_rule=default_h_rule, trials=1, samples=10 ** 6, seed=0, workers=1):
    """MC estimates of the tail family's measure; trial t > 0 applies a random rotation."""
    seed = as_seed(seed)
    rows = []
    for n in n_list:
        for k in k_list:
            h = h_rule(n, k)
            base = tail_family(n, k, h)
            for t in range(trials):
                P = base if t == 0 else CrossPolytope(_random_rotation(n, seed.child("rot", n, k, t)) @ base.generators)
                est = gaussian_measure_mc(P, 1.0, samples, seed.child("tilt", n, k, t), workers)
                rows.append({"n": n, "k": k, "h": h, "trial": t, "estimate": est.estimate,
                             "ci_low": est.ci_low, "ci_high": est.ci_high, "hits": est.hits})
    return rows


def fit_tilt_constant(rows):
    """Largest c with 2 exp(-c k) >= every upper confidence limit."""
    return min((math.log(2.0) - math.log(r["ci_high"])) / r["k"] for r in rows)


def calibrate_tilt_constant(n_list, k_list, h_rule=default_h_rule, trials=1, samples=10 ** 6, seed=0,
                            constants=None, workers=1):
    rows = tilt_family_estimates(n_list, k_list, h_rule, trials, samples, seed, workers)
    base = constants or CalibrationConstants()
    return base.replace(provenance_tag="calibrated", c_tilt=fit_tilt_constant(rows))


# ---------------------------------------------------- Banach-Mazur upper bound


class _BMObjective:
    """d(T) = max_j gauge_P(T^-1 e_j) * max_i ||T G_i||_1, evaluated lazily."""

    def __init__(self, gamma):
        self.gamma = gamma
        self.max_gen_norm = np.linalg.norm(gamma, axis=0).max()
        self.order = list(range(gamma.shape[0]))

    def outer(self, T):
        return np.abs(T @ self.gamma).sum(axis=0).max()

    def __call__(self, T, cutoff=math.inf):
        b = self.outer(T)
        try:
            tinv = linalg.solve_linear(T, np.eye(T.shape[0]))
        except SingularMatrix:
            return math.inf
        # gauge_P(v) >= ||v||_2 / max_i ||G_i||_2: cheap rejection
        if b * np.linalg.norm(tinv, axis=0).max() / self.max_gen_norm >= cutoff:
            return math.inf
        a = 0.0
        for j in self.order:
            g = lp_gauge(tinv[:, j], self.gamma, rule="dantzig")
            if g > a:
                a = g
                if a * b >= cutoff:
                    self.order.remove(j)
                    self.order.insert(0, j)
                    return math.inf
        return a * b


def bm_upper_bound(P, restarts=8, iters=50, seed=0, init_step=0.25, min_step=1e-7):
    """Heuristic search for T minimizing d(T) = a(T) b(T), where
    B_1^n is in a T(P) and T(P) is in b B_1^n.

    Coordinate descent over the entries of T: each entry moves by
    +-step * (size of T) and improvements are kept; after a sweep with no
    improvement the step halves. Restart 0 starts from the identity, the
    others from random perturbations of it. The returned d is exactly
    evaluated for the returned T, so it is an upper bound on BM(P, B_1^n).

    Returns (d, T, converged); ``converged`` is False when the sweep budget
    ran out before the step fell below ``min_step``.
    """
    if not P.is_full_dimensional():
        raise Degenerate("polytope is not full-dimensional")
    seed = as_seed(seed)
    n = P.n
    obj = _BMObjective(P.gamma)
    best_d, best_T, all_converged = math.inf, None, True
    for r in range(restarts):
        T = np.eye(n)
        if r > 0:
            T = T + 0.3 * normals(seed.child("bm", r), n * n).reshape(n, n) / math.sqrt(n)
        d = obj(T)
        if not np.isfinite(d):
            continue
        step = init_step
        sweeps = 0
        while step >= min_step and sweeps < iters:
            sweeps += 1
            improved = False
            size = np.abs(T).max()
            for i in range(n):
                for j in range(n):
                    for sign in (1.0, -1.0):
                        cand = T.copy()
                        cand[i, j] += sign * step * size
                        dc = obj(cand, cutoff=d)
                        if dc < d:
                            T, d, improved = cand, dc, True
                            break
            if not improved:
                step /= 2.0
        if step >= min_step:
            all_converged = False
        if d < best_d:
            best_d, best_T = d, T
    if best_T is None:
        raise Degenerate("no invertible starting point")
    return float(best_d), best_T, all_converged


# ------------------------------------------------------------ micro pipeline


def run_theorem_pipeline_micro(n, seed, rho=1.0, alpha=0.25, matrices=3, samples=1000,
                               constants=None, eps=None, workers=1, tilde_seed=None):
    """End-to-end run of the net argument at toy scale.

    Samples Gamma with m = n^3 columns; for a few random coefficient
    matrices: round onto the eps-net, split at alpha, and estimate the
    probability that a fresh Gaussian vector lies in
    4 rho conv{+-col_i(Gamma F(A)), i in I} for some |I| = n. Since any point
    of conv{+-all 2n columns} is in the hull of n of them, that is one l1
    membership test per sample. Reports the largest estimate against 1/2.
    ``tilde_seed`` redraws only the test vectors, keeping Gamma and the matrices.
    """
    t0 = time.perf_counter()
    if not (2 <= n <= 10):
        raise InvalidParameters("the micro pipeline supports 2 <= n <= 10")
    constants = constants or CalibrationConstants()
    seed = as_seed(seed)
    tilde = seed if tilde_seed is None else as_seed(tilde_seed)
    m = n ** 3
    eps = min(0.5, float(n) ** -3) if eps is None else eps
    gamma = sample_gluskin(n, m, seed.child("gamma")).gamma
    stages = []
    worst = 0.0
    for a in range(matrices):
        A = round_to_net(random_coefficient_matrix(m, n, seed.child("A", a)), eps)
        split = decompose_alpha(A, alpha)
        gens = gamma @ split.f.entries
        inclusion = verify_decomposition_inclusion(A, alpha, gamma)
        if linalg.numerical_rank(gens) < n:
            est = estimate_from_hits(0, samples, tilde.child("tilde", a), degenerate=True)
        else:
            g = gauge_samples(GluskinPolytope(gens), samples, tilde.child("tilde", a), workers)
            est = estimate_from_hits(int(np.count_nonzero(g <= 4.0 * rho)), samples, tilde.child("tilde", a))
        stages.append({"matrix": a, "inclusion_scale": inclusion, "estimate": est.estimate,
                       "ci_low": est.ci_low, "ci_high": est.ci_high,
                       "f1_nonzeros": int(np.count_nonzero(split.f1.entries)),
                       "f2_nonzeros": int(np.count_nonzero(split.f2.entries))})
        worst = max(worst, est.estimate)
    params = {"n": n, "m": m, "eps": eps, "rho": rho, "alpha": alpha, "matrices": matrices, "samples": samples}
    return _record("pipeline-micro", params, seed, samples, worst, 0.5, constants, "rate<=bound", t0,
                   stages=stages)
