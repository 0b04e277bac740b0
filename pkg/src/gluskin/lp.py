"""l1-minimal representations over a symmetric generator set.

``x`` lies in ``t * conv{+-y_i}`` exactly when the smallest l1 norm of a
coefficient vector with ``sum lam_i y_i = x`` is at most ``t``. That minimum
is an LP, solved here by a dense two-phase tableau simplex with Bland's rule.
"""

from dataclasses import dataclass

import numpy as np

from .errors import InvalidRepresentation, NonConvergence

FEAS_TOL = 1e-9
PIVOT_TOL = 1e-11
COST_TOL = 1e-11


@dataclass(frozen=True, eq=False)
class MembershipResult:
    scale: float
    coefficients: np.ndarray
    support: tuple

    @property
    def member_of_span(self):
        return np.isfinite(self.scale)


def _generator_matrix(generators, dim=None):
    if isinstance(generators, np.ndarray) and generators.ndim == 2:
        y = np.asarray(generators, dtype=float)
    else:
        generators = list(generators)
        if not generators:
            raise ValueError("at least one generator required")
        y = np.column_stack([np.asarray(g, dtype=float) for g in generators])
    if y.shape[1] == 0:
        raise ValueError("at least one generator required")
    if dim is not None and y.shape[0] != dim:
        raise ValueError(f"dimension mismatch: point has dim {dim}, generators have dim {y.shape[0]}")
    return y


def _pivot(t, row, col):
    t[row] /= t[row, col]
    factor = t[:, col].copy()
    factor[row] = 0.0
    t -= np.outer(factor, t[row])


def _run_simplex(t, basis, n_rows, allowed, max_iter, rule="bland", target=None):
    """Simplex iterations on tableau ``t`` (last row = reduced costs).

    ``rule="bland"`` enters the lowest-index improving column. ``"dantzig"``
    enters the most negative reduced cost and falls back to Bland's rule for
    good after a run of degenerate pivots, which keeps it cycle-free.
    Stops early once the objective reaches ``-target`` (phase 1).
    """
    bland = rule == "bland"
    degenerate_run = 0
    allowed = allowed.copy()
    for _ in range(max_iter):
        if target is not None and t[-1, -1] >= -target:
            return
        costs = t[-1, :-1]
        size = 1.0 + np.abs(t[:n_rows, :-1]).max(axis=0)
        candidates = np.flatnonzero((costs < -COST_TOL * size) & allowed)
        if candidates.size == 0:
            return
        col = candidates[0] if bland else candidates[np.argmin(costs[candidates] / size[candidates])]
        column = t[:n_rows, col]
        rows = np.flatnonzero(column > PIVOT_TOL)
        if rows.size == 0:
            # both phases are bounded below, so a tiny cost here is roundoff
            if costs[col] > -1e-7 * size[col]:
                allowed[col] = False
                continue
            raise NonConvergence("unbounded direction in a bounded LP")
        ratios = t[rows, -1] / column[rows]
        best = ratios.min()
        ties = rows[ratios <= best + 1e-12 * (1.0 + abs(best))]
        row = ties[np.argmin([basis[r] for r in ties])]
        if not bland:
            degenerate_run = degenerate_run + 1 if best <= 1e-14 else 0
            if degenerate_run > 2 * n_rows + 10:
                bland = True
        _pivot(t, row, col)
        basis[row] = col
    raise NonConvergence(f"simplex exceeded {max_iter} iterations")


def _min_l1(y, x, max_iter=None, rule="bland"):
    """Basic optimal solution of min sum|lam| s.t. y @ lam = x, or None if off-span."""
    n, k = y.shape
    a = np.hstack([y, -y])
    b = x.copy()
    flip = b < 0
    a[flip] *= -1.0
    b[flip] *= -1.0
    nv = 2 * k
    if max_iter is None:
        max_iter = 50 * (n + nv) + 1000

    # phase 1: artificials nv..nv+n-1
    t = np.zeros((n + 1, nv + n + 1))
    t[:n, :nv] = a
    t[:n, nv:nv + n] = np.eye(n)
    t[:n, -1] = b
    t[-1, :nv] = -a.sum(axis=0)
    t[-1, -1] = -b.sum()
    basis = list(range(nv, nv + n))
    allowed = np.ones(nv + n, dtype=bool)
    tol = FEAS_TOL * (1.0 + np.abs(b).sum())
    _run_simplex(t, basis, n, allowed, max_iter, rule, target=0.01 * tol)
    if -t[-1, -1] > tol:
        return None

    # drive artificials out of the basis; drop redundant rows
    keep = []
    for r in range(n):
        if basis[r] >= nv:
            row = t[r, :nv]
            cols = np.flatnonzero(np.abs(row) > 1e-9)
            if cols.size:
                _pivot(t, r, cols[0])
                basis[r] = cols[0]
                keep.append(r)
        else:
            keep.append(r)
    rows = np.array(keep, dtype=int)
    t2 = np.zeros((rows.size + 1, nv + 1))
    t2[:-1, :nv] = t[rows, :nv]
    t2[:-1, -1] = t[rows, -1]
    basis2 = [basis[r] for r in rows]
    # phase 2 costs: all ones
    cb = np.ones(len(basis2))
    t2[-1, :nv] = 1.0 - cb @ t2[:-1, :nv]
    t2[-1, -1] = -cb @ t2[:-1, -1]
    _run_simplex(t2, basis2, rows.size, np.ones(nv, dtype=bool), max_iter, rule)

    # recompute the basic solution from the original data
    basis2 = np.array(basis2, dtype=int)
    z = np.zeros(nv)
    if basis2.size:
        zb, *_ = np.linalg.lstsq(a[:, basis2], b, rcond=None)
        z[basis2] = np.maximum(zb, 0.0)
    return z[:k] - z[k:]


def l1_membership_scale(point, generators, rule="bland"):
    """Smallest ``t`` with ``point`` in ``t * conv{+-generators}``.

    ``generators`` is a list of vectors or an array with generators as columns.
    Returns scale ``inf`` (and zero coefficients) when the point is off-span.
    """
    x = np.asarray(point, dtype=float)
    y = _generator_matrix(generators, x.shape[0])
    if not np.any(x):
        return MembershipResult(0.0, np.zeros(y.shape[1]), ())
    if rule not in ("bland", "dantzig"):
        raise ValueError(f"unknown pivot rule {rule!r}")
    lam = _min_l1(y, x, rule=rule)
    if lam is None:
        return MembershipResult(float("inf"), np.zeros(y.shape[1]), ())
    support = tuple(int(i) for i in np.flatnonzero(lam))
    return MembershipResult(float(np.abs(lam).sum()), lam, support)


def gauge(point, generators, rule="bland"):
    """Shorthand for the membership scale alone."""
    return l1_membership_scale(point, generators, rule).scale


def _check_representation(y, x, lam):
    res = np.linalg.norm(y @ lam - x)
    if res > 1e-8 * (1.0 + np.linalg.norm(x)):
        raise InvalidRepresentation(f"coefficients do not reproduce the point (residual {res:.3g})")


def caratheodory_reduce(point, generators, coefficients):
    """Shrink a representation to a linearly independent support.

    Moves along null-space directions of the supported generators, always in
    the direction that does not increase the l1 mass, until one coefficient
    vanishes; repeats until the supported generators are independent (so the
    support has at most ``dim`` elements).
    """
    x = np.asarray(point, dtype=float)
    y = _generator_matrix(generators, x.shape[0])
    lam = np.array(coefficients, dtype=float)
    if lam.shape != (y.shape[1],):
        raise ValueError("one coefficient per generator required")
    _check_representation(y, x, lam)
    changed = False
    while True:
        support = np.flatnonzero(lam)
        if support.size == 0:
            break
        ys = y[:, support]
        _, sv, vt = np.linalg.svd(ys, full_matrices=True)
        rank = int(np.sum(sv > 1e-10 * max(sv[0], 1e-300)))
        if rank == support.size:
            break
        w = vt[-1]
        ls = lam[support]
        if np.sign(ls) @ w > 0:
            w = -w
        shrinking = ls * w < 0
        if not np.any(shrinking):
            w = -w
            shrinking = ls * w < 0
        steps = -ls[shrinking] / w[shrinking]
        j = np.argmin(steps)
        t = steps[j]
        lam[support] = ls + t * w
        lam[support[np.flatnonzero(shrinking)[j]]] = 0.0
        changed = True
    if changed:
        support = np.flatnonzero(lam)
        if support.size:
            sol, *_ = np.linalg.lstsq(y[:, support], x, rcond=None)
            if np.abs(sol).sum() <= np.abs(lam).sum() + 1e-12:
                lam[support] = sol
    support = tuple(int(i) for i in np.flatnonzero(lam))
    return MembershipResult(float(np.abs(lam).sum()), lam, support)
