"""Dense linear-algebra kernels.

Vectors and matrices are plain float64 numpy arrays. Columns of a matrix are
the vectors of a family (generators, basis vectors) throughout the package.
"""

import warnings

import numpy as np
import scipy.linalg

from .errors import SingularMatrix

RANK_TOL = 1e-10
PIVOT_TOL = 1e-12


def _as_columns(basis, dim):
    if isinstance(basis, np.ndarray) and basis.ndim == 2:
        cols = np.asarray(basis, dtype=float)
    else:
        basis = list(basis)
        if not basis:
            return np.zeros((dim, 0))
        cols = np.column_stack([np.asarray(b, dtype=float) for b in basis])
    if cols.shape[0] != dim:
        raise ValueError(f"dimension mismatch: vector has dim {dim}, basis has dim {cols.shape[0]}")
    return cols


def orthonormalize(basis, dim=None, tol=RANK_TOL):
    """Modified Gram-Schmidt with one reorthogonalization pass.

    ``basis`` is a 2-D array (vectors as columns) or a sequence of vectors.
    Vectors whose residual falls below ``tol`` times the largest input norm
    are dropped, so the result spans the same space with orthonormal columns.
    """
    if dim is None:
        if isinstance(basis, np.ndarray) and basis.ndim == 2:
            dim = basis.shape[0]
        else:
            basis = list(basis)
            if not basis:
                raise ValueError("dim required for an empty basis")
            dim = len(basis[0])
    cols = _as_columns(basis, dim)
    if cols.shape[1] == 0:
        return np.zeros((dim, 0))
    scale = np.max(np.linalg.norm(cols, axis=0))
    if scale == 0.0:
        return np.zeros((dim, 0))
    q = []
    for j in range(cols.shape[1]):
        v = cols[:, j].copy()
        for _ in range(2):
            for u in q:
                v -= (u @ v) * u
        norm = np.linalg.norm(v)
        if norm > tol * scale:
            q.append(v / norm)
    if not q:
        return np.zeros((dim, 0))
    return np.column_stack(q)


def residual(v, q):
    """Component of ``v`` orthogonal to the orthonormal columns of ``q`` (two passes)."""
    r = np.array(v, dtype=float)
    for _ in range(2):
        r -= q @ (q.T @ r)
    return r


def dist_to_span(v, basis):
    """Euclidean distance from ``v`` to the linear span of ``basis``.

    An empty basis gives ``||v||``; dependent vectors are allowed.
    """
    v = np.asarray(v, dtype=float)
    cols = _as_columns(basis, v.shape[0])
    if cols.shape[1] == 0:
        return float(np.linalg.norm(v))
    q = orthonormalize(cols)
    return float(np.linalg.norm(residual(v, q)))


def numerical_rank(m, tol=RANK_TOL):
    m = np.asarray(m, dtype=float)
    return orthonormalize(m).shape[1]


def smallest_singular_value(m):
    m = np.atleast_2d(np.asarray(m, dtype=float))
    if m.size == 0:
        raise ValueError("empty matrix")
    return float(np.linalg.svd(m, compute_uv=False).min())


def lu_factor(x):
    """Partially pivoted LU factorization of a square matrix.

    Raises SingularMatrix when a pivot falls below 1e-12 times the largest
    absolute entry.
    """
    x = np.asarray(x, dtype=float)
    if x.ndim != 2 or x.shape[0] != x.shape[1]:
        raise ValueError(f"square matrix required, got shape {x.shape}")
    scale = np.max(np.abs(x)) if x.size else 0.0
    if scale == 0.0:
        raise SingularMatrix("zero matrix")
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
        lu, piv = scipy.linalg.lu_factor(x, check_finite=True)
    if np.min(np.abs(np.diag(lu))) < PIVOT_TOL * scale:
        raise SingularMatrix("pivot below tolerance")
    return lu, piv


def lu_solve(factors, b):
    # scipy's lu_solve touches the pivot array during the call, so threads
    # sharing one factorization each get their own copy
    lu, piv = factors
    return scipy.linalg.lu_solve((lu, piv.copy()), np.asarray(b, dtype=float))


def solve_linear(x, b):
    """Solve ``x @ lam = b`` for square ``x``."""
    return lu_solve(lu_factor(x), b)
