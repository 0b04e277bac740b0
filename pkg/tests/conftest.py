"""Independent oracles shared by the test modules."""

import itertools

import numpy as np
import pytest

from gluskin.polytope import permutation_count


def jacobi_eigenvalues(s, tol=1e-14, sweeps=100):
    """Eigenvalues of a symmetric matrix by cyclic Jacobi rotations."""
    a = np.array(s, dtype=float)
    n = a.shape[0]
    for _ in range(sweeps):
        off = np.sqrt(np.sum(np.tril(a, -1) ** 2))
        if off < tol * np.linalg.norm(a):
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                if abs(a[p, q]) < 1e-300:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * a[p, q])
                t = np.sign(theta) / (abs(theta) + np.sqrt(theta ** 2 + 1.0)) if theta != 0 else 1.0
                c = 1.0 / np.sqrt(t ** 2 + 1.0)
                s_ = t * c
                rot = np.eye(n)
                rot[p, p] = rot[q, q] = c
                rot[p, q] = s_
                rot[q, p] = -s_
                a = rot.T @ a @ rot
    return np.sort(np.diag(a))


def normal_equations_distance(v, basis):
    """Distance to span via the normal equations B^T B c = B^T v."""
    b = np.column_stack(basis)
    c = np.linalg.solve(b.T @ b, b.T @ v)
    return float(np.linalg.norm(v - b @ c))


def basis_enumeration_scale(point, gens):
    """min sum |lambda| over Y lambda = x by trying every n-subset of generators."""
    n, m = gens.shape
    best = np.inf
    for cols in itertools.combinations(range(m), n):
        sub = gens[:, cols]
        if abs(np.linalg.det(sub)) < 1e-12:
            continue
        best = min(best, np.abs(np.linalg.solve(sub, point)).sum())
    return best


def brute_force_worst_count(P, k, h):
    """Minimum of the crosspol count over all n! generator orders."""
    return min(permutation_count(P, perm, k, h) for perm in itertools.permutations(range(P.n)))


@pytest.fixture
def rng():
    return np.random.default_rng(20241016)
