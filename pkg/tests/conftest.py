"""Shared fixtures and independent oracles for the test suite."""

from __future__ import annotations

import numpy as np
import pytest

from pdsdp import SdpProblem, SparseRow, SymMatrix
from pdsdp.symmat import packed_length


def random_symmetric(n: int, rng: np.random.Generator, scale: float = 1.0):
    """Dense random symmetric matrix with entries of the given scale."""
    R = rng.standard_normal((n, n))
    return scale * 0.5 * (R + R.T)


def random_symmetric_unit(n: int, rng: np.random.Generator):
    """Random symmetric matrix normalized to spectral radius <= 1."""
    S = random_symmetric(n, rng)
    return S / (np.abs(np.linalg.eigvalsh(S)).max() + 1e-12)


def random_entries(n: int, nnz: int, rng: np.random.Generator):
    """Random upper-triangle (i, j, value) entries without duplicates."""
    pairs = [(i, j) for i in range(n) for j in range(i, n)]
    idx = rng.choice(len(pairs), size=min(nnz, len(pairs)), replace=False)
    return [(pairs[k][0], pairs[k][1], float(rng.standard_normal())) for k in idx]


def random_problem(
    n: int, m: int, p: int, rng: np.random.Generator, nnz: int = 4
) -> tuple[SdpProblem, list, list]:
    """Random sparse problem plus the raw entry lists for oracle use."""
    a_entries = [random_entries(n, nnz, rng) for _ in range(m)]
    g_entries = [random_entries(n, nnz, rng) for _ in range(p)]
    prob = SdpProblem(
        n=n,
        C=SymMatrix.from_dense(random_symmetric(n, rng)),
        A=[SparseRow.from_matrix_entries(n, e) for e in a_entries],
        b=rng.standard_normal(m),
        G=[SparseRow.from_matrix_entries(n, e) for e in g_entries],
        h=rng.standard_normal(p),
        name="random",
    )
    return prob, a_entries, g_entries


def dense_constraint_matrix(n: int, entries) -> np.ndarray:
    """Build the dense symmetric constraint matrix straight from entries,
    independently of the packed representation."""
    A = np.zeros((n, n))
    for i, j, v in entries:
        A[i, j] += v
        if i != j:
            A[j, i] += v
    return A


def dense_stacked_matrix(prob: SdpProblem, a_entries, g_entries) -> np.ndarray:
    """Dense (m+p) x n(n+1)/2 stacked operator built from raw entries via
    an independent svec computation."""
    n = prob.n
    iu, ju = np.triu_indices(n)
    rows = []
    for entries in list(a_entries) + list(g_entries):
        A = dense_constraint_matrix(n, entries)
        v = A[iu, ju].copy()
        v[iu != ju] *= np.sqrt(2.0)
        rows.append(v)
    return np.array(rows).reshape(len(rows), packed_length(n))


def trace_toy_problem(n: int = 2) -> SdpProblem:
    """min tr(X) subject to tr(X) = 1: objective pinned to 1."""
    entries = [(i, i, 1.0) for i in range(n)]
    return SdpProblem(
        n=n,
        C=SymMatrix.from_dense(np.eye(n)),
        A=[SparseRow.from_matrix_entries(n, entries)],
        b=np.array([1.0]),
        name="trace_toy",
    )


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
