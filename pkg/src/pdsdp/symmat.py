"""Symmetric matrices in packed form, eigendecompositions and PSD projections.

The packed layout stores the lower triangle column by column with every
off-diagonal entry scaled by sqrt(2).  Under this scaling the Euclidean dot
product of two packed vectors equals the trace inner product tr(AB) of the
corresponding symmetric matrices, which is what the solver relies on
throughout.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy.sparse.linalg import ArpackNoConvergence, eigsh

logger = logging.getLogger(__name__)

SQRT2 = math.sqrt(2.0)

# Krylov eigensolver knobs: deterministic seeded start vector, subspace size
# min(n, max(2r+1, 20)), bounded restarts.  Below the crossover (small n or
# r above n/2) a dense decomposition is cheaper, so we fall back to it.
# The iteration runs on the shifted matrix S + c I with c a Gershgorin bound
# on the spectral radius: ARPACK's convergence test is relative to the
# eigenvalue magnitude, which for the near-zero eigenvalues this solver
# chases (the certificate eigenvalue tends to zero) is unattainable without
# the shift.  The shift changes neither eigenvectors nor residuals.
_KRYLOV_SEED = 0x5EED
_KRYLOV_MAX_ITER = 300
_KRYLOV_TOL = 1e-12
_DENSE_FALLBACK_DIM = 32


def packed_length(n: int) -> int:
    """Number of packed entries of an n-by-n symmetric matrix."""
    return n * (n + 1) // 2


def side_length(length: int) -> int:
    """Matrix dimension n such that n(n+1)/2 == length, or raise."""
    n = (math.isqrt(8 * int(length) + 1) - 1) // 2
    if n < 1 or packed_length(n) != length:
        raise ValueError(f"packed length {length} is not triangular")
    return n


def packed_index(n: int, i: int, j: int) -> int:
    """Packed position of matrix entry (i, j) with 0 <= i <= j < n."""
    if not 0 <= i <= j < n:
        raise ValueError(f"entry ({i}, {j}) outside upper triangle of size {n}")
    return i * n - i * (i - 1) // 2 + (j - i)


def packed_coords(n: int, pos: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Inverse of packed_index, vectorized over positions."""
    pos = np.asarray(pos, dtype=np.int64)
    starts = np.arange(n) * n - (np.arange(n) * (np.arange(n) - 1)) // 2
    i = np.searchsorted(starts, pos, side="right") - 1
    j = pos - starts[i] + i
    return i, j


def svec(S: np.ndarray, tol: float = 1e-12) -> np.ndarray:
    """Pack a dense symmetric matrix, scaling off-diagonals by sqrt(2).

    The input must be symmetric up to ``tol`` relative to its largest
    entry; anything beyond that is rejected with the observed maximum
    asymmetry in the message.
    """
    S = np.asarray(S, dtype=float)
    if S.ndim != 2 or S.shape[0] != S.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {S.shape}")
    n = S.shape[0]
    if n == 0:
        raise ValueError("empty matrix")
    asym = float(np.max(np.abs(S - S.T)))
    bound = tol * max(1.0, float(np.max(np.abs(S))))
    if asym > bound:
        raise ValueError(f"input is not symmetric: max |S - S.T| = {asym:.3e}")
    iu, ju = np.triu_indices(n)
    v = 0.5 * (S[iu, ju] + S[ju, iu])
    v[iu != ju] *= SQRT2
    return v


def smat(v: np.ndarray) -> np.ndarray:
    """Unpack a packed vector back to the dense symmetric matrix."""
    v = np.asarray(v, dtype=float)
    if v.ndim != 1:
        raise ValueError(f"expected a 1-d packed vector, got shape {v.shape}")
    n = side_length(v.size)
    iu, ju = np.triu_indices(n)
    w = v.copy()
    w[iu != ju] /= SQRT2
    S = np.zeros((n, n))
    S[iu, ju] = w
    S[ju, iu] = w
    return S


@dataclass
class SymMatrix:
    """Dense symmetric matrix held in packed form."""

    n: int
    data: np.ndarray

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=float)
        if self.n < 1:
            raise ValueError(f"matrix dimension must be positive, got {self.n}")
        if self.data.shape != (packed_length(self.n),):
            raise ValueError(
                f"packed data has length {self.data.size}, "
                f"expected {packed_length(self.n)} for n={self.n}"
            )

    @classmethod
    def zero(cls, n: int) -> SymMatrix:
        return cls(n, np.zeros(packed_length(n)))

    @classmethod
    def from_dense(cls, S: np.ndarray, tol: float = 1e-12) -> SymMatrix:
        S = np.asarray(S, dtype=float)
        return cls(S.shape[0], svec(S, tol))

    def to_dense(self) -> np.ndarray:
        return smat(self.data)

    def inner(self, other: SymMatrix) -> float:
        """Trace inner product tr(self @ other)."""
        return float(self.data @ other.data)

    def norm(self) -> float:
        """Frobenius norm."""
        return float(np.linalg.norm(self.data))

    def copy(self) -> SymMatrix:
        return SymMatrix(self.n, self.data.copy())


@dataclass
class EigenDecomposition:
    """Eigenpairs sorted by descending eigenvalue.

    ``truncated_rank`` is the requested rank r for a partial decomposition
    and the string "full" for a complete one.
    """

    values: np.ndarray
    vectors: np.ndarray
    truncated_rank: int | str = "full"


def full_eigen(S: SymMatrix) -> EigenDecomposition:
    """All eigenpairs of S, values descending."""
    vals, vecs = np.linalg.eigh(S.to_dense())
    return EigenDecomposition(vals[::-1].copy(), vecs[:, ::-1].copy(), "full")


def _krylov_start(n: int) -> np.ndarray:
    rng = np.random.default_rng(_KRYLOV_SEED)
    v = rng.standard_normal(n)
    return v / np.linalg.norm(v)


def truncated_eigen(S: SymMatrix, r: int) -> EigenDecomposition:
    """The r eigenpairs with largest algebraic eigenvalues.

    Uses implicitly restarted Lanczos (ARPACK) with a deterministic start
    vector; falls back to the dense decomposition when the matrix is small,
    when r exceeds n/2, or when the iteration does not converge within its
    restart budget.
    """
    n = S.n
    if not 1 <= r <= n:
        raise ValueError(f"rank r={r} outside [1, {n}]")
    if n <= _DENSE_FALLBACK_DIM or 2 * r > n:
        full = full_eigen(S)
        return EigenDecomposition(
            full.values[:r].copy(), full.vectors[:, :r].copy(), r
        )
    A = S.to_dense()
    shift = float(np.abs(A).sum(axis=1).max())
    A[np.diag_indices(n)] += shift
    ncv = min(n, max(2 * r + 1, 20))
    try:
        vals, vecs = eigsh(
            A,
            k=r,
            which="LA",
            v0=_krylov_start(n),
            ncv=ncv,
            maxiter=_KRYLOV_MAX_ITER,
            tol=_KRYLOV_TOL,
        )
    except ArpackNoConvergence:
        logger.info(
            "Lanczos did not converge for n=%d, r=%d; using dense fallback", n, r
        )
        full = full_eigen(S)
        return EigenDecomposition(
            full.values[:r].copy(), full.vectors[:, :r].copy(), r
        )
    order = np.argsort(vals)[::-1]
    return EigenDecomposition(vals[order] - shift, vecs[:, order], r)


def _clip_assemble(values: np.ndarray, vectors: np.ndarray, n: int) -> SymMatrix:
    """Sum of max(0, lambda_i) u_i u_i^T as a packed matrix."""
    pos = values > 0.0
    if not np.any(pos):
        return SymMatrix.zero(n)
    U = vectors[:, pos]
    P = (U * values[pos]) @ U.T
    P = 0.5 * (P + P.T)
    return SymMatrix(n, svec(P))


def proj_psd(S: SymMatrix) -> SymMatrix:
    """Euclidean projection onto the positive semidefinite cone."""
    e = full_eigen(S)
    return _clip_assemble(e.values, e.vectors, S.n)


def aproj_psd(S: SymMatrix, r: int) -> tuple[SymMatrix, float]:
    """Approximate PSD projection from the r leading eigenpairs.

    Returns the rank-at-most-r projection together with the certificate
    eigenvalue: the largest eigenvalue excluded by the truncation (the
    (r+1)-th largest, possibly negative), or the smallest eigenvalue when
    r = n and nothing is excluded.  The projection error vanishes exactly
    when this value is nonpositive.
    """
    if not 1 <= r <= S.n:
        raise ValueError(f"rank r={r} outside [1, {S.n}]")
    k = min(r + 1, S.n)
    e = truncated_eigen(S, k)
    return (
        _clip_assemble(e.values[:r], e.vectors[:, :r], S.n),
        float(e.values[k - 1]),
    )


def approx_error_bound(n: int, r: int, lambda_r: float) -> float:
    """Certificate (n - r) * max(lambda_r, 0) bounding the squared error
    between the exact and the rank-r PSD projections."""
    if not 1 <= r <= n:
        raise ValueError(f"rank r={r} outside [1, {n}]")
    return float((n - r) * max(lambda_r, 0.0))
