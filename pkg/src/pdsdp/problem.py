"""SDP problem data in general form and the stacked constraint operator.

A problem is  min tr(CX)  s.t.  tr(A_i X) = b_i,  tr(G_j X) <= h_j,  X psd.
Constraint matrices are kept as sparse rows of their packed representation,
so applying the stacked operator M = [A; G] and its adjoint never builds a
dense matrix.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .symmat import SQRT2, SymMatrix, packed_index, packed_length

logger = logging.getLogger(__name__)

_NORM_MIN_ITER = 200
_NORM_MAX_ITER = 10_000
_NORM_REL_TOL = 1e-10
# Nudges the converged power-iteration value (a lower bound on the true
# norm) just above it without disturbing the leading digits.
_NORM_SAFETY = 1.0 + 1e-7


@dataclass
class SparseRow:
    """One constraint matrix as sparse entries of its packed form.

    ``values`` carry the same sqrt(2) off-diagonal scaling as packed
    matrices, so a dot product against packed data is a trace inner product.
    """

    indices: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        self.indices = np.asarray(self.indices, dtype=np.int64)
        self.values = np.asarray(self.values, dtype=float)
        if self.indices.shape != self.values.shape or self.indices.ndim != 1:
            raise ValueError("indices and values must be 1-d of equal length")
        if self.indices.size and np.any(np.diff(self.indices) <= 0):
            raise ValueError("indices must be strictly increasing")
        if self.indices.size and self.indices[0] < 0:
            raise ValueError("negative packed index")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("non-finite constraint value")

    @classmethod
    def from_matrix_entries(
        cls, n: int, entries: list[tuple[int, int, float]]
    ) -> SparseRow:
        """Build from (i, j, value) matrix entries, 0-based with i <= j.

        Values are the mathematical matrix entries; duplicates are summed.
        """
        acc: dict[int, float] = {}
        for i, j, v in entries:
            pos = packed_index(n, i, j)
            scale = 1.0 if i == j else SQRT2
            acc[pos] = acc.get(pos, 0.0) + scale * float(v)
        idx = np.array(sorted(acc), dtype=np.int64)
        return cls(idx, np.array([acc[k] for k in idx]))

    def dot_packed(self, data: np.ndarray) -> float:
        """Trace inner product with a packed vector."""
        return float(self.values @ data[self.indices])


@dataclass
class SdpProblem:
    """Immutable-by-convention problem data for the general SDP form."""

    n: int
    C: SymMatrix
    A: list[SparseRow]
    b: np.ndarray
    G: list[SparseRow] = field(default_factory=list)
    h: np.ndarray = field(default_factory=lambda: np.zeros(0))
    name: str = ""
    # -1 when the source format states a maximization; reported objectives
    # are objective_sign * tr(CX).
    objective_sign: float = 1.0

    def __post_init__(self):
        self.b = np.asarray(self.b, dtype=float)
        self.h = np.asarray(self.h, dtype=float)
        if self.C.n != self.n:
            raise ValueError("objective matrix dimension mismatch")
        if len(self.A) != self.b.size or len(self.G) != self.h.size:
            raise ValueError("constraint row/right-hand-side count mismatch")
        if len(self.A) + len(self.G) < 1:
            raise ValueError("problem needs at least one constraint")
        if not (np.all(np.isfinite(self.b)) and np.all(np.isfinite(self.h))):
            raise ValueError("non-finite right-hand side")
        if not np.all(np.isfinite(self.C.data)):
            raise ValueError("non-finite objective data")
        plen = packed_length(self.n)
        for row in list(self.A) + list(self.G):
            if row.indices.size and row.indices[-1] >= plen:
                raise ValueError("constraint row index out of range")
        self._stacked: sp.csr_matrix | None = None

    @property
    def m(self) -> int:
        return len(self.A)

    @property
    def p(self) -> int:
        return len(self.G)

    @property
    def packed_len(self) -> int:
        return packed_length(self.n)

    def stacked(self) -> sp.csr_matrix:
        """The (m+p) x n(n+1)/2 sparse matrix with one packed row per
        constraint; built once and cached."""
        if self._stacked is None:
            rows = list(self.A) + list(self.G)
            indptr = np.zeros(len(rows) + 1, dtype=np.int64)
            indptr[1:] = np.cumsum([r.indices.size for r in rows])
            indices = (
                np.concatenate([r.indices for r in rows])
                if rows
                else np.zeros(0, dtype=np.int64)
            )
            data = (
                np.concatenate([r.values for r in rows]) if rows else np.zeros(0)
            )
            self._stacked = sp.csr_matrix(
                (data, indices, indptr), shape=(len(rows), self.packed_len)
            )
        return self._stacked


def apply_M(prob: SdpProblem, X: SymMatrix) -> np.ndarray:
    """Stacked constraint operator: (tr(A_1 X), ..., tr(G_p X))."""
    if X.n != prob.n:
        raise ValueError(f"matrix dimension {X.n} does not match problem {prob.n}")
    return prob.stacked() @ X.data


def apply_M_adjoint(prob: SdpProblem, y: np.ndarray) -> SymMatrix:
    """Adjoint of the stacked operator: sum_i y_i A_i + sum_j y_{m+j} G_j."""
    y = np.asarray(y, dtype=float)
    if y.shape != (prob.m + prob.p,):
        raise ValueError(
            f"multiplier length {y.size} does not match m+p={prob.m + prob.p}"
        )
    return SymMatrix(prob.n, prob.stacked().T @ y)


def estimate_operator_norm(prob: SdpProblem, seed: int = 0) -> float:
    """Spectral norm of the stacked operator via seeded power iteration.

    Runs at least ``_NORM_MIN_ITER`` rounds, then stops once the estimate
    is stationary to 1e-10 relative.  The converged value approaches the
    true norm from below, so it is scaled up by a tiny safety factor.
    """
    M = prob.stacked()
    if M.nnz == 0:
        raise ValueError("all constraint rows are zero; operator norm is 0")
    rng = np.random.default_rng(seed)
    x = rng.standard_normal(prob.packed_len)
    x /= np.linalg.norm(x)
    sigma = 0.0
    for it in range(_NORM_MAX_ITER):
        y = M @ x
        s = float(np.linalg.norm(y))
        if s == 0.0:
            # start vector happened to lie in the null space; redraw
            x = rng.standard_normal(prob.packed_len)
            x /= np.linalg.norm(x)
            continue
        x = M.T @ y
        x /= np.linalg.norm(x)
        if it + 1 >= _NORM_MIN_ITER and abs(s - sigma) <= _NORM_REL_TOL * s:
            sigma = s
            break
        sigma = s
    return sigma * _NORM_SAFETY


@dataclass
class SolutionReport:
    """Feasibility and optimality summary for a primal-dual pair.

    ``dual_objective`` is the value of the dual problem at the returned
    multipliers.  The iteration produces Lagrangian-convention multipliers
    (inequality components nonnegative), for which that value is
    -(b, h) . y; at an optimal pair it meets the primal objective.
    """

    primal_objective: float
    dual_objective: float
    equality_violation: float
    inequality_violation: float
    min_eigenvalue: float
    duality_gap: float

    def max_violation(self) -> float:
        return max(
            self.equality_violation,
            self.inequality_violation,
            -min(self.min_eigenvalue, 0.0),
        )


def check_solution(
    prob: SdpProblem, X: SymMatrix, y: np.ndarray, tol: float = 1e-3
) -> SolutionReport:
    """Evaluate objectives, constraint violations and the duality gap."""
    y = np.asarray(y, dtype=float)
    if X.n != prob.n or y.shape != (prob.m + prob.p,):
        raise ValueError("solution dimensions do not match the problem")
    mx = apply_M(prob, X)
    eq = float(np.linalg.norm(mx[: prob.m] - prob.b))
    ineq = float(np.linalg.norm(np.maximum(mx[prob.m :] - prob.h, 0.0)))
    pobj = prob.C.inner(X)
    dobj = -float(prob.b @ y[: prob.m] + prob.h @ y[prob.m :])
    min_eig = float(np.linalg.eigvalsh(X.to_dense()).min())
    report = SolutionReport(
        primal_objective=pobj,
        dual_objective=dobj,
        equality_violation=eq,
        inequality_violation=ineq,
        min_eigenvalue=min_eig,
        duality_gap=pobj - dobj,
    )
    if report.max_violation() > tol:
        logger.debug(
            "solution violates constraints beyond tol=%.1e (max violation %.3e)",
            tol,
            report.max_violation(),
        )
    return report
