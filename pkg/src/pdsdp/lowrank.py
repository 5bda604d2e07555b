"""Low-rank accelerated primal-dual solver.

Replaces the exact PSD projection with a truncated projection at a target
rank r, watches the combined residual over a sliding window to detect
stalls, and doubles r whenever the iteration stops improving or converges
with a failing approximation-error certificate (n - r) * max(lambda_r, 0).
Each inner convergence before the certificate passes yields a feasible
checkpoint pair.
"""

from __future__ import annotations

import logging
import time
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .pdhg import (
    DEFAULT_EPS_LAMBDA_PER_N,
    IterateState,
    ProgressCallback,
    ProgressInfo,
    SolveResult,
    SolveStatus,
    SolverConfig,
    dual_step,
    residuals,
    step_size,
    _finite,
)
from .problem import SdpProblem, apply_M_adjoint
from .symmat import SymMatrix, aproj_psd, approx_error_bound

logger = logging.getLogger(__name__)


@dataclass
class Checkpoint:
    """Feasible primal-dual pair saved when the inexact loop converges at a
    rank whose certificate has not yet passed."""

    rank: int
    X: SymMatrix
    y: np.ndarray
    objective: float = 0.0


@dataclass
class RankController:
    """Target rank, stall window and saved feasible pairs."""

    r: int
    ell: int
    history: deque = field(default_factory=deque)
    checkpoints: list[Checkpoint] = field(default_factory=list)
    last_lambda_r: float = float("inf")

    def __post_init__(self):
        self.history = deque(self.history, maxlen=self.ell + 1)


def stall_detected(history, ell: int) -> bool:
    """True when the newest combined residual is no better than the one
    ``ell`` iterations earlier; needs at least ell+1 samples."""
    if len(history) < ell + 1:
        return False
    return history[-1] >= history[-1 - ell]


def update_rank(controller: RankController, n: int) -> int:
    """Double the target rank (clamped to n) and reset the stall window."""
    controller.r = min(2 * controller.r, n)
    controller.history.clear()
    return controller.r


def rank_certificate_satisfied(
    n: int, r: int, lambda_r: float, eps_lambda: float
) -> bool:
    """True when the truncated projection error bound is within tolerance."""
    return approx_error_bound(n, r, lambda_r) <= eps_lambda


def approximate_primal_step(
    prob: SdpProblem,
    X_prev: SymMatrix,
    y_prev: np.ndarray,
    alpha: float,
    r: int,
) -> tuple[SymMatrix, float]:
    """Truncated-projection primal update; also returns lambda_r of the
    projected argument for the certificate."""
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    adj = apply_M_adjoint(prob, y_prev)
    arg = X_prev.data - alpha * (adj.data + prob.C.data)
    return aproj_psd(SymMatrix(prob.n, arg), r)


def solve_lr_pd_sdp(
    prob: SdpProblem,
    config: SolverConfig | None = None,
    callback: ProgressCallback | None = None,
) -> SolveResult:
    """Run the rank-adaptive primal-dual iteration from a zero start.

    Inner loops run the inexact iteration at the current target rank.  On
    convergence the checkpoint is recorded and the certificate decides
    between returning OPTIMAL and doubling the rank; on a stall the rank is
    doubled without a checkpoint.  Once the rank reaches n the loop is the
    exact method and stalls are ignored.
    """
    config = config or SolverConfig()
    config.validate()
    t0 = time.perf_counter()
    n = prob.n
    alpha = step_size(prob, config)
    eps_lambda = (
        config.eps_lambda
        if config.eps_lambda is not None
        else DEFAULT_EPS_LAMBDA_PER_N * n
    )
    controller = RankController(
        r=min(max(config.initial_rank, 1), n), ell=config.window_ell
    )
    state = IterateState(
        X_cur=SymMatrix.zero(n),
        X_prev=SymMatrix.zero(n),
        y_cur=np.zeros(prob.m + prob.p),
        y_prev=np.zeros(prob.m + prob.p),
        k=0,
        residual_history=deque(maxlen=config.window_ell + 1),
    )
    rank_path = [(0, controller.r)]
    status = None
    res = (float("nan"), float("nan"), float("nan"))
    scale = 1.0
    for k in range(1, config.max_iter + 1):
        X_new, lambda_r = approximate_primal_step(
            prob, state.X_cur, state.y_cur, alpha, controller.r
        )
        y_new = dual_step(prob, state.y_cur, X_new, state.X_cur, alpha)
        if not _finite(X_new, y_new):
            status = SolveStatus.DIVERGED
            break
        state.advance(X_new, y_new)
        controller.last_lambda_r = lambda_r
        res = residuals(state, alpha, prob)
        state.residual_history.append(res)
        controller.history.append(res[2])
        if k == 1 and config.relative_residuals:
            scale = 1.0 + res[2]
        if callback is not None and k % config.progress_every == 0:
            callback(
                ProgressInfo(
                    k, *res, controller.r, prob.C.inner(state.X_cur)
                )
            )
        if res[2] <= config.eps_tol * scale:
            controller.checkpoints.append(
                Checkpoint(
                    controller.r,
                    state.X_cur.copy(),
                    state.y_cur.copy(),
                    prob.C.inner(state.X_cur),
                )
            )
            if rank_certificate_satisfied(n, controller.r, lambda_r, eps_lambda):
                status = SolveStatus.OPTIMAL
                break
            logger.debug(
                "converged at rank %d but certificate %.3e > %.3e; doubling",
                controller.r,
                approx_error_bound(n, controller.r, lambda_r),
                eps_lambda,
            )
            update_rank(controller, n)
            rank_path.append((k, controller.r))
        elif controller.r < n and stall_detected(controller.history, controller.ell):
            logger.debug("stalled at rank %d after %d iterations; doubling",
                         controller.r, k)
            update_rank(controller, n)
            rank_path.append((k, controller.r))
        if time.perf_counter() - t0 > config.time_limit_s:
            status = SolveStatus.TIME_LIMIT
            break
    if status is None:
        status = SolveStatus.MAX_ITERATIONS
    pobj = prob.C.inner(state.X_cur)
    dobj = -float(
        prob.b @ state.y_cur[: prob.m] + prob.h @ state.y_cur[prob.m :]
    )
    return SolveResult(
        status=status,
        X=state.X_cur,
        y=state.y_cur,
        primal_objective=pobj,
        dual_objective=dobj,
        final_residuals=res,
        iterations=state.k,
        rank_path=rank_path,
        checkpoints=controller.checkpoints,
        wall_time_s=time.perf_counter() - t0,
        residual_scale=scale,
        objective_sign=prob.objective_sign,
    )
