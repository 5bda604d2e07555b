"""First-order semidefinite programming solver.

Two solvers for the general form  min tr(CX) s.t. A(X) = b, G(X) <= h,
X psd:  an exact primal-dual hybrid gradient iteration and a low-rank
accelerated variant that replaces the PSD projection with a truncated one
and adapts its target rank on the fly.
"""

from .symmat import (
    EigenDecomposition,
    SymMatrix,
    aproj_psd,
    approx_error_bound,
    full_eigen,
    proj_psd,
    smat,
    svec,
    truncated_eigen,
)
from .problem import (
    SdpProblem,
    SolutionReport,
    SparseRow,
    apply_M,
    apply_M_adjoint,
    check_solution,
    estimate_operator_norm,
)
from .pdhg import (
    ProgressInfo,
    SolveResult,
    SolveStatus,
    SolverConfig,
    solve_pd_sdp,
)
from .lowrank import Checkpoint, RankController, solve_lr_pd_sdp
from .io import (
    ParseError,
    load_problem,
    parse_extended,
    parse_sdpa,
    read_solution,
    write_extended,
    write_sdpa,
    write_solution,
)

__all__ = [
    "Checkpoint",
    "EigenDecomposition",
    "ParseError",
    "ProgressInfo",
    "RankController",
    "SdpProblem",
    "SolutionReport",
    "SolveResult",
    "SolveStatus",
    "SolverConfig",
    "SparseRow",
    "SymMatrix",
    "apply_M",
    "apply_M_adjoint",
    "aproj_psd",
    "approx_error_bound",
    "check_solution",
    "estimate_operator_norm",
    "full_eigen",
    "load_problem",
    "parse_extended",
    "parse_sdpa",
    "proj_psd",
    "read_solution",
    "smat",
    "solve_lr_pd_sdp",
    "solve_pd_sdp",
    "svec",
    "truncated_eigen",
    "write_extended",
    "write_sdpa",
    "write_solution",
]

__version__ = "0.1.0"
