"""Exact solver: resolvents, steps, residuals, termination."""

from collections import deque

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

import pdsdp.pdhg as pdhg
from pdsdp import SdpProblem, SparseRow, SymMatrix, check_solution, proj_psd
from pdsdp.pdhg import (
    IterateState,
    SolverConfig,
    SolveStatus,
    dual_resolvent,
    dual_step,
    primal_step,
    proj_box,
    residuals,
    solve_pd_sdp,
)

from conftest import (
    dense_constraint_matrix,
    random_problem,
    random_symmetric,
    trace_toy_problem,
)


class TestProjBox:
    def test_formula_components(self):
        out = proj_box(np.array([4.0, 2.0]), np.array([1.0]), np.array([0.0]))
        np.testing.assert_allclose(out, [1.0, 0.0])

    def test_feasible_point_fixed(self):
        b = np.array([1.0, -2.0])
        h = np.array([3.0])
        u = np.concatenate([b, [2.5]])
        np.testing.assert_array_equal(proj_box(u, b, h), u)

    def test_no_inequalities_returns_b(self):
        b = np.array([5.0, 6.0])
        out = proj_box(np.array([-100.0, 100.0]), b, np.zeros(0))
        np.testing.assert_array_equal(out, b)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError, match="length"):
            proj_box(np.zeros(3), np.zeros(1), np.zeros(1))

    @given(
        hnp.arrays(np.float64, 4, elements=st.floats(-50, 50)),
        hnp.arrays(np.float64, 2, elements=st.floats(-50, 50)),
        hnp.arrays(np.float64, 2, elements=st.floats(-50, 50)),
    )
    def test_idempotent(self, u, b, h):
        once = proj_box(u, b, h)
        np.testing.assert_array_equal(proj_box(once, b, h), once)


class TestDualResolvent:
    def test_equality_shift(self):
        out = dual_resolvent(np.array([4.0]), 1.0, np.array([1.0]), np.zeros(0))
        np.testing.assert_allclose(out, [3.0])

    def test_alpha_two(self):
        out = dual_resolvent(np.array([4.0]), 2.0, np.array([1.0]), np.zeros(0))
        np.testing.assert_allclose(out, [2.0])

    def test_alpha_nonpositive_rejected(self):
        with pytest.raises(ValueError, match="positive"):
            dual_resolvent(np.zeros(1), 0.0, np.zeros(1), np.zeros(0))

    @given(
        hnp.arrays(np.float64, 3, elements=st.floats(-20, 20)),
        hnp.arrays(np.float64, 1, elements=st.floats(-20, 20)),
        hnp.arrays(np.float64, 2, elements=st.floats(-20, 20)),
        st.floats(min_value=0.05, max_value=20),
    )
    @settings(max_examples=200)
    def test_moreau_identity(self, u, b, h, alpha):
        lhs = dual_resolvent(u, alpha, b, h) + alpha * proj_box(u / alpha, b, h)
        np.testing.assert_allclose(lhs, u, atol=1e-12, rtol=1e-12)


class TestSteps:
    def test_primal_fixes_psd_when_inactive(self, rng):
        prob = trace_toy_problem(3)
        prob_zero_c = SdpProblem(
            n=3, C=SymMatrix.zero(3), A=prob.A, b=prob.b, name="zero_c"
        )
        A = rng.standard_normal((3, 3))
        X = SymMatrix.from_dense(A @ A.T)
        out = primal_step(prob_zero_c, X, np.zeros(1), 0.5)
        assert np.linalg.norm(out.data - X.data) <= 1e-9

    def test_primal_from_zero_negative_identity_objective(self):
        prob = SdpProblem(
            n=2,
            C=SymMatrix.from_dense(-np.eye(2)),
            A=[SparseRow.from_matrix_entries(2, [(0, 0, 1.0), (1, 1, 1.0)])],
            b=np.array([1.0]),
        )
        out = primal_step(prob, SymMatrix.zero(2), np.zeros(1), 1.0)
        np.testing.assert_allclose(out.to_dense(), np.eye(2), atol=1e-12)

    def test_primal_matches_dense_oracle(self, rng):
        for _ in range(20):
            n = int(rng.integers(2, 7))
            m = int(rng.integers(1, 4))
            p = int(rng.integers(0, 3))
            prob, ae, ge = random_problem(n, m, p, rng)
            X = random_symmetric(n, rng)
            y = rng.standard_normal(m + p)
            alpha = float(rng.uniform(0.1, 2.0))
            mats = [dense_constraint_matrix(n, e) for e in ae + ge]
            arg = X - alpha * (
                sum(yi * Mi for yi, Mi in zip(y, mats)) + prob.C.to_dense()
            )
            w, V = np.linalg.eigh(arg)
            expected = (V * np.maximum(w, 0.0)) @ V.T
            got = primal_step(prob, SymMatrix.from_dense(X), y, alpha)
            assert np.linalg.norm(got.to_dense() - expected) <= 1e-10

    def test_dual_fixed_point(self):
        # with M(X) = b held and y at a fixed point the dual update is a no-op
        prob = trace_toy_problem(2)
        X = SymMatrix.from_dense(np.diag([0.5, 0.5]))
        y = np.array([-1.0])
        out = dual_step(prob, y, X, X, 0.7)
        # u = y + alpha*b; resolvent subtracts alpha*b again
        np.testing.assert_allclose(out, y, atol=1e-12)

    def test_dual_zero_everything(self):
        prob = SdpProblem(
            n=2,
            C=SymMatrix.zero(2),
            A=[SparseRow.from_matrix_entries(2, [(0, 0, 1.0)])],
            b=np.zeros(1),
        )
        out = dual_step(prob, np.zeros(1), SymMatrix.zero(2), SymMatrix.zero(2), 0.5)
        np.testing.assert_array_equal(out, np.zeros(1))

    def test_dual_matches_dense_oracle(self, rng):
        for _ in range(20):
            n = int(rng.integers(2, 7))
            m = int(rng.integers(1, 4))
            p = int(rng.integers(0, 3))
            prob, ae, ge = random_problem(n, m, p, rng)
            Xn = random_symmetric(n, rng)
            Xp = random_symmetric(n, rng)
            y = rng.standard_normal(m + p)
            alpha = float(rng.uniform(0.1, 2.0))
            mats = [dense_constraint_matrix(n, e) for e in ae + ge]
            extrap = 2 * Xn - Xp
            u = y + alpha * np.array([np.trace(Mi @ extrap) for Mi in mats])
            expected = u - alpha * proj_box(u / alpha, prob.b, prob.h)
            got = dual_step(
                prob, y, SymMatrix.from_dense(Xn), SymMatrix.from_dense(Xp), alpha
            )
            np.testing.assert_allclose(got, expected, atol=1e-11)


class TestResiduals:
    def _state(self, prob, X_cur, X_prev, y_cur, y_prev):
        return IterateState(
            X_cur=X_cur,
            X_prev=X_prev,
            y_cur=y_cur,
            y_prev=y_prev,
            k=1,
            residual_history=deque(maxlen=8),
        )

    def test_stationary_is_zero(self, rng):
        prob, _, _ = random_problem(4, 3, 2, rng)
        X = SymMatrix.from_dense(random_symmetric(4, rng))
        y = rng.standard_normal(5)
        state = self._state(prob, X, X, y, y)
        assert residuals(state, 0.5, prob) == (0.0, 0.0, 0.0)

    def test_zero_dual_change_formula(self, rng):
        prob, ae, ge = random_problem(4, 3, 2, rng)
        D = random_symmetric(4, rng)
        X_prev = random_symmetric(4, rng)
        y = rng.standard_normal(5)
        alpha = 0.3
        state = self._state(
            prob,
            SymMatrix.from_dense(X_prev + D),
            SymMatrix.from_dense(X_prev),
            y,
            y,
        )
        ep, ed, ec = residuals(state, alpha, prob)
        mats = [dense_constraint_matrix(4, e) for e in ae + ge]
        md = np.array([np.trace(Mi @ D) for Mi in mats])
        assert ep == pytest.approx(np.linalg.norm(D) / alpha, rel=1e-12)
        assert ed == pytest.approx(np.linalg.norm(md), rel=1e-11, abs=1e-13)
        assert ec == pytest.approx(ep + ed)

    def test_matches_dense_oracle(self, rng):
        for _ in range(20):
            n, m, p = 5, 3, 2
            prob, ae, ge = random_problem(n, m, p, rng)
            Xc = random_symmetric(n, rng)
            Xp = random_symmetric(n, rng)
            yc = rng.standard_normal(m + p)
            yp = rng.standard_normal(m + p)
            alpha = float(rng.uniform(0.2, 1.5))
            state = self._state(
                prob, SymMatrix.from_dense(Xc), SymMatrix.from_dense(Xp), yc, yp
            )
            ep, ed, ec = residuals(state, alpha, prob)
            mats = [dense_constraint_matrix(n, e) for e in ae + ge]
            dy = yc - yp
            dX = Xc - Xp
            adj = sum(v * Mi for v, Mi in zip(dy, mats))
            ep_o = np.linalg.norm(dX / alpha - adj)
            ed_o = np.linalg.norm(
                dy / alpha - np.array([np.trace(Mi @ dX) for Mi in mats])
            )
            assert ep == pytest.approx(ep_o, rel=1e-11, abs=1e-12)
            assert ed == pytest.approx(ed_o, rel=1e-11, abs=1e-12)


class TestSolve:
    def test_trace_toy(self):
        result = solve_pd_sdp(trace_toy_problem(2))
        assert result.status is SolveStatus.OPTIMAL
        assert result.primal_objective == pytest.approx(1.0, abs=2e-3)
        assert result.wall_time_s < 1.0

    def test_optimal_residual_within_scaled_tolerance(self):
        config = SolverConfig()
        result = solve_pd_sdp(trace_toy_problem(3), config)
        assert result.status is SolveStatus.OPTIMAL
        assert result.final_residuals[2] <= config.eps_tol * result.residual_scale

    def test_absolute_mode(self):
        config = SolverConfig(relative_residuals=False, eps_tol=1e-6)
        result = solve_pd_sdp(trace_toy_problem(2), config)
        assert result.status is SolveStatus.OPTIMAL
        assert result.residual_scale == 1.0
        assert result.final_residuals[2] <= 1e-6

    def test_iterates_stay_psd(self, rng, monkeypatch):
        seen = []
        orig = pdhg.primal_step

        def record(prob, X_prev, y_prev, alpha):
            out = orig(prob, X_prev, y_prev, alpha)
            seen.append(out)
            return out

        monkeypatch.setattr(pdhg, "primal_step", record)
        prob, _, _ = random_problem(5, 4, 2, np.random.default_rng(3))
        solve_pd_sdp(prob, SolverConfig(max_iter=200))
        assert seen
        for X in seen:
            assert np.linalg.eigvalsh(X.to_dense()).min() >= -1e-8

    def test_feasibility_and_gap_at_optimal(self):
        config = SolverConfig()
        for n in (2, 4):
            prob = trace_toy_problem(n)
            result = solve_pd_sdp(prob, config)
            assert result.status is SolveStatus.OPTIMAL
            rep = check_solution(prob, result.X, result.y, config.eps_tol)
            tol = 10 * config.eps_tol
            assert rep.equality_violation <= tol * (1 + np.linalg.norm(prob.b))
            assert abs(rep.duality_gap) <= tol * (1 + abs(rep.primal_objective))

    def test_row_permutation_invariance(self, rng):
        prob, ae, ge = random_problem(5, 6, 3, rng)
        perm_a = rng.permutation(6)
        perm_g = rng.permutation(3)
        permuted = SdpProblem(
            n=5,
            C=prob.C,
            A=[prob.A[i] for i in perm_a],
            b=prob.b[perm_a],
            G=[prob.G[j] for j in perm_g],
            h=prob.h[perm_g],
            name="permuted",
        )
        config = SolverConfig(max_iter=400)
        r1 = solve_pd_sdp(prob, config)
        r2 = solve_pd_sdp(permuted, config)
        assert r1.primal_objective == pytest.approx(
            r2.primal_objective, abs=1e-9
        )

    def test_oversized_step_terminates_non_optimal(self):
        prob = trace_toy_problem(2)
        norm = pdhg.estimate_operator_norm(prob)
        config = SolverConfig(alpha_override=2.0 / norm, max_iter=3000)
        result = solve_pd_sdp(prob, config)
        assert result.status in (
            SolveStatus.MAX_ITERATIONS,
            SolveStatus.DIVERGED,
        )
        assert result.iterations <= 3000

    def test_max_iter_limit(self):
        result = solve_pd_sdp(trace_toy_problem(2), SolverConfig(max_iter=1))
        assert result.status is SolveStatus.MAX_ITERATIONS
        assert result.iterations == 1

    def test_progress_callback(self):
        infos = []
        config = SolverConfig(progress_every=1, max_iter=5)
        solve_pd_sdp(trace_toy_problem(2), config, callback=infos.append)
        assert len(infos) == 5
        assert infos[0].k == 1
        assert infos[0].rank == 2
        assert all(i.eps_comb >= 0 for i in infos)

    def test_invalid_config_rejected(self):
        with pytest.raises(ValueError):
            solve_pd_sdp(trace_toy_problem(2), SolverConfig(eps_tol=-1.0))
        with pytest.raises(ValueError):
            solve_pd_sdp(trace_toy_problem(2), SolverConfig(alpha_safety=1.5))
        with pytest.raises(ValueError):
            solve_pd_sdp(trace_toy_problem(2), SolverConfig(window_ell=0))

    def test_determinism(self):
        r1 = solve_pd_sdp(trace_toy_problem(3))
        r2 = solve_pd_sdp(trace_toy_problem(3))
        np.testing.assert_array_equal(r1.X.data, r2.X.data)
        np.testing.assert_array_equal(r1.y, r2.y)
        assert r1.iterations == r2.iterations
