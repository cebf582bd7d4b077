import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import CREEP_TRUTH
from hybrid_ident.errors import ConfigError, ModelDomainError, PreconditionError, SolverError
from hybrid_ident.lm import LmConfig, fd_jacobian, normalized_step, run_lm
from hybrid_ident.model import CreepModel, ParameterSpace
from hybrid_ident.objective import Objective

BOX3 = ParameterSpace(("x", "y", "z"), [-10.0, -10.0, -10.0], [10.0, 10.0, 10.0])


def scaled_error(numeric, analytic):
    """Largest error per Jacobian column, relative to that column's magnitude."""
    scale = np.max(np.abs(analytic), axis=0)
    return float(np.max(np.abs(numeric - analytic) / scale))


class TestFdJacobian:
    def test_linear_map_is_exact(self):
        A = np.array([[1.0, 2.0, -3.0], [0.5, -4.0, 7.0], [2.0, 0.0, 1.0], [-1.0, 1.0, 1.0]])
        b = np.array([1.0, -2.0, 0.5, 3.0])
        J = fd_jacobian(lambda th: A @ th - b, np.array([1.5, -2.0, 3.0]), BOX3)
        np.testing.assert_allclose(J, A, rtol=1e-8, atol=1e-8)

    def test_constant_residuals(self):
        J = fd_jacobian(lambda th: np.array([1.0, 2.0]), np.array([0.0, 1.0, 2.0]), BOX3)
        assert np.array_equal(J, np.zeros((2, 3)))

    def test_backward_difference_at_upper_bound(self):
        calls = []

        def fn(th):
            calls.append(th.copy())
            return np.array([th[0] ** 2])

        space = ParameterSpace(("x",), [0.0], [1.0])
        J = fd_jacobian(fn, np.array([1.0]), space)
        assert all(space.contains(c) for c in calls)
        assert J[0, 0] == pytest.approx(2.0, rel=1e-5)

    def test_creep_matches_analytic(self, creep_data, wide_creep_space):
        objective = Objective(CreepModel(), creep_data)
        model = CreepModel()
        for theta in [CREEP_TRUTH, CREEP_TRUTH * [1.3, 0.7, 1.5], np.array([400.0, 3000.0, 1.5])]:
            num = np.vstack([
                fd_jacobian(lambda th: model.predict(th, t, s), theta, wide_creep_space)
                for t, s, _, _, _ in objective.blocks
            ])
            ana = np.vstack([model.analytic_jacobian(theta, t, s) for t, s, _, _, _ in objective.blocks])
            assert scaled_error(num, ana) <= 1e-4

    def test_failed_evaluation(self):
        def bad(th):
            if th[0] > 1.0:
                raise ModelDomainError("nope")
            return th

        with pytest.raises(SolverError):
            fd_jacobian(bad, np.array([1.0, 0.0, 0.0]), BOX3)


class TestNormalizedStep:
    def test_identity_hessian(self):
        g = np.array([1.0, -2.0, 0.5])
        np.testing.assert_allclose(normalized_step(g, np.eye(3), 0.0), -g, rtol=1e-15)

    def test_diagonal_example(self):
        H, g = np.diag([4.0, 25.0]), np.array([2.0, 5.0])
        step = normalized_step(g, H, 0.0)
        np.testing.assert_allclose(step, [-0.5, -0.2], rtol=1e-15)
        np.testing.assert_allclose(step, np.linalg.solve(H, -g), rtol=1e-15)

    def test_large_damping_is_scaled_steepest_descent(self):
        H = np.array([[4.0, 1.0], [1.0, 9.0]])
        g = np.array([1.0, -3.0])
        lam = 1e8
        np.testing.assert_allclose(normalized_step(g, H, lam), -g / (lam * np.diag(H)), rtol=1e-6)

    def test_frozen_coordinate(self):
        H = np.diag([4.0, 0.0, 1.0])
        step = normalized_step(np.array([2.0, 1.0, 1.0]), H, 0.0)
        assert step[1] == 0.0
        np.testing.assert_allclose(step[[0, 2]], [-0.5, -1.0])

    @settings(max_examples=50, deadline=None)
    @given(st.lists(st.floats(1e-3, 1e3), min_size=3, max_size=3), st.integers(0, 2**32 - 1))
    def test_rescaling_invariance(self, scales, seed):
        rng = np.random.default_rng(seed)
        J = rng.normal(size=(6, 3))
        r = rng.normal(size=6)
        s = np.asarray(scales)
        base = normalized_step(J.T @ r, J.T @ J, 0.0)
        # parameter i measured in units 1/s_i: J columns scale by 1/s_i
        Js = J / s
        scaled = normalized_step(Js.T @ r, Js.T @ Js, 0.0)
        np.testing.assert_allclose(scaled, base * s, rtol=1e-7, atol=1e-9 * np.max(np.abs(base * s)))
        H = Js.T @ Js
        d = np.sqrt(np.diag(H))
        np.testing.assert_allclose(np.diag(H / np.outer(d, d)), 1.0, rtol=1e-14)


class TestRunLm:
    def test_affine_one_step(self):
        c = np.array([1.0, -2.0, 3.5])
        start = np.array([7.0, 4.0, -6.0])
        cfg = LmConfig(lambda0=1e-12)
        # exact Jacobian: the first trial is accepted and lands on the solution
        theta, trace = run_lm(lambda th: th - c, start, BOX3, cfg, jacobian_fn=lambda th: np.eye(3))
        assert trace.rows[0][4] and trace.rows[0][1] < 1e-20
        # finite differences: first step within 1e-8 relative, final cost below 1e-20
        theta, trace = run_lm(lambda th: th - c, start, BOX3, cfg)
        first = trace.rows[0]
        assert first[4] and np.sqrt(first[1]) / np.linalg.norm(c) < 1e-8
        assert trace.cost < 1e-20
        np.testing.assert_allclose(theta, c, rtol=1e-10)

    def test_general_affine_least_squares(self):
        rng = np.random.default_rng(0)
        A = rng.normal(size=(8, 3))
        b = rng.normal(size=8)
        x_ls = np.linalg.lstsq(A, b, rcond=None)[0]
        theta, trace = run_lm(lambda th: A @ th - b, np.zeros(3), BOX3, LmConfig(lambda0=1e-10))
        assert trace.rows[0][4]
        np.testing.assert_allclose(theta, x_ls, rtol=1e-8)

    def test_already_optimal(self):
        c = np.array([1.0, 2.0, 3.0])
        theta, trace = run_lm(lambda th: th - c, c.copy(), BOX3)
        assert trace.reason == "zero cost" and trace.cost == 0.0
        assert np.array_equal(theta, c)

    def test_creep_recovery(self, creep_data, wide_creep_space):
        objective = Objective(CreepModel(), creep_data)
        for start in ([1.2, 0.8, 1.2], [0.8, 1.2, 0.85], [1.15, 1.15, 0.8]):
            theta, trace = run_lm(objective.residuals, CREEP_TRUTH * start, wide_creep_space)
            np.testing.assert_allclose(theta, CREEP_TRUTH, rtol=1e-8)
            assert trace.rows[-1][0] <= 50

    def test_monotone_and_feasible(self, creep_data, wide_creep_space):
        objective = Objective(CreepModel(), creep_data)
        visited = []

        def recording(th):
            visited.append(np.array(th))
            return objective.residuals(th)

        _, trace = run_lm(recording, np.array([1650.0, 700.0, 8.5]), wide_creep_space)
        accepted = [row[1] for row in trace.rows if row[4]]
        assert np.all(np.diff(accepted) < 0)
        assert all(wide_creep_space.contains(v) for v in visited)

    def test_bound_active_solution(self):
        c = np.array([20.0, 0.0, 0.0])
        theta, _ = run_lm(lambda th: th - c, np.zeros(3), BOX3)
        assert theta[0] == 10.0

    def test_start_outside_bounds(self):
        with pytest.raises(PreconditionError):
            run_lm(lambda th: th, np.array([0.0, 0.0, 11.0]), BOX3)
        with pytest.raises(PreconditionError):
            run_lm(lambda th: th, np.zeros(2), BOX3)

    def test_persistent_failure(self):
        def fragile(th):
            if not np.array_equal(th, np.ones(3)):
                raise ModelDomainError("cannot evaluate")
            return th - 3.0

        def jac(th):
            return np.eye(3)

        with pytest.raises(SolverError):
            run_lm(fragile, np.ones(3), BOX3, jacobian_fn=jac)

    def test_config_validation(self):
        with pytest.raises(ConfigError):
            LmConfig(lambda_up=1.0)
        with pytest.raises(ConfigError):
            LmConfig(max_iterations=0)
