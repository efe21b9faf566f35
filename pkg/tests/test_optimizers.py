import numpy as np
import pytest

from vqebench.harness.runner import FreeFermionObjective
from vqebench.models import TfimSpec
from vqebench.optimizers import (
    AdamConfig,
    AdamState,
    BfgsConfig,
    BfgsState,
    EpochBudget,
    FunctionObjective,
    GradNormBelow,
    NatGradConfig,
    OptimizationError,
    TargetDelta,
    UpdateNormBelow,
    adam_step,
    bfgs_step,
    default_stop_rules,
    natgrad_step,
    run,
)


def quadratic_objective(matrix):
    return FunctionObjective(
        lambda x: float(x @ matrix @ x), lambda x: 2.0 * matrix @ x
    )


def random_spd(rng, dim, lo=0.5, hi=3.0):
    q, _ = np.linalg.qr(rng.standard_normal((dim, dim)))
    return q @ np.diag(rng.uniform(lo, hi, dim)) @ q.T


class TestAdam:
    def test_first_step_collapses_to_sign(self):
        cfg = AdamConfig(learning_rate=0.1)
        state = AdamState.initial(3)
        g = np.array([0.5, -2.0, 1e-3])
        theta, state = adam_step(cfg, state, np.zeros(3), g)
        assert np.allclose(state.momentum, g)
        assert np.allclose(state.sq_gradient, g * g)
        expected = -0.1 * g / (np.abs(g) + cfg.eps_regularizer)
        assert np.allclose(theta, expected)

    def test_zero_gradient_fixed_point(self):
        cfg = AdamConfig(learning_rate=0.1)
        state = AdamState.initial(2)
        theta = np.array([1.0, -2.0])
        for _ in range(25):
            theta, state = adam_step(cfg, state, theta, np.zeros(2))
        assert np.allclose(theta, [1.0, -2.0])

    def test_matches_standard_bias_corrected_form(self, rng):
        cfg = AdamConfig(learning_rate=0.01)
        state = AdamState.initial(4)
        theta = np.zeros(4)
        m_std = np.zeros(4)
        v_std = np.zeros(4)
        theta_ref = np.zeros(4)
        worst = 0.0
        for t in range(1, 1001):
            g = rng.standard_normal(4)
            theta, state = adam_step(cfg, state, theta, g)
            m_std = cfg.beta1 * m_std + (1 - cfg.beta1) * g
            v_std = cfg.beta2 * v_std + (1 - cfg.beta2) * g * g
            m_hat = m_std / (1 - cfg.beta1**t)
            v_hat = v_std / (1 - cfg.beta2**t)
            theta_ref = theta_ref - cfg.learning_rate * m_hat / (
                np.sqrt(v_hat) + cfg.eps_regularizer
            )
            worst = max(worst, float(np.max(np.abs(theta - theta_ref))))
        assert worst <= 1e-12

    def test_bounded_steps_on_random_streams(self, rng):
        cfg = AdamConfig(learning_rate=0.05)
        state = AdamState.initial(6)
        theta = np.zeros(6)
        worst_ratio = 0.0
        for _ in range(2000):
            new_theta, state = adam_step(cfg, state, theta, rng.standard_normal(6))
            worst_ratio = max(
                worst_ratio, float(np.max(np.abs(new_theta - theta))) / cfg.learning_rate
            )
            theta = new_theta
        assert worst_ratio <= 1.05

    def test_rejects_bad_gradient(self):
        cfg = AdamConfig(learning_rate=0.1)
        with pytest.raises(OptimizationError):
            adam_step(cfg, AdamState.initial(2), np.zeros(2), np.array([1.0, np.nan]))

    def test_config_validation(self):
        with pytest.raises(ValueError):
            AdamConfig(learning_rate=0.1, beta1=1.0)
        with pytest.raises(ValueError):
            AdamConfig(learning_rate=0.1, eps_regularizer=0.0)


class TestNatGrad:
    def test_identity_metric_is_gradient_descent(self):
        cfg = NatGradConfig(learning_rate=0.3, tikhonov=0.0)
        g = np.array([1.0, -2.0])
        theta = natgrad_step(cfg, np.zeros(2), g, np.eye(2))
        assert np.allclose(theta, -0.3 * g)

    def test_regularizer_caps_singular_metric(self):
        cfg = NatGradConfig(learning_rate=0.3, tikhonov=1e-4)
        g = np.array([2.0, -1.0])
        theta = natgrad_step(cfg, np.zeros(2), g, np.zeros((2, 2)))
        assert np.allclose(theta, -(0.3 / 1e-4) * g)

    def test_diagonal_solve(self):
        cfg = NatGradConfig(learning_rate=0.1, tikhonov=0.0)
        theta = natgrad_step(cfg, np.zeros(2), np.array([2.0, 1.0]), np.diag([2.0, 1.0]))
        assert np.allclose(theta, [-0.1, -0.1])

    def test_descent_direction_property(self, rng):
        cfg = NatGradConfig(learning_rate=1.0, tikhonov=1e-4)
        for _ in range(100):
            n = rng.integers(2, 8)
            a = rng.standard_normal((n, n))
            metric = a @ a.T  # PSD
            g = rng.standard_normal(n)
            step = np.zeros(n) - natgrad_step(cfg, np.zeros(n), g, metric)
            assert step @ g >= -1e-12

    def test_rejects_bad_gradient(self):
        with pytest.raises(OptimizationError):
            natgrad_step(
                NatGradConfig(0.1), np.zeros(2), np.array([np.inf, 0.0]), np.eye(2)
            )


class TestBfgs:
    def test_parabola_first_search_is_exact(self):
        target = 1.7
        obj = FunctionObjective(
            lambda x: float((x[0] - target) ** 2), lambda x: np.array([2 * (x[0] - target)])
        )
        theta = np.array([0.0])
        state = BfgsState.initial(obj.value(theta), obj.gradient(theta))
        theta, state, info = bfgs_step(BfgsConfig(), state, theta, obj)
        assert info.status == "stepped"
        assert theta[0] == pytest.approx(target, abs=1e-12)

    @pytest.mark.parametrize("dim", [4, 8])
    def test_quadratic_convergence_and_hessian_recovery(self, dim, rng):
        matrix = random_spd(rng, dim)
        obj = quadratic_objective(matrix)
        theta = rng.standard_normal(dim)
        state = BfgsState.initial(obj.value(theta), obj.gradient(theta))
        cfg = BfgsConfig()
        epochs = 0
        while np.linalg.norm(state.grad) > 1e-10:
            theta, state, info = bfgs_step(cfg, state, theta, obj)
            assert info.status == "stepped"
            epochs += 1
            assert epochs <= dim + 2
        assert np.max(np.abs(state.hessian - 2.0 * matrix)) <= 1e-6
        assert np.allclose(state.hessian, state.hessian.T, atol=1e-10)

    def test_stationary_point_converges_immediately(self):
        obj = quadratic_objective(np.eye(3))
        theta = np.zeros(3)
        state = BfgsState.initial(obj.value(theta), obj.gradient(theta))
        _, _, info = bfgs_step(BfgsConfig(grad_tol=1e-12), state, theta, obj)
        assert info.status == "converged"

    def test_line_search_failure_on_linear_objective(self):
        obj = FunctionObjective(lambda x: float(-x[0]), lambda x: np.array([-1.0]))
        theta = np.array([0.0])
        state = BfgsState.initial(obj.value(theta), obj.gradient(theta))
        _, _, info = bfgs_step(BfgsConfig(), state, theta, obj)
        assert info.status == "line_search_failed"

    def test_bounds_clip_trial_points(self):
        # minimum at x = 5 but the box stops at 1; every iterate stays inside
        obj = FunctionObjective(
            lambda x: float((x[0] - 5.0) ** 2), lambda x: np.array([2 * (x[0] - 5.0)])
        )
        cfg = BfgsConfig(bounds=(-1.0, 1.0))
        theta = np.array([0.0])
        state = BfgsState.initial(obj.value(theta), obj.gradient(theta))
        for _ in range(10):
            theta, state, info = bfgs_step(cfg, state, theta, obj)
            assert -1.0 <= theta[0] <= 1.0
            if info.status != "stepped":
                break
        assert theta[0] == pytest.approx(1.0)
        assert info.status == "line_search_failed"  # pinned at the wall

    def test_hessian_stays_symmetric_through_clipped_run(self):
        # a bounded chain-model run exercises clipping, resets and updates;
        # the approximate Hessian must stay symmetric throughout
        from vqebench.harness.experiment import sample_init

        obj = FreeFermionObjective(TfimSpec(8, 1.0), scale=1.0 / 8)
        cfg = BfgsConfig(bounds=(0.0, 2 * np.pi))
        theta = sample_init(8, 1)
        state = BfgsState.initial(obj.value(theta), obj.gradient(theta))
        for _ in range(60):
            theta, state, info = bfgs_step(cfg, state, theta, obj)
            assert np.max(np.abs(state.hessian - state.hessian.T)) <= 1e-10
            if info.status != "stepped":
                break


class TestRun:
    def test_requires_stop_rule(self):
        obj = quadratic_objective(np.eye(2))
        with pytest.raises(ValueError):
            run(obj, AdamConfig(0.1), (), np.ones(2))

    def test_epoch_budget_of_one(self):
        obj = quadratic_objective(np.eye(2))
        record = run(obj, AdamConfig(0.1), (EpochBudget(1),), np.ones(2))
        assert record.num_epochs == 1
        assert record.terminated_by == "epoch_budget"
        assert len(record.energies) == 2  # initial point plus one update

    def test_target_delta_fires_at_epoch_zero(self):
        obj = quadratic_objective(np.eye(2))
        obj.ground_energy = 2.0  # the initial point (1,1) is the "ground state"
        record = run(obj, AdamConfig(0.1), (TargetDelta(1e-10), EpochBudget(5)), np.ones(2))
        assert record.num_epochs == 0
        assert record.terminated_by == "target_delta"

    def test_grad_norm_rule(self):
        obj = quadratic_objective(np.eye(2))
        record = run(
            obj, BfgsConfig(), (GradNormBelow(1e-10), EpochBudget(100)), np.ones(2)
        )
        assert record.terminated_by == "grad_norm"
        assert record.grad_norms[-1] <= 1e-10

    def test_update_norm_rule_with_patience(self):
        obj = quadratic_objective(np.eye(2))
        # natural gradient with the exact metric contracts steadily, so the
        # update norm dips below threshold and stays there
        class MetricObj(FunctionObjective):
            def metric(self, theta):
                return np.eye(2)

        mobj = MetricObj(obj.value, obj.gradient)
        record = run(
            mobj,
            NatGradConfig(0.5, 0.0),
            (UpdateNormBelow(1e-6, patience=3), EpochBudget(500)),
            np.ones(2),
        )
        assert record.terminated_by == "update_norm"

    def test_error_recorded_with_partial_trace(self):
        calls = {"n": 0}

        def value(theta):
            return float(theta @ theta)

        def grad(theta):
            calls["n"] += 1
            if calls["n"] > 3:
                return np.array([np.nan, np.nan])
            return 2.0 * theta

        obj = FunctionObjective(value, grad)
        record = run(obj, AdamConfig(0.1), (EpochBudget(100),), np.ones(2))
        assert record.terminated_by.startswith("error:")
        assert record.success is False
        assert len(record.energies) >= 1

    def test_deterministic(self):
        obj_a = FreeFermionObjective(TfimSpec(6, 1.0), scale=1.0 / 12)
        obj_b = FreeFermionObjective(TfimSpec(6, 1.0), scale=1.0 / 12)
        theta0 = np.full(6, 0.02)
        rules = (TargetDelta(1e-10), EpochBudget(300))
        rec_a = run(obj_a, NatGradConfig(0.5, 1e-4), rules, theta0, seed=3)
        rec_b = run(obj_b, NatGradConfig(0.5, 1e-4), rules, theta0, seed=3)
        assert rec_a.num_epochs == rec_b.num_epochs
        assert np.array_equal(rec_a.energies, rec_b.energies)
        assert np.array_equal(rec_a.final_theta, rec_b.final_theta)

    def test_tfim_natgrad_reaches_ground_state(self):
        # the flagship behavior: natural gradient at its stated rate converges
        # to the exact ground energy from a near-identity start
        from vqebench.harness.experiment import sample_init

        obj = FreeFermionObjective(TfimSpec(8, 1.0), scale=1.0 / 16)
        record = run(
            obj,
            NatGradConfig(0.5, 1e-4),
            default_stop_rules(),
            sample_init(8, 0),
            seed=0,
        )
        assert record.success
        assert record.delta_min <= 1e-10
        assert record.terminated_by == "target_delta"

    def test_bfgs_records_line_search_cost(self):
        obj = quadratic_objective(np.eye(3))
        record = run(obj, BfgsConfig(), (GradNormBelow(1e-10), EpochBudget(50)), np.ones(3))
        assert record.gamma_mean is not None
        assert record.gamma_mean >= 1.0

    def test_config_snapshot(self):
        obj = quadratic_objective(np.eye(2))
        record = run(obj, AdamConfig(0.07), (EpochBudget(2),), np.ones(2))
        assert record.config["optimizer"] == "adam"
        assert record.config["learning_rate"] == 0.07
        assert record.config["stop_rules"][0]["rule"] == "EpochBudget"
