import numpy as np
import pytest

from vqebench.costmodel import (
    CostParams,
    cost_energy,
    cost_epoch,
    cost_fubini,
    cost_gradient,
    default_cost_params,
    estimate_runtime,
)
from vqebench.optimizers import RunRecord


def make_params(**overrides):
    base = dict(
        samples_energy=1000.0,
        samples_metric=100.0,
        ham_bases=1,
        gens_per_param=1.0,
        num_parameters=10,
        depth=20,
        gate_time=0.0,
        wrap_time=1.0,
    )
    base.update(overrides)
    return CostParams(**base)


def record_stub(optimizer, epochs, gamma=None):
    return RunRecord(
        seed=0,
        config={"optimizer": optimizer},
        energies=np.zeros(1),
        deltas=np.zeros(1),
        grad_norms=np.zeros(1),
        num_epochs=epochs,
        delta_min=0.0,
        terminated_by="epoch_budget",
        success=True,
        final_theta=np.zeros(1),
        gamma_mean=gamma,
    )


class TestPrimitives:
    def test_energy_is_one_t_eval(self):
        p = make_params()
        assert cost_energy(p) == pytest.approx(p.t_eval)

    def test_gradient_prefactors(self):
        p = make_params()
        assert cost_gradient(p, "analytic") == pytest.approx(10 * p.t_eval)
        assert cost_gradient(p, "numeric_sym") == pytest.approx(20 * p.t_eval)
        assert cost_gradient(p, "numeric_asym") == pytest.approx(11 * p.t_eval)
        assert cost_gradient(p, "spsa") == pytest.approx(2 * p.t_eval)

    def test_unknown_gradient_method(self):
        with pytest.raises(ValueError):
            cost_gradient(make_params(), "exact")

    def test_fubini_worked_example(self):
        # n=10, K=1, N_a = N_M/10, equal time scales, one basis: 11 t_eval
        p = make_params()
        assert cost_fubini(p) == pytest.approx(11 * p.t_eval)


class TestEpochCosts:
    def test_adam(self):
        p = make_params()
        assert cost_epoch(p, "adam") == pytest.approx(10 * p.t_eval)

    def test_adam_with_monitoring(self):
        p = make_params(monitor_energy=True)
        assert cost_epoch(p, "adam") == pytest.approx(11 * p.t_eval)

    def test_natgrad_worked_example(self):
        p = make_params()
        assert cost_epoch(p, "natgrad") == pytest.approx(21 * p.t_eval)

    def test_bfgs_worked_example(self):
        p = make_params(num_parameters=9, line_search_evals=3.0)
        assert cost_epoch(p, "bfgs", "numeric_asym") == pytest.approx(13 * p.t_eval)

    def test_unknown_optimizer(self):
        with pytest.raises(ValueError):
            cost_epoch(make_params(), "lbfgs")

    def test_natgrad_never_cheaper_than_adam(self, rng):
        for _ in range(10_000):
            p = CostParams(
                samples_energy=float(rng.uniform(1, 1e5)),
                samples_metric=float(rng.uniform(1, 1e5)),
                ham_bases=int(rng.integers(1, 20)),
                gens_per_param=float(rng.uniform(0.5, 8)),
                num_parameters=int(rng.integers(1, 64)),
                depth=int(rng.integers(1, 200)),
                gate_time=float(rng.uniform(0, 2)),
                wrap_time=float(rng.uniform(0.1, 2)),
            )
            assert cost_epoch(p, "natgrad") >= cost_epoch(p, "adam")

    @pytest.mark.parametrize("optimizer", ["adam", "bfgs", "natgrad"])
    def test_monotone_in_parameters_samples_depth(self, optimizer):
        p = make_params(gate_time=0.5)
        more_params = make_params(gate_time=0.5, num_parameters=11)
        more_samples = make_params(gate_time=0.5, samples_energy=1100.0)
        deeper = make_params(gate_time=0.5, depth=21)
        base = cost_epoch(p, optimizer)
        assert cost_epoch(more_params, optimizer) > base
        assert cost_epoch(more_samples, optimizer) > base
        assert cost_epoch(deeper, optimizer) > base

    def test_t_eval_units_independent_of_wrap_time(self):
        # with equal time scales the normalized cost cannot see the clock
        for wrap in (0.5, 1.0, 7.3):
            p = make_params(wrap_time=wrap)
            assert cost_epoch(p, "natgrad") / p.t_eval == pytest.approx(21.0)

    def test_validation(self):
        with pytest.raises(ValueError):
            make_params(samples_energy=0.0)
        with pytest.raises(ValueError):
            make_params(depth=0)
        with pytest.raises(ValueError):
            make_params(wrap_time=0.0)


class TestEstimateRuntime:
    def test_adam_hundred_epochs(self):
        p = make_params()
        assert estimate_runtime(record_stub("adam", 100), p) == pytest.approx(1000.0)

    def test_natgrad_hundred_epochs(self):
        p = make_params()
        assert estimate_runtime(record_stub("natgrad", 100), p) == pytest.approx(2100.0)

    def test_zero_epochs(self):
        assert estimate_runtime(record_stub("natgrad", 0), make_params()) == 0.0

    def test_measured_line_search_cost_overrides(self):
        p = make_params(num_parameters=9, line_search_evals=3.0)
        runtime = estimate_runtime(record_stub("bfgs", 10, gamma=5.0), p, "numeric_asym")
        assert runtime == pytest.approx(10 * (10 + 5))

    def test_default_factory(self):
        p = default_cost_params(num_parameters=8, depth=8, ham_bases=2)
        assert p.time_scale(1) == p.time_scale(2) == p.time_scale(3)
        assert p.samples_metric == pytest.approx(p.samples_energy / 10)
