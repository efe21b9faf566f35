"""Per-epoch quantum-runtime cost model for the benchmarked optimizers.

Cost of the primitive circuit evaluations, with n parameters, K_H Hamiltonian
measurement bases, K generator bases per parameter, N_M / N_a samples per
expectation value / metric entry, and time scales t_x = (d/x) t_gate + t_wrap:

    energy                      N_M K_H t_1
    analytic gradient           (K n) N_M K_H t_1
    numeric gradient (sym.)     2 n   N_M K_H t_1
    numeric gradient (asym.)    (n+1) N_M K_H t_1
    stochastic-perturbation     2     N_M K_H t_1
    metric (all entries)        (K n)^2 N_a t_3 + (K n) N_a t_2

Per epoch, ADAM pays one gradient (plus optional monitoring energies), BFGS
adds its line-search evaluations, and natural gradient adds the metric; the
classical solve against the metric is negligible and not modeled.  Runtimes
are reported in units of one energy evaluation, t_eval = N_M K_H t_1.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

from .optimizers import RunRecord

GRADIENT_METHODS = ("analytic", "numeric_sym", "numeric_asym", "spsa")
OPTIMIZERS = ("adam", "bfgs", "natgrad")


@dataclass(frozen=True)
class CostParams:
    """Sampling budgets, term counts and time scales of the cost model.

    `gate_time` may be zero, which makes all three time scales equal to
    `wrap_time` (the approximation used when reporting in t_eval units).
    """

    samples_energy: float  # samples per Hamiltonian expectation value
    samples_metric: float  # samples per metric entry
    ham_bases: int  # measurement bases covering the Hamiltonian
    gens_per_param: float  # mean generator bases per parameter
    num_parameters: int
    depth: int
    gate_time: float = 0.0
    wrap_time: float = 1.0
    line_search_evals: float = 3.0  # energy evaluations per BFGS line search
    monitor_energy: bool = False  # extra energy evaluation per ADAM epoch

    def __post_init__(self) -> None:
        if min(self.samples_energy, self.samples_metric) <= 0:
            raise ValueError("sample counts must be positive")
        if self.ham_bases <= 0 or self.gens_per_param <= 0:
            raise ValueError("basis counts must be positive")
        if self.num_parameters <= 0 or self.depth <= 0:
            raise ValueError("parameter count and depth must be positive")
        if self.gate_time < 0 or self.wrap_time <= 0 or self.line_search_evals < 0:
            raise ValueError("time scales must be non-negative, wrap time positive")

    def time_scale(self, x: int) -> float:
        """t_x = (d/x) t_gate + t_wrap."""
        return (self.depth / x) * self.gate_time + self.wrap_time

    @property
    def t_eval(self) -> float:
        """Cost of a single energy evaluation."""
        return self.samples_energy * self.ham_bases * self.time_scale(1)


def cost_energy(params: CostParams) -> float:
    return params.t_eval


def cost_gradient(params: CostParams, method: str = "analytic") -> float:
    n = params.num_parameters
    prefactors = {
        "analytic": params.gens_per_param * n,
        "numeric_sym": 2.0 * n,
        "numeric_asym": n + 1.0,
        "spsa": 2.0,
    }
    if method not in prefactors:
        raise ValueError(f"unknown gradient method {method!r}; choose from {GRADIENT_METHODS}")
    return prefactors[method] * params.t_eval


def cost_fubini(params: CostParams) -> float:
    kn = params.gens_per_param * params.num_parameters
    samples = params.samples_metric
    return kn * kn * samples * params.time_scale(3) + kn * samples * params.time_scale(2)


def cost_epoch(params: CostParams, optimizer: str, gradient_method: str = "analytic") -> float:
    grad = cost_gradient(params, gradient_method)
    if optimizer == "adam":
        return grad + (params.t_eval if params.monitor_energy else 0.0)
    if optimizer == "bfgs":
        return grad + params.line_search_evals * params.t_eval
    if optimizer == "natgrad":
        return grad + cost_fubini(params)
    raise ValueError(f"unknown optimizer {optimizer!r}; choose from {OPTIMIZERS}")


def default_cost_params(
    num_parameters: int,
    depth: int,
    ham_bases: int = 2,
    gens_per_param: float = 1.0,
    samples_energy: float = 1000.0,
    metric_sample_ratio: float = 0.1,
) -> CostParams:
    """Defaults used for runtime rescaling: N_a = N_M / 10 and equal time scales."""
    return CostParams(
        samples_energy=samples_energy,
        samples_metric=metric_sample_ratio * samples_energy,
        ham_bases=ham_bases,
        gens_per_param=gens_per_param,
        num_parameters=num_parameters,
        depth=depth,
        gate_time=0.0,
        wrap_time=1.0,
    )


def estimate_runtime(
    record: RunRecord, params: CostParams, gradient_method: str = "analytic"
) -> float:
    """Total quantum runtime of a recorded run, in t_eval units.

    Uses the optimizer tag from the record's config snapshot; a BFGS record
    carrying its measured mean line-search evaluation count overrides the
    configured value.
    """
    optimizer = record.config.get("optimizer")
    if optimizer == "bfgs" and record.gamma_mean is not None:
        params = replace(params, line_search_evals=record.gamma_mean)
    return record.num_epochs * cost_epoch(params, optimizer, gradient_method) / params.t_eval
