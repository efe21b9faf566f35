"""Experiment execution: objectives, backend routing, run dispatch, aggregation.

Every (size, optimizer, seed) cell of an experiment is one independent
optimization run; all optimizers at a given size start from the same sampled
parameter vectors.  Records come back in canonical (size, optimizer, seed)
order no matter how many workers executed them.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .. import freefermion as ff
from .. import statevector as sv
from ..costmodel import default_cost_params, estimate_runtime
from ..models import (
    PauliHamiltonian,
    TfimSpec,
    XxzSpec,
    ground_energy_oracle,
    sparse_matrix,
    tfim_ground_energy,
    tfim_hamiltonian,
    xxz_hamiltonian,
)
from ..optimizers import Objective, RunRecord, run
from .circuits import CircuitBuild, build_circuit, default_y_positions
from .experiment import ExperimentSpec, OptimizerSetting, sample_init

TWO_PI = 2.0 * math.pi


class FreeFermionObjective(Objective):
    """Ising-chain circuit energy through the block simulation, with caching.

    One evaluation produces the block states and all their derivatives, from
    which value, gradient and metric are read off; consecutive requests at
    the same parameters reuse it.  `scale` multiplies energy, gradient and
    ground energy alike (the harness passes 1/#terms, giving the optimizers
    an intensive objective; the relative error is unaffected).  The metric
    describes the state manifold and is never rescaled.
    """

    def __init__(self, spec: TfimSpec, scale: float = 1.0):
        self._spec = spec
        self.scale = float(scale)
        self.ground_energy = tfim_ground_energy(spec) * self.scale
        self._key: bytes | None = None
        self._cache: tuple[np.ndarray, np.ndarray] | None = None

    def _blocks(self, theta) -> tuple[np.ndarray, np.ndarray]:
        theta = np.asarray(theta, float)
        key = theta.tobytes()
        if key != self._key:
            params = ff.QaoaParams.from_vector(theta)
            self._cache = ff.block_derivatives(self._spec, params)
            self._key = key
        return self._cache

    def value(self, theta):
        psi, _ = self._blocks(theta)
        state = ff.FermionState(psi, ff.tfim_alphas(self._spec), self._spec.field)
        return ff.state_energy(state) * self.scale

    def gradient(self, theta):
        psi, derivs = self._blocks(theta)
        return self.scale * ff.gradient_from_blocks(self._spec, psi, derivs)

    def value_and_gradient(self, theta):
        psi, derivs = self._blocks(theta)
        state = ff.FermionState(psi, ff.tfim_alphas(self._spec), self._spec.field)
        return (
            ff.state_energy(state) * self.scale,
            self.scale * ff.gradient_from_blocks(self._spec, psi, derivs),
        )

    def metric(self, theta):
        psi, derivs = self._blocks(theta)
        return ff.fubini_from_blocks(psi, derivs)


class StatevectorObjective(Objective):
    """Dense-simulation energy of an arbitrary layer circuit, with caching.

    The gradient uses the reverse sweep; once a metric is requested at some
    parameters, the derivative states computed for it also serve the energy
    and gradient there.  `scale` works as in `FreeFermionObjective`.
    """

    def __init__(
        self,
        circuit: sv.CircuitSpec,
        ham: PauliHamiltonian,
        ground_energy: float,
        scale: float = 1.0,
    ):
        self._circuit = circuit
        self._matrix = sparse_matrix(ham)
        self._ham = ham
        self.scale = float(scale)
        self.ground_energy = ground_energy * self.scale
        self._psi_key: bytes | None = None
        self._psi: np.ndarray | None = None
        self._full_key: bytes | None = None
        self._full: tuple[float, np.ndarray, np.ndarray] | None = None

    def _state(self, theta: np.ndarray) -> np.ndarray:
        key = theta.tobytes()
        if key != self._psi_key:
            self._psi = sv._run_raw(self._circuit, theta)
            self._psi_key = key
        return self._psi

    def value(self, theta):
        theta = np.asarray(theta, float)
        if theta.tobytes() == self._full_key:
            return self._full[0] * self.scale
        psi = self._state(theta)
        return float(np.vdot(psi, self._matrix @ psi).real) * self.scale

    def gradient(self, theta):
        theta = np.asarray(theta, float)
        if theta.tobytes() == self._full_key:
            return self._full[1] * self.scale
        return self.scale * sv.gradient(self._circuit, theta, self._ham)

    def value_and_gradient(self, theta):
        theta = np.asarray(theta, float)
        if theta.tobytes() == self._full_key:
            return self._full[0] * self.scale, self._full[1] * self.scale
        return self.value(theta), self.gradient(theta)

    def metric(self, theta):
        theta = np.asarray(theta, float)
        key = theta.tobytes()
        if key == self._full_key:
            return self._full[2]
        psi, derivs = sv.derivative_states(self._circuit, theta)
        h_psi = self._matrix @ psi
        value = float(np.vdot(psi, h_psi).real)
        grad = 2.0 * np.real(derivs.conj() @ h_psi)
        gram = derivs.conj() @ derivs.T
        overlaps = derivs @ psi.conj()
        metric = gram.real - np.outer(overlaps.conj(), overlaps).real
        metric = 0.5 * (metric + metric.T)
        self._full_key = key
        self._full = (value, grad, metric)
        return metric


@lru_cache(maxsize=32)
def _build_for_size(exp: ExperimentSpec, size: int) -> tuple[CircuitBuild, float]:
    """Circuit plus exact ground energy for one system size of an experiment."""
    if exp.model == "tfim":
        model = TfimSpec(size, exp.field)
        positions = default_y_positions(size, exp.y_layers) if exp.variant == "qaoa_y" else ()
        build = build_circuit(model, exp.variant, positions)
        return build, tfim_ground_energy(model)
    model = XxzSpec(size, exp.anisotropy)
    build = build_circuit(model, exp.variant)
    return build, ground_energy_oracle(xxz_hamiltonian(model))


def select_backend(exp: ExperimentSpec, build: CircuitBuild, override: str | None = None) -> str:
    choice = override or exp.backend
    if choice == "auto":
        return "freefermion" if (exp.model == "tfim" and build.pure_tfim_qaoa) else "statevector"
    if choice == "freefermion" and not (exp.model == "tfim" and build.pure_tfim_qaoa):
        raise ValueError("the free-fermion backend only covers the pure alternating circuit")
    return choice


def _hamiltonian_for(exp: ExperimentSpec, size: int) -> PauliHamiltonian:
    if exp.model == "tfim":
        return tfim_hamiltonian(TfimSpec(size, exp.field))
    return xxz_hamiltonian(XxzSpec(size, exp.anisotropy))


def make_objective(
    exp: ExperimentSpec, size: int, backend: str | None = None,
    objective_scale: str = "per_term",
) -> tuple[Objective, CircuitBuild, str]:
    """Objective for one experiment cell at the requested energy normalization.

    An intensive normalization leaves the relative error untouched; it fixes
    the regime the optimizer's step heuristics operate in (see
    `experiment.OBJECTIVE_SCALES`).
    """
    build, e0 = _build_for_size(exp, size)
    chosen = select_backend(exp, build, backend)
    ham = _hamiltonian_for(exp, size)
    scale = {
        "per_term": 1.0 / ham.num_terms,
        "per_site": 1.0 / size,
        "extensive": 1.0,
    }[objective_scale]
    if chosen == "freefermion":
        return FreeFermionObjective(TfimSpec(size, exp.field), scale=scale), build, chosen
    return StatevectorObjective(build.circuit, ham, e0, scale=scale), build, chosen


def _wrapped_distance(angles: np.ndarray) -> float:
    """Largest circular distance of any angle from a multiple of 2*pi."""
    reduced = np.mod(angles + np.pi, TWO_PI) - np.pi
    return float(np.max(np.abs(reduced))) if reduced.size else 0.0


def execute_single(
    exp: ExperimentSpec, size: int, setting: OptimizerSetting, seed: int,
    backend: str | None = None,
) -> RunRecord:
    """Run one (size, optimizer, seed) cell and attach harness metadata."""
    objective, build, chosen = make_objective(exp, size, backend, setting.objective)
    theta0 = sample_init(build.circuit.num_parameters, seed, exp.init_low, exp.init_high)
    record = run(objective, setting.build(), exp.stop.build(), theta0, seed=seed)
    record.config.update(
        label=setting.label, size=size, model=exp.model, backend=chosen,
        variant=exp.variant, experiment=exp.name,
    )
    cost = default_cost_params(
        num_parameters=build.circuit.num_parameters,
        depth=len(build.circuit.layers),
        ham_bases=exp.default_ham_bases,
    )
    record.runtime_t_eval = estimate_runtime(record, cost)
    if build.y_slots:
        record.max_abs_y = _wrapped_distance(record.final_theta[list(build.y_slots)])
    return record


def _task(args) -> RunRecord:
    return execute_single(*args)


def run_experiment(
    exp: ExperimentSpec, workers: int = 1, backend: str | None = None
) -> list[RunRecord]:
    """Execute the full sizes x optimizers x seeds cross product.

    Failures inside a single run are already captured in its record; the
    experiment continues.  Output order is canonical regardless of `workers`.
    """
    tasks = [
        (exp, size, setting, exp.seed_base + seed, backend)
        for size in exp.sizes
        for setting in exp.optimizers
        for seed in range(exp.seeds)
    ]
    if workers <= 1:
        return [_task(task) for task in tasks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_task, tasks, chunksize=1))


def classify(records: list[RunRecord]) -> dict[tuple[int, str], float]:
    """Fraction of runs per (size, optimizer label) that reached a global minimum."""
    if not records:
        raise ValueError("no records to classify")
    totals: dict[tuple[int, str], int] = {}
    wins: dict[tuple[int, str], int] = {}
    for record in records:
        key = (record.config["size"], record.config["label"])
        totals[key] = totals.get(key, 0) + 1
        wins[key] = wins.get(key, 0) + int(record.success)
    return {key: wins[key] / totals[key] for key in totals}


def mean_epochs(
    records: list[RunRecord], label: str, only_success: bool = True
) -> tuple[np.ndarray, np.ndarray]:
    """Mean epoch count per size for one optimizer label.

    With `only_success` the mean runs over globally converged records (sizes
    without any are dropped), which is the quantity the scaling fits use;
    without it, budget-capped failures raise the mean and expose the jump.
    """
    buckets: dict[int, list[int]] = {}
    for record in records:
        if record.config["label"] != label:
            continue
        if only_success and not record.success:
            continue
        buckets.setdefault(record.config["size"], []).append(record.num_epochs)
    sizes = np.array(sorted(buckets), dtype=float)
    means = np.array([np.mean(buckets[int(size)]) for size in sizes])
    return sizes, means


@dataclass(frozen=True)
class FitResult:
    """Monomial fit epochs ~ prefactor * size^exponent over the included sizes."""

    prefactor: float
    exponent: float
    included_sizes: tuple[int, ...]
    residual: float
    jump_size: int | None = None  # first size excluded by the transition filter


def fit_scaling(sizes, mean_epoch_counts, jump_factor: float | None = 10.0) -> FitResult:
    """Least-squares monomial fit log E = log a + b log N with jump filtering.

    Growing from the two smallest sizes, each further size is admitted only
    while its mean epoch count stays below `jump_factor` times the monomial
    extrapolated from smaller sizes; the first offender and all larger sizes
    are excluded.  A size that already sits noticeably above the trend (more
    than sqrt(jump_factor) times it) still enters the fit as the partially
    included boundary of the pre-jump range, but no longer feeds the
    extrapolation, so a half-jumped size cannot mask the transition right
    above it.  Pass `jump_factor=None` to fit everything.
    """
    sizes = np.asarray(sizes, dtype=float)
    means = np.asarray(mean_epoch_counts, dtype=float)
    keep = np.isfinite(means) & (means > 0)
    sizes, means = sizes[keep], means[keep]
    order = np.argsort(sizes)
    sizes, means = sizes[order], means[order]
    if sizes.size < 2:
        raise ValueError("need at least two sizes to fit a scaling law")

    def fit(xs, ys) -> tuple[float, float]:
        slope, intercept = np.polyfit(np.log(xs), np.log(ys), 1)
        return math.exp(intercept), slope

    jump: float | None = None
    if jump_factor is not None:
        clean = [0, 1]
        included = 2
        while included < sizes.size:
            a, b = fit(sizes[clean], means[clean])
            ratio = means[included] / (a * sizes[included] ** b)
            if ratio > jump_factor:
                jump = sizes[included]
                break
            if ratio <= math.sqrt(jump_factor):
                clean.append(included)
            included += 1
    else:
        included = sizes.size
    xs, ys = sizes[:included], means[:included]
    prefactor, exponent = fit(xs, ys)
    residual = float(
        np.sqrt(np.mean((np.log(ys) - np.log(prefactor * xs**exponent)) ** 2))
    )
    return FitResult(
        prefactor,
        exponent,
        tuple(int(s) for s in xs),
        residual,
        int(jump) if jump is not None else None,
    )
