"""ADAM, BFGS and Tikhonov-regularized natural gradient descent.

All three optimizers act on an `Objective` exposing the energy, its gradient
and (for natural gradient) the metric of the parametrization.  `run` drives
one optimization to completion, recording the energy / relative-error /
gradient-norm trace per epoch, where an epoch is one parameter update (for
BFGS one direction-plus-line-search cycle).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence, Union

import numpy as np

#: Runs whose best relative error stays at or above this are local minima.
SUCCESS_THRESHOLD = 1e-3


class OptimizationError(RuntimeError):
    """An optimizer step could not be carried out (bad gradient, failed solve)."""


# ---------------------------------------------------------------------------
# objective interface


class Objective:
    """Smooth objective; subclasses may fuse evaluations for speed."""

    ground_energy: float | None = None

    def value(self, theta: np.ndarray) -> float:
        raise NotImplementedError

    def gradient(self, theta: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def value_and_gradient(self, theta: np.ndarray) -> tuple[float, np.ndarray]:
        return self.value(theta), self.gradient(theta)

    def metric(self, theta: np.ndarray) -> np.ndarray:
        raise NotImplementedError("this objective does not provide a metric")


class FunctionObjective(Objective):
    """Wrap plain callables as an objective."""

    def __init__(
        self,
        value_fn: Callable[[np.ndarray], float],
        gradient_fn: Callable[[np.ndarray], np.ndarray],
        metric_fn: Callable[[np.ndarray], np.ndarray] | None = None,
        ground_energy: float | None = None,
    ):
        self._value = value_fn
        self._gradient = gradient_fn
        self._metric = metric_fn
        self.ground_energy = ground_energy

    def value(self, theta):
        return float(self._value(theta))

    def gradient(self, theta):
        return np.asarray(self._gradient(theta), dtype=float)

    def metric(self, theta):
        if self._metric is None:
            raise NotImplementedError("no metric supplied")
        return np.asarray(self._metric(theta), dtype=float)


def _require_finite(theta: np.ndarray) -> np.ndarray:
    if not np.all(np.isfinite(theta)):
        raise OptimizationError("refusing to evaluate the objective at non-finite parameters")
    return theta


# ---------------------------------------------------------------------------
# ADAM


@dataclass(frozen=True)
class AdamConfig:
    learning_rate: float
    beta1: float = 0.9
    beta2: float = 0.999
    eps_regularizer: float = 1e-7

    def __post_init__(self) -> None:
        if not (0.0 < self.beta1 < 1.0 and 0.0 < self.beta2 < 1.0):
            raise ValueError("decay factors must lie strictly between 0 and 1")
        if self.eps_regularizer <= 0.0:
            raise ValueError("the regularizer must be positive")


@dataclass
class AdamState:
    momentum: np.ndarray
    sq_gradient: np.ndarray
    step: int = 0

    @classmethod
    def initial(cls, dim: int) -> "AdamState":
        return cls(np.zeros(dim), np.zeros(dim), 0)


def adam_step(
    config: AdamConfig, state: AdamState, theta: np.ndarray, grad: np.ndarray
) -> tuple[np.ndarray, AdamState]:
    """One update with self-bias-corrected moment recursions.

    m_t = (b1 - b1^t)/(1 - b1^t) m_{t-1} + (1 - b1)/(1 - b1^t) g
    v_t = (b2 - b2^t)/(1 - b2^t) v_{t-1} + (1 - b2)/(1 - b2^t) g*g
    theta' = theta - eta * m_t / (sqrt(v_t) + eps),  all elementwise.

    These m_t, v_t equal the conventional running moments divided by their
    (1 - beta^t) bias corrections.
    """
    grad = np.asarray(grad, dtype=float)
    if not np.all(np.isfinite(grad)):
        raise OptimizationError("ADAM received a non-finite gradient")
    t = state.step + 1
    b1t = config.beta1**t
    b2t = config.beta2**t
    m = ((config.beta1 - b1t) * state.momentum + (1.0 - config.beta1) * grad) / (1.0 - b1t)
    v = ((config.beta2 - b2t) * state.sq_gradient + (1.0 - config.beta2) * grad * grad) / (
        1.0 - b2t
    )
    new_theta = theta - config.learning_rate * m / (np.sqrt(v) + config.eps_regularizer)
    return new_theta, AdamState(m, v, t)


# ---------------------------------------------------------------------------
# natural gradient


@dataclass(frozen=True)
class NatGradConfig:
    learning_rate: float
    tikhonov: float = 1e-4

    def __post_init__(self) -> None:
        if self.tikhonov < 0.0:
            raise ValueError("the Tikhonov constant cannot be negative")


def natgrad_step(
    config: NatGradConfig, theta: np.ndarray, grad: np.ndarray, metric: np.ndarray
) -> np.ndarray:
    """theta' = theta - eta * x with (F + eps_T I) x = g solved directly.

    The metric describes the state manifold while g carries the objective's
    units, so this update (unlike ADAM's and BFGS's) is sensitive to the
    objective's overall scale; the experiment harness drives it with the
    intensive energy per Hamiltonian term.
    """
    grad = np.asarray(grad, dtype=float)
    if not np.all(np.isfinite(grad)):
        raise OptimizationError("natural gradient received a non-finite gradient")
    regularized = metric + config.tikhonov * np.eye(len(grad))
    try:
        direction = np.linalg.solve(regularized, grad)
    except np.linalg.LinAlgError as exc:
        raise OptimizationError(f"metric solve failed: {exc}") from exc
    return theta - config.learning_rate * direction


# ---------------------------------------------------------------------------
# BFGS with a strong-Wolfe line search


@dataclass(frozen=True)
class BfgsConfig:
    bounds: tuple[float, float] | None = None
    armijo_c1: float = 1e-4
    curvature_c2: float = 0.9
    max_line_trials: int = 25
    grad_tol: float = 1e-12


@dataclass
class BfgsState:
    hessian: np.ndarray
    grad: np.ndarray
    value: float
    prev_value: float | None = None  # value one step back, for the trial-step rule

    @classmethod
    def initial(cls, value: float, grad: np.ndarray) -> "BfgsState":
        grad = np.asarray(grad, dtype=float)
        # seed the previous value as in the stock implementations, so the
        # first trial step is of order 1/|g| instead of a raw unit step
        return cls(np.eye(len(grad)), grad, float(value), float(value) + float(np.linalg.norm(grad)) / 2.0)


@dataclass(frozen=True)
class StepInfo:
    status: str  # "stepped" | "converged" | "line_search_failed"
    num_evals: int = 0


@dataclass
class _LinePoint:
    alpha: float
    x: np.ndarray
    value: float
    grad: np.ndarray
    slope: float  # d/d alpha of value(project(theta + alpha d))


def _line_eval(objective, theta, direction, alpha, bounds) -> _LinePoint:
    raw = theta + alpha * direction
    if bounds is None:
        x = raw
        active = direction
    else:
        x = np.clip(raw, bounds[0], bounds[1])
        active = np.where((raw >= bounds[0]) & (raw <= bounds[1]), direction, 0.0)
    _require_finite(x)
    value, grad = objective.value_and_gradient(x)
    return _LinePoint(alpha, x, float(value), grad, float(grad @ active))


def _cubic_minimum(a: _LinePoint, b: _LinePoint) -> float | None:
    """Minimizer of the cubic interpolating (value, slope) at two points."""
    if a.alpha == b.alpha:
        return None
    d1 = a.slope + b.slope - 3.0 * (a.value - b.value) / (a.alpha - b.alpha)
    disc = d1 * d1 - a.slope * b.slope
    if disc < 0.0:
        return None
    d2 = math.copysign(math.sqrt(disc), b.alpha - a.alpha)
    denom = b.slope - a.slope + 2.0 * d2
    if denom == 0.0:
        return None
    alpha = b.alpha - (b.alpha - a.alpha) * (b.slope + d2 - d1) / denom
    return alpha if math.isfinite(alpha) else None


def _wolfe_ok(point: _LinePoint, value0: float, slope0: float, config: BfgsConfig) -> bool:
    armijo = point.value <= value0 + config.armijo_c1 * point.alpha * slope0
    return armijo and abs(point.slope) <= -config.curvature_c2 * slope0


def _line_search(objective, theta, direction, value0, grad0, bounds, config, first_trial=1.0):
    """Strong-Wolfe search along `direction`, returning (point, evals) or None.

    Bracketing doubles the trial step starting from `first_trial`; the zoom
    stage uses cubic interpolation with bisection fallback.  An accepted point
    with a nonzero slope gets one interpolation polish, which makes the search
    exact on one-dimensional parabolas.
    """
    if bounds is None:
        slope0 = float(grad0 @ direction)
    else:
        active = (theta > bounds[0]) | (direction > 0)
        active &= (theta < bounds[1]) | (direction < 0)
        slope0 = float(grad0 @ np.where(active, direction, 0.0))
    if slope0 >= 0.0:
        return None
    evals = 0
    c1 = config.armijo_c1

    def armijo(point: _LinePoint) -> bool:
        return point.value <= value0 + c1 * point.alpha * slope0

    def zoom(lo: _LinePoint, hi: _LinePoint, budget: int):
        nonlocal evals
        for _ in range(budget):
            alpha = _cubic_minimum(lo, hi)
            left, right = min(lo.alpha, hi.alpha), max(lo.alpha, hi.alpha)
            width = right - left
            if width <= 1e-16 * max(1.0, right):
                return None
            if alpha is None or not (left + 0.05 * width <= alpha <= right - 0.05 * width):
                alpha = 0.5 * (left + right)
            cand = _line_eval(objective, theta, direction, alpha, bounds)
            evals += 1
            if not armijo(cand) or cand.value >= lo.value:
                hi = cand
            else:
                if abs(cand.slope) <= -config.curvature_c2 * slope0:
                    return cand
                if cand.slope * (hi.alpha - lo.alpha) >= 0.0:
                    hi = lo
                lo = cand
        return None

    start = _LinePoint(0.0, theta, value0, grad0, slope0)
    prev = start
    alpha = first_trial
    accepted = None
    for trial in range(config.max_line_trials):
        point = _line_eval(objective, theta, direction, alpha, bounds)
        evals += 1
        if not armijo(point) or (trial > 0 and point.value >= prev.value):
            accepted = zoom(prev, point, config.max_line_trials - evals)
            break
        if abs(point.slope) <= -config.curvature_c2 * slope0:
            accepted = point
            break
        if point.slope >= 0.0:
            accepted = zoom(point, prev, config.max_line_trials - evals)
            break
        prev = point
        alpha *= 2.0
    if accepted is None:
        return None
    # polish: one extra interpolation towards the exact one-dimensional minimum
    if accepted.slope != 0.0 and evals < config.max_line_trials:
        other = prev if prev.alpha != accepted.alpha else start
        alpha = _cubic_minimum(other, accepted)
        if alpha is not None and alpha > 0.0:
            cand = _line_eval(objective, theta, direction, alpha, bounds)
            evals += 1
            if cand.value <= accepted.value and _wolfe_ok(cand, value0, slope0, config):
                accepted = cand
    return accepted, evals


def bfgs_step(
    config: BfgsConfig, state: BfgsState, theta: np.ndarray, objective: Objective
) -> tuple[np.ndarray, BfgsState, StepInfo]:
    """One quasi-Newton cycle: direction solve, line search, curvature update.

    The direction solves H n = grad and the search runs along -n.  With
    s = theta' - theta and D = grad' - grad, the approximate Hessian is
    updated by the rank-two formula

        H <- H + D D^T / (D^T s) - (H s)(H s)^T / (s^T H s)

    whenever the curvature D^T s is positive; otherwise the update is skipped.
    """
    grad = state.grad
    if float(np.linalg.norm(grad)) <= config.grad_tol:
        return theta, state, StepInfo("converged")
    hessian = state.hessian
    try:
        direction = np.linalg.solve(hessian, -grad)
    except np.linalg.LinAlgError:
        hessian = np.eye(len(grad))
        direction = -grad
    if float(direction @ grad) >= 0.0:  # lost positive definiteness; restart
        hessian = np.eye(len(grad))
        direction = -grad
    # stock trial-step rule: start the search at the step a quadratic with the
    # previous function decrease along this slope would suggest, capped at 1
    first_trial = 1.0
    slope = float(grad @ direction)
    if state.prev_value is not None and slope < 0.0:
        guess = 1.01 * 2.0 * (state.value - state.prev_value) / slope
        if guess > 0.0:
            first_trial = min(1.0, guess)
    result = _line_search(
        objective, theta, direction, state.value, grad, config.bounds, config,
        first_trial=first_trial,
    )
    if result is None:
        return theta, state, StepInfo("line_search_failed")
    point, evals = result
    step_vec = point.x - theta
    if not np.any(step_vec):
        return theta, state, StepInfo("line_search_failed", evals)
    grad_diff = point.grad - grad
    curvature = float(grad_diff @ step_vec)
    if curvature > 0.0:
        h_s = hessian @ step_vec
        hessian = (
            hessian
            + np.outer(grad_diff, grad_diff) / curvature
            - np.outer(h_s, h_s) / float(step_vec @ h_s)
        )
        hessian = 0.5 * (hessian + hessian.T)
    new_state = BfgsState(hessian, point.grad, point.value, prev_value=state.value)
    return point.x, new_state, StepInfo("stepped", evals)


# ---------------------------------------------------------------------------
# stop rules and the run loop


@dataclass(frozen=True)
class TargetDelta:
    """Stop once the relative error reaches `value` (needs a known ground energy)."""

    value: float


@dataclass(frozen=True)
class EpochBudget:
    value: int


@dataclass(frozen=True)
class GradNormBelow:
    value: float


@dataclass(frozen=True)
class UpdateNormBelow:
    """Stop after `patience` consecutive updates of norm at most `value`."""

    value: float
    patience: int = 50


StopRule = Union[TargetDelta, EpochBudget, GradNormBelow, UpdateNormBelow]

OptimizerConfig = Union[AdamConfig, BfgsConfig, NatGradConfig]


def default_stop_rules(
    target_delta: float = 1e-10,
    epoch_budget: int = 50_000,
    grad_norm: float = 1e-12,
    update_norm: float = 1e-12,
    update_patience: int = 50,
) -> tuple[StopRule, ...]:
    return (
        TargetDelta(target_delta),
        EpochBudget(epoch_budget),
        GradNormBelow(grad_norm),
        UpdateNormBelow(update_norm, update_patience),
    )


@dataclass
class RunRecord:
    """One optimization trajectory with its per-epoch trace."""

    seed: int | None
    config: dict
    energies: np.ndarray
    deltas: np.ndarray
    grad_norms: np.ndarray
    num_epochs: int
    delta_min: float
    terminated_by: str
    success: bool
    final_theta: np.ndarray
    gamma_mean: float | None = None  # mean line-search evaluations per BFGS epoch
    runtime_t_eval: float | None = None  # attached by the experiment harness
    max_abs_y: float | None = None  # attached for circuits with extra Y layers


def _config_snapshot(config: OptimizerConfig, stop_rules: Sequence[StopRule]) -> dict:
    kind = {"AdamConfig": "adam", "BfgsConfig": "bfgs", "NatGradConfig": "natgrad"}[
        type(config).__name__
    ]
    snap = {"optimizer": kind}
    for key, value in vars(config).items():
        snap[key] = list(value) if isinstance(value, tuple) else value
    snap["stop_rules"] = [
        {"rule": type(rule).__name__, **vars(rule)} for rule in stop_rules
    ]
    return snap


def run(
    objective: Objective,
    config: OptimizerConfig,
    stop_rules: Sequence[StopRule],
    theta0,
    seed: int | None = None,
) -> RunRecord:
    """Optimize from theta0 until the first stop rule (or optimizer exit) fires.

    The trace gets one entry per epoch plus the initial point, so rules are
    also checked before the first update; `TargetDelta` can fire at epoch 0.
    Step failures terminate the run with a distinct status and the partial
    trace is kept.  Identical inputs give identical records.
    """
    if not stop_rules:
        raise ValueError("at least one stop rule must be active")
    theta = np.array(theta0, dtype=float)
    _require_finite(theta)
    e0 = objective.ground_energy
    if e0 == 0.0:
        raise ValueError("a zero ground energy makes the relative error undefined")

    energies: list[float] = []
    deltas: list[float] = []
    grad_norms: list[float] = []

    def record(value: float, grad: np.ndarray) -> None:
        energies.append(float(value))
        deltas.append((value - e0) / abs(e0) if e0 is not None else math.nan)
        grad_norms.append(float(np.linalg.norm(grad)))

    epoch = 0
    small_streak = 0

    def check_rules(update_norm: float | None) -> str | None:
        nonlocal small_streak
        if update_norm is not None:
            for rule in stop_rules:
                if isinstance(rule, UpdateNormBelow):
                    small_streak = small_streak + 1 if update_norm <= rule.value else 0
        for rule in stop_rules:
            if isinstance(rule, TargetDelta):
                if e0 is not None and deltas[-1] <= rule.value:
                    return "target_delta"
            elif isinstance(rule, EpochBudget):
                if epoch >= rule.value:
                    return "epoch_budget"
            elif isinstance(rule, GradNormBelow):
                if grad_norms[-1] <= rule.value:
                    return "grad_norm"
            elif isinstance(rule, UpdateNormBelow):
                if update_norm is not None and small_streak >= rule.patience:
                    return "update_norm"
        return None

    terminated: str | None = None
    line_search_evals = 0
    try:
        value, grad = objective.value_and_gradient(_require_finite(theta))
        record(value, grad)
        terminated = check_rules(None)

        adam_state = AdamState.initial(len(theta)) if isinstance(config, AdamConfig) else None
        bfgs_state = (
            BfgsState.initial(value, grad) if isinstance(config, BfgsConfig) else None
        )
        metric = objective.metric(theta) if isinstance(config, NatGradConfig) else None

        while terminated is None:
            if isinstance(config, AdamConfig):
                new_theta, adam_state = adam_step(config, adam_state, theta, grad)
                value, grad = objective.value_and_gradient(_require_finite(new_theta))
            elif isinstance(config, NatGradConfig):
                new_theta = natgrad_step(config, theta, grad, metric)
                _require_finite(new_theta)
                metric = objective.metric(new_theta)
                value, grad = objective.value_and_gradient(new_theta)
            else:
                new_theta, bfgs_state, info = bfgs_step(config, bfgs_state, theta, objective)
                line_search_evals += info.num_evals
                if info.status == "converged":
                    terminated = "bfgs_gradient_tolerance"
                    break
                if info.status == "line_search_failed":
                    terminated = "bfgs_line_search_failed"
                    break
                value, grad = bfgs_state.value, bfgs_state.grad
            update_norm = float(np.linalg.norm(new_theta - theta))
            theta = new_theta
            epoch += 1
            record(value, grad)
            terminated = check_rules(update_norm)
    except OptimizationError as exc:
        terminated = f"error: {exc}"

    deltas_arr = np.asarray(deltas)
    delta_min = float(np.min(deltas_arr)) if deltas_arr.size and e0 is not None else math.nan
    return RunRecord(
        seed=seed,
        config=_config_snapshot(config, stop_rules),
        energies=np.asarray(energies),
        deltas=deltas_arr,
        grad_norms=np.asarray(grad_norms),
        num_epochs=epoch,
        delta_min=delta_min,
        terminated_by=terminated or "unknown",
        success=bool(delta_min < SUCCESS_THRESHOLD),
        final_theta=theta,
        gamma_mean=line_search_evals / epoch if (line_search_evals and epoch) else None,
    )
