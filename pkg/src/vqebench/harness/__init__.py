"""Experiment orchestration: circuits, specs, execution, aggregation, outputs."""

from .circuits import CircuitBuild, build_circuit, default_y_positions
from .experiment import (
    ExperimentSpec,
    OptimizerSetting,
    StopSettings,
    load_spec,
    preset,
    sample_init,
    save_spec,
)
from .output import emit, read_runs_csv
from .runner import (
    FitResult,
    FreeFermionObjective,
    StatevectorObjective,
    classify,
    execute_single,
    fit_scaling,
    make_objective,
    mean_epochs,
    run_experiment,
)

__all__ = [
    "CircuitBuild",
    "ExperimentSpec",
    "FitResult",
    "FreeFermionObjective",
    "OptimizerSetting",
    "StatevectorObjective",
    "StopSettings",
    "build_circuit",
    "classify",
    "default_y_positions",
    "emit",
    "execute_single",
    "fit_scaling",
    "load_spec",
    "make_objective",
    "mean_epochs",
    "preset",
    "read_runs_csv",
    "run_experiment",
    "sample_init",
    "save_spec",
]
