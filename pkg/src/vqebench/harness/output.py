"""Machine-readable experiment outputs: per-run CSV, JSON summary, plot data.

Schema version 1.  `runs.csv` has one row per record with columns
(size, optimizer, seed, delta_min, num_epochs, success, terminated_by,
runtime_t_eval, max_abs_y, backend); floats use their shortest round-trip
representation.  `summary.json` echoes the spec and holds the per-cell
aggregates plus any scaling fits.  The plot-data CSVs mirror the three
benchmark figures (best error vs size, epochs vs size with fit curves,
runtime vs size) and feed any plotting tool; an optional SVG scatter needs
matplotlib.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict
from pathlib import Path

import numpy as np

from ..optimizers import RunRecord
from .experiment import ExperimentSpec
from .runner import FitResult, classify, fit_scaling, mean_epochs

SCHEMA_VERSION = 1

RUN_COLUMNS = (
    "size", "optimizer", "seed", "delta_min", "num_epochs", "success",
    "terminated_by", "runtime_t_eval", "max_abs_y", "backend",
)

FORMATS = ("csv", "json", "svg")


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _row(record: RunRecord) -> list[str]:
    cfg = record.config
    return [
        _fmt(cfg.get("size")),
        _fmt(cfg.get("label")),
        _fmt(record.seed),
        _fmt(record.delta_min),
        _fmt(record.num_epochs),
        _fmt(record.success),
        _fmt(record.terminated_by),
        _fmt(record.runtime_t_eval),
        _fmt(record.max_abs_y),
        _fmt(cfg.get("backend")),
    ]


def write_runs_csv(records: list[RunRecord], path: Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(RUN_COLUMNS)
        for record in records:
            writer.writerow(_row(record))


def read_runs_csv(path) -> list[dict]:
    """Read `runs.csv` back into plain dicts with numeric fields restored."""
    rows = []
    with open(path, newline="", encoding="utf-8") as fh:
        for raw in csv.DictReader(fh):
            rows.append(
                {
                    "size": int(raw["size"]),
                    "optimizer": raw["optimizer"],
                    "seed": int(raw["seed"]),
                    "delta_min": float(raw["delta_min"]) if raw["delta_min"] else math.nan,
                    "num_epochs": int(raw["num_epochs"]),
                    "success": raw["success"] == "true",
                    "terminated_by": raw["terminated_by"],
                    "runtime_t_eval": float(raw["runtime_t_eval"])
                    if raw["runtime_t_eval"]
                    else math.nan,
                    "max_abs_y": float(raw["max_abs_y"]) if raw["max_abs_y"] else None,
                    "backend": raw["backend"],
                }
            )
    return rows


def _labels(records: list[RunRecord]) -> list[str]:
    seen: list[str] = []
    for record in records:
        label = record.config.get("label")
        if label not in seen:
            seen.append(label)
    return seen


def _aggregates(records: list[RunRecord]) -> list[dict]:
    if not records:
        return []
    ratios = classify(records)
    cells = []
    for (size, label), ratio in sorted(ratios.items()):
        cell_records = [
            r for r in records if r.config["size"] == size and r.config["label"] == label
        ]
        succ_epochs = [r.num_epochs for r in cell_records if r.success]
        runtimes = [r.runtime_t_eval for r in cell_records if r.runtime_t_eval is not None]
        cells.append(
            {
                "size": size,
                "optimizer": label,
                "runs": len(cell_records),
                "success_ratio": ratio,
                "mean_epochs_success": float(np.mean(succ_epochs)) if succ_epochs else None,
                "mean_epochs_all": float(np.mean([r.num_epochs for r in cell_records])),
                "mean_runtime_t_eval": float(np.mean(runtimes)) if runtimes else None,
                "min_delta_min": float(np.min([r.delta_min for r in cell_records])),
            }
        )
    return cells


def compute_fits(records: list[RunRecord]) -> dict[str, FitResult]:
    """Scaling fit per optimizer over the mean epochs of successful runs."""
    fits: dict[str, FitResult] = {}
    for label in _labels(records):
        sizes, means = mean_epochs(records, label, only_success=True)
        if sizes.size >= 2:
            fits[label] = fit_scaling(sizes, means)
    return fits


def write_summary_json(
    records: list[RunRecord], spec: ExperimentSpec | None, path: Path,
    fits: dict[str, FitResult] | None = None,
) -> None:
    fits = fits if fits is not None else (compute_fits(records) if records else {})
    doc = {
        "schema_version": SCHEMA_VERSION,
        "spec": asdict(spec) if spec is not None else None,
        "aggregates": _aggregates(records),
        "fits": {label: asdict(fit) for label, fit in fits.items()},
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _write_plotdata(records: list[RunRecord], fits: dict[str, FitResult], out: Path) -> None:
    with open(out / "plotdata_delta_vs_size.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(("size", "optimizer", "seed", "delta_min"))
        for r in records:
            writer.writerow(
                [_fmt(r.config["size"]), r.config["label"], _fmt(r.seed), _fmt(r.delta_min)]
            )
    with open(out / "plotdata_epochs_vs_size.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(("size", "optimizer", "mean_epochs_success", "fit_curve"))
        for label in _labels(records):
            sizes, means = mean_epochs(records, label, only_success=True)
            fit = fits.get(label)
            for size, mean in zip(sizes, means):
                curve = fit.prefactor * size**fit.exponent if fit else None
                writer.writerow([_fmt(int(size)), label, _fmt(float(mean)), _fmt(curve)])
    with open(out / "plotdata_runtime_vs_size.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(("size", "optimizer", "seed", "runtime_t_eval", "success"))
        for r in records:
            writer.writerow(
                [
                    _fmt(r.config["size"]), r.config["label"], _fmt(r.seed),
                    _fmt(r.runtime_t_eval), _fmt(r.success),
                ]
            )


def _write_svg(records: list[RunRecord], path: Path) -> None:
    try:
        import matplotlib
    except ModuleNotFoundError as exc:  # pragma: no cover - depends on extras
        raise RuntimeError(
            "SVG rendering needs matplotlib; install the 'plots' extra"
        ) from exc
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(6, 4))
    for label in _labels(records):
        xs = [r.config["size"] for r in records if r.config["label"] == label]
        ys = [max(r.delta_min, 1e-16) for r in records if r.config["label"] == label]
        ax.scatter(xs, ys, s=12, alpha=0.7, label=label)
    ax.set_yscale("log")
    ax.set_xlabel("system size N")
    ax.set_ylabel("best relative error")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def emit(
    records: list[RunRecord],
    out_dir,
    formats: tuple[str, ...] = ("csv", "json"),
    spec: ExperimentSpec | None = None,
) -> list[Path]:
    """Write all requested output files and return their paths."""
    unknown = set(formats) - set(FORMATS)
    if unknown:
        raise ValueError(f"unknown output format(s) {sorted(unknown)}")
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create output directory {out}: {exc}") from exc
    written: list[Path] = []
    fits = compute_fits(records) if records else {}
    if "csv" in formats:
        write_runs_csv(records, out / "runs.csv")
        written.append(out / "runs.csv")
        _write_plotdata(records, fits, out)
        written += [
            out / "plotdata_delta_vs_size.csv",
            out / "plotdata_epochs_vs_size.csv",
            out / "plotdata_runtime_vs_size.csv",
        ]
    if "json" in formats:
        write_summary_json(records, spec, out / "summary.json", fits)
        written.append(out / "summary.json")
    if "svg" in formats:
        _write_svg(records, out / "scatter.svg")
        written.append(out / "scatter.svg")
    return written
