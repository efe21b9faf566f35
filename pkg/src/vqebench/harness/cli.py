"""Command-line interface: run experiments, emit presets, fit scalings, query costs."""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from ..costmodel import GRADIENT_METHODS, OPTIMIZERS, cost_epoch, default_cost_params
from .experiment import PRESET_NAMES, load_spec, preset, save_spec
from .output import FORMATS, emit, read_runs_csv
from .runner import fit_scaling, run_experiment


def _parse_sizes(text: str) -> tuple[int, ...]:
    return tuple(int(part) for part in text.replace(",", " ").split())


def _cmd_run(args) -> int:
    spec = load_spec(args.spec)
    if args.seeds is not None:
        spec = replace(spec, seeds=args.seeds)
    if args.sizes is not None:
        spec = replace(spec, sizes=_parse_sizes(args.sizes))
    if args.backend is not None:
        spec = replace(spec, backend=args.backend)
    records = run_experiment(spec, workers=args.workers)
    formats = tuple(args.format.split(","))
    paths = emit(records, args.out, formats, spec)
    ratios: dict = {}
    for record in records:
        key = (record.config["size"], record.config["label"])
        ratios.setdefault(key, []).append(record.success)
    print(f"{len(records)} runs written to {args.out}")
    for (size, label), flags in sorted(ratios.items()):
        print(f"  N={size:>3} {label:<16} success {sum(flags)}/{len(flags)}")
    for path in paths:
        print(f"  -> {path}")
    return 0


def _cmd_preset(args) -> int:
    spec = preset(args.name)
    out = Path(args.out) if args.out else Path(f"{args.name}.toml")
    save_spec(spec, out)
    print(f"wrote preset {args.name!r} to {out}")
    return 0


def _cmd_fit(args) -> int:
    rows = read_runs_csv(args.csv)
    if not rows:
        print("no rows in the CSV", file=sys.stderr)
        return 1
    labels = sorted({row["optimizer"] for row in rows})
    if args.optimizer:
        labels = [args.optimizer]
    for label in labels:
        buckets: dict[int, list[int]] = {}
        for row in rows:
            if row["optimizer"] != label:
                continue
            if args.successful_only and not row["success"]:
                continue
            buckets.setdefault(row["size"], []).append(row["num_epochs"])
        sizes = sorted(buckets)
        if len(sizes) < 2:
            print(f"{label}: not enough sizes to fit")
            continue
        means = [float(np.mean(buckets[size])) for size in sizes]
        fit = fit_scaling(sizes, means, jump_factor=args.jump_factor)
        jump = f", jump at N={fit.jump_size}" if fit.jump_size else ""
        print(
            f"{label}: epochs ~ {fit.prefactor:.3g} * N^{fit.exponent:.3g} "
            f"over N={list(fit.included_sizes)} (residual {fit.residual:.2e}{jump})"
        )
    return 0


def _cmd_cost(args) -> int:
    params = default_cost_params(
        num_parameters=args.num_parameters,
        depth=args.depth if args.depth else 2 * args.num_parameters,
        ham_bases=args.ham_bases,
        gens_per_param=args.gens_per_param,
    )
    if args.line_search_evals is not None:
        params = replace(params, line_search_evals=args.line_search_evals)
    per_epoch = cost_epoch(params, args.optimizer, args.gradient_method)
    print(
        f"{args.optimizer} epoch with {args.gradient_method} gradients, "
        f"n={args.num_parameters}: {per_epoch / params.t_eval:g} t_eval"
    )
    if args.epochs:
        total = args.epochs * per_epoch / params.t_eval
        print(f"{args.epochs} epochs: {total:g} t_eval")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="vqebench",
        description="Benchmark ADAM, BFGS and natural-gradient descent on spin-chain ground-state problems.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="execute an experiment spec file")
    p_run.add_argument("--spec", required=True, help="path to the TOML experiment spec")
    p_run.add_argument("--out", default="results", help="output directory")
    p_run.add_argument("--seeds", type=int, default=None, help="override the seed count")
    p_run.add_argument("--sizes", default=None, help="override sizes, e.g. '8,12,16'")
    p_run.add_argument("--backend", choices=("auto", "freefermion", "statevector"), default=None)
    p_run.add_argument("--workers", type=int, default=1, help="parallel worker processes")
    p_run.add_argument(
        "--format", default="csv,json", help=f"comma-separated subset of {','.join(FORMATS)}"
    )
    p_run.set_defaults(func=_cmd_run)

    p_preset = sub.add_parser("preset", help="write a named experiment preset")
    p_preset.add_argument("name", choices=PRESET_NAMES)
    p_preset.add_argument("--out", default=None, help="target file (default <name>.toml)")
    p_preset.set_defaults(func=_cmd_preset)

    p_fit = sub.add_parser("fit", help="fit epoch scaling laws from a runs.csv")
    p_fit.add_argument("--csv", required=True)
    p_fit.add_argument("--optimizer", default=None, help="fit a single optimizer label")
    p_fit.add_argument("--jump-factor", type=float, default=10.0)
    p_fit.add_argument(
        "--all-runs", dest="successful_only", action="store_false",
        help="average over all runs instead of successful ones",
    )
    p_fit.set_defaults(func=_cmd_fit)

    p_cost = sub.add_parser("cost", help="query the per-epoch cost model")
    p_cost.add_argument("--optimizer", choices=OPTIMIZERS, required=True)
    p_cost.add_argument("--num-parameters", type=int, required=True)
    p_cost.add_argument("--gradient-method", choices=GRADIENT_METHODS, default="analytic")
    p_cost.add_argument("--ham-bases", type=int, default=2)
    p_cost.add_argument("--gens-per-param", type=float, default=1.0)
    p_cost.add_argument("--depth", type=int, default=None)
    p_cost.add_argument("--line-search-evals", type=float, default=None)
    p_cost.add_argument("--epochs", type=int, default=None, help="also total over this many epochs")
    p_cost.set_defaults(func=_cmd_cost)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    raise SystemExit(main())
