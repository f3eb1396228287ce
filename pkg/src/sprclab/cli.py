"""Command-line interface: run, sweep, compare, psd, windgen.

Exit codes: 0 success, 1 configuration error, 2 numeric failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from . import harness, windfield
from .harness import ExperimentConfig, Seeds
from .spectral import welch_psd
from .sysid import NumericError


def _load_config(path: str | None, overrides: argparse.Namespace) -> ExperimentConfig:
    config = ExperimentConfig.from_json(path) if path else ExperimentConfig()
    updates = {}
    for attr in ("mode", "controller"):
        value = getattr(overrides, attr, None)
        if value is not None:
            updates[attr] = value
    if getattr(overrides, "mean_wind", None) is not None:
        updates["mean_wind"] = overrides.mean_wind
    if getattr(overrides, "duration", None) is not None:
        updates["duration"] = overrides.duration
        if config.eval_start_s >= overrides.duration:
            # Keep the metric window valid for short runs.
            updates["eval_start_s"] = overrides.duration / 4.0
    if getattr(overrides, "seed", None) is not None:
        updates["seeds"] = Seeds(wind=overrides.seed, noise=overrides.seed + 1,
                                 excitation=overrides.seed + 2)
    if updates:
        from dataclasses import replace
        config = replace(config, **updates)
    config.validate()
    return config


def _cmd_run(args: argparse.Namespace) -> None:
    config = _load_config(args.config, args)
    record = harness.run_experiment(config)
    outdir = Path(args.output)
    outdir.mkdir(parents=True, exist_ok=True)
    stem = f"{config.controller}_{config.mode}_{config.mean_wind:g}"
    harness.export(record, str(outdir / f"{stem}.csv"), "csv")
    harness.export(record, str(outdir / f"{stem}.json"), "json")
    print(json.dumps(record.metrics, indent=2))


def _cmd_sweep(args: argparse.Namespace) -> None:
    base = _load_config(args.config, argparse.Namespace())
    seeds = base.seeds if args.seed is None else Seeds(
        wind=args.seed, noise=args.seed + 1, excitation=args.seed + 2)
    controllers = ["none"] + list(args.controllers)
    records: dict = {}
    for controller in controllers:
        cells = {}
        for config in harness.sweep_configs(controller, seeds, base):
            record = harness.run_experiment(config)
            cells[(config.mode, config.mean_wind)] = record
        records[controller] = cells
    table = harness.compare_table(records)
    outdir = Path(args.output)
    outdir.mkdir(parents=True, exist_ok=True)
    with open(outdir / "sweep_table.json", "w") as fh:
        json.dump(table, fh, indent=2)
    print(json.dumps(table["reductions"], indent=2))


def _cmd_compare(args: argparse.Namespace) -> None:
    baseline = harness.run_experiment(ExperimentConfig.from_json(args.baseline))
    controlled = harness.run_experiment(
        ExperimentConfig.from_json(args.controlled))
    result = {
        "variance_reduction": harness.variance_reduction(baseline, controlled),
        "actuator_duty": harness.actuator_duty(controlled),
    }
    print(json.dumps(result, indent=2))


def _cmd_psd(args: argparse.Namespace) -> None:
    data = np.genfromtxt(args.series, delimiter=",", names=True)
    column = args.column
    if column not in (data.dtype.names or ()):
        raise ValueError(f"column {column!r} not found in {args.series}")
    freqs, power = welch_psd(data[column], args.rate,
                             segment_length=args.segment)
    writer = csv.writer(sys.stdout, lineterminator="\n")
    writer.writerow(["frequency_hz", "power"])
    for f, p in zip(freqs, power):
        writer.writerow([f"{f:.6g}", f"{p:.6g}"])


def _cmd_windgen(args: argparse.Namespace) -> None:
    mode = windfield.GridMode.from_label(args.mode)
    series = windfield.generate(mode, args.mean, args.duration, args.rate,
                                args.seed)
    outdir = Path(args.output)
    outdir.mkdir(parents=True, exist_ok=True)
    csv_path = outdir / f"wind_{args.mode}_{args.mean:g}_{args.seed}.csv"
    with open(csv_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["time", "speed"])
        for t, v in zip(series.time(), series.samples):
            writer.writerow([f"{t:.6f}", f"{v:.9g}"])
    stats = harness.wind_stats(series)
    with open(outdir / f"wind_{args.mode}_{args.mean:g}_{args.seed}.json",
              "w") as fh:
        json.dump(stats, fh, indent=2)
    print(json.dumps(stats, indent=2))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sprclab",
                                     description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run one experiment")
    run.add_argument("--config", help="JSON experiment config")
    run.add_argument("--mode", choices=[m.label for m in windfield.GridMode])
    run.add_argument("--controller", choices=harness.CONTROLLERS)
    run.add_argument("--mean-wind", dest="mean_wind", type=float)
    run.add_argument("--duration", type=float)
    run.add_argument("--seed", type=int)
    run.add_argument("--output", default="out")
    run.set_defaults(func=_cmd_run)

    sweep = sub.add_parser("sweep", help="run the 12-cell grid")
    sweep.add_argument("--config", help="JSON base config")
    sweep.add_argument("--controllers", nargs="+",
                       default=["cipc", "sprc-1p2p"],
                       choices=[c for c in harness.CONTROLLERS if c != "none"])
    sweep.add_argument("--seed", type=int)
    sweep.add_argument("--output", default="out")
    sweep.set_defaults(func=_cmd_sweep)

    compare = sub.add_parser("compare", help="compare two configs")
    compare.add_argument("baseline")
    compare.add_argument("controlled")
    compare.set_defaults(func=_cmd_compare)

    psd = sub.add_parser("psd", help="Welch PSD of a CSV column")
    psd.add_argument("series")
    psd.add_argument("--column", default="y1")
    psd.add_argument("--rate", type=float, default=200.0)
    psd.add_argument("--segment", type=int, default=4096)
    psd.set_defaults(func=_cmd_psd)

    windgen = sub.add_parser("windgen", help="generate a wind series")
    windgen.add_argument("--mode", default="lidar",
                         choices=[m.label for m in windfield.GridMode])
    windgen.add_argument("--mean", type=float, default=5.0)
    windgen.add_argument("--duration", type=float, default=120.0)
    windgen.add_argument("--rate", type=float, default=200.0)
    windgen.add_argument("--seed", type=int, default=0)
    windgen.add_argument("--output", default="out")
    windgen.set_defaults(func=_cmd_windgen)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args.func(args)
    except (ValueError, OSError, json.JSONDecodeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except (NumericError, ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
