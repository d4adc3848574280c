"""Command-line front end.

Exit codes: 0 success, 1 data error (JSON message on stderr), 2 usage error.
``CARBONSHIFT_DATA_DIR`` names a directory holding ``<region>.csv`` carbon
signals and ``<region>.toml``/``<region>.json`` region configs, used when
``--region`` is given without explicit paths.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
import warnings
from pathlib import Path

import pandas as pd

from . import __version__
from .errors import CarbonShiftError
from .experiment import ExperimentSpec, load_experiment_config, run, sweep
from .forecast import ForecastModel
from .gridmodel import compute_carbon_signal, resample
from .ingest import RegionConfig, ingest_trace, load_region_config, read_signal_csv
from .output import atomic_write, dumps_json, frame_to_csv, write_signal_csv
from .potential import (
    DEFAULT_QUANTILES,
    DEFAULT_THRESHOLDS,
    PotentialWindow,
    intensity_histogram,
    potential_long_format,
    summary_stats,
    weekly_profile,
)
from .scheduler import STRATEGIES, NON_INTERRUPTING, INTERRUPTING, write_assignments_csv
from .timeaxis import parse_duration
from .workload import CONSTRAINTS, ML_PROJECT, NIGHTLY, ScenarioConfig, read_jobs_csv

DATA_DIR_ENV = "CARBONSHIFT_DATA_DIR"


class UsageError(Exception):
    pass


def _data_dir() -> Path | None:
    d = os.environ.get(DATA_DIR_ENV)
    return Path(d) if d else None


def _existing(path) -> Path:
    p = Path(path)
    if not p.exists():
        raise UsageError(f"file not found: {p}")
    return p


def _region_config(args) -> RegionConfig:
    if args.config:
        cfg = load_region_config(_existing(args.config))
        return cfg if not args.region else _with_region(cfg, args.region)
    region = args.region or "region"
    d = _data_dir()
    if d is not None:
        for ext in (".toml", ".json"):
            p = d / f"{region}{ext}"
            if p.exists():
                return _with_region(load_region_config(p), region)
    return RegionConfig.default(region)


def _with_region(cfg: RegionConfig, region: str) -> RegionConfig:
    from dataclasses import replace
    return replace(cfg, region=region)


def _signal(args):
    if args.signal:
        return read_signal_csv(_existing(args.signal), args.region, getattr(args, "timezone", None))
    d = _data_dir()
    if not args.region or d is None:
        raise UsageError(f"pass --signal, or --region with {DATA_DIR_ENV} set")
    return read_signal_csv(_existing(d / f"{args.region}.csv"), args.region, getattr(args, "timezone", None))


def _trace(args):
    cfg = _region_config(args)
    trace = ingest_trace(_existing(args.gen), _existing(args.imports) if args.imports else None, cfg)
    return resample(trace, args.resolution or cfg.resolution), cfg


def cmd_ingest(args) -> int:
    trace, _ = _trace(args)
    df = trace.to_frame()
    df.index = df.index.strftime("%Y-%m-%dT%H:%M:%SZ")
    df.index.name = "timestamp"
    atomic_write(args.out, frame_to_csv(df, index=True))
    for note in trace.notes:
        print(note, file=sys.stderr)
    return 0


def cmd_signal(args) -> int:
    trace, cfg = _trace(args)
    signal = compute_carbon_signal(trace, cfg.sources, cfg.neighbors)
    write_signal_csv(signal, args.out)
    return 0


def cmd_potential(args) -> int:
    signal = _signal(args)
    windows = [PotentialWindow.parse(w) for w in args.window]
    table = potential_long_format(
        signal, windows,
        thresholds=args.thresholds or DEFAULT_THRESHOLDS,
        quantiles=args.quantiles or DEFAULT_QUANTILES,
    )
    out = frame_to_csv(table)
    if args.out:
        atomic_write(args.out, out)
    else:
        sys.stdout.write(out)
    return 0


def cmd_simulate(args) -> int:
    signal = _signal(args)
    kind = args.scenario
    params = {"kind": kind, "region": signal.region, "seed": args.seed}
    if args.year:
        params["year"] = args.year
    if kind == NIGHTLY:
        params["half_width"] = parse_duration(args.window or "0h")
        if args.constraint:
            raise UsageError("--constraint applies to the ml_project scenario only")
    elif args.window:
        raise UsageError("--window applies to the nightly scenario only; use --constraint")
    if args.power is not None:
        params["power_w"] = args.power
    strategy = args.strategy or (NON_INTERRUPTING if kind == NIGHTLY else INTERRUPTING)
    spec = ExperimentSpec(
        scenario=ScenarioConfig(**params),
        signal=signal,
        strategy=strategy,
        constraint=args.constraint if kind == ML_PROJECT else None,
        forecast=ForecastModel.with_error(args.error, args.forecast_seed),
        repetitions=args.repetitions,
        overflow=args.overflow,
    )
    jobs = read_jobs_csv(_existing(args.jobs)) if args.jobs else None
    result = run(spec, jobs)
    payload = dumps_json(result.to_dict())
    if args.out:
        atomic_write(args.out, payload)
    else:
        sys.stdout.write(payload)
    if args.assignments:
        write_assignments_csv(result.assignments, args.assignments)
    return 0


def cmd_sweep(args) -> int:
    specs, manifest = load_experiment_config(_existing(args.config))
    results, table = sweep(specs, workers=args.workers)
    atomic_write(args.out, frame_to_csv(table))
    if args.json:
        atomic_write(args.json, dumps_json([r.to_dict() for r in results]))
    if args.manifest:
        manifest = {**manifest, "config": str(args.config), "version": __version__}
        atomic_write(args.manifest, dumps_json(manifest))
    return 0


def cmd_report(args) -> int:
    signal = _signal(args)
    payload = dumps_json(summary_stats(signal))
    if args.out:
        atomic_write(args.out, payload)
    else:
        sys.stdout.write(payload)
    if args.histogram:
        atomic_write(args.histogram, frame_to_csv(intensity_histogram(signal, args.bin_width)))
    if args.weekly:
        atomic_write(args.weekly, frame_to_csv(weekly_profile(signal), index=True))
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="carbonshift", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    def feed_args(sp):
        sp.add_argument("--region", help="region identifier, e.g. de")
        sp.add_argument("--config", help="region config (TOML or JSON)")
        sp.add_argument("--gen", required=True, help="generation CSV")
        sp.add_argument("--imports", help="imports CSV")
        sp.add_argument("--resolution", help="target resolution (default from config, 30min)")
        sp.add_argument("--out", required=True)

    def signal_args(sp):
        sp.add_argument("--region")
        sp.add_argument("--signal", help="carbon signal CSV (timestamp,carbon_intensity_gco2_per_kwh)")
        sp.add_argument("--timezone", help="IANA zone for local-time rules (default per region)")

    sp = sub.add_parser("ingest", help="normalize generation/import feeds to a trace CSV")
    feed_args(sp)
    sp.set_defaults(func=cmd_ingest)

    sp = sub.add_parser("signal", help="compute the average carbon intensity signal")
    feed_args(sp)
    sp.set_defaults(func=cmd_signal)

    sp = sub.add_parser("potential", help="shifting potential by time of day")
    signal_args(sp)
    sp.add_argument("--window", action="append", required=True, help="e.g. +8h, or --window=-2h for past windows; repeatable")
    sp.add_argument("--thresholds", type=float, nargs="+")
    sp.add_argument("--quantiles", type=float, nargs="+")
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_potential)

    sp = sub.add_parser("simulate", help="run one scenario experiment")
    signal_args(sp)
    sp.add_argument("--scenario", choices=[NIGHTLY, ML_PROJECT], default=NIGHTLY)
    sp.add_argument("--window", help="nightly flexibility half-width, e.g. 8h")
    sp.add_argument("--constraint", choices=CONSTRAINTS, default=None)
    sp.add_argument("--strategy", choices=STRATEGIES)
    sp.add_argument("--error", type=float, default=0.0, help="relative forecast error sigma")
    sp.add_argument("--repetitions", type=int, default=10)
    sp.add_argument("--seed", type=int, default=0, help="workload seed")
    sp.add_argument("--forecast-seed", type=int, default=0)
    sp.add_argument("--year", type=int)
    sp.add_argument("--power", type=float, help="job power in W")
    sp.add_argument("--jobs", help="jobs CSV to use instead of the generator")
    sp.add_argument("--overflow", choices=["error", "clip"], default="error")
    sp.add_argument("--assignments", help="write job_id,slot_index CSV")
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("sweep", help="run a declarative list of experiments")
    sp.add_argument("--config", required=True, help="experiment file (TOML or JSON)")
    sp.add_argument("--out", required=True, help="long-format results CSV")
    sp.add_argument("--json", help="full results JSON")
    sp.add_argument("--manifest", help="run manifest JSON (seeds, dataset hashes)")
    sp.add_argument("--workers", type=int, default=1)
    sp.set_defaults(func=cmd_sweep)

    sp = sub.add_parser("report", help="regional statistics of a carbon signal")
    signal_args(sp)
    sp.add_argument("--out")
    sp.add_argument("--histogram", help="binned intensity counts CSV")
    sp.add_argument("--bin-width", type=float, default=10.0)
    sp.add_argument("--weekly", help="weekly profile CSV")
    sp.set_defaults(func=cmd_report)
    return p


def _fail(kind: str, message: str, code: int) -> int:
    print(json.dumps({"error": kind, "message": message}), file=sys.stderr)
    return code


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", UserWarning)
            return args.func(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        return _fail("usage", str(exc), 2)
    except (CarbonShiftError, ValueError, KeyError, OSError) as exc:
        return _fail(type(exc).__name__, str(exc), 1)


if __name__ == "__main__":
    sys.exit(main())
