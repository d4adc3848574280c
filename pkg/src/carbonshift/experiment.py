"""Scenario runs: repetitions over forecast noise, baselines, savings, sweeps."""
from __future__ import annotations

import itertools
import sys
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from functools import lru_cache
from pathlib import Path
from typing import Sequence

import numpy as np
import pandas as pd

from .errors import HorizonError
from .forecast import ForecastModel, forecast
from .gridmodel import CarbonSignal
from .ingest import read_signal_csv
from .output import sha256_file
from .scheduler import (
    BASELINE,
    INTERRUPTING,
    NON_INTERRUPTING,
    Assignment,
    Strategy,
    active_jobs,
    emissions,
    schedule,
)
from .workload import (
    ML_PROJECT,
    NIGHTLY,
    Job,
    ScenarioConfig,
    apply_constraint,
    generate_ml_project,
    generate_nightly,
)

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib


@dataclass(frozen=True)
class ExperimentSpec:
    """One simulated configuration.

    ``overflow`` controls jobs whose window leaves the signal: ``"error"``
    raises, ``"clip"`` cuts deadlines at the signal end and drops jobs whose
    baseline run does not fit.
    """

    scenario: ScenarioConfig
    signal: CarbonSignal
    strategy: str = NON_INTERRUPTING
    constraint: str | None = None
    forecast: ForecastModel = ForecastModel()
    repetitions: int = 10
    overflow: str = "error"
    concurrency_factor: float = 1.42

    def __post_init__(self):
        Strategy(self.strategy)
        if self.repetitions < 1:
            raise ValueError("repetitions must be >= 1")
        if self.overflow not in ("error", "clip"):
            raise ValueError("overflow must be 'error' or 'clip'")

    @property
    def key(self) -> dict:
        sc = self.scenario
        if sc.kind == NIGHTLY:
            window = f"{sc.half_width / pd.Timedelta(hours=1):g}h"
        else:
            window = self.constraint or "none"
        return {
            "region": self.signal.region,
            "scenario": sc.kind,
            "window": window,
            "strategy": self.strategy,
            "error": self.forecast.relative_sigma,
        }


@dataclass(frozen=True)
class ExperimentResult:
    key: dict
    n_jobs: int
    repetitions: int
    baseline_emissions: float  # gCO2
    total_emissions: float  # gCO2, mean over repetitions
    repetition_emissions: tuple[float, ...]
    savings_percent: float
    repetition_savings: tuple[float, ...]
    energy_kwh: float
    baseline_max_concurrent: int
    max_concurrent: int
    concurrency_flag: bool
    allocation_by_time_of_day: dict = field(default_factory=dict)
    assignments: tuple[Assignment, ...] = field(default=(), repr=False, compare=False)

    @property
    def savings_std(self) -> float:
        return float(np.std(self.repetition_savings))

    @property
    def mean_intensity(self) -> float:
        """Average grid intensity (gCO2/kWh) the scheduled jobs ran at."""
        return self.total_emissions / self.energy_kwh

    @property
    def baseline_mean_intensity(self) -> float:
        return self.baseline_emissions / self.energy_kwh

    def to_dict(self) -> dict:
        return {
            **self.key,
            "n_jobs": self.n_jobs,
            "repetitions": self.repetitions,
            "baseline_gco2": self.baseline_emissions,
            "total_gco2": self.total_emissions,
            "saved_gco2": self.baseline_emissions - self.total_emissions,
            "repetition_gco2": list(self.repetition_emissions),
            "savings_percent": self.savings_percent,
            "repetition_savings_percent": list(self.repetition_savings),
            "savings_std": self.savings_std,
            "energy_kwh": self.energy_kwh,
            "mean_intensity": self.mean_intensity,
            "baseline_mean_intensity": self.baseline_mean_intensity,
            "baseline_max_concurrent": self.baseline_max_concurrent,
            "max_concurrent": self.max_concurrent,
            "concurrency_flag": self.concurrency_flag,
            "allocation_by_time_of_day": self.allocation_by_time_of_day,
        }


def build_jobs(spec: ExperimentSpec) -> list[Job]:
    """Generate the scenario's jobs on the signal axis and apply the constraint."""
    axis = spec.signal.axis
    sc = spec.scenario
    if sc.kind == NIGHTLY:
        jobs = generate_nightly(sc, axis)
        if spec.constraint is not None:
            raise ValueError("nightly jobs take their window from half_width, not a constraint")
    else:
        jobs = generate_ml_project(sc, axis)
        if spec.constraint is not None:
            jobs = apply_constraint(jobs, spec.constraint, axis, sc.work_start, sc.work_end)
    return _fit_horizon(jobs, len(spec.signal), spec.overflow)


def _fit_horizon(jobs: list[Job], n_slots: int, overflow: str) -> list[Job]:
    out, clipped, dropped = [], 0, 0
    for j in jobs:
        base = j.baseline_start
        if j.release >= 0 and j.deadline <= n_slots:
            out.append(j)
            continue
        if overflow == "error":
            raise HorizonError(f"job {j.id} window [{j.release}, {j.deadline}) exceeds signal of {n_slots} slots")
        if j.release < 0 or base + j.duration > n_slots:
            dropped += 1
            continue
        clipped += 1
        out.append(replace(j, deadline=n_slots))
    if clipped or dropped:
        warnings.warn(f"{clipped} deadlines clipped, {dropped} jobs dropped at the signal end", stacklevel=3)
    return out


def _schedule_all(jobs, signal, strategy, model, repetition, std):
    placed, total = [], 0.0
    for j in jobs:
        f = forecast(signal, model, j.release, j.deadline, repetition, std)
        a = schedule(j, f, strategy)
        placed.append(a)
        total += emissions(a, j, signal)
    return placed, total


def _allocation(assignments, signal: CarbonSignal, weight: float) -> dict:
    labels = np.asarray(signal.axis.local_times().strftime("%H:%M"))
    counts: dict[str, float] = {}
    for a in assignments:
        for s in a.slots:
            counts[labels[s]] = counts.get(labels[s], 0.0) + weight
    return dict(sorted(counts.items()))


def run(spec: ExperimentSpec, jobs: Sequence[Job] | None = None) -> ExperimentResult:
    """Simulate ``spec``; repetition ``r`` draws forecast noise with seed ``seed + r``.

    ``jobs`` overrides the generated workload (e.g. an imported trace).
    """
    signal = spec.signal
    jobs = build_jobs(spec) if jobs is None else _fit_horizon(list(jobs), len(signal), spec.overflow)
    if not jobs:
        raise HorizonError("no jobs fit inside the signal")
    model = spec.forecast
    std = model.noise_std(signal)
    n = len(signal)

    baseline, base_total = _schedule_all(jobs, signal, BASELINE, ForecastModel(), 0, 0.0)
    base_peak = int(active_jobs(baseline, n).max())

    reps = 1 if model.is_perfect else spec.repetitions
    totals, peaks, alloc, first = [], [], {}, None
    for r in range(reps):
        placed, total = _schedule_all(jobs, signal, spec.strategy, model, r, std)
        totals.append(total)
        peaks.append(int(active_jobs(placed, n).max()))
        for k, v in _allocation(placed, signal, 1.0 / reps).items():
            alloc[k] = alloc.get(k, 0.0) + v
        if first is None:
            first = tuple(placed)
    if reps < spec.repetitions:
        totals *= spec.repetitions
        peaks *= spec.repetitions

    savings = [100.0 * (1.0 - t / base_total) for t in totals]
    energy = sum(j.power / 1000.0 * j.duration * signal.axis.slot_hours for j in jobs)
    peak = max(peaks)
    return ExperimentResult(
        key=spec.key,
        n_jobs=len(jobs),
        repetitions=spec.repetitions,
        baseline_emissions=base_total,
        total_emissions=float(np.mean(totals)),
        repetition_emissions=tuple(totals),
        savings_percent=float(np.mean(savings)),
        repetition_savings=tuple(savings),
        energy_kwh=energy,
        baseline_max_concurrent=base_peak,
        max_concurrent=peak,
        concurrency_flag=peak > spec.concurrency_factor * base_peak,
        allocation_by_time_of_day=dict(sorted(alloc.items())),
        assignments=first,
    )


RESULT_COLUMNS = [
    "region", "scenario", "window", "strategy", "error", "n_jobs", "repetitions",
    "baseline_gco2", "total_gco2", "saved_gco2", "savings_percent", "savings_std",
    "mean_intensity", "baseline_mean_intensity", "baseline_max_concurrent",
    "max_concurrent", "concurrency_flag",
]


def results_frame(results: Sequence[ExperimentResult]) -> pd.DataFrame:
    """Long-format table, one row per result."""
    return pd.DataFrame([{c: r.to_dict()[c] for c in RESULT_COLUMNS} for r in results], columns=RESULT_COLUMNS)


def sweep(specs: Sequence[ExperimentSpec], workers: int = 1) -> tuple[list[ExperimentResult], pd.DataFrame]:
    """Run every spec (in parallel processes if ``workers > 1``), keeping input order."""
    if workers > 1 and len(specs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run, specs))
    else:
        results = [run(s) for s in specs]
    return results, results_frame(results)


def nightly_half_widths() -> list[pd.Timedelta]:
    """Baseline plus 16 windows growing by 30 min on each side."""
    return [pd.Timedelta(minutes=30 * i) for i in range(17)]


# -- brute-force oracle (tests only) -----------------------------------------

MAX_ORACLE_JOBS = 12
MAX_ORACLE_WINDOW = 20


@lru_cache(maxsize=None)
def _combinations(n: int, k: int) -> np.ndarray:
    return np.array(list(itertools.combinations(range(n), k)), dtype=int).reshape(-1, k)


def oracle_placement(job: Job, values: np.ndarray, strategy: str) -> tuple[int, ...]:
    """Exhaustively find the lexicographically earliest cheapest placement.

    ``values`` are the intensities the placement is judged by (for the oracle,
    the truth). Candidates are every contiguous window, or every ``duration``-
    subset of the window for an interruptible job under ``interrupting``
    (limited to windows of ``MAX_ORACLE_WINDOW`` slots).
    """
    w = job.window
    v = np.asarray(values, dtype=float)[job.release: job.deadline]
    if strategy == BASELINE:
        return tuple(range(job.baseline_start, job.baseline_start + job.duration))
    if strategy == INTERRUPTING and job.interruptible:
        # subset enumeration is exponential; contiguous windows are not
        if w > MAX_ORACLE_WINDOW:
            raise ValueError(f"subset oracle limited to windows of {MAX_ORACLE_WINDOW} slots")
        cands = _combinations(w, job.duration)
    else:
        cands = np.arange(w - job.duration + 1)[:, None] + np.arange(job.duration)[None, :]
    # candidates are generated in lexicographic order, argmin keeps the first
    best = int(np.argmin(v[cands].sum(axis=1)))
    return tuple(int(job.release + o) for o in cands[best])


def brute_force_oracle(jobs: Sequence[Job], signal: CarbonSignal, strategy: str = INTERRUPTING,
                       max_jobs: int | None = MAX_ORACLE_JOBS) -> float:
    """Minimum total emissions over all feasible placements under the true signal.

    Jobs share no resources, so the joint optimum is the sum of per-job optima;
    ``max_jobs=None`` lifts the size guard for larger instances.
    """
    if max_jobs is not None and len(jobs) > max_jobs:
        raise ValueError(f"oracle limited to {max_jobs} jobs")
    total = 0.0
    for j in jobs:
        slots = oracle_placement(j, signal.values, strategy)
        total += emissions(Assignment(j.id, slots), j, signal)
    return total


# -- declarative experiment configs --------------------------------------------

def _as_list(v):
    return list(v) if isinstance(v, (list, tuple)) else [v]


def load_experiment_config(path) -> tuple[list[ExperimentSpec], dict]:
    """Expand a TOML/JSON experiment file into specs plus a provenance manifest.

    Each ``[[experiments]]`` entry takes list-valued ``regions``,
    ``strategies``, ``errors`` and either ``half_width_hours`` (nightly) or
    ``constraints`` (ML project); the Cartesian product is run. Signals come
    from ``[signals.<region>]`` tables holding a CSV ``path``.
    """
    import json

    path = Path(path)
    raw = path.read_bytes()
    d = json.loads(raw) if path.suffix.lower() == ".json" else tomllib.loads(raw.decode("utf-8"))
    return specs_from_dict(d, base_dir=path.parent)


def specs_from_dict(d: dict, base_dir=Path(".")) -> tuple[list[ExperimentSpec], dict]:
    signals, hashes = {}, {}
    for region, entry in d.get("signals", {}).items():
        entry = {"path": entry} if isinstance(entry, str) else entry
        p = Path(base_dir) / entry["path"]
        signals[region] = read_signal_csv(p, region, entry.get("timezone"))
        hashes[region] = sha256_file(p)

    repetitions = int(d.get("repetitions", 10))
    forecast_seed = int(d.get("forecast_seed", 0))
    specs = []
    for exp in d.get("experiments", []):
        kind = exp.get("scenario", NIGHTLY)
        regions = _as_list(exp.get("regions", list(signals)))
        strategies = _as_list(exp.get("strategies", [NON_INTERRUPTING]))
        errors = [float(e) for e in _as_list(exp.get("errors", [0.05]))]
        if kind == NIGHTLY:
            hws = exp.get("half_width_hours", "all")
            variants = [{"half_width": h} for h in (nightly_half_widths() if hws == "all" else
                                                    [pd.Timedelta(hours=float(x)) for x in _as_list(hws)])]
            constraints = [None]
        else:
            variants = [{}]
            constraints = _as_list(exp.get("constraints", ["next_workday"]))
        extra = {k: v for k, v in exp.items() if k in (
            "seed", "year", "anchor", "job_duration", "power_w", "n_jobs", "gpu_years",
            "gpus_per_job", "min_duration", "max_duration", "work_start", "work_end")}
        for region, var, constraint, strategy, err in itertools.product(
                regions, variants, constraints, strategies, errors):
            if region not in signals:
                raise KeyError(f"no signal configured for region {region!r}")
            sc = ScenarioConfig(kind=kind, region=region, **var, **extra)
            specs.append(ExperimentSpec(
                scenario=sc,
                signal=signals[region],
                strategy=strategy,
                constraint=constraint,
                forecast=ForecastModel.with_error(err, forecast_seed),
                repetitions=int(exp.get("repetitions", repetitions)),
                overflow=exp.get("overflow", d.get("overflow", "error")),
            ))
    manifest = {
        "repetitions": repetitions,
        "forecast_seed": forecast_seed,
        "dataset_sha256": hashes,
        "n_specs": len(specs),
    }
    return specs, manifest
