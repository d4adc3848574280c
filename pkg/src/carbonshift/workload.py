"""Job model, scenario generators and deadline constraints.

Two scenarios are provided:

* ``nightly``: one short, non-interruptible job per day anchored at a fixed
  local time (1 am by default) that may move by up to ``half_width`` in
  either direction.
* ``ml_project``: a machine learning project of long, interruptible training
  jobs issued during working hours, with deadlines set afterwards by
  :func:`apply_constraint`.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, replace
from datetime import date, datetime, time, timedelta
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
import pandas as pd

from .errors import InfeasibleJobError
from .output import atomic_write, frame_to_csv
from .timeaxis import TimeAxis, parse_duration

NIGHTLY = "nightly"
ML_PROJECT = "ml_project"

NEXT_WORKDAY = "next_workday"
SEMI_WEEKLY = "semi_weekly"
CONSTRAINTS = (NEXT_WORKDAY, SEMI_WEEKLY)

HOURS_PER_YEAR = 365 * 24


@dataclass(frozen=True)
class Job:
    """A unit of shiftable work.

    ``release`` and ``deadline`` are slot indices; the job must run
    ``duration`` slots inside ``[release, deadline)``. ``planned_start`` marks
    scheduled workloads whose reference execution is not at ``release`` (a
    nightly job planned at 1 am may also move into the past). ``power`` is in W.
    """

    id: int
    release: int
    deadline: int
    duration: int
    interruptible: bool = False
    power: float = 1000.0
    planned_start: int | None = None

    def __post_init__(self):
        if self.duration < 1:
            raise InfeasibleJobError(f"job {self.id}: duration must be >= 1 slot")
        if not self.power > 0:
            raise InfeasibleJobError(f"job {self.id}: power must be positive")
        if self.release + self.duration > self.deadline:
            raise InfeasibleJobError(
                f"job {self.id}: release {self.release} + duration {self.duration} > deadline {self.deadline}")
        if self.planned_start is not None and not (
                self.release <= self.planned_start <= self.deadline - self.duration):
            raise InfeasibleJobError(f"job {self.id}: planned start outside its window")

    @property
    def baseline_start(self) -> int:
        return self.release if self.planned_start is None else self.planned_start

    @property
    def window(self) -> int:
        return self.deadline - self.release


@dataclass(frozen=True)
class ScenarioConfig:
    """Parameters of a generated scenario.

    Nightly: ``half_width`` (0 to 8 h in 30 min steps), ``anchor`` local time,
    ``job_duration`` and ``power_w`` (default 1 kW). ML project: ``n_jobs``,
    ``gpu_years``, ``gpus_per_job``, uniform durations between
    ``min_duration`` and ``max_duration`` rescaled to hit ``gpu_years``,
    ``power_w`` (default 2036 W) and working hours ``work_start``-``work_end``.
    """

    kind: str = NIGHTLY
    region: str = "region"
    year: int = 2020
    seed: int = 0
    half_width: pd.Timedelta = pd.Timedelta(0)
    anchor: time = time(1, 0)
    job_duration: pd.Timedelta = pd.Timedelta(minutes=30)
    power_w: float | None = None
    n_jobs: int = 3387
    gpu_years: float = 145.76
    gpus_per_job: int = 8
    min_duration: pd.Timedelta = pd.Timedelta(hours=4)
    max_duration: pd.Timedelta = pd.Timedelta(days=4)
    work_start: time = time(9, 0)
    work_end: time = time(17, 0)

    def __post_init__(self):
        for name in ("half_width", "job_duration", "min_duration", "max_duration"):
            object.__setattr__(self, name, parse_duration(getattr(self, name)))
        for name in ("anchor", "work_start", "work_end"):
            v = getattr(self, name)
            if isinstance(v, str):
                object.__setattr__(self, name, time.fromisoformat(v))
        if self.kind == NIGHTLY:
            hw = self.half_width
            if not pd.Timedelta(0) <= hw <= pd.Timedelta(hours=8) or hw % pd.Timedelta(minutes=30):
                raise ValueError(f"half_width {hw} must be a multiple of 30 min in [0, 8h]")
            if self.job_duration <= pd.Timedelta(0):
                raise ValueError("job_duration must be positive")
        elif self.kind == ML_PROJECT:
            if self.n_jobs < 1 or self.gpus_per_job < 1 or not self.gpu_years > 0:
                raise ValueError("n_jobs, gpus_per_job and gpu_years must be positive")
            if not pd.Timedelta(0) < self.min_duration <= self.max_duration:
                raise ValueError("need 0 < min_duration <= max_duration")
            if not self.work_start < self.work_end:
                raise ValueError("work_start must precede work_end")
        else:
            raise ValueError(f"unknown scenario kind {self.kind!r}")
        if self.power_w is not None and not self.power_w > 0:
            raise ValueError("power_w must be positive")

    @property
    def power(self) -> float:
        if self.power_w is not None:
            return float(self.power_w)
        return 1000.0 if self.kind == NIGHTLY else 2036.0


def year_days(year: int) -> list[date]:
    d, out = date(year, 1, 1), []
    while d.year == year:
        out.append(d)
        d += timedelta(days=1)
    return out


def workdays(year: int) -> list[date]:
    """Monday to Friday of ``year``; public holidays are not excluded."""
    return [d for d in year_days(year) if d.weekday() < 5]


def generate_nightly(config: ScenarioConfig, axis: TimeAxis) -> list[Job]:
    """One job per local day of ``config.year``, planned at ``config.anchor``.

    The job may start anywhere between ``anchor - half_width`` and
    ``anchor + half_width`` local wall-clock time.

    Windows reaching past either end of ``axis`` are truncated (with a
    warning); days whose planned run itself is outside the axis are dropped.
    """
    if config.kind != NIGHTLY:
        raise ValueError("generate_nightly needs a nightly scenario config")
    axis.slots(config.half_width)
    hw = config.half_width.to_pytimedelta()
    dur = axis.slots(config.job_duration)
    jobs, truncated, dropped = [], 0, 0
    for day in year_days(config.year):
        planned = datetime.combine(day, config.anchor)
        anchor = axis.slot_of_local(day, config.anchor)
        if anchor < 0 or anchor + dur > axis.n_slots:
            dropped += 1
            continue
        # window edges are wall-clock times, so DST nights keep 5 pm to 9 am
        first = axis.slot_of(axis.tz.local_to_utc(planned - hw, "shift"), "ceil")
        last = axis.slot_of(axis.tz.local_to_utc(planned + hw, "shift"), "floor")
        release, deadline = first, last + dur
        if release < 0 or deadline > axis.n_slots:
            truncated += 1
            release, deadline = max(release, 0), min(deadline, axis.n_slots)
        jobs.append(Job(len(jobs), release, deadline, dur, False, config.power, anchor))
    if truncated:
        warnings.warn(f"{truncated} nightly windows truncated at the signal edges", stacklevel=2)
    if dropped:
        warnings.warn(f"{dropped} nightly jobs dropped: planned run outside the signal", stacklevel=2)
    return jobs


def target_job_hours(config: ScenarioConfig) -> float:
    """Total wall-clock job hours implied by the GPU-year budget."""
    return config.gpu_years * HOURS_PER_YEAR / config.gpus_per_job


def generate_ml_project(config: ScenarioConfig, axis: TimeAxis) -> list[Job]:
    """Ad hoc ML training jobs released during working hours of ``config.year``.

    Release days follow a multinomial over all workdays, start times are
    uniform over the working-hour slots, and durations are drawn uniformly
    between ``min_duration`` and ``max_duration``, then scaled by one common
    factor so the total matches the GPU-year budget, and rounded to slots.
    Deadlines equal the baseline finish until a constraint is applied.
    """
    if config.kind != ML_PROJECT:
        raise ValueError("generate_ml_project needs an ml_project scenario config")
    rng = np.random.default_rng(config.seed)
    days = workdays(config.year)
    per_day = rng.multinomial(config.n_jobs, np.full(len(days), 1.0 / len(days)))

    work = datetime.combine(date.min, config.work_end) - datetime.combine(date.min, config.work_start)
    n_start_slots = axis.slots(pd.Timedelta(work))
    offsets = rng.integers(0, n_start_slots, config.n_jobs)

    lo, hi = (d / pd.Timedelta(hours=1) for d in (config.min_duration, config.max_duration))
    raw_hours = rng.uniform(lo, hi, config.n_jobs)
    scale = target_job_hours(config) / raw_hours.sum()
    durations = np.maximum(1, np.rint(raw_hours * scale / axis.slot_hours)).astype(int)

    jobs = []
    k = 0
    for day, count in zip(days, per_day):
        first = axis.slot_of_local(day, config.work_start)
        for _ in range(count):
            release = first + int(offsets[k])
            d = int(durations[k])
            jobs.append(Job(k, release, release + d, d, True, config.power))
            k += 1
    return jobs


def is_working_time(local: datetime, work_start: time = time(9), work_end: time = time(17)) -> bool:
    """Whether a job finishing at ``local`` finishes within working hours."""
    if local.weekday() >= 5:
        return False
    t = local.time()
    return work_start < t <= work_end


def next_workday_start(local: datetime, work_start: time = time(9)) -> datetime:
    """Earliest Monday-Friday ``work_start`` at or after ``local``."""
    cand = datetime.combine(local.date(), work_start)
    while cand < local or cand.weekday() >= 5:
        cand = datetime.combine(cand.date() + timedelta(days=1), work_start)
    return cand


def next_semi_weekly(local: datetime, work_start: time = time(9), weekdays=(0, 3)) -> datetime:
    """Earliest Monday or Thursday ``work_start`` at or after ``local``."""
    cand = datetime.combine(local.date(), work_start)
    while cand < local or cand.weekday() not in weekdays:
        cand = datetime.combine(cand.date() + timedelta(days=1), work_start)
    return cand


def constraint_deadline(job: Job, constraint: str, axis: TimeAxis, work_start: time = time(9),
                        work_end: time = time(17)) -> int:
    finish = job.release + job.duration
    local = axis.local_time_of(finish).to_pydatetime()
    if constraint == NEXT_WORKDAY:
        if is_working_time(local, work_start, work_end):
            return finish
        target = next_workday_start(local, work_start)
    elif constraint == SEMI_WEEKLY:
        target = next_semi_weekly(local, work_start)
    else:
        raise ValueError(f"unknown constraint {constraint!r}")
    deadline = axis.slot_of(axis.tz.local_to_utc(target), "floor")
    if deadline < finish:
        raise InfeasibleJobError(f"job {job.id}: constraint deadline precedes its baseline finish")
    return deadline


def apply_constraint(jobs: Iterable[Job], constraint: str, axis: TimeAxis,
                     work_start: time = time(9), work_end: time = time(17)) -> list[Job]:
    """Set deadlines from a time constraint anchored at each job's baseline finish.

    ``next_workday``: jobs finishing Mon-Fri within working hours cannot move;
    all others may finish as late as the next workday at ``work_start``.
    ``semi_weekly``: deadline is the next Monday or Thursday at ``work_start``.
    """
    return [replace(j, deadline=constraint_deadline(j, constraint, axis, work_start, work_end))
            for j in jobs]


def next_workday_classes(jobs: Sequence[Job], axis: TimeAxis) -> dict[str, float]:
    """Percentage of jobs that are unshiftable, shiftable overnight, or over a weekend.

    Expects jobs with ``next_workday`` deadlines. A shiftable job counts as
    shiftable over the weekend when its baseline finish falls on a local
    Saturday or Sunday.
    """
    counts = {"unshiftable": 0, "overnight": 0, "weekend": 0}
    for j in jobs:
        finish = j.release + j.duration
        if j.deadline == finish:
            counts["unshiftable"] += 1
        elif axis.local_time_of(finish).weekday() >= 5:
            counts["weekend"] += 1
        else:
            counts["overnight"] += 1
    n = max(len(jobs), 1)
    return {k: 100.0 * v / n for k, v in counts.items()}


JOB_COLUMNS = ["id", "release", "duration_slots", "deadline", "interruptible", "power_w"]


def jobs_to_frame(jobs: Sequence[Job]) -> pd.DataFrame:
    df = pd.DataFrame({
        "id": [j.id for j in jobs],
        "release": [j.release for j in jobs],
        "duration_slots": [j.duration for j in jobs],
        "deadline": [j.deadline for j in jobs],
        "interruptible": [int(j.interruptible) for j in jobs],
        "power_w": [j.power for j in jobs],
    }, columns=JOB_COLUMNS)
    if any(j.planned_start is not None for j in jobs):
        df["planned_start"] = [j.baseline_start for j in jobs]
    return df


def write_jobs_csv(jobs: Sequence[Job], path) -> Path:
    return atomic_write(path, frame_to_csv(jobs_to_frame(jobs)))


def read_jobs_csv(path) -> list[Job]:
    df = pd.read_csv(path)
    missing = [c for c in JOB_COLUMNS if c not in df.columns]
    if missing:
        raise ValueError(f"{path}: missing job columns {missing}")
    planned = df["planned_start"] if "planned_start" in df.columns else [None] * len(df)
    return [
        Job(int(r.id), int(r.release), int(r.deadline), int(r.duration_slots),
            str(r.interruptible).strip().lower() in ("1", "true", "yes"), float(r.power_w),
            None if p is None or pd.isna(p) else int(p))
        for r, p in zip(df.itertuples(index=False), planned)
    ]
