"""Slot assignment strategies and emission accounting.

A job is scheduled once, at release, against a forecast covering its whole
window ``[release, deadline)``. Ties always go to the earliest candidate.
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
import pandas as pd
from numpy.lib.stride_tricks import sliding_window_view

from .errors import HorizonError, InfeasibleJobError
from .gridmodel import CarbonSignal
from .output import atomic_write, frame_to_csv
from .workload import Job

BASELINE = "baseline_immediate"
NON_INTERRUPTING = "non_interrupting"
INTERRUPTING = "interrupting"
STRATEGIES = (BASELINE, NON_INTERRUPTING, INTERRUPTING)


@dataclass(frozen=True)
class Strategy:
    kind: str

    def __post_init__(self):
        if self.kind not in STRATEGIES:
            raise ValueError(f"unknown strategy {self.kind!r}; expected one of {STRATEGIES}")


@dataclass(frozen=True)
class Assignment:
    job_id: int
    slots: tuple[int, ...]

    def check(self, job: Job) -> None:
        """Raise ``InfeasibleJobError`` unless this is a valid placement of ``job``."""
        s = self.slots
        if len(s) != job.duration or len(set(s)) != len(s):
            raise InfeasibleJobError(f"job {job.id}: {len(s)} distinct slots for duration {job.duration}")
        if any(b <= a for a, b in zip(s, s[1:])):
            raise InfeasibleJobError(f"job {job.id}: slots not in chronological order")
        if s[0] < job.release or s[-1] >= job.deadline:
            raise InfeasibleJobError(f"job {job.id}: slots outside [{job.release}, {job.deadline})")
        if not job.interruptible and s[-1] - s[0] != len(s) - 1:
            raise InfeasibleJobError(f"job {job.id}: non-interruptible job split")


def _kind(strategy) -> str:
    return strategy.kind if isinstance(strategy, Strategy) else Strategy(strategy).kind


def best_window_offset(forecast: np.ndarray, duration: int) -> int:
    """Offset of the contiguous window with the lowest mean (earliest on ties)."""
    # each window summed independently so equal windows compare exactly equal
    sums = sliding_window_view(forecast, duration).sum(axis=1)
    return int(np.argmin(sums))


def lowest_slots(forecast: np.ndarray, k: int) -> np.ndarray:
    """Offsets of the ``k`` lowest values, earlier first on ties, in time order."""
    return np.sort(np.argsort(forecast, kind="stable")[:k])


def schedule(job: Job, forecast: np.ndarray, strategy) -> Assignment:
    """Place ``job`` using ``forecast`` over its window ``[release, deadline)``.

    ``baseline_immediate`` runs at the job's baseline start (its release for ad
    hoc jobs, its planned start for scheduled ones). ``non_interrupting`` picks
    the contiguous window with the lowest mean forecast. ``interrupting`` picks
    the ``duration`` individual slots with the lowest forecast; a job that is not
    interruptible falls back to contiguous placement.
    """
    kind = _kind(strategy)
    forecast = np.asarray(forecast, dtype=float)
    if len(forecast) < job.window:
        raise HorizonError(f"job {job.id}: forecast covers {len(forecast)} of {job.window} window slots")
    forecast = forecast[: job.window]
    if kind == BASELINE:
        start = job.baseline_start
        return Assignment(job.id, tuple(range(start, start + job.duration)))
    if kind == INTERRUPTING and job.interruptible:
        offs = lowest_slots(forecast, job.duration)
        return Assignment(job.id, tuple(int(job.release + o) for o in offs))
    start = job.release + best_window_offset(forecast, job.duration)
    return Assignment(job.id, tuple(range(start, start + job.duration)))


def emissions(assignment: Assignment, job: Job, signal: CarbonSignal) -> float:
    """gCO2 emitted by running ``job`` in ``assignment.slots`` under the true signal."""
    if not assignment.slots:
        raise InfeasibleJobError(f"job {job.id}: empty assignment")
    slots = np.asarray(assignment.slots)
    if slots.min() < 0 or slots.max() >= len(signal):
        raise HorizonError(f"job {job.id}: slots outside signal of {len(signal)} slots")
    kwh_per_slot = job.power / 1000.0 * signal.axis.slot_hours
    return float(kwh_per_slot * signal.values[slots].sum())


def assignments_frame(assignments: Iterable[Assignment]) -> pd.DataFrame:
    rows = [(a.job_id, s) for a in assignments for s in a.slots]
    return pd.DataFrame(rows, columns=["job_id", "slot_index"])


def write_assignments_csv(assignments: Sequence[Assignment], path) -> Path:
    return atomic_write(path, frame_to_csv(assignments_frame(assignments)))


def active_jobs(assignments: Iterable[Assignment], n_slots: int) -> np.ndarray:
    """Number of jobs running in every slot."""
    counts = np.zeros(n_slots, dtype=int)
    for a in assignments:
        np.add.at(counts, np.asarray(a.slots), 1)
    return counts
