"""Theoretical shifting potential and weekly/daily pattern statistics.

The shifting potential of slot ``t`` for a window ``W`` is how much lower the
carbon intensity could be if a 1-slot workload ran at the best slot of ``W``
instead of at ``t``::

    p(t, W) = C_t - min_{t' in W} C_t'

``W`` always contains ``t`` itself, so ``p >= 0``.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Sequence

import numpy as np
import pandas as pd
from numpy.lib.stride_tricks import sliding_window_view

from .errors import HorizonError, ResolutionError
from .gridmodel import CarbonSignal
from .timeaxis import parse_duration

FUTURE = "future"
PAST = "past"

DEFAULT_THRESHOLDS = (20.0, 40.0, 80.0, 120.0, 160.0)
DEFAULT_QUANTILES = (0.1, 0.25, 0.5, 0.75, 0.9)


@dataclass(frozen=True)
class PotentialWindow:
    direction: str
    length: pd.Timedelta

    def __post_init__(self):
        if self.direction not in (FUTURE, PAST):
            raise ValueError(f"direction must be {FUTURE!r} or {PAST!r}")
        length = parse_duration(self.length)
        if length <= pd.Timedelta(0):
            raise ValueError("window length must be positive")
        object.__setattr__(self, "length", length)

    @classmethod
    def parse(cls, text: str) -> "PotentialWindow":
        """``"+8h"`` is 8 hours into the future, ``"-2h"`` 2 hours into the past."""
        m = re.fullmatch(r"\s*([+-])\s*(.+)", str(text))
        if not m:
            raise ValueError(f"window {text!r} must start with '+' or '-'")
        return cls(FUTURE if m.group(1) == "+" else PAST, parse_duration(m.group(2)))

    @property
    def label(self) -> str:
        hours = self.length / pd.Timedelta(hours=1)
        return f"{'+' if self.direction == FUTURE else '-'}{hours:g}h"

    def n_slots(self, signal: CarbonSignal) -> int:
        n = self.length / signal.resolution
        if n != int(n):
            raise ResolutionError(f"window {self.length} is not a multiple of {signal.resolution}")
        return int(n)


def shifting_potential(signal: CarbonSignal, t: int, window: PotentialWindow) -> float:
    k = window.n_slots(signal)
    lo, hi = (t, t + k) if window.direction == FUTURE else (t - k, t)
    if lo < 0 or hi >= len(signal) or not 0 <= t < len(signal):
        raise HorizonError(f"window [{lo}, {hi}] around slot {t} leaves the signal")
    v = signal.values
    return float(v[t] - v[lo:hi + 1].min())


def potential_series(signal: CarbonSignal, window: PotentialWindow) -> np.ndarray:
    """``p(t, W)`` for every slot; NaN where the window leaves the signal."""
    k = window.n_slots(signal)
    v = signal.values
    out = np.full(len(v), np.nan)
    if k + 1 > len(v):
        return out
    mins = sliding_window_view(v, k + 1).min(axis=1)
    if window.direction == FUTURE:
        out[: len(mins)] = v[: len(mins)] - mins
    else:
        out[k:] = v[k:] - mins
    return out


def _time_of_day_labels(signal: CarbonSignal) -> pd.Index:
    return pd.Index(signal.axis.local_times().strftime("%H:%M"), name="time_of_day")


def potential_by_time_of_day(
    signal: CarbonSignal,
    window: PotentialWindow,
    thresholds: Sequence[float] = DEFAULT_THRESHOLDS,
    quantiles: Sequence[float] = DEFAULT_QUANTILES,
) -> pd.DataFrame:
    """Aggregate ``p(t, W)`` by local time of day.

    For every time of day the table holds the number of days with a defined
    potential, the mean, the requested quantiles, and for each threshold the
    share of days on which the potential reached at least that threshold.
    """
    p = pd.Series(potential_series(signal, window), index=_time_of_day_labels(signal)).dropna()
    g = p.groupby(level=0, sort=True)
    table = pd.DataFrame({"n_days": g.size(), "mean": g.mean()})
    for q in quantiles:
        table[f"q{round(q * 100):02d}"] = g.quantile(q)
    for thr in thresholds:
        table[f"share_ge_{thr:g}"] = (p >= thr).groupby(level=0, sort=True).mean()
    return table


def potential_long_format(signal: CarbonSignal, windows: Sequence[PotentialWindow], **kwargs) -> pd.DataFrame:
    """Stack per-window tables keyed by region, window length and direction."""
    frames = []
    for w in windows:
        t = potential_by_time_of_day(signal, w, **kwargs).reset_index()
        t.insert(0, "direction", w.direction)
        t.insert(0, "window_hours", w.length / pd.Timedelta(hours=1))
        t.insert(0, "region", signal.region)
        frames.append(t)
    return pd.concat(frames, ignore_index=True)


def weekday_weekend_stats(signal: CarbonSignal) -> dict:
    """Mean intensity on local workdays vs. weekends and the relative drop in %."""
    if len(signal) * signal.resolution < pd.Timedelta(days=7):
        raise HorizonError("weekday/weekend statistics need at least one full week")
    weekend = signal.axis.local_times().dayofweek.to_numpy() >= 5
    # centre on a reference value so a constant signal gives bit-identical means
    ref = float(signal.values[0])
    workday_mean = ref + float((signal.values[~weekend] - ref).mean())
    weekend_mean = ref + float((signal.values[weekend] - ref).mean())
    drop = 0.0 if workday_mean == weekend_mean else 100.0 * (1.0 - weekend_mean / workday_mean)
    return {"workday_mean": workday_mean, "weekend_mean": weekend_mean, "drop_percent": drop}


def weekly_profile(signal: CarbonSignal) -> pd.DataFrame:
    """Mean, 2.5% and 97.5% quantile per local (weekday, time of day)."""
    lt = signal.axis.local_times()
    s = pd.Series(signal.values, index=pd.MultiIndex.from_arrays(
        [lt.dayofweek, lt.strftime("%H:%M")], names=["weekday", "time_of_day"]))
    g = s.groupby(level=[0, 1])
    return pd.DataFrame({"mean": g.mean(), "q025": g.quantile(0.025), "q975": g.quantile(0.975)})


def daily_profile_by_month(signal: CarbonSignal) -> pd.DataFrame:
    """Mean intensity per local (month, time of day)."""
    lt = signal.axis.local_times()
    s = pd.Series(signal.values, index=pd.MultiIndex.from_arrays(
        [lt.month, lt.strftime("%H:%M")], names=["month", "time_of_day"]))
    return s.groupby(level=[0, 1]).mean().unstack("time_of_day")


def summary_stats(signal: CarbonSignal) -> dict:
    """Mean, spread and range; weekday/weekend figures once a full week is covered."""
    v = signal.values
    out = {
        "region": signal.region,
        "n_slots": len(v),
        "mean": float(v.mean()),
        "std": float(v.std()),
        "min": float(v.min()),
        "max": float(v.max()),
    }
    if len(signal) * signal.resolution >= pd.Timedelta(days=7):
        out.update(weekday_weekend_stats(signal))
    return out


def intensity_histogram(signal: CarbonSignal, bin_width: float = 10.0) -> pd.DataFrame:
    """Raw binned counts of carbon intensity values."""
    lo = np.floor(signal.values.min() / bin_width) * bin_width
    hi = np.ceil(signal.values.max() / bin_width) * bin_width + bin_width
    counts, edges = np.histogram(signal.values, bins=np.arange(lo, hi + bin_width / 2, bin_width))
    return pd.DataFrame({"bin_lo": edges[:-1], "bin_hi": edges[1:], "count": counts})
