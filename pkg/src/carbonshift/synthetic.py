"""Synthetic carbon signals with known structure, for tests and demos."""
from __future__ import annotations

import numpy as np

from .gridmodel import CarbonSignal
from .timeaxis import TimeAxis


def weekly_pattern_signal(
    start="2020-01-01",
    days: int = 366,
    resolution="30min",
    workday: float = 300.0,
    weekend: float = 150.0,
    dip: float = 100.0,
    dip_hours: tuple[float, float] = (0.0, 4.0),
    region: str = "synthetic",
    zone: str | None = None,
) -> CarbonSignal:
    """Flat workday/weekend levels with a daily dip during ``dip_hours`` (local)."""
    axis = TimeAxis.for_zone(start, resolution, 0, zone)
    axis = TimeAxis.for_zone(start, resolution, days * axis.slots_per_day, zone)
    lt = axis.local_times()
    hour = lt.hour.to_numpy() + lt.minute.to_numpy() / 60.0
    values = np.where(lt.dayofweek.to_numpy() >= 5, weekend, workday)
    in_dip = (hour >= dip_hours[0]) & (hour < dip_hours[1])
    values = np.where(in_dip, dip, values).astype(float)
    return CarbonSignal(region, axis, values)


def noisy_daily_signal(start="2020-01-01", days: int = 366, resolution="30min", mean: float = 250.0,
                       amplitude: float = 80.0, noise: float = 20.0, seed: int = 0,
                       region: str = "synthetic", zone: str | None = None) -> CarbonSignal:
    """Sinusoidal daily cycle plus weekly drop and smoothed noise."""
    axis = TimeAxis.for_zone(start, resolution, 0, zone)
    axis = TimeAxis.for_zone(start, resolution, days * axis.slots_per_day, zone)
    lt = axis.local_times()
    hour = lt.hour.to_numpy() + lt.minute.to_numpy() / 60.0
    rng = np.random.default_rng(seed)
    eps = np.convolve(rng.normal(0, noise, len(hour) + 7), np.ones(8) / 8, mode="valid")[: len(hour)]
    weekly = np.where(lt.dayofweek.to_numpy() >= 5, -0.2 * mean, 0.0)
    values = mean + amplitude * np.cos(2 * np.pi * (hour - 19) / 24) + weekly + eps
    return CarbonSignal(region, axis, np.maximum(values, 1.0))
