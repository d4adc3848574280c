"""Slot-indexed time axis with UTC storage and a local-time offset table.

All series in the package are stored on a regular UTC grid. Scheduling rules
("1 am", "9 am on the next workday") are expressed in local wall-clock time,
so each axis carries a table of UTC offsets that resolves DST transitions.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from datetime import date, datetime, time

import numpy as np
import pandas as pd

from .errors import HorizonError, ResolutionError, TimestampError

DAY = pd.Timedelta(days=1)


def to_utc(ts) -> pd.Timestamp:
    """Parse ``ts`` into a tz-aware UTC timestamp; naive values are taken as UTC."""
    ts = pd.Timestamp(ts)
    if ts.tzinfo is None:
        return ts.tz_localize("UTC")
    return ts.tz_convert("UTC")


def parse_duration(value) -> pd.Timedelta:
    """Accept ``"30min"``, ``"8h"``, ``"1.5h"``, numbers of hours or Timedeltas."""
    if isinstance(value, pd.Timedelta):
        return value
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return pd.Timedelta(hours=value)
    try:
        return pd.Timedelta(str(value).strip())
    except ValueError as exc:
        raise ResolutionError(f"cannot parse duration {value!r}") from exc


@dataclass(frozen=True)
class OffsetTable:
    """Piecewise-constant UTC offset: ``offsets[i]`` applies from ``changes[i]`` on.

    The first offset also applies to every instant before ``changes[0]``.
    """

    changes: tuple[pd.Timestamp, ...]
    offsets: tuple[pd.Timedelta, ...]

    def __post_init__(self):
        if len(self.changes) != len(self.offsets) or not self.changes:
            raise TimestampError("offset table needs one offset per change point")
        changes = tuple(to_utc(c) for c in self.changes)
        if any(b <= a for a, b in zip(changes, changes[1:])):
            raise TimestampError("offset table change points must be increasing")
        object.__setattr__(self, "changes", changes)
        object.__setattr__(self, "offsets", tuple(pd.Timedelta(o) for o in self.offsets))

    @classmethod
    def fixed(cls, offset=pd.Timedelta(0)) -> "OffsetTable":
        return cls((pd.Timestamp("1970-01-01", tz="UTC"),), (pd.Timedelta(offset),))

    @classmethod
    def from_zone(cls, zone: str, start, end) -> "OffsetTable":
        """Tabulate the offsets of IANA ``zone`` between ``start`` and ``end``."""
        start, end = to_utc(start) - 2 * DAY, to_utc(end) + 2 * DAY
        hours = pd.date_range(start.floor("h"), end.ceil("h"), freq="15min")
        local = hours.tz_convert(zone)
        offs = np.array([t.utcoffset() for t in local], dtype="timedelta64[ns]")
        keep = np.concatenate([[True], offs[1:] != offs[:-1]])
        return cls(tuple(hours[keep]), tuple(pd.Timedelta(o) for o in offs[keep]))

    def offset_at(self, utc) -> pd.Timedelta:
        utc = to_utc(utc)
        i = int(np.searchsorted(self._naive_changes(), np.datetime64(utc.tz_convert(None)), side="right")) - 1
        return self.offsets[max(i, 0)]

    def _naive_changes(self) -> np.ndarray:
        return np.array([c.tz_convert(None) for c in self.changes], dtype="datetime64[ns]")

    def offsets_for(self, utc_index: pd.DatetimeIndex) -> np.ndarray:
        idx = np.searchsorted(self._naive_changes(), utc_index.tz_convert(None).values, side="right") - 1
        offs = np.array(self.offsets, dtype="timedelta64[ns]")
        return offs[np.clip(idx, 0, None)]

    def local_to_utc(self, local: datetime, nonexistent: str = "pre") -> pd.Timestamp:
        """Map a naive local wall-clock time to UTC.

        Nonexistent local times (spring forward) resolve with the pre-transition
        offset, or to the transition instant itself with ``nonexistent="shift"``
        (which keeps the mapping monotone). Ambiguous ones (fall back) resolve
        to the first occurrence.
        """
        if nonexistent not in ("pre", "shift"):
            raise ValueError(f"unknown nonexistent policy {nonexistent!r}")
        local = pd.Timestamp(local)
        if local.tzinfo is not None:
            raise TimestampError("local_to_utc expects a naive wall-clock time")
        local = local.tz_localize("UTC")
        candidates = []
        for off in set(self.offsets):
            utc = local - off
            if self.offset_at(utc) == off:
                candidates.append(utc)
        if candidates:
            return min(candidates)
        utc = local - self.offset_at(local - max(self.offsets))
        if nonexistent == "shift":
            utc = max(c for c in self.changes if c <= utc)
        return utc

    def to_dict(self) -> dict:
        return {
            "changes": [c.isoformat() for c in self.changes],
            "offset_minutes": [int(o / pd.Timedelta(minutes=1)) for o in self.offsets],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "OffsetTable":
        return cls(
            tuple(to_utc(c) for c in d["changes"]),
            tuple(pd.Timedelta(minutes=m) for m in d["offset_minutes"]),
        )


@dataclass(frozen=True)
class TimeAxis:
    """Regular grid of ``n_slots`` slots starting at ``start`` (UTC)."""

    start: pd.Timestamp
    resolution: pd.Timedelta
    n_slots: int
    tz: OffsetTable = OffsetTable.fixed()

    def __post_init__(self):
        object.__setattr__(self, "start", to_utc(self.start))
        object.__setattr__(self, "resolution", parse_duration(self.resolution))
        if self.resolution <= pd.Timedelta(0) or DAY % self.resolution != pd.Timedelta(0):
            raise ResolutionError(f"resolution {self.resolution} must divide 24 h evenly")
        if self.n_slots < 0:
            raise HorizonError("n_slots must be non-negative")

    @classmethod
    def for_zone(cls, start, resolution, n_slots: int, zone: str | None) -> "TimeAxis":
        resolution = parse_duration(resolution)
        if zone is None:
            return cls(start, resolution, n_slots)
        end = to_utc(start) + n_slots * resolution
        return cls(start, resolution, n_slots, OffsetTable.from_zone(zone, start, end))

    def __len__(self) -> int:
        return self.n_slots

    @property
    def end(self) -> pd.Timestamp:
        return self.start + self.n_slots * self.resolution

    @property
    def slot_hours(self) -> float:
        return self.resolution / pd.Timedelta(hours=1)

    @property
    def slots_per_day(self) -> int:
        return int(DAY / self.resolution)

    def slots(self, duration) -> int:
        """Number of slots in ``duration``; it must be a whole multiple."""
        duration = parse_duration(duration)
        n = duration / self.resolution
        if n != int(n):
            raise ResolutionError(f"{duration} is not a multiple of {self.resolution}")
        return int(n)

    def times(self) -> pd.DatetimeIndex:
        return pd.date_range(self.start, periods=self.n_slots, freq=self.resolution)

    def local_times(self) -> pd.DatetimeIndex:
        """Naive local wall-clock start time of every slot."""
        utc = self.times()
        return pd.DatetimeIndex(utc.tz_convert(None).values + self.tz.offsets_for(utc))

    def time_of(self, slot: int) -> pd.Timestamp:
        return self.start + slot * self.resolution

    def local_time_of(self, slot: int) -> pd.Timestamp:
        utc = self.time_of(slot)
        return utc.tz_convert(None) + self.tz.offset_at(utc)

    def slot_of(self, utc, rounding: str = "floor") -> int:
        """Slot index containing (floor) or next starting at/after (ceil) ``utc``."""
        q = (to_utc(utc) - self.start) / self.resolution
        return int(math.floor(q) if rounding == "floor" else math.ceil(q))

    def slot_of_local(self, day: date, at: time, rounding: str = "ceil") -> int:
        """Slot index for a local wall-clock instant; may lie outside the axis."""
        utc = self.tz.local_to_utc(datetime.combine(day, at))
        return self.slot_of(utc, rounding)

    def with_slots(self, n_slots: int, start=None, resolution=None) -> "TimeAxis":
        return TimeAxis(
            self.start if start is None else start,
            self.resolution if resolution is None else resolution,
            n_slots,
            self.tz,
        )

    def check_range(self, start: int, stop: int) -> None:
        if start < 0 or stop > self.n_slots or start > stop:
            raise HorizonError(f"slot range [{start}, {stop}) outside axis of {self.n_slots} slots")
