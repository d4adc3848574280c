"""Regional grid model: energy sources, generation/import traces, carbon signal.

The carbon intensity of a region in slot ``t`` is the power-weighted average
of the intensities of everything it consumes::

    C_t = (sum_s P[s,t] c_s + sum_r P[r,t] c_r) / (sum_s P[s,t] + sum_r P[r,t])

where ``s`` runs over local energy sources and ``r`` over neighboring regions
whose imports are weighted by their yearly average intensity.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
import pandas as pd

from .errors import DegenerateInputError, MappingError, ResolutionError
from .timeaxis import TimeAxis, parse_duration


@dataclass(frozen=True)
class EnergySourceProfile:
    name: str
    carbon_intensity: float  # gCO2/kWh, life-cycle

    def __post_init__(self):
        if not self.carbon_intensity >= 0:
            raise ValueError(f"carbon intensity of {self.name!r} must be >= 0")


@dataclass(frozen=True)
class NeighborProfile:
    name: str
    yearly_avg_intensity: float  # gCO2/kWh
    citation: str = ""

    def __post_init__(self):
        if not self.yearly_avg_intensity >= 0:
            raise ValueError(f"yearly intensity of neighbor {self.name!r} must be >= 0")


# Median life-cycle intensities from the IPCC SRREN Annex II review.
DEFAULT_SOURCES: tuple[EnergySourceProfile, ...] = (
    EnergySourceProfile("biopower", 18),
    EnergySourceProfile("solar", 46),
    EnergySourceProfile("geothermal", 45),
    EnergySourceProfile("hydropower", 4),
    EnergySourceProfile("wind", 12),
    EnergySourceProfile("nuclear", 16),
    EnergySourceProfile("natural_gas", 469),
    EnergySourceProfile("oil", 840),
    EnergySourceProfile("coal", 1001),
)


def _index_profiles(profiles: Iterable, attr: str) -> dict[str, float]:
    out: dict[str, float] = {}
    for p in profiles:
        if p.name in out:
            raise MappingError(f"duplicate profile name {p.name!r}")
        out[p.name] = float(getattr(p, attr))
    return out


def _frozen(a, ndim: int) -> np.ndarray:
    a = np.array(a, dtype=float, copy=True)
    if a.ndim == 1 and ndim == 2:
        a = a.reshape(-1, 1) if a.size else a.reshape(0, 0)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class RegionTrace:
    """Per-source generation and per-neighbor imports (MW) on a common axis."""

    region: str
    axis: TimeAxis
    source_names: tuple[str, ...]
    generation: np.ndarray  # [slot, source]
    neighbor_names: tuple[str, ...] = ()
    imports: np.ndarray = field(default_factory=lambda: np.zeros((0, 0)))  # [slot, neighbor]
    notes: tuple[str, ...] = ()

    def __post_init__(self):
        gen = _frozen(self.generation, 2)
        imp = _frozen(self.imports, 2)
        n = self.axis.n_slots
        if imp.size == 0:
            imp = np.zeros((n, len(self.neighbor_names)))
            imp.setflags(write=False)
        if gen.shape != (n, len(self.source_names)):
            raise ValueError(f"generation shape {gen.shape} != ({n}, {len(self.source_names)})")
        if imp.shape != (n, len(self.neighbor_names)):
            raise ValueError(f"imports shape {imp.shape} != ({n}, {len(self.neighbor_names)})")
        if len(set(self.source_names)) != len(self.source_names):
            raise MappingError("duplicate source column")
        if len(set(self.neighbor_names)) != len(self.neighbor_names):
            raise MappingError("duplicate neighbor column")
        if np.isnan(gen).any() or np.isnan(imp).any():
            raise ValueError("trace contains NaN values")
        if (gen < 0).any() or (imp < 0).any():
            raise ValueError("trace power values must be non-negative; clamp on ingestion")
        object.__setattr__(self, "generation", gen)
        object.__setattr__(self, "imports", imp)
        object.__setattr__(self, "source_names", tuple(self.source_names))
        object.__setattr__(self, "neighbor_names", tuple(self.neighbor_names))

    def __len__(self):
        return self.axis.n_slots

    @property
    def resolution(self) -> pd.Timedelta:
        return self.axis.resolution

    def to_frame(self) -> pd.DataFrame:
        data = np.hstack([self.generation, self.imports])
        cols = list(self.source_names) + [f"import:{n}" for n in self.neighbor_names]
        return pd.DataFrame(data, index=self.axis.times(), columns=cols)


@dataclass(frozen=True)
class CarbonSignal:
    """Carbon intensity time series C_t in gCO2/kWh."""

    region: str
    axis: TimeAxis
    values: np.ndarray

    def __post_init__(self):
        v = _frozen(self.values, 1)
        if v.shape != (self.axis.n_slots,):
            raise ValueError(f"signal has {v.size} values for {self.axis.n_slots} slots")
        object.__setattr__(self, "values", v)

    def __len__(self):
        return self.axis.n_slots

    @property
    def start(self) -> pd.Timestamp:
        return self.axis.start

    @property
    def resolution(self) -> pd.Timedelta:
        return self.axis.resolution

    def mean(self) -> float:
        return float(self.values.mean())

    def to_series(self) -> pd.Series:
        return pd.Series(self.values, index=self.axis.times(), name="carbon_intensity_gco2_per_kwh")

    def slice(self, start: int, stop: int) -> "CarbonSignal":
        self.axis.check_range(start, stop)
        axis = self.axis.with_slots(stop - start, start=self.axis.time_of(start))
        return CarbonSignal(self.region, axis, self.values[start:stop])


def compute_carbon_signal(
    trace: RegionTrace,
    sources: Iterable[EnergySourceProfile] = DEFAULT_SOURCES,
    neighbors: Iterable[NeighborProfile] = (),
) -> CarbonSignal:
    """Consumption-weighted average carbon intensity of ``trace``.

    Slots with zero total power carry the previous value forward; a leading
    zero slot cannot be resolved and raises ``DegenerateInputError``.
    """
    c_src = _index_profiles(sources, "carbon_intensity")
    c_nb = _index_profiles(neighbors, "yearly_avg_intensity")
    missing = [n for n in trace.source_names if n not in c_src]
    missing += [n for n in trace.neighbor_names if n not in c_nb]
    if missing:
        raise MappingError(f"no carbon intensity for columns {missing}")

    weights = np.array([c_src[n] for n in trace.source_names] + [c_nb[n] for n in trace.neighbor_names])
    power = np.hstack([trace.generation, trace.imports])
    total = power.sum(axis=1)
    if not (total > 0).any():
        raise DegenerateInputError("trace has zero total power in every slot")
    if total[0] <= 0:
        raise DegenerateInputError("first slot has zero total power; nothing to carry forward")

    emitted = power @ weights
    ok = total > 0
    values = np.empty(len(total))
    values[ok] = emitted[ok] / total[ok]
    if not ok.all():
        warnings.warn(f"{(~ok).sum()} zero-power slots carried forward", stacklevel=2)
        idx = np.where(ok, np.arange(len(total)), 0)
        np.maximum.accumulate(idx, out=idx)
        values = values[idx]
    return CarbonSignal(trace.region, trace.axis, values)


def _resample_matrix(m: np.ndarray, factor: int, down: bool) -> np.ndarray:
    if down:
        return m.reshape(m.shape[0] // factor, factor, m.shape[1]).mean(axis=1)
    return np.repeat(m, factor, axis=0)


def resample(trace: RegionTrace, target_resolution) -> RegionTrace:
    """Change the slot length of ``trace``.

    Power is an average rate over a slot, so downsampling averages the covered
    fine slots and upsampling repeats each value.
    """
    target = parse_duration(target_resolution)
    native = trace.resolution
    if target == native:
        return trace
    if target > native:
        factor, down = target / native, True
    else:
        factor, down = native / target, False
    if factor != int(factor):
        raise ResolutionError(f"cannot resample {native} to {target}")
    factor = int(factor)
    n = trace.axis.n_slots
    if down and n % factor:
        raise ResolutionError(f"{n} slots of {native} do not tile {target} slots")
    n_new = n // factor if down else n * factor
    return RegionTrace(
        trace.region,
        trace.axis.with_slots(n_new, resolution=target),
        trace.source_names,
        _resample_matrix(trace.generation, factor, down),
        trace.neighbor_names,
        _resample_matrix(trace.imports, factor, down),
        trace.notes,
    )


def trace_from_arrays(
    region: str,
    axis: TimeAxis,
    generation: dict[str, Sequence[float]],
    imports: dict[str, Sequence[float]] | None = None,
) -> RegionTrace:
    """Build a trace from ``{column: values}`` dicts; handy in notebooks and tests."""
    imports = imports or {}
    gen = np.column_stack([np.asarray(v, float) for v in generation.values()]) if generation else np.zeros((axis.n_slots, 0))
    imp = np.column_stack([np.asarray(v, float) for v in imports.values()]) if imports else np.zeros((axis.n_slots, 0))
    return RegionTrace(region, axis, tuple(generation), gen, tuple(imports), imp)
