"""CSV ingestion of generation/import feeds and region configuration files."""
from __future__ import annotations

import json
import sys
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import pandas as pd

from .errors import GapError, MappingError, TimestampError
from .gridmodel import (
    DEFAULT_SOURCES,
    CarbonSignal,
    EnergySourceProfile,
    NeighborProfile,
    RegionTrace,
    resample,
)
from .timeaxis import OffsetTable, TimeAxis, parse_duration, to_utc

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

# ENTSO-E transparency platform production types.
ENTSOE_VOCABULARY = {
    "Biomass": "biopower",
    "Fossil Brown coal/Lignite": "coal",
    "Fossil Coal-derived gas": "coal",
    "Fossil Gas": "natural_gas",
    "Fossil Hard coal": "coal",
    "Fossil Oil": "oil",
    "Fossil Oil shale": "oil",
    "Geothermal": "geothermal",
    "Hydro Pumped Storage": "hydropower",
    "Hydro Run-of-river and pondage": "hydropower",
    "Hydro Water Reservoir": "hydropower",
    "Nuclear": "nuclear",
    "Solar": "solar",
    "Wind Offshore": "wind",
    "Wind Onshore": "wind",
}

# CAISO daily fuel-mix report columns.
CAISO_VOCABULARY = {
    "Solar": "solar",
    "Wind": "wind",
    "Geothermal": "geothermal",
    "Biomass": "biopower",
    "Biogas": "biopower",
    "Small hydro": "hydropower",
    "Large hydro": "hydropower",
    "Coal": "coal",
    "Nuclear": "nuclear",
    "Natural gas": "natural_gas",
}

VOCABULARIES = {"entsoe": ENTSOE_VOCABULARY, "caiso": CAISO_VOCABULARY, "none": {}}

# Used only for local-time scheduling semantics.
REGION_TIMEZONES = {
    "de": "Europe/Berlin",
    "gb": "Europe/London",
    "fr": "Europe/Paris",
    "ca": "America/Los_Angeles",
}


@dataclass(frozen=True)
class RegionConfig:
    """Everything needed to turn raw feeds of one region into a carbon signal."""

    region: str
    timezone: str | None = None
    offsets: OffsetTable | None = None
    generation_columns: dict[str, str] = field(default_factory=dict)
    import_columns: dict[str, str] = field(default_factory=dict)
    ignore_columns: tuple[str, ...] = ()
    sources: tuple[EnergySourceProfile, ...] = DEFAULT_SOURCES
    neighbors: tuple[NeighborProfile, ...] = ()
    resolution: pd.Timedelta = pd.Timedelta(minutes=30)
    max_gap_slots: int = 2

    @classmethod
    def default(cls, region: str) -> "RegionConfig":
        return cls(region, timezone=REGION_TIMEZONES.get(region.lower()))

    def tz_table(self, start, end) -> OffsetTable:
        if self.offsets is not None:
            return self.offsets
        if self.timezone:
            return OffsetTable.from_zone(self.timezone, start, end)
        return OffsetTable.fixed()

    def axis(self, start, resolution, n_slots) -> TimeAxis:
        resolution = parse_duration(resolution)
        end = to_utc(start) + n_slots * resolution
        return TimeAxis(start, resolution, n_slots, self.tz_table(start, end))


def load_region_config(path) -> RegionConfig:
    """Read a TOML or JSON region config.

    Recognised keys: ``region``, ``timezone`` or ``utc_offsets`` (list of
    ``{from, minutes}``), ``vocabulary`` (entsoe/caiso/none),
    ``generation_columns``, ``ignore_columns``, ``resolution``,
    ``max_gap_slots``, ``[sources]`` overrides and ``[[neighbors]]`` entries
    with ``name``, ``intensity``, ``citation`` and optional ``column``.
    """
    path = Path(path)
    raw = path.read_bytes()
    if path.suffix.lower() == ".json":
        d = json.loads(raw)
    else:
        d = tomllib.loads(raw.decode("utf-8"))
    return region_config_from_dict(d, default_region=path.stem)


def region_config_from_dict(d: dict, default_region: str = "region") -> RegionConfig:
    region = d.get("region", default_region)
    vocab = dict(VOCABULARIES[d.get("vocabulary", "none")])
    vocab.update(d.get("generation_columns", {}))

    sources = {p.name: p.carbon_intensity for p in DEFAULT_SOURCES}
    sources.update({k: float(v) for k, v in d.get("sources", {}).items()})

    neighbors, import_cols = [], {}
    for nb in d.get("neighbors", []):
        neighbors.append(NeighborProfile(nb["name"], float(nb["intensity"]), nb.get("citation", "")))
        import_cols[nb.get("column", nb["name"])] = nb["name"]

    offsets = None
    if "utc_offsets" in d:
        rows = d["utc_offsets"]
        offsets = OffsetTable(
            tuple(to_utc(r["from"]) for r in rows),
            tuple(pd.Timedelta(minutes=r["minutes"]) for r in rows),
        )
    return RegionConfig(
        region=region,
        timezone=d.get("timezone", REGION_TIMEZONES.get(region.lower())),
        offsets=offsets,
        generation_columns=vocab,
        import_columns=import_cols,
        ignore_columns=tuple(d.get("ignore_columns", ())),
        sources=tuple(EnergySourceProfile(k, v) for k, v in sources.items()),
        neighbors=tuple(neighbors),
        resolution=parse_duration(d.get("resolution", "30min")),
        max_gap_slots=int(d.get("max_gap_slots", 2)),
    )


def _read_timeseries_csv(path) -> pd.DataFrame:
    df = pd.read_csv(path, encoding="utf-8")
    if df.shape[1] < 1:
        raise TimestampError(f"{path}: no columns")
    ts_col = df.columns[0]
    try:
        idx = pd.to_datetime(df[ts_col], utc=True, format="ISO8601")
    except (ValueError, TypeError) as exc:
        raise TimestampError(f"{path}: cannot parse timestamps: {exc}") from exc
    df = df.drop(columns=ts_col)
    df.index = pd.DatetimeIndex(idx)
    if not df.index.is_monotonic_increasing or df.index.has_duplicates:
        raise TimestampError(f"{path}: timestamps must be strictly increasing")
    return df.apply(pd.to_numeric, errors="coerce")


def _native_resolution(index: pd.DatetimeIndex) -> pd.Timedelta:
    if len(index) < 2:
        raise TimestampError("need at least two rows to infer the resolution")
    diffs = pd.Series(index[1:] - index[:-1])
    return diffs.mode().iloc[0]


def _regularize(df: pd.DataFrame, resolution: pd.Timedelta, max_gap: int, label: str) -> tuple[pd.DataFrame, list[str]]:
    """Put ``df`` on a regular grid; interpolate runs of <= ``max_gap`` missing slots."""
    notes = []
    offgrid = (df.index - df.index[0]) % resolution != pd.Timedelta(0)
    if offgrid.any():
        raise TimestampError(f"{label}: {offgrid.sum()} timestamps off the {resolution} grid")
    full = pd.date_range(df.index[0], df.index[-1], freq=resolution)
    df = df.reindex(full)
    missing = df.isna()
    if missing.any().any():
        for col in df.columns:
            m = missing[col].to_numpy()
            if not m.any():
                continue
            # lengths of consecutive NaN runs
            edges = np.diff(np.concatenate([[0], m.astype(int), [0]]))
            starts, stops = np.where(edges == 1)[0], np.where(edges == -1)[0]
            longest = int((stops - starts).max())
            if longest > max_gap:
                raise GapError(f"{label}: column {col!r} has a gap of {longest} slots (limit {max_gap})")
            if starts[0] == 0 or stops[-1] == len(m):
                raise GapError(f"{label}: column {col!r} has missing values at the series edge")
            notes.append(f"{label}: interpolated {int(m.sum())} missing slots in {col!r}")
        df = df.interpolate(method="linear", limit_area="inside")
        for n in notes:
            warnings.warn(n, stacklevel=3)
    return df, notes


def _map_columns(df: pd.DataFrame, mapping: dict[str, str], ignore, label: str) -> pd.DataFrame:
    cols = [c for c in df.columns if c not in ignore]
    unmapped = [c for c in cols if c not in mapping]
    if unmapped:
        raise MappingError(f"{label}: unmapped columns {unmapped}")
    targets = [mapping[c] for c in cols]
    grouped = df[cols].T.groupby(targets, sort=False).sum(min_count=1).T
    return grouped


def ingest_trace(gen_csv, imports_csv=None, config: RegionConfig | None = None) -> RegionTrace:
    """Read generation (and optional imports) CSVs into a ``RegionTrace``.

    Generation columns are mapped to energy sources through
    ``config.generation_columns`` (several feed columns may collapse into one
    source). Import columns map to neighbors. Negative values, which feeds use
    for exports or storage pumping, are clamped to zero. The result stays at
    the native resolution of the generation file.
    """
    config = config or RegionConfig("region")
    gen = _read_timeseries_csv(gen_csv)
    res = _native_resolution(gen.index)
    gen, notes = _regularize(gen, res, config.max_gap_slots, "generation")
    gen = _map_columns(gen, config.generation_columns, config.ignore_columns, "generation")

    if imports_csv is not None:
        imp = _read_timeseries_csv(imports_csv)
        imp_res = _native_resolution(imp.index)
        imp, imp_notes = _regularize(imp, imp_res, config.max_gap_slots, "imports")
        notes += imp_notes
        imp = _map_columns(imp, config.import_columns, config.ignore_columns, "imports")
        if imp_res != res:
            imp = _align_rate(imp, imp_res, res)
        imp = imp.reindex(gen.index)
        if imp.isna().any().any():
            raise TimestampError("imports do not cover the generation time range")
    else:
        imp = pd.DataFrame(index=gen.index)

    for label, frame in (("generation", gen), ("imports", imp)):
        neg = int((frame.to_numpy() < 0).sum())
        if neg:
            notes.append(f"{label}: clamped {neg} negative values to 0")
    gen, imp = gen.clip(lower=0), imp.clip(lower=0)

    axis = config.axis(gen.index[0], res, len(gen))
    return RegionTrace(
        config.region,
        axis,
        tuple(gen.columns),
        gen.to_numpy(float),
        tuple(imp.columns),
        imp.to_numpy(float) if imp.shape[1] else np.zeros((len(gen), 0)),
        tuple(notes),
    )


def _align_rate(df: pd.DataFrame, native: pd.Timedelta, target: pd.Timedelta) -> pd.DataFrame:
    axis = TimeAxis(df.index[0], native, len(df))
    tmp = RegionTrace("tmp", axis, tuple(df.columns), df.to_numpy(float).clip(min=0))
    tmp = resample(tmp, target)
    return pd.DataFrame(tmp.generation, index=tmp.axis.times(), columns=df.columns)


def read_signal_csv(path, region: str | None = None, timezone: str | None = None,
                    offsets: OffsetTable | None = None) -> CarbonSignal:
    """Read ``timestamp,carbon_intensity...`` into a ``CarbonSignal``.

    The value column is the one named ``carbon_intensity_gco2_per_kwh`` or,
    failing that, the first column whose name mentions "carbon".
    """
    path = Path(path)
    region = region or path.stem
    df = _read_timeseries_csv(path)
    col = "carbon_intensity_gco2_per_kwh"
    if col not in df.columns:
        cands = [c for c in df.columns if "carbon" in str(c).lower()] or list(df.columns[:1])
        if not cands:
            raise MappingError(f"{path}: no carbon intensity column")
        col = cands[0]
    res = _native_resolution(df.index)
    df, _ = _regularize(df[[col]], res, 2, str(path))
    if timezone is None and offsets is None:
        timezone = REGION_TIMEZONES.get(region.lower())
    cfg = RegionConfig(region, timezone=timezone, offsets=offsets)
    axis = cfg.axis(df.index[0], res, len(df))
    return CarbonSignal(region, axis, df[col].to_numpy(float))
