"""Simulate carbon savings from temporally shifting delay-tolerant workloads."""

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    CarbonShiftError,
    DegenerateInputError,
    GapError,
    HorizonError,
    InfeasibleJobError,
    MappingError,
    ResolutionError,
    TimestampError,
)
from .experiment import ExperimentResult, ExperimentSpec, brute_force_oracle, run, sweep  # noqa: E402
from .forecast import ForecastModel, forecast  # noqa: E402
from .gridmodel import (  # noqa: E402
    DEFAULT_SOURCES,
    CarbonSignal,
    EnergySourceProfile,
    NeighborProfile,
    RegionTrace,
    compute_carbon_signal,
    resample,
)
from .ingest import RegionConfig, ingest_trace, load_region_config, read_signal_csv  # noqa: E402
from .potential import (  # noqa: E402
    PotentialWindow,
    potential_by_time_of_day,
    shifting_potential,
    weekday_weekend_stats,
)
from .scheduler import Assignment, Strategy, emissions, schedule  # noqa: E402
from .timeaxis import OffsetTable, TimeAxis  # noqa: E402
from .workload import Job, ScenarioConfig, apply_constraint, generate_ml_project, generate_nightly  # noqa: E402
