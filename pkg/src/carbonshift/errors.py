"""Exception hierarchy shared by all carbonshift modules."""


class CarbonShiftError(ValueError):
    """Base class for data and configuration errors (CLI exit code 1)."""


class MappingError(CarbonShiftError):
    """A data column does not map to a known energy source or neighbor."""


class DegenerateInputError(CarbonShiftError):
    """Input carries no usable information, e.g. zero total power everywhere."""


class TimestampError(CarbonShiftError):
    """Timestamps are unparsable, non-monotone or irregular."""


class GapError(CarbonShiftError):
    """A gap in a time series is too long to be interpolated."""


class ResolutionError(CarbonShiftError):
    """Two resolutions are not integer multiples of each other."""


class HorizonError(CarbonShiftError):
    """A requested slot range falls outside the available time series."""


class InfeasibleJobError(CarbonShiftError):
    """A job cannot be placed inside its own time window."""
