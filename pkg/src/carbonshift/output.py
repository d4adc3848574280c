"""Atomic file output and the CSV/JSON export formats."""
from __future__ import annotations

import hashlib
import io
import json
import os
import tempfile
from pathlib import Path

import numpy as np
import pandas as pd

from .gridmodel import CarbonSignal


def atomic_write(path, data: str | bytes) -> Path:
    """Write ``data`` to a temp file next to ``path`` and rename it into place."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    if isinstance(data, str):
        data = data.encode("utf-8")
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def frame_to_csv(df: pd.DataFrame, index: bool = False) -> str:
    buf = io.StringIO()
    df.to_csv(buf, index=index, lineterminator="\n", float_format="%.10g")
    return buf.getvalue()


def dumps_json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, default=_json_default) + "\n"


def _json_default(o):
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, (np.floating,)):
        return float(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (pd.Timestamp, pd.Timedelta)):
        return o.isoformat()
    raise TypeError(f"not JSON serializable: {type(o).__name__}")


def signal_frame(signal: CarbonSignal) -> pd.DataFrame:
    times = signal.axis.times().strftime("%Y-%m-%dT%H:%M:%SZ")
    return pd.DataFrame({"timestamp": times, "carbon_intensity_gco2_per_kwh": signal.values})


def write_signal_csv(signal: CarbonSignal, path) -> Path:
    return atomic_write(path, frame_to_csv(signal_frame(signal)))


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()
