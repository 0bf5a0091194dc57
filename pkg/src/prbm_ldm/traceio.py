"""Trace CSV files.

One trace per file, two columns:

    t_s,<unit>
    0.000000,1.570796327
    0.010000,1.565432101
    ...

The unit token in the header is the tag the trace carries (angle_rad,
angle_deg, voltage_mV, pressure_Pa, force_N).  Time stamps must be uniform
and strictly increasing; the sample rate is inferred from the first two
rows and every later stamp has to agree within 1e-6 s.  Written times use
six decimals, values nine, which round-trips the sample rate exactly for
the rates this package produces.
"""
from __future__ import annotations

import csv
import math
from pathlib import Path

import numpy as np

from .errors import TraceFileError
from .signal import Trace, TraceUnit

__all__ = ["read_trace_csv", "write_trace_csv"]

_TIME_TOLERANCE_S = 1e-6
_UNIT_TOKENS = {unit.value: unit for unit in TraceUnit}


def write_trace_csv(path: str | Path, trace: Trace) -> None:
    path = Path(path)
    times = trace.times()
    with path.open("w", newline="") as fh:
        fh.write(f"t_s,{trace.unit.value}\n")
        for t, v in zip(times, trace.values):
            fh.write(f"{t:.6f},{v:.9f}\n")


def read_trace_csv(path: str | Path) -> Trace:
    """Read and strictly validate a trace file.

    Raises TraceFileError naming the file (and the first offending row)
    for a missing file, bad header, non-numeric fields, non-finite values,
    or non-uniform time stamps.
    """
    path = Path(path)
    try:
        fh = path.open("r", newline="")
    except OSError as exc:
        raise TraceFileError(path, f"cannot open: {exc.strerror}") from exc

    with fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise TraceFileError(path, "file is empty") from None
        if len(header) != 2 or header[0] != "t_s":
            raise TraceFileError(path, "header must be 't_s,<unit>'", row=1)
        unit = _UNIT_TOKENS.get(header[1])
        if unit is None:
            raise TraceFileError(
                path, f"unknown unit {header[1]!r}; expected one of "
                f"{', '.join(sorted(_UNIT_TOKENS))}", row=1)

        times: list[float] = []
        values: list[float] = []
        for row_number, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 2:
                raise TraceFileError(path, f"expected 2 fields, got {len(row)}",
                                     row=row_number)
            try:
                t = float(row[0])
                v = float(row[1])
            except ValueError:
                raise TraceFileError(path, f"non-numeric field in {row!r}",
                                     row=row_number) from None
            if not (math.isfinite(t) and math.isfinite(v)):
                raise TraceFileError(path, "non-finite value",
                                     row=row_number)
            times.append(t)
            values.append(v)

    if len(values) < 2:
        raise TraceFileError(path, f"need at least 2 data rows, found "
                             f"{len(values)}")
    dt = times[1] - times[0]
    if dt <= 0:
        raise TraceFileError(path, "time stamps must be strictly increasing",
                             row=3)
    t0 = times[0]
    for i, t in enumerate(times):
        if abs(t - (t0 + i * dt)) > _TIME_TOLERANCE_S:
            raise TraceFileError(
                path, f"time stamp {t:.6f} deviates from the uniform grid "
                f"(expected {t0 + i * dt:.6f})", row=i + 2)
    return Trace(sample_rate_hz=1.0 / dt, values=np.array(values), unit=unit)
