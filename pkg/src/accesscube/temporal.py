"""Hourly disaggregation of interval-coded count tables and supply windows.

Count tables arrive CTPP-style: per zone, a set of non-overlapping intervals
in minutes since midnight, each carrying a count. Counts are reals because
downstream areal interpolation produces fractional counts anyway.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

HOURS = 24
MINUTES_PER_DAY = 1440


class TemporalError(ValueError):
    """Invalid interval table or hour index."""


@dataclass(frozen=True)
class IntervalCount:
    """One interval [start_minute, end_minute) carrying a non-negative count."""

    start_minute: int
    end_minute: int
    count: float

    def __post_init__(self) -> None:
        for name, v in (("start_minute", self.start_minute), ("end_minute", self.end_minute)):
            if float(v) != int(v):
                raise TemporalError(f"{name}={v} is not aligned to the minute grid")
        if not (0 <= self.start_minute < self.end_minute <= MINUTES_PER_DAY):
            raise TemporalError(
                f"interval [{self.start_minute},{self.end_minute}) outside [0,{MINUTES_PER_DAY}]"
            )
        if self.count < 0:
            raise TemporalError(f"negative count {self.count}")


def as_hourly(values: Sequence[float] | np.ndarray) -> np.ndarray:
    """Validate and return a 24-bin hourly count vector."""
    arr = np.asarray(values, dtype=float)
    if arr.shape != (HOURS,):
        raise TemporalError(f"hourly counts must have exactly {HOURS} bins, got shape {arr.shape}")
    if np.any(arr < 0) or not np.all(np.isfinite(arr)):
        raise TemporalError("hourly counts must be finite and >= 0")
    return arr


def disaggregate_to_hourly(table: Iterable[IntervalCount]) -> np.ndarray:
    """Split each interval's count over hourly bins proportionally to overlap.

    An interval fully inside one hour contributes entirely to that hour; a
    multi-hour interval is divided by its minute overlap with each bin, so the
    total is preserved. This one proportional rule covers 15-minute summation,
    raw hourly counts, and even division of multi-hour blocks alike.
    """
    rows = sorted(table, key=lambda iv: (iv.start_minute, iv.end_minute))
    for prev, cur in zip(rows, rows[1:]):
        if cur.start_minute < prev.end_minute:
            raise TemporalError(
                f"intervals [{prev.start_minute},{prev.end_minute}) and "
                f"[{cur.start_minute},{cur.end_minute}) overlap"
            )
    bins = np.zeros(HOURS, dtype=float)
    for iv in rows:
        if iv.count == 0:
            continue
        duration = iv.end_minute - iv.start_minute
        first = int(iv.start_minute) // 60
        last = (int(iv.end_minute) - 1) // 60
        for h in range(first, last + 1):
            overlap = min(iv.end_minute, (h + 1) * 60) - max(iv.start_minute, h * 60)
            bins[h] += iv.count * (overlap / duration)
    return bins


def supply_window(hourly: Sequence[float] | np.ndarray, t: int) -> float:
    """Two-hour window [t, t+1]: bin t plus bin t+1, wrapping past midnight."""
    arr = as_hourly(hourly)
    if not (0 <= t < HOURS) or int(t) != t:
        raise TemporalError(f"hour {t} out of range 0..{HOURS - 1}")
    return float(arr[t] + arr[(t + 1) % HOURS])


def daily_total(hourly: Sequence[float] | np.ndarray) -> float:
    """Sum of all 24 bins."""
    return float(np.sum(as_hourly(hourly)))


def read_interval_table(path: str) -> dict[str, list[IntervalCount]]:
    """Read a delimited count table with columns zone_id,start_minute,end_minute,count."""
    out: dict[str, list[IntervalCount]] = {}
    with open(path, newline="", encoding="utf-8") as f:
        reader = csv.DictReader(f)
        required = {"zone_id", "start_minute", "end_minute", "count"}
        if reader.fieldnames is None or not required.issubset(reader.fieldnames):
            raise TemporalError(f"{path}: expected columns {sorted(required)}, got {reader.fieldnames}")
        for lineno, row in enumerate(reader, start=2):
            try:
                iv = IntervalCount(
                    start_minute=int(row["start_minute"]),
                    end_minute=int(row["end_minute"]),
                    count=float(row["count"]),
                )
            except (TemporalError, ValueError) as exc:
                raise TemporalError(f"{path}:{lineno}: {exc}") from exc
            out.setdefault(row["zone_id"], []).append(iv)
    return out


def hourly_by_zone(path: str) -> dict[str, np.ndarray]:
    """Read an interval table and disaggregate every zone to hourly bins."""
    tables = read_interval_table(path)
    result: dict[str, np.ndarray] = {}
    for zone_id, rows in tables.items():
        try:
            result[zone_id] = disaggregate_to_hourly(rows)
        except TemporalError as exc:
            raise TemporalError(f"{path}: zone {zone_id!r}: {exc}") from exc
    return result
