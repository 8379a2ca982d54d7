"""Dasymetric redistribution of zone-level hourly counts onto grid cells.

Each source zone's count is spread over the land-use parcels of the matching
class inside it, proportionally to parcel area, and the parcel pieces are then
clipped against the grid. Parcels straddling a zone boundary are clipped to
the zone first, which keeps the redistribution well-defined and mass
preserving. Workers follow residential parcels, jobs follow employment
(commercial/industrial) parcels.
"""
from __future__ import annotations

import csv
import json
import logging
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
from shapely import STRtree
from shapely.geometry.base import BaseGeometry

from .geometry import Grid, SLIVER_AREA, cell_polygon, cells_overlapping, require_valid
from .temporal import HOURS, as_hourly

log = logging.getLogger(__name__)

RESIDENTIAL = "residential"
EMPLOYMENT = "employment"
LAND_USE_CLASSES = (RESIDENTIAL, EMPLOYMENT)

# Daily totals at or below this are clipping noise, not activity.
ACTIVITY_THRESHOLD = 1e-9

Cell = tuple[int, int]


class DasymetricError(ValueError):
    pass


@dataclass
class CountZone:
    """Source zone carrying hourly worker and job counts."""

    id: str
    geometry: BaseGeometry
    workers: np.ndarray = field(default_factory=lambda: np.zeros(HOURS))
    jobs: np.ndarray = field(default_factory=lambda: np.zeros(HOURS))

    def __post_init__(self) -> None:
        require_valid(self.geometry, f"zone {self.id!r}")
        self.workers = as_hourly(self.workers)
        self.jobs = as_hourly(self.jobs)

    def counts(self, kind: str) -> np.ndarray:
        return self.workers if kind == RESIDENTIAL else self.jobs


@dataclass
class AuxiliaryZone:
    """Land-use parcel steering where counts land inside a zone."""

    id: str
    geometry: BaseGeometry
    land_use: str

    def __post_init__(self) -> None:
        require_valid(self.geometry, f"parcel {self.id!r}")
        if self.land_use not in LAND_USE_CLASSES:
            raise DasymetricError(
                f"parcel {self.id!r}: land_use must be one of {LAND_USE_CLASSES}, got {self.land_use!r}"
            )


@dataclass
class CellCounts:
    """Sparse per-cell hourly counts on a grid, one dict per count kind.

    Active flags are populated by filter_active_cells: a cell is active for a
    kind when its daily total exceeds the activity threshold.
    """

    grid: Grid
    workers: dict[Cell, np.ndarray] = field(default_factory=dict)
    jobs: dict[Cell, np.ndarray] = field(default_factory=dict)
    active_residential: tuple[Cell, ...] = ()
    active_employment: tuple[Cell, ...] = ()
    diagnostics: list[str] = field(default_factory=list)

    def counts(self, kind: str) -> dict[Cell, np.ndarray]:
        return self.workers if kind == RESIDENTIAL else self.jobs

    def total(self, kind: str) -> float:
        table = self.counts(kind)
        if not table:
            return 0.0
        return float(sum(v.sum() for v in table.values()))

    def hour_total(self, kind: str, hour: int) -> float:
        return float(sum(v[hour] for v in self.counts(kind).values()))


def interpolate(
    zones: Sequence[CountZone],
    aux: Sequence[AuxiliaryZone],
    grid: Grid,
    kind: str,
) -> CellCounts:
    """Redistribute one count kind from zones to grid cells via land-use areas.

    For each zone, the matching-class parcels are clipped to the zone; the
    zone's hourly vector is then split across cells in proportion to the
    clipped parcel area falling in each cell. A zone with positive counts but
    no matching parcel area falls back to uniform distribution by the zone's
    own area, with a diagnostic (mass is preserved either way).
    """
    if kind not in LAND_USE_CLASSES:
        raise DasymetricError(f"kind must be one of {LAND_USE_CLASSES}, got {kind!r}")
    matching = [a for a in aux if a.land_use == kind]
    tree = STRtree([a.geometry for a in matching]) if matching else None

    out = CellCounts(grid=grid)
    accum = out.counts(kind)
    # Fixed zone-id order makes the accumulation order independent of input
    # ordering, so results are reproducible run to run.
    for zone in sorted(zones, key=lambda z: z.id):
        y = zone.counts(kind)
        total = float(y.sum())
        if total <= 0.0:
            continue
        pieces: list[BaseGeometry] = []
        if tree is not None:
            for i in sorted(int(i) for i in tree.query(zone.geometry)):
                piece = matching[i].geometry.intersection(zone.geometry)
                if piece.area > SLIVER_AREA:
                    pieces.append(piece)
        if not pieces:
            msg = (
                f"zone {zone.id!r} has positive {kind} counts but no {kind} parcel area; "
                "falling back to uniform distribution over the zone"
            )
            log.warning(msg)
            out.diagnostics.append(msg)
            pieces = [zone.geometry]
        denom = sum(p.area for p in pieces)
        if denom <= 0.0:
            raise DasymetricError(f"zone {zone.id!r} has zero area, cannot distribute counts")
        for piece in pieces:
            for cell in cells_overlapping(grid, piece):
                a = piece.intersection(cell_polygon(grid, *cell)).area
                if a <= SLIVER_AREA:
                    continue
                vec = accum.get(cell)
                if vec is None:
                    vec = np.zeros(HOURS)
                    accum[cell] = vec
                vec += (a / denom) * y
    return out


def filter_active_cells(cc: CellCounts) -> CellCounts:
    """Mark and keep only cells with activity above the noise threshold.

    Residential activity requires a positive daily worker total, employment
    activity a positive daily job total; everything else is dropped so
    downstream O-D work never touches empty cells.
    """
    workers = {c: v for c, v in cc.workers.items() if v.sum() > ACTIVITY_THRESHOLD}
    jobs = {c: v for c, v in cc.jobs.items() if v.sum() > ACTIVITY_THRESHOLD}
    return CellCounts(
        grid=cc.grid,
        workers=workers,
        jobs=jobs,
        active_residential=tuple(sorted(workers)),
        active_employment=tuple(sorted(jobs)),
        diagnostics=list(cc.diagnostics),
    )


def combine(workers_cc: CellCounts, jobs_cc: CellCounts) -> CellCounts:
    """Merge two one-kind interpolation results onto one grid."""
    if workers_cc.grid != jobs_cc.grid:
        raise DasymetricError("cannot combine cell counts on different grids")
    return filter_active_cells(
        CellCounts(
            grid=workers_cc.grid,
            workers=dict(workers_cc.workers),
            jobs=dict(jobs_cc.jobs),
            diagnostics=workers_cc.diagnostics + jobs_cc.diagnostics,
        )
    )


def write_cell_counts(cc: CellCounts, path: str) -> None:
    """Write the sparse table as cell_col,cell_row,kind,hour,count rows."""
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        writer.writerow(["cell_col", "cell_row", "kind", "hour", "count"])
        for kind in LAND_USE_CLASSES:
            for cell in sorted(cc.counts(kind)):
                vec = cc.counts(kind)[cell]
                for hour in range(HOURS):
                    if vec[hour] != 0.0:
                        writer.writerow([cell[0], cell[1], kind, hour, repr(float(vec[hour]))])


def read_cell_counts(path: str, grid: Grid) -> CellCounts:
    cc = CellCounts(grid=grid)
    with open(path, newline="", encoding="utf-8") as f:
        reader = csv.DictReader(f)
        for row in reader:
            cell = (int(row["cell_col"]), int(row["cell_row"]))
            table = cc.counts(row["kind"])
            vec = table.get(cell)
            if vec is None:
                vec = np.zeros(HOURS)
                table[cell] = vec
            vec[int(row["hour"])] = float(row["count"])
    return filter_active_cells(cc)


def write_summary(cc: CellCounts, zones: Sequence[CountZone], path: str) -> dict:
    """Write the interpolation mass-balance summary JSON and return it."""
    mass_in = {
        RESIDENTIAL: float(sum(z.workers.sum() for z in zones)),
        EMPLOYMENT: float(sum(z.jobs.sum() for z in zones)),
    }
    summary = {
        "zones_in": len(zones),
        "cells_active_residential": len(cc.active_residential),
        "cells_active_employment": len(cc.active_employment),
        "mass_in": mass_in,
        "mass_out": {
            RESIDENTIAL: cc.total(RESIDENTIAL),
            EMPLOYMENT: cc.total(EMPLOYMENT),
        },
        "diagnostics": list(cc.diagnostics),
    }
    with open(path, "w", encoding="utf-8") as f:
        json.dump(summary, f, sort_keys=True, indent=2)
        f.write("\n")
    return summary
