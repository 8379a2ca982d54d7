"""Gravity accessibility kernels: Hansen, two-step supply/demand ratio form,
and the hour-indexed variant with a two-hour supply window.

All kernels share one alignment: cost-matrix rows are active residential
cells (demand side), columns are active employment cells (supply side). The
two-step form first computes the supply-to-demand ratio at each employment
cell, then gathers decay-weighted ratios at each residential cell. Wherever
an employment cell's demand potential is zero, its ratio is zeroed (those
jobs are unclaimable within the model) and counted as a diagnostic rather
than poisoning the slice with infinities.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .calibration import DecayLike, decay_weights
from .dasymetric import CellCounts
from .geometry import Grid
from .network import Cell, CostMatrix, cell_id
from .temporal import HOURS

STATIC = "static"


class AccessError(ValueError):
    pass


@dataclass
class AccessibilitySurface:
    """Accessibility value per active residential cell, for one hour or static."""

    grid: Grid
    hour: int | None            # None for the static model
    cells: tuple[Cell, ...]
    values: np.ndarray

    def __post_init__(self) -> None:
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (len(self.cells),):
            raise AccessError(f"{len(self.cells)} cells but {self.values.shape} values")
        if self.values.size and np.any(self.values < 0):
            raise AccessError("accessibility values must be >= 0")

    @property
    def hour_tag(self) -> str:
        return STATIC if self.hour is None else str(self.hour)


@dataclass
class RatioSurface:
    """Supply-to-demand ratio per active employment cell."""

    grid: Grid
    hour: int | None
    cells: tuple[Cell, ...]
    values: np.ndarray
    zero_demand_cells: int = 0


def _weights(costs: CostMatrix, spec: DecayLike) -> np.ndarray:
    return decay_weights(spec, costs.values)


def hansen(
    supply: Sequence[float] | np.ndarray,
    costs: CostMatrix,
    spec: DecayLike,
    grid: Grid,
    hour: int | None = None,
) -> AccessibilitySurface:
    """Plain opportunity sum: A_i = sum_j S_j * f(d_ij), no demand competition."""
    s = np.asarray(supply, dtype=float)
    if s.shape != (len(costs.destination_ids),):
        raise AccessError(
            f"supply has {s.shape} entries for {len(costs.destination_ids)} destination cells"
        )
    values = _weights(costs, spec) @ s
    return AccessibilitySurface(
        grid=grid,
        hour=hour,
        cells=tuple(_cells_of(costs.origin_ids)),
        values=values,
    )


def two_step_ratio(
    supply: np.ndarray,
    demand: np.ndarray,
    weights: np.ndarray,
) -> tuple[np.ndarray, int]:
    """Supply-to-demand ratios R_j = S_j / sum_k D_k f(d_kj); zero where undefined.

    Returns the ratio vector and the count of employment cells whose demand
    potential was zero while they still offered supply.
    """
    potential = weights.T @ demand
    undefined = potential <= 0.0
    ratios = np.where(undefined, 0.0, supply / np.where(undefined, 1.0, potential))
    zero_demand = int(np.count_nonzero(undefined & (supply > 0)))
    return ratios, zero_demand


def shen_static(
    supply: Sequence[float] | np.ndarray,
    demand: Sequence[float] | np.ndarray,
    costs: CostMatrix,
    spec: DecayLike,
    grid: Grid,
    hour: int | None = None,
    diagnostics: dict | None = None,
) -> AccessibilitySurface:
    """Two-step gravity measure: ratio at each supply cell, then gather.

    With unit demand potential everywhere this reduces to the Hansen sum.
    """
    s = np.asarray(supply, dtype=float)
    p = np.asarray(demand, dtype=float)
    if s.shape != (len(costs.destination_ids),):
        raise AccessError(f"supply shape {s.shape} does not match destinations")
    if p.shape != (len(costs.origin_ids),):
        raise AccessError(f"demand shape {p.shape} does not match origins")
    w = _weights(costs, spec)
    ratios, zero_demand = two_step_ratio(s, p, w)
    if diagnostics is not None:
        diagnostics["zero_demand_cells"] = diagnostics.get("zero_demand_cells", 0) + zero_demand
    return AccessibilitySurface(
        grid=grid,
        hour=hour,
        cells=tuple(_cells_of(costs.origin_ids)),
        values=w @ ratios,
    )


def _cells_of(ids: Sequence[str]) -> list[Cell]:
    out = []
    for s in ids:
        col, row = s.split(",")
        out.append((int(col), int(row)))
    return out


@dataclass
class _Aligned:
    """Cost submatrix aligned to a CellCounts' active cells."""

    res_cells: tuple[Cell, ...]
    emp_cells: tuple[Cell, ...]
    workers: np.ndarray         # (nres, 24)
    jobs: np.ndarray            # (nemp, 24)
    rows: np.ndarray
    cols: np.ndarray

    def weight_matrix(self, cost: CostMatrix, spec: DecayLike) -> np.ndarray:
        sub = cost.values[np.ix_(self.rows, self.cols)]
        return decay_weights(spec, sub)


def align_counts(cc: CellCounts, cost: CostMatrix) -> _Aligned:
    oindex = cost.origin_index()
    dindex = cost.destination_index()
    missing = [c for c in cc.active_residential if cell_id(c) not in oindex]
    missing += [c for c in cc.active_employment if cell_id(c) not in dindex]
    if missing:
        raise AccessError(f"cost matrix is missing rows/columns for cells {missing[:10]}")
    res = cc.active_residential
    emp = cc.active_employment
    return _Aligned(
        res_cells=res,
        emp_cells=emp,
        workers=np.vstack([cc.workers[c] for c in res]) if res else np.zeros((0, HOURS)),
        jobs=np.vstack([cc.jobs[c] for c in emp]) if emp else np.zeros((0, HOURS)),
        rows=np.asarray([oindex[cell_id(c)] for c in res], dtype=int),
        cols=np.asarray([dindex[cell_id(c)] for c in emp], dtype=int),
    )


def _cost_for_hour(costs: CostMatrix | Sequence[CostMatrix], t: int) -> CostMatrix:
    if isinstance(costs, CostMatrix):
        return costs
    if len(costs) != HOURS:
        raise AccessError(f"time-varying mode needs {HOURS} hourly matrices, got {len(costs)}")
    return costs[t]


def window_supply(jobs: np.ndarray, t: int) -> np.ndarray:
    """Two-hour job-start window per cell: bins t and t+1, wrapping at midnight."""
    return jobs[:, t] + jobs[:, (t + 1) % HOURS]


def supply_demand_ratios(
    cc: CellCounts,
    costs: CostMatrix | Sequence[CostMatrix],
    spec: DecayLike,
    t: int,
) -> RatioSurface:
    """First step only: the hour-t supply-to-demand ratio at each employment cell."""
    if not (0 <= t < HOURS):
        raise AccessError(f"hour {t} out of range 0..{HOURS - 1}")
    cost = _cost_for_hour(costs, t)
    al = align_counts(cc, cost)
    ratios, zero_demand = two_step_ratio(
        window_supply(al.jobs, t), al.workers[:, t], al.weight_matrix(cost, spec)
    )
    return RatioSurface(
        grid=cc.grid, hour=t, cells=al.emp_cells, values=ratios, zero_demand_cells=zero_demand
    )


def spacetime_access(
    cc: CellCounts,
    costs: CostMatrix | Sequence[CostMatrix],
    spec: DecayLike,
    t: int,
    diagnostics: dict | None = None,
) -> AccessibilitySurface:
    """Hour-t accessibility: windowed job supply against hour-t worker demand.

    Workers leaving at hour t can reach jobs starting in [t, t+1]; the cost
    matrix for hour t is used when a time-varying set is supplied.
    """
    if not (0 <= t < HOURS):
        raise AccessError(f"hour {t} out of range 0..{HOURS - 1}")
    cost = _cost_for_hour(costs, t)
    al = align_counts(cc, cost)
    w = al.weight_matrix(cost, spec)
    supply = window_supply(al.jobs, t)
    demand = al.workers[:, t]
    ratios, zero_demand = two_step_ratio(supply, demand, w)
    if diagnostics is not None:
        diagnostics.setdefault("zero_demand_cells_by_hour", {})[t] = zero_demand
        if not np.any(demand > 0):
            diagnostics.setdefault("hours_without_demand", []).append(t)
    return AccessibilitySurface(grid=cc.grid, hour=t, cells=al.res_cells, values=w @ ratios)


def pearson_correlation(a: Sequence[float] | np.ndarray, b: Sequence[float] | np.ndarray) -> float:
    """Standard Pearson r over paired samples."""
    x = np.asarray(a, dtype=float)
    y = np.asarray(b, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise AccessError(f"paired samples must be equal-length vectors, got {x.shape} and {y.shape}")
    if len(x) < 3:
        raise AccessError(f"need at least 3 paired samples, got {len(x)}")
    xc = x - x.mean()
    yc = y - y.mean()
    sx = float(xc @ xc)
    sy = float(yc @ yc)
    if sx <= 0 or sy <= 0:
        raise AccessError("zero variance in one of the sample vectors")
    return float((xc @ yc) / math.sqrt(sx * sy))


SCENARIO_NAMES = (
    "static_jobs_static_workers",
    "dynamic_jobs_static_workers",
    "static_jobs_dynamic_workers",
    "dynamic_jobs_dynamic_workers",
)


@dataclass
class ScenarioReport:
    """Four modeling scenarios plus their mean table and correlation triangle."""

    static_surface: AccessibilitySurface                 # scenario 1
    dynamic_jobs: list[AccessibilitySurface]             # scenario 2, hours 0..23
    dynamic_workers: list[AccessibilitySurface]          # scenario 3
    full_dynamic: list[AccessibilitySurface]             # scenario 4
    means: list[float] = field(default_factory=list)
    correlations: list[list[float]] = field(default_factory=list)
    diagnostics: dict = field(default_factory=dict)

    def pooled_samples(self, scenario: int) -> np.ndarray:
        """Per-(cell, hour) sample vector; scenario 1 is broadcast across hours."""
        if scenario == 1:
            return np.tile(self.static_surface.values, HOURS)
        surfaces = {2: self.dynamic_jobs, 3: self.dynamic_workers, 4: self.full_dynamic}[scenario]
        return np.concatenate([s.values for s in surfaces])

    def to_dict(self) -> dict:
        return {
            "scenarios": list(SCENARIO_NAMES),
            "means": self.means,
            "correlations": self.correlations,
            "diagnostics": self.diagnostics,
        }


def run_scenarios(
    cc: CellCounts,
    costs: CostMatrix | Sequence[CostMatrix],
    spec: DecayLike,
) -> ScenarioReport:
    """Evaluate the four modeling scenarios and their pairwise correlations.

    Scenario 1 runs the static model on daily totals; 2 holds workers at daily
    totals against hourly windowed jobs; 3 is the inverse; 4 is fully dynamic.
    Means are unweighted over active residential samples, pooled over all
    (cell, hour) pairs for the hourly scenarios.
    """
    static_cost = costs if isinstance(costs, CostMatrix) else costs[0]
    al = align_counts(cc, static_cost)
    daily_workers = al.workers.sum(axis=1)
    daily_jobs = al.jobs.sum(axis=1)
    diagnostics: dict = {}

    w_static = al.weight_matrix(static_cost, spec)
    ratios, zd = two_step_ratio(daily_jobs, daily_workers, w_static)
    diagnostics["zero_demand_cells_static"] = zd
    s1 = AccessibilitySurface(grid=cc.grid, hour=None, cells=al.res_cells, values=w_static @ ratios)

    s2: list[AccessibilitySurface] = []
    s3: list[AccessibilitySurface] = []
    s4: list[AccessibilitySurface] = []
    for t in range(HOURS):
        cost_t = _cost_for_hour(costs, t)
        w = al.weight_matrix(cost_t, spec) if cost_t is not static_cost else w_static
        supply_t = window_supply(al.jobs, t)
        demand_t = al.workers[:, t]

        r2, _ = two_step_ratio(supply_t, daily_workers, w)
        s2.append(AccessibilitySurface(grid=cc.grid, hour=t, cells=al.res_cells, values=w @ r2))
        r3, _ = two_step_ratio(daily_jobs, demand_t, w)
        s3.append(AccessibilitySurface(grid=cc.grid, hour=t, cells=al.res_cells, values=w @ r3))
        r4, zd4 = two_step_ratio(supply_t, demand_t, w)
        s4.append(AccessibilitySurface(grid=cc.grid, hour=t, cells=al.res_cells, values=w @ r4))
        diagnostics.setdefault("zero_demand_cells_by_hour", {})[t] = zd4

    report = ScenarioReport(
        static_surface=s1, dynamic_jobs=s2, dynamic_workers=s3, full_dynamic=s4,
        diagnostics=diagnostics,
    )
    report.means = [
        float(np.mean(s1.values)) if s1.values.size else 0.0,
        _pooled_mean(s2),
        _pooled_mean(s3),
        _pooled_mean(s4),
    ]
    report.correlations = _correlation_triangle(report)
    return report


def _pooled_mean(surfaces: list[AccessibilitySurface]) -> float:
    values = np.concatenate([s.values for s in surfaces])
    return float(np.mean(values)) if values.size else 0.0


def _correlation_triangle(report: ScenarioReport) -> list[list[float]]:
    tri: list[list[float]] = []
    for i in range(1, 5):
        row = []
        for j in range(1, i):
            try:
                row.append(pearson_correlation(report.pooled_samples(i), report.pooled_samples(j)))
            except AccessError:
                row.append(float("nan"))
        tri.append(row)
    return tri


def conservation_gap(
    cc: CellCounts,
    costs: CostMatrix | Sequence[CostMatrix],
    spec: DecayLike,
    t: int,
) -> float:
    """Relative gap |sum_i D_i A_i - sum_j S_j| / sum_j S at hour t.

    The identity is algebraic whenever every supplying employment cell has a
    positive demand potential; the sums here use exact (compensated)
    accumulation so the gap reflects the kernels, not the check itself.
    """
    surface = spacetime_access(cc, costs, spec, t)
    cost = _cost_for_hour(costs, t)
    al = align_counts(cc, cost)
    demand = al.workers[:, t]
    supply = window_supply(al.jobs, t)
    lhs = math.fsum(float(d) * float(a) for d, a in zip(demand, surface.values))
    rhs = math.fsum(float(s) for s in supply)
    if rhs == 0:
        return 0.0 if lhs == 0 else float("inf")
    return abs(lhs - rhs) / rhs


def write_surfaces(surfaces: Sequence[AccessibilitySurface], path: str) -> None:
    """Delimited export: cell_col,cell_row,hour,value (hour may be 'static')."""
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        writer.writerow(["cell_col", "cell_row", "hour", "value"])
        for surf in surfaces:
            for cell, v in zip(surf.cells, surf.values):
                writer.writerow([cell[0], cell[1], surf.hour_tag, repr(float(v))])
