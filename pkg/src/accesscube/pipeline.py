"""Pipeline configuration, validation, stages, and the end-to-end run.

Stages execute in the methodology's order: hourly discretization, dasymetric
redistribution, O-D cost matrix, friction calibration, the four accessibility
scenarios, then cube assembly. Every stage writes its artifact to the output
directory and can be re-run independently from the previous stage's files.
The run report is deterministic (no timestamps or absolute paths); wall-clock
timings go to a separate timings.json so that identical inputs always produce
byte-identical reports.
"""
from __future__ import annotations

import json
import logging
import math
import os
import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import __version__, access, calibration, dasymetric, geometry, network, temporal
from .cube import assemble_cube, percentile, read_cube, write_cube, write_slice_csv

log = logging.getLogger(__name__)

GRID_FILE = "grid.json"
ZONE_HOURLY_FILE = "zone_hourly.csv"
CELL_COUNTS_FILE = "cell_counts.csv"
DASYMETRIC_SUMMARY_FILE = "dasymetric_summary.json"
OD_MATRIX_FILE = "od_matrix.bin"
CALIBRATION_FILE = "calibration.json"
SURFACES_FILE = "surfaces.csv"
SCENARIO_REPORT_FILE = "scenario_report.json"
CUBE_FILE = "cube.stc"
REPORT_FILE = "report.json"
TIMINGS_FILE = "timings.json"

STAGE_ORDER = ("grid", "temporal", "dasymetric", "odmatrix", "calibrate", "access", "cube")


class ConfigError(ValueError):
    pass


class StageError(RuntimeError):
    """A pipeline stage failed; earlier artifacts are kept."""

    def __init__(self, stage: str, cause: Exception):
        self.stage = stage
        self.cause = cause
        super().__init__(f"stage {stage!r} failed: {cause}")


@dataclass
class RunConfig:
    """Declarative run description; file paths are resolved against `base_dir`."""

    zones: str
    parcels: str
    workers: str
    jobs: str
    network_nodes: str
    network_edges: str
    output_dir: str
    cell_size: float
    flows: str | None = None
    hourly_costs_pattern: str | None = None
    decay_family: str = calibration.POWER
    beta: float | str = "calibrate"
    distance_floor: float | None = None
    snap_tolerance: float | None = None
    directed: bool = False
    od_workers: int = 4
    transform: str = "log1p"
    export_slices: tuple[int, ...] = ()
    base_dir: str = "."

    def __post_init__(self) -> None:
        if self.cell_size <= 0:
            raise ConfigError(f"cell_size must be > 0, got {self.cell_size}")
        if isinstance(self.beta, str):
            if self.beta != "calibrate":
                raise ConfigError(f'beta must be a positive number or "calibrate", got {self.beta!r}')
        elif not self.beta > 0:
            raise ConfigError(f"beta must be > 0, got {self.beta}")
        if self.distance_floor is None:
            self.distance_floor = self.cell_size / 2.0
        if self.snap_tolerance is None:
            self.snap_tolerance = 2.0 * self.cell_size

    def path(self, name: str) -> str:
        return os.path.normpath(os.path.join(self.base_dir, name))

    def out(self, name: str) -> str:
        outdir = self.path(self.output_dir)
        os.makedirs(outdir, exist_ok=True)
        return os.path.join(outdir, name)

    @classmethod
    def from_file(cls, path: str, overrides: dict | None = None) -> "RunConfig":
        with open(path, encoding="utf-8") as f:
            raw = json.load(f)
        raw.setdefault("base_dir", os.path.dirname(os.path.abspath(path)))
        if overrides:
            raw.update({k: v for k, v in overrides.items() if v is not None})
        known = {f.name for f in cls.__dataclass_fields__.values()}  # type: ignore[attr-defined]
        unknown = set(raw) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        if "export_slices" in raw:
            raw["export_slices"] = tuple(raw["export_slices"])
        return cls(**raw)


@dataclass
class ValidationReport:
    errors: list[str] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.errors

    def to_dict(self) -> dict:
        return {"ok": self.ok, "errors": self.errors, "warnings": self.warnings}


def validate(cfg: RunConfig) -> ValidationReport:
    """Schema, CRS, and cross-file id checks; never raises, reports severity."""
    rep = ValidationReport()
    required = {
        "zones": cfg.zones, "parcels": cfg.parcels, "workers": cfg.workers,
        "jobs": cfg.jobs, "network_nodes": cfg.network_nodes, "network_edges": cfg.network_edges,
    }
    for key, rel in required.items():
        if not os.path.exists(cfg.path(rel)):
            rep.errors.append(f"{key} file not found: {cfg.path(rel)}")
    if cfg.beta == "calibrate":
        if cfg.flows is None:
            rep.errors.append('beta is "calibrate" but no flow file is configured')
        elif not os.path.exists(cfg.path(cfg.flows)):
            rep.errors.append(f"flow file not found: {cfg.path(cfg.flows)}")
    if cfg.hourly_costs_pattern is not None:
        for h in range(temporal.HOURS):
            p = cfg.path(cfg.hourly_costs_pattern.format(hour=h))
            if not os.path.exists(p):
                rep.errors.append(f"hourly cost matrix for hour {h} not found: {p}")
    if rep.errors:
        return rep

    try:
        zone_geoms = geometry.read_polygons_geojson(cfg.path(cfg.zones))
    except (geometry.GeometryError, json.JSONDecodeError, OSError) as exc:
        rep.errors.append(f"zones: {exc}")
        zone_geoms = []
    zone_ids = {zid for zid, _ in zone_geoms}

    try:
        parcel_geoms = geometry.read_polygons_geojson(cfg.path(cfg.parcels))
        props = geometry.read_feature_properties(cfg.path(cfg.parcels))
        classes = [props.get(pid, {}).get("land_use") for pid, _ in parcel_geoms]
        unknown = sorted({c for c in classes if c not in dasymetric.LAND_USE_CLASSES and c is not None})
        if unknown:
            rep.warnings.append(f"parcels with unknown land_use classes ignored: {unknown}")
        if dasymetric.RESIDENTIAL not in classes:
            rep.warnings.append("parcel layer has zero residential polygons; uniform fallback will apply")
        if dasymetric.EMPLOYMENT not in classes:
            rep.warnings.append("parcel layer has zero employment polygons; uniform fallback will apply")
    except (geometry.GeometryError, json.JSONDecodeError, OSError) as exc:
        rep.errors.append(f"parcels: {exc}")

    for key, rel in (("workers", cfg.workers), ("jobs", cfg.jobs)):
        try:
            table = temporal.hourly_by_zone(cfg.path(rel))
            missing = sorted(set(table) - zone_ids)
            for zid in missing:
                rep.errors.append(f"{key}: zone id {zid!r} has counts but no geometry")
            uncounted = sorted(zone_ids - set(table))
            if uncounted:
                rep.warnings.append(f"{key}: zones without counts treated as zero: {uncounted}")
        except temporal.TemporalError as exc:
            rep.errors.append(f"{key}: {exc}")

    try:
        network.load_network(cfg.path(cfg.network_nodes), cfg.path(cfg.network_edges), cfg.directed)
    except (network.NetworkError, OSError, ValueError) as exc:
        rep.errors.append(f"network: {exc}")

    if cfg.flows is not None and os.path.exists(cfg.path(cfg.flows)):
        try:
            flows = calibration.read_flows(cfg.path(cfg.flows))
            if zone_ids:
                bad = sorted({i for f in flows for i in (f.origin_id, f.destination_id)} - zone_ids)
                if bad:
                    rep.warnings.append(f"flows referencing unknown zone ids are excluded: {bad[:10]}")
        except calibration.CalibrationError as exc:
            rep.errors.append(f"flows: {exc}")
    return rep


def _load_zones(cfg: RunConfig) -> list[dasymetric.CountZone]:
    geoms = geometry.read_polygons_geojson(cfg.path(cfg.zones))
    workers = temporal.hourly_by_zone(cfg.path(cfg.workers))
    jobs = temporal.hourly_by_zone(cfg.path(cfg.jobs))
    zero = np.zeros(temporal.HOURS)
    return [
        dasymetric.CountZone(id=zid, geometry=g, workers=workers.get(zid, zero), jobs=jobs.get(zid, zero))
        for zid, g in geoms
    ]


def _load_parcels(cfg: RunConfig) -> list[dasymetric.AuxiliaryZone]:
    geoms = geometry.read_polygons_geojson(cfg.path(cfg.parcels))
    props = geometry.read_feature_properties(cfg.path(cfg.parcels))
    out = []
    for pid, g in geoms:
        cls = props.get(pid, {}).get("land_use")
        if cls in dasymetric.LAND_USE_CLASSES:
            out.append(dasymetric.AuxiliaryZone(id=pid, geometry=g, land_use=cls))
    return out


def stage_grid(cfg: RunConfig) -> geometry.Grid:
    zones = geometry.read_polygons_geojson(cfg.path(cfg.zones))
    bounds = np.array([g.bounds for _, g in zones])
    extent = (bounds[:, 0].min(), bounds[:, 1].min(), bounds[:, 2].max(), bounds[:, 3].max())
    grid = geometry.tessellate_grid(extent, cfg.cell_size)
    geometry.write_grid(grid, cfg.out(GRID_FILE))
    return grid


def stage_temporal(cfg: RunConfig) -> dict[str, dict[str, np.ndarray]]:
    tables = {
        "workers": temporal.hourly_by_zone(cfg.path(cfg.workers)),
        "jobs": temporal.hourly_by_zone(cfg.path(cfg.jobs)),
    }
    import csv as _csv

    with open(cfg.out(ZONE_HOURLY_FILE), "w", newline="", encoding="utf-8") as f:
        writer = _csv.writer(f)
        writer.writerow(["zone_id", "kind", "hour", "count"])
        for kind in ("workers", "jobs"):
            for zid in sorted(tables[kind]):
                for h, v in enumerate(tables[kind][zid]):
                    writer.writerow([zid, kind, h, repr(float(v))])
    return tables


def stage_dasymetric(cfg: RunConfig) -> dasymetric.CellCounts:
    grid = geometry.read_grid(cfg.out(GRID_FILE))
    zones = _load_zones(cfg)
    parcels = _load_parcels(cfg)
    cc_workers = dasymetric.interpolate(zones, parcels, grid, dasymetric.RESIDENTIAL)
    cc_jobs = dasymetric.interpolate(zones, parcels, grid, dasymetric.EMPLOYMENT)
    cc = dasymetric.combine(cc_workers, cc_jobs)
    dasymetric.write_cell_counts(cc, cfg.out(CELL_COUNTS_FILE))
    dasymetric.write_summary(cc, zones, cfg.out(DASYMETRIC_SUMMARY_FILE))
    return cc


def stage_odmatrix(cfg: RunConfig) -> network.CostMatrix:
    grid = geometry.read_grid(cfg.out(GRID_FILE))
    cc = dasymetric.read_cell_counts(cfg.out(CELL_COUNTS_FILE), grid)
    graph = network.load_network(cfg.path(cfg.network_nodes), cfg.path(cfg.network_edges), cfg.directed)
    matrix = network.od_matrix(
        graph,
        origin_cells=list(cc.active_residential),
        destination_cells=list(cc.active_employment),
        grid=grid,
        tolerance=cfg.snap_tolerance,
        workers=cfg.od_workers,
    )
    matrix.write(cfg.out(OD_MATRIX_FILE))
    return matrix


def stage_calibrate(cfg: RunConfig) -> dict:
    if cfg.beta != "calibrate":
        result = {"beta": float(cfg.beta), "source": "config"}
    else:
        zones = _load_zones(cfg)
        flows = calibration.read_flows(cfg.path(cfg.flows))
        demand = {z.id: temporal.daily_total(z.workers) for z in zones}
        supply = {z.id: temporal.daily_total(z.jobs) for z in zones}
        graph = network.load_network(cfg.path(cfg.network_nodes), cfg.path(cfg.network_edges), cfg.directed)
        snapped = {}
        for z in zones:
            c = z.geometry.centroid
            snapped[z.id] = network.snap_to_node(graph, (c.x, c.y), tolerance=4 * cfg.cell_size)
        trees = {n: network.shortest_path_tree(graph, n) for n in sorted(set(snapped.values()))}
        distances = {
            (a.id, b.id): float(trees[snapped[a.id]][graph.node_index(snapped[b.id])])
            for a in zones
            for b in zones
            if a.id != b.id
        }
        fit = calibration.fit_friction(flows, demand, supply, distances, floor=cfg.distance_floor)
        result = {**fit.to_dict(), "source": "fitted"}
        if not result["beta"] > 0:
            raise calibration.CalibrationError(
                f"calibrated beta {result['beta']} is not a decay; check flow data"
            )
    with open(cfg.out(CALIBRATION_FILE), "w", encoding="utf-8") as f:
        json.dump(result, f, sort_keys=True, indent=2)
        f.write("\n")
    return result


def _decay_spec(cfg: RunConfig) -> calibration.DecaySpec:
    with open(cfg.out(CALIBRATION_FILE), encoding="utf-8") as f:
        beta = float(json.load(f)["beta"])
    return calibration.DecaySpec(family=cfg.decay_family, beta=beta, floor=float(cfg.distance_floor))


def _load_costs(cfg: RunConfig) -> network.CostMatrix | list[network.CostMatrix]:
    if cfg.hourly_costs_pattern is not None:
        return network.load_time_varying_costs(cfg.path(cfg.hourly_costs_pattern))
    return network.CostMatrix.read(cfg.out(OD_MATRIX_FILE))


def stage_access(cfg: RunConfig) -> access.ScenarioReport:
    grid = geometry.read_grid(cfg.out(GRID_FILE))
    cc = dasymetric.read_cell_counts(cfg.out(CELL_COUNTS_FILE), grid)
    costs = _load_costs(cfg)
    spec = _decay_spec(cfg)
    report = access.run_scenarios(cc, costs, spec)

    # Conservation diagnostic straight from the already-computed hourly
    # surfaces: sum_i D_i,t * A_i,t must equal the windowed supply.
    static_cost = costs if isinstance(costs, network.CostMatrix) else costs[0]
    al = access.align_counts(cc, static_cost)
    gaps = []
    for t, surf in enumerate(report.full_dynamic):
        lhs = math.fsum(float(d) * float(a) for d, a in zip(al.workers[:, t], surf.values))
        rhs = math.fsum(float(s) for s in access.window_supply(al.jobs, t))
        gaps.append(abs(lhs - rhs) / rhs if rhs > 0 else 0.0)
    report.diagnostics["conservation_max_gap"] = max(gaps) if gaps else 0.0

    access.write_surfaces([report.static_surface] + report.full_dynamic, cfg.out(SURFACES_FILE))
    with open(cfg.out(SCENARIO_REPORT_FILE), "w", encoding="utf-8") as f:
        json.dump(report.to_dict(), f, sort_keys=True, indent=2)
        f.write("\n")
    return report


def _read_surfaces(path: str, grid: geometry.Grid) -> list[access.AccessibilitySurface]:
    import csv as _csv

    rows: dict[str, list[tuple[tuple[int, int], float]]] = {}
    with open(path, newline="", encoding="utf-8") as f:
        for row in _csv.DictReader(f):
            rows.setdefault(row["hour"], []).append(
                ((int(row["cell_col"]), int(row["cell_row"])), float(row["value"]))
            )
    out = []
    for tag, pairs in rows.items():
        hour = None if tag == access.STATIC else int(tag)
        out.append(
            access.AccessibilitySurface(
                grid=grid,
                hour=hour,
                cells=tuple(c for c, _ in pairs),
                values=np.asarray([v for _, v in pairs]),
            )
        )
    return out


def stage_cube(cfg: RunConfig):
    grid = geometry.read_grid(cfg.out(GRID_FILE))
    surfaces = [s for s in _read_surfaces(cfg.out(SURFACES_FILE), grid) if s.hour is not None]
    cube = assemble_cube(surfaces, grid)
    cube.transform = cfg.transform
    write_cube(cube, cfg.out(CUBE_FILE))
    for h in cfg.export_slices:
        write_slice_csv(cube, h, cfg.out(f"slice_{h:02d}.csv"))
    return cube


def run_pipeline(cfg: RunConfig) -> dict:
    """Run every stage in order and write the run report.

    The first failing stage aborts with its name and cause; artifacts from
    completed stages are kept.
    """
    rep = validate(cfg)
    if not rep.ok:
        raise ConfigError("validation failed: " + "; ".join(rep.errors))
    os.makedirs(cfg.path(cfg.output_dir), exist_ok=True)

    stages: dict[str, Callable] = {
        "grid": stage_grid,
        "temporal": stage_temporal,
        "dasymetric": stage_dasymetric,
        "odmatrix": stage_odmatrix,
        "calibrate": stage_calibrate,
        "access": stage_access,
        "cube": stage_cube,
    }
    timings: dict[str, float] = {}
    results: dict[str, object] = {}
    for name in STAGE_ORDER:
        start = time.perf_counter()
        try:
            results[name] = stages[name](cfg)
        except Exception as exc:
            raise StageError(name, exc) from exc
        timings[name] = time.perf_counter() - start
        log.info("stage %s done in %.2fs", name, timings[name])

    report = _build_report(cfg, results)
    with open(cfg.out(REPORT_FILE), "w", encoding="utf-8") as f:
        json.dump(report, f, sort_keys=True, indent=2)
        f.write("\n")
    with open(cfg.out(TIMINGS_FILE), "w", encoding="utf-8") as f:
        json.dump({"seconds_per_stage": timings, "total_seconds": sum(timings.values())}, f, indent=2)
        f.write("\n")
    return report


def _read_json(path: str) -> dict:
    with open(path, encoding="utf-8") as f:
        return json.load(f)


def _build_report(cfg: RunConfig, results: dict) -> dict:
    grid: geometry.Grid = results["grid"]
    cc: dasymetric.CellCounts = results["dasymetric"]
    scen: access.ScenarioReport = results["access"]
    cube = results["cube"]
    matrix: network.CostMatrix = results["odmatrix"]
    valid_voxels = int(np.count_nonzero(np.isfinite(cube.values)))
    return {
        "engine_version": __version__,
        "grid": grid.to_dict(),
        "cells": {
            "active_residential": len(cc.active_residential),
            "active_employment": len(cc.active_employment),
        },
        "od_matrix": {
            "origins": len(matrix.origin_ids),
            "destinations": len(matrix.destination_ids),
            "unit": matrix.unit,
            "unreachable_pairs": int(np.count_nonzero(~np.isfinite(matrix.values))),
        },
        "calibration": results["calibrate"],
        "scenarios": scen.to_dict(),
        "cube": {
            "file": CUBE_FILE,
            "voxels": int(cube.values.size),
            "valid_voxels": valid_voxels,
            "percentile_95": percentile(cube, 95.0),
            "transform": cube.transform,
        },
        "dasymetric": _read_json(cfg.out(DASYMETRIC_SUMMARY_FILE)),
        "artifacts": {
            "grid": GRID_FILE,
            "zone_hourly": ZONE_HOURLY_FILE,
            "cell_counts": CELL_COUNTS_FILE,
            "od_matrix": OD_MATRIX_FILE,
            "calibration": CALIBRATION_FILE,
            "surfaces": SURFACES_FILE,
            "scenario_report": SCENARIO_REPORT_FILE,
            "cube": CUBE_FILE,
        },
    }
