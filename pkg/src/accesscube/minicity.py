"""Deterministic synthetic mini-city fixture:  a 10 km x 10 km region with 12
count zones, ~40 land-use parcels, a ~200-node road grid, CTPP-style interval
count tables, and commuting flows generated from an exact power-decay gravity
relation (so calibration has a known answer).

Everything is seeded; regenerating with the same seed reproduces every file
byte for byte.
"""
from __future__ import annotations

import csv
import json
import math
import os
from dataclasses import dataclass

import numpy as np

from .network import RoadGraph, shortest_path_tree, snap_to_node

EXTENT = (0.0, 0.0, 10_000.0, 10_000.0)
CELL_SIZE = 500.0
TRUE_BETA = 0.7

# 4 x 3 zone tiling: column width 2500, row heights sum to 10 km.
_COL_EDGES = (0.0, 2500.0, 5000.0, 7500.0, 10_000.0)
_ROW_EDGES = (0.0, 3000.0, 6500.0, 10_000.0)

# CTPP-style interval grid: one 5-hour block, 15-minute bins 5:00-11:00,
# hourly bins 11:00-24:00.
_INTERVALS = [(0, 300)]
_INTERVALS += [(m, m + 15) for m in range(300, 660, 15)]
_INTERVALS += [(m, m + 60) for m in range(660, 1440, 60)]


@dataclass(frozen=True)
class MiniCity:
    root: str

    @property
    def zones(self) -> str:
        return os.path.join(self.root, "zones.geojson")

    @property
    def parcels(self) -> str:
        return os.path.join(self.root, "parcels.geojson")

    @property
    def workers(self) -> str:
        return os.path.join(self.root, "workers.csv")

    @property
    def jobs(self) -> str:
        return os.path.join(self.root, "jobs.csv")

    @property
    def nodes(self) -> str:
        return os.path.join(self.root, "nodes.csv")

    @property
    def edges(self) -> str:
        return os.path.join(self.root, "edges.csv")

    @property
    def flows(self) -> str:
        return os.path.join(self.root, "flows.csv")

    @property
    def config(self) -> str:
        return os.path.join(self.root, "config.json")


def _zone_boxes() -> list[tuple[str, tuple[float, float, float, float]]]:
    out = []
    k = 1
    for r in range(3):
        for c in range(4):
            out.append(
                (
                    f"Z{k:02d}",
                    (_COL_EDGES[c], _ROW_EDGES[r], _COL_EDGES[c + 1], _ROW_EDGES[r + 1]),
                )
            )
            k += 1
    return out


def _box_feature(fid: str, bounds: tuple[float, float, float, float], props: dict) -> dict:
    x0, y0, x1, y1 = bounds
    ring = [[x0, y0], [x1, y0], [x1, y1], [x0, y1], [x0, y0]]
    return {
        "type": "Feature",
        "id": fid,
        "properties": {"id": fid, **props},
        "geometry": {"type": "Polygon", "coordinates": [ring]},
    }


def _interval_counts(rng: np.random.Generator, peak_minute: float) -> list[float]:
    """Counts per interval with a broad daily peak; strictly positive so every
    hour carries some demand/supply region-wide."""
    counts = []
    for start, end in _INTERVALS:
        mid = (start + end) / 2.0
        shape = math.exp(-((mid - peak_minute) ** 2) / (2 * 180.0**2))
        base = float(rng.integers(3, 12))
        counts.append(round(base + 60.0 * shape * float(rng.uniform(0.6, 1.4)), 3))
    return counts


def _write_count_table(path: str, rows: list[tuple[str, int, int, float]]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        writer.writerow(["zone_id", "start_minute", "end_minute", "count"])
        writer.writerows(rows)


def generate(root: str, seed: int = 42) -> MiniCity:
    """Write the full fixture into `root` and return its path bundle."""
    os.makedirs(root, exist_ok=True)
    rng = np.random.default_rng(seed)
    mc = MiniCity(root=root)
    zones = _zone_boxes()

    # --- zones ---
    features = [_box_feature(zid, bounds, {}) for zid, bounds in zones]
    with open(mc.zones, "w", encoding="utf-8") as f:
        json.dump({"type": "FeatureCollection", "features": features}, f, indent=1)
        f.write("\n")

    # --- parcels: residential and employment rectangles per zone. Z11 has no
    # residential parcels (and its neighbors keep theirs interior), so the
    # uniform-fallback path fires for its workers. Parcels of Z01 and Z06
    # deliberately straddle zone boundaries.
    parcel_features = []
    pid = 1
    straddlers = {"Z01", "Z06"}
    for zid, (x0, y0, x1, y1) in zones:
        for kind, n in (("residential", 2), ("employment", 2)):
            if zid == "Z11" and kind == "residential":
                continue
            for _ in range(n):
                w = float(rng.uniform(300, 900))
                h = float(rng.uniform(300, 900))
                if zid in straddlers:
                    px = float(rng.uniform(x0 + 100, x1 - 100 - w * 0.5))
                    py = float(rng.uniform(y0 + 100, y1 - 100 - h * 0.5))
                else:
                    px = float(rng.uniform(x0 + 100, x1 - 100 - w))
                    py = float(rng.uniform(y0 + 100, y1 - 100 - h))
                parcel_features.append(
                    _box_feature(
                        f"P{pid:03d}", (px, py, min(px + w, 9_990.0), min(py + h, 9_990.0)),
                        {"land_use": kind},
                    )
                )
                pid += 1
    with open(mc.parcels, "w", encoding="utf-8") as f:
        json.dump({"type": "FeatureCollection", "features": parcel_features}, f, indent=1)
        f.write("\n")

    # --- interval count tables ---
    worker_rows: list[tuple[str, int, int, float]] = []
    job_rows: list[tuple[str, int, int, float]] = []
    for zid, _ in zones:
        wk = _interval_counts(rng, peak_minute=float(rng.uniform(400, 500)))   # ~7 am leave-home peak
        jb = _interval_counts(rng, peak_minute=float(rng.uniform(460, 560)))   # arrivals lag departures
        worker_rows += [(zid, s, e, c) for (s, e), c in zip(_INTERVALS, wk)]
        job_rows += [(zid, s, e, c) for (s, e), c in zip(_INTERVALS, jb)]
    _write_count_table(mc.workers, worker_rows)
    _write_count_table(mc.jobs, job_rows)

    # --- road network: jittered 14x14 lattice, 4-neighbor edges ---
    side = 14
    spacing = 10_000.0 / (side - 1)
    node_xy = {}
    with open(mc.nodes, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        writer.writerow(["id", "x", "y"])
        for r in range(side):
            for c in range(side):
                nid = r * side + c + 1
                x = min(max(c * spacing + float(rng.uniform(-150, 150)), 50.0), 9_950.0)
                y = min(max(r * spacing + float(rng.uniform(-150, 150)), 50.0), 9_950.0)
                node_xy[nid] = (round(x, 2), round(y, 2))
                writer.writerow([nid, node_xy[nid][0], node_xy[nid][1]])
    edge_rows = []
    for r in range(side):
        for c in range(side):
            u = r * side + c + 1
            for v in ((r, c + 1), (r + 1, c)):
                if v[0] < side and v[1] < side:
                    w = v[0] * side + v[1] + 1
                    ux, uy = node_xy[u]
                    wx, wy = node_xy[w]
                    euclid = math.hypot(wx - ux, wy - uy)
                    length = round(euclid * float(rng.uniform(1.0, 1.3)), 2)
                    edge_rows.append((u, w, length))
    with open(mc.edges, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        writer.writerow(["from", "to", "length_m"])
        writer.writerows(edge_rows)

    # --- flows: exact gravity relation on zone-centroid network distances ---
    graph = RoadGraph(
        node_ids=np.asarray(sorted(node_xy), dtype=np.int64),
        xy=np.asarray([node_xy[n] for n in sorted(node_xy)], dtype=float),
        edges=np.asarray([(u - 1, v - 1) for u, v, _ in edge_rows], dtype=np.int64),
        lengths=np.asarray([l for _, _, l in edge_rows], dtype=float),
        directed=False,
    )
    daily_workers = {}
    daily_jobs = {}
    for zid, _ in zones:
        daily_workers[zid] = sum(c for z, _, _, c in worker_rows if z == zid)
        daily_jobs[zid] = sum(c for z, _, _, c in job_rows if z == zid)
    centroids = {
        zid: ((x0 + x1) / 2.0, (y0 + y1) / 2.0) for zid, (x0, y0, x1, y1) in zones
    }
    snapped = {zid: snap_to_node(graph, p, tolerance=2_000.0) for zid, p in centroids.items()}
    trees = {nid: shortest_path_tree(graph, nid) for nid in sorted(set(snapped.values()))}
    with open(mc.flows, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        writer.writerow(["origin_id", "destination_id", "commuters"])
        for oid, _ in zones:
            for did, _ in zones:
                if oid == did:
                    continue
                d = float(trees[snapped[oid]][graph.node_index(snapped[did])])
                c = daily_workers[oid] * daily_jobs[did] * d ** (-TRUE_BETA)
                writer.writerow([oid, did, repr(c)])

    # --- run configuration ---
    config = {
        "zones": "zones.geojson",
        "parcels": "parcels.geojson",
        "workers": "workers.csv",
        "jobs": "jobs.csv",
        "network_nodes": "nodes.csv",
        "network_edges": "edges.csv",
        "flows": "flows.csv",
        "cell_size": CELL_SIZE,
        "decay_family": "power",
        "beta": "calibrate",
        "distance_floor": CELL_SIZE / 2.0,
        "snap_tolerance": 2.0 * CELL_SIZE,
        "directed": False,
        "output_dir": "out",
    }
    with open(mc.config, "w", encoding="utf-8") as f:
        json.dump(config, f, sort_keys=True, indent=2)
        f.write("\n")
    return mc
