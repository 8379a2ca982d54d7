"""Road graph ingestion and many-to-many shortest-path cost matrices.

Distances come from repeated single-source shortest-path trees (binary-heap
Dijkstra via scipy's csgraph backend), one tree per distinct origin node,
gathered into a dense origins x destinations matrix. Unreachable pairs carry
NaN, never a fake large number. Externally supplied per-hour travel-time
matrices are ingested through the same CostMatrix container.
"""
from __future__ import annotations

import csv
import json
import logging
import struct
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components, dijkstra
from scipy.spatial import cKDTree

from .geometry import Grid, cell_centroid
from .temporal import HOURS

log = logging.getLogger(__name__)

Cell = tuple[int, int]

LENGTH_WEIGHT = "length"


class NetworkError(ValueError):
    pass


class SnapError(NetworkError):
    """No node within tolerance of one or more cell centroids."""

    def __init__(self, failures: list[Cell], tolerance: float):
        self.failures = failures
        self.tolerance = tolerance
        if failures:
            listing = ", ".join(f"({c},{r})" for c, r in failures[:20])
            more = "" if len(failures) <= 20 else f" and {len(failures) - 20} more"
            super().__init__(f"no node within {tolerance} m of cells: {listing}{more}")
        else:
            super().__init__(f"no node within {tolerance} m of the probe point")


def cell_id(cell: Cell) -> str:
    return f"{cell[0]},{cell[1]}"


def parse_cell_id(s: str) -> Cell:
    col, row = s.split(",")
    return (int(col), int(row))


@dataclass
class RoadGraph:
    """Immutable road graph: integer node ids, positive edge lengths in meters.

    Optional per-hour traversal times (seconds) allow hour-indexed weights.
    """

    node_ids: np.ndarray          # (n,) int64, as given in the node file
    xy: np.ndarray                # (n, 2) float64 planar meters
    edges: np.ndarray             # (m, 2) int64 indices into node arrays
    lengths: np.ndarray           # (m,) float64 meters
    directed: bool
    hourly_seconds: np.ndarray | None = None   # (m, 24) float64 or None
    component_sizes: tuple[int, ...] = ()
    _id_to_index: dict[int, int] = field(default_factory=dict, repr=False)
    _kdtree: cKDTree | None = field(default=None, repr=False)

    def __post_init__(self) -> None:
        if len(self.node_ids) == 0:
            raise NetworkError("graph has no nodes")
        if np.any(self.lengths <= 0):
            bad = int(np.argmax(self.lengths <= 0))
            raise NetworkError(f"edge #{bad} has non-positive length {self.lengths[bad]}")
        if self.hourly_seconds is not None:
            if self.hourly_seconds.shape != (len(self.edges), HOURS):
                raise NetworkError(
                    f"per-hour times must be shaped (edges, {HOURS}), got {self.hourly_seconds.shape}"
                )
            if np.any(self.hourly_seconds <= 0):
                raise NetworkError("per-hour traversal times must all be > 0")
        self._id_to_index = {int(nid): i for i, nid in enumerate(self.node_ids)}
        self._kdtree = cKDTree(self.xy)
        if not self.component_sizes:
            n = len(self.node_ids)
            adj = csr_matrix(
                (np.ones(len(self.edges)), (self.edges[:, 0], self.edges[:, 1])), shape=(n, n)
            )
            ncomp, labels = connected_components(adj, directed=self.directed, connection="weak")
            sizes = np.bincount(labels, minlength=ncomp)
            self.component_sizes = tuple(sorted((int(s) for s in sizes), reverse=True))
            if ncomp > 1:
                log.warning("road graph has %d connected components, sizes %s", ncomp, self.component_sizes)

    @property
    def n_nodes(self) -> int:
        return len(self.node_ids)

    def node_index(self, node_id: int) -> int:
        try:
            return self._id_to_index[int(node_id)]
        except KeyError:
            raise NetworkError(f"unknown node id {node_id}") from None

    def weights(self, weight: str | int) -> np.ndarray:
        """Edge weight vector for 'length' or an hour index 0..23."""
        if weight == LENGTH_WEIGHT:
            return self.lengths
        hour = int(weight)
        if not (0 <= hour < HOURS):
            raise NetworkError(f"hour weight {weight!r} out of range 0..{HOURS - 1}")
        if self.hourly_seconds is None:
            raise NetworkError("graph carries no per-hour traversal times")
        return self.hourly_seconds[:, hour]

    def adjacency(self, weight: str | int = LENGTH_WEIGHT) -> csr_matrix:
        w = self.weights(weight)
        n = self.n_nodes
        if self.directed:
            rows, cols = self.edges[:, 0], self.edges[:, 1]
        else:
            rows = np.concatenate([self.edges[:, 0], self.edges[:, 1]])
            cols = np.concatenate([self.edges[:, 1], self.edges[:, 0]])
            w = np.concatenate([w, w])
        # parallel edges: keep the cheapest, never sum (csr construction sums
        # duplicate coordinates by default)
        key = rows * n + cols
        order = np.lexsort((w, key))
        first = np.ones(len(order), dtype=bool)
        first[1:] = key[order][1:] != key[order][:-1]
        sel = order[first]
        return csr_matrix((w[sel], (rows[sel], cols[sel])), shape=(n, n))


def load_network(
    node_file: str,
    edge_file: str,
    directed: bool = False,
) -> RoadGraph:
    """Load a graph from id,x,y nodes and from,to,length_m[,t00..t23] edges."""
    node_ids: list[int] = []
    coords: list[tuple[float, float]] = []
    with open(node_file, newline="", encoding="utf-8") as f:
        reader = csv.DictReader(f)
        if reader.fieldnames is None or not {"id", "x", "y"}.issubset(reader.fieldnames):
            raise NetworkError(f"{node_file}: expected columns id,x,y")
        for row in reader:
            node_ids.append(int(row["id"]))
            coords.append((float(row["x"]), float(row["y"])))
    id_to_index = {nid: i for i, nid in enumerate(node_ids)}
    if len(id_to_index) != len(node_ids):
        raise NetworkError(f"{node_file}: duplicate node ids")

    edges: list[tuple[int, int]] = []
    lengths: list[float] = []
    hourly: list[list[float]] = []
    hour_cols = [f"t{h:02d}" for h in range(HOURS)]
    with open(edge_file, newline="", encoding="utf-8") as f:
        reader = csv.DictReader(f)
        if reader.fieldnames is None or not {"from", "to", "length_m"}.issubset(reader.fieldnames):
            raise NetworkError(f"{edge_file}: expected columns from,to,length_m")
        has_hours = set(hour_cols).issubset(reader.fieldnames)
        for lineno, row in enumerate(reader, start=2):
            u, v = int(row["from"]), int(row["to"])
            for endpoint in (u, v):
                if endpoint not in id_to_index:
                    raise NetworkError(
                        f"{edge_file}:{lineno}: edge {u}->{v} references missing node {endpoint}"
                    )
            length = float(row["length_m"])
            if length <= 0:
                raise NetworkError(f"{edge_file}:{lineno}: edge {u}->{v} has non-positive length {length}")
            edges.append((id_to_index[u], id_to_index[v]))
            lengths.append(length)
            if has_hours:
                hourly.append([float(row[c]) for c in hour_cols])
    if not edges:
        raise NetworkError(f"{edge_file}: no edges")
    graph = RoadGraph(
        node_ids=np.asarray(node_ids, dtype=np.int64),
        xy=np.asarray(coords, dtype=float),
        edges=np.asarray(edges, dtype=np.int64),
        lengths=np.asarray(lengths, dtype=float),
        directed=directed,
        hourly_seconds=np.asarray(hourly, dtype=float) if hourly else None,
    )
    log.info(
        "loaded network: %d nodes, %d edges, components %s",
        graph.n_nodes, len(edges), graph.component_sizes,
    )
    return graph


def snap_to_node(graph: RoadGraph, p: tuple[float, float], tolerance: float) -> int:
    """Nearest node id within tolerance; ties broken by smallest node id."""
    if tolerance <= 0:
        raise NetworkError(f"snap tolerance must be > 0, got {tolerance}")
    k = min(8, graph.n_nodes)
    dists, idx = graph._kdtree.query(p, k=k)
    dists = np.atleast_1d(dists)
    idx = np.atleast_1d(idx)
    if dists[0] > tolerance:
        raise SnapError([], tolerance)  # callers with cell context re-raise with ids
    tied = idx[np.abs(dists - dists[0]) <= 1e-9 * max(dists[0], 1.0)]
    return int(min(graph.node_ids[i] for i in tied))


def shortest_path_tree(graph: RoadGraph, origin: int, weight: str | int = LENGTH_WEIGHT) -> np.ndarray:
    """Distances from `origin` to every node; NaN where unreachable."""
    adj = graph.adjacency(weight)
    dist = dijkstra(adj, directed=True, indices=graph.node_index(origin))
    dist = np.asarray(dist, dtype=float)
    dist[np.isinf(dist)] = np.nan
    return dist


@dataclass
class CostMatrix:
    """Dense origins x destinations impedance table.

    Finite entries are >= 0; unreachable pairs are NaN. `hour` is None for a
    static matrix, 0..23 for one slice of a time-varying set.
    """

    origin_ids: list[str]
    destination_ids: list[str]
    values: np.ndarray          # (n_origins, n_destinations) float64
    unit: str = "meters"
    hour: int | None = None

    def __post_init__(self) -> None:
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (len(self.origin_ids), len(self.destination_ids)):
            raise NetworkError(
                f"matrix shape {self.values.shape} does not match "
                f"{len(self.origin_ids)} origins x {len(self.destination_ids)} destinations"
            )
        finite = self.values[np.isfinite(self.values)]
        if finite.size and np.any(finite < 0):
            raise NetworkError("cost matrix has negative entries")

    def origin_index(self) -> dict[str, int]:
        return {oid: i for i, oid in enumerate(self.origin_ids)}

    def destination_index(self) -> dict[str, int]:
        return {did: j for j, did in enumerate(self.destination_ids)}

    def write(self, path: str) -> None:
        """Persist as one JSON header line + row-major little-endian f32 payload."""
        header = {
            "origin_ids": self.origin_ids,
            "destination_ids": self.destination_ids,
            "unit": self.unit,
        }
        if self.hour is not None:
            header["hour"] = self.hour
        blob = json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8")
        with open(path, "wb") as f:
            f.write(struct.pack("<I", len(blob)))
            f.write(blob)
            f.write(np.ascontiguousarray(self.values, dtype="<f4").tobytes())

    @classmethod
    def read(cls, path: str) -> "CostMatrix":
        with open(path, "rb") as f:
            raw = f.read()
        if len(raw) < 4:
            raise NetworkError(f"{path}: truncated header")
        (hlen,) = struct.unpack_from("<I", raw, 0)
        header = json.loads(raw[4:4 + hlen].decode("utf-8"))
        no, nd = len(header["origin_ids"]), len(header["destination_ids"])
        payload = raw[4 + hlen:]
        expected = no * nd * 4
        if len(payload) != expected:
            raise NetworkError(f"{path}: payload is {len(payload)} bytes, expected {expected}")
        values = np.frombuffer(payload, dtype="<f4").astype(float).reshape(no, nd)
        return cls(
            origin_ids=list(header["origin_ids"]),
            destination_ids=list(header["destination_ids"]),
            values=values,
            unit=header.get("unit", "meters"),
            hour=header.get("hour"),
        )


def _snap_cells(graph: RoadGraph, cells: Sequence[Cell], grid: Grid, tolerance: float) -> np.ndarray:
    """Snap cell centroids to node indices; collect all failures before raising."""
    out = np.empty(len(cells), dtype=np.int64)
    failures: list[Cell] = []
    for i, cell in enumerate(cells):
        p = cell_centroid(grid, *cell)
        try:
            out[i] = graph.node_index(snap_to_node(graph, p, tolerance))
        except SnapError:
            failures.append(cell)
    if failures:
        raise SnapError(failures, tolerance)
    return out


def od_matrix(
    graph: RoadGraph,
    origin_cells: Sequence[Cell],
    destination_cells: Sequence[Cell],
    grid: Grid,
    tolerance: float | None = None,
    weight: str | int = LENGTH_WEIGHT,
    workers: int = 1,
) -> CostMatrix:
    """Many-to-many shortest-path matrix between cell centroids.

    One shortest-path tree per distinct snapped origin node, computed in
    parallel chunks over origins; rows are gathered into disjoint slots so the
    result is identical for any worker count. Intrazonal pairs (same cell) and
    zero-length pairs are floored at cell_size/2, approximating the mean
    intra-cell trip; the power decay is singular at zero distance.
    """
    if tolerance is None:
        tolerance = 2.0 * grid.cell_size
    origin_nodes = _snap_cells(graph, origin_cells, grid, tolerance)
    dest_nodes = _snap_cells(graph, destination_cells, grid, tolerance)

    adj = graph.adjacency(weight)
    distinct = np.unique(origin_nodes)
    tree_rows = np.empty((len(distinct), graph.n_nodes), dtype=float)

    def run_chunk(lo: int, hi: int) -> None:
        tree_rows[lo:hi] = dijkstra(adj, directed=True, indices=distinct[lo:hi])

    workers = max(1, int(workers))
    if workers == 1 or len(distinct) < 2:
        run_chunk(0, len(distinct))
    else:
        bounds = np.linspace(0, len(distinct), workers + 1).astype(int)
        with ThreadPoolExecutor(max_workers=workers) as pool:
            futures = [
                pool.submit(run_chunk, int(lo), int(hi))
                for lo, hi in zip(bounds[:-1], bounds[1:])
                if hi > lo
            ]
            for fut in futures:
                fut.result()

    node_to_row = {int(n): i for i, n in enumerate(distinct)}
    origin_rows = np.asarray([node_to_row[int(n)] for n in origin_nodes])
    values = tree_rows[np.ix_(origin_rows, dest_nodes)]
    values[np.isinf(values)] = np.nan

    floor = grid.cell_size / 2.0
    okeys = np.asarray([c << 32 | r for c, r in origin_cells], dtype=np.int64)
    dkeys = np.asarray([c << 32 | r for c, r in destination_cells], dtype=np.int64)
    needs_floor = (okeys[:, None] == dkeys[None, :]) | (values == 0.0)
    values[needs_floor] = floor

    return CostMatrix(
        origin_ids=[cell_id(c) for c in origin_cells],
        destination_ids=[cell_id(c) for c in destination_cells],
        values=values,
        unit="seconds" if weight != LENGTH_WEIGHT else "meters",
        hour=None if weight == LENGTH_WEIGHT else int(weight),
    )


def load_time_varying_costs(path_pattern: str, hours: Sequence[int] = range(HOURS)) -> list[CostMatrix]:
    """Load one CostMatrix per hour from `path_pattern.format(hour=h)` files.

    All files must share identical origin and destination id lists, in the
    same order; hour tags are taken from the file position in the sequence.
    """
    matrices: list[CostMatrix] = []
    for h in hours:
        path = path_pattern.format(hour=h)
        try:
            m = CostMatrix.read(path)
        except FileNotFoundError:
            raise NetworkError(f"missing cost matrix for hour {h}: {path}") from None
        if matrices:
            first = matrices[0]
            if m.origin_ids != first.origin_ids or m.destination_ids != first.destination_ids:
                raise NetworkError(
                    f"hour {h} matrix {path} has mismatched origin/destination id order"
                )
            if m.values.shape != first.values.shape:
                raise NetworkError(f"hour {h} matrix {path} has mismatched shape")
        m.hour = h
        matrices.append(m)
    return matrices
