"""Space-time cube assembly, sampling, percentiles, isosurfaces, and file IO.

The cube is an (x, y, t) voxel lattice of accessibility values; inactive
voxels carry NaN. Values are held in float64 in memory and quantized to
little-endian float32 in the file payload, x-fastest then y then t, so the
format is trivially parseable (and memory-mappable) from any language.
"""
from __future__ import annotations

import csv
import json
import math
import struct
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .access import AccessibilitySurface
from .geometry import Grid
from .mc_tables import CASE_EDGES, CASE_TRIANGLES, EDGE_VERTICES, VERTEX_OFFSETS
from .temporal import HOURS

MAGIC = b"STCUBE01"


class CubeError(ValueError):
    pass


@dataclass
class SpaceTimeCube:
    """Voxel lattice shaped (nt, ny, nx); layer t is hour `hour0 + t`.

    `transform` names the recommended display transform only; stored values
    are always untransformed.
    """

    grid: Grid
    values: np.ndarray
    hour0: int = 0
    transform: str = "log1p"
    value_unit: str = ""
    meta: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim != 3:
            raise CubeError(f"cube lattice must be 3-D (nt, ny, nx), got shape {self.values.shape}")
        if self.values.shape[1] != self.grid.ny or self.values.shape[2] != self.grid.nx:
            raise CubeError(
                f"lattice shape {self.values.shape} does not match grid {self.grid.ny}x{self.grid.nx}"
            )
        finite = self.values[np.isfinite(self.values)]
        if finite.size and finite.min() < 0:
            raise CubeError("cube values must be >= 0 before any display transform")

    @property
    def nt(self) -> int:
        return self.values.shape[0]


@dataclass
class TriangleMesh:
    """Isosurface triangles in continuous cube coordinates (x, y, t)."""

    vertices: np.ndarray    # (n, 3) float64
    triangles: np.ndarray   # (m, 3) int64, oriented outward from the >= region

    def __post_init__(self) -> None:
        self.vertices = np.asarray(self.vertices, dtype=float).reshape(-1, 3)
        self.triangles = np.asarray(self.triangles, dtype=np.int64).reshape(-1, 3)
        if self.triangles.size and self.triangles.max() >= len(self.vertices):
            raise CubeError("triangle index out of range")


def assemble_cube(surfaces: Sequence[AccessibilitySurface], grid: Grid) -> SpaceTimeCube:
    """Stack 24 hourly surfaces into a cube; inactive cells become NaN."""
    by_hour: dict[int, AccessibilitySurface] = {}
    for surf in surfaces:
        if surf.hour is None:
            raise CubeError("static surfaces cannot enter the space-time cube")
        if surf.grid != grid:
            raise CubeError(f"surface for hour {surf.hour} is on a different grid")
        if surf.hour in by_hour:
            raise CubeError(f"duplicate surface for hour {surf.hour}")
        by_hour[surf.hour] = surf
    missing = [t for t in range(HOURS) if t not in by_hour]
    if missing:
        raise CubeError(f"missing surface for hour {missing[0]}" if len(missing) == 1
                        else f"missing surfaces for hours {missing}")
    lattice = np.full((HOURS, grid.ny, grid.nx), np.nan, dtype=float)
    for t in range(HOURS):
        surf = by_hour[t]
        for (col, row), v in zip(surf.cells, surf.values):
            lattice[t, row, col] = v
    return SpaceTimeCube(grid=grid, values=lattice)


def trilinear_sample(cube: SpaceTimeCube, x: float, y: float, t: float) -> float:
    """Trilinear blend of the 8 surrounding voxels at continuous (x, y, t).

    Exact at lattice points and linear along each axis. Returns NaN when any
    contributing (nonzero-weight) corner is the NaN sentinel.
    """
    nt, ny, nx = cube.values.shape
    if not (0 <= x <= nx - 1 and 0 <= y <= ny - 1 and 0 <= t <= nt - 1):
        raise CubeError(f"sample point ({x},{y},{t}) outside lattice hull "
                        f"[0,{nx - 1}]x[0,{ny - 1}]x[0,{nt - 1}]")

    def base(v: float, n: int) -> tuple[int, float]:
        if n == 1:
            return 0, 0.0
        i = min(int(math.floor(v)), n - 2)
        return i, v - i

    i0, fx = base(x, nx)
    j0, fy = base(y, ny)
    k0, ft = base(t, nt)
    acc = 0.0
    for dt in (0, 1):
        wt = ft if dt else 1.0 - ft
        if wt == 0.0:
            continue
        for dy in (0, 1):
            wy = fy if dy else 1.0 - fy
            if wy == 0.0:
                continue
            for dx in (0, 1):
                wx = fx if dx else 1.0 - fx
                if wx == 0.0:
                    continue
                v = cube.values[k0 + dt, j0 + dy, i0 + dx]
                if not np.isfinite(v):
                    return float("nan")
                acc += wt * wy * wx * v
    return acc


def percentile(cube: SpaceTimeCube, p: float) -> float:
    """Linear-interpolated order statistic over valid voxels (index (n-1)p/100)."""
    if not (0 <= p <= 100):
        raise CubeError(f"percentile must be in [0, 100], got {p}")
    vals = cube.values[np.isfinite(cube.values)]
    if vals.size == 0:
        raise CubeError("cube has no valid voxels")
    s = np.sort(vals)
    h = (len(s) - 1) * p / 100.0
    lo = int(math.floor(h))
    if lo + 1 >= len(s):
        return float(s[-1])
    frac = h - lo
    return float(s[lo] + frac * (s[lo + 1] - s[lo]))


def isosurface(cube: SpaceTimeCube, isovalue: float) -> TriangleMesh:
    """Marching-cubes mesh of the `value >= isovalue` region boundary.

    Lattice cubes touching any NaN voxel are skipped. Vertices on shared
    lattice edges are welded, the scan order is fixed, and ambiguous cases use
    the standard table, so output is deterministic. Degenerate (repeated
    vertex) triangles are dropped.
    """
    if not math.isfinite(isovalue):
        raise CubeError(f"isovalue must be finite, got {isovalue}")
    lattice = cube.values
    nt, ny, nx = lattice.shape
    verts: list[tuple[float, float, float]] = []
    vert_of_edge: dict[tuple[int, int], int] = {}
    triangles: list[tuple[int, int, int]] = []

    def flat(ix: int, iy: int, it: int) -> int:
        return (it * ny + iy) * nx + ix

    corner_vals = np.empty(8, dtype=float)
    for k in range(nt - 1):
        for j in range(ny - 1):
            for i in range(nx - 1):
                ok = True
                for n, (dx, dy, dz) in enumerate(VERTEX_OFFSETS):
                    v = lattice[k + dz, j + dy, i + dx]
                    if not np.isfinite(v):
                        ok = False
                        break
                    corner_vals[n] = v
                if not ok:
                    continue
                case = 0
                for n in range(8):
                    if corner_vals[n] < isovalue:
                        case |= 1 << n
                if CASE_EDGES[case] == 0:
                    continue
                edge_vertex = [-1] * 12
                for e in range(12):
                    if not (CASE_EDGES[case] >> e) & 1:
                        continue
                    a, b = EDGE_VERTICES[e]
                    ax, ay, az = VERTEX_OFFSETS[a]
                    bx, by, bz = VERTEX_OFFSETS[b]
                    ga = flat(i + ax, j + ay, k + az)
                    gb = flat(i + bx, j + by, k + bz)
                    key = (ga, gb) if ga < gb else (gb, ga)
                    idx = vert_of_edge.get(key)
                    if idx is None:
                        va, vb = corner_vals[a], corner_vals[b]
                        if ga > gb:  # canonical endpoint order for crack-free welding
                            va, vb = vb, va
                            ax, ay, az, bx, by, bz = bx, by, bz, ax, ay, az
                        mu = (isovalue - va) / (vb - va)
                        mu = min(max(mu, 0.0), 1.0)
                        pos = (
                            i + ax + mu * (bx - ax),
                            j + ay + mu * (by - ay),
                            k + az + mu * (bz - az),
                        )
                        idx = len(verts)
                        verts.append(pos)
                        vert_of_edge[key] = idx
                    edge_vertex[e] = idx
                row = CASE_TRIANGLES[case]
                for s in range(0, 16, 3):
                    if row[s] < 0:
                        break
                    tri = (edge_vertex[row[s]], edge_vertex[row[s + 1]], edge_vertex[row[s + 2]])
                    if tri[0] == tri[1] or tri[1] == tri[2] or tri[0] == tri[2]:
                        continue
                    triangles.append(tri)

    return TriangleMesh(
        vertices=np.asarray(verts, dtype=float) if verts else np.zeros((0, 3)),
        triangles=np.asarray(triangles, dtype=np.int64) if triangles else np.zeros((0, 3), dtype=np.int64),
    )


def write_cube(cube: SpaceTimeCube, path: str) -> None:
    """Write magic, length-prefixed JSON header, then the f32 voxel payload."""
    nt, ny, nx = cube.values.shape
    header = {
        "nx": nx,
        "ny": ny,
        "nt": nt,
        "origin_x": cube.grid.origin_x,
        "origin_y": cube.grid.origin_y,
        "cell_size": cube.grid.cell_size,
        "hour0": cube.hour0,
        "transform": cube.transform,
        "value_unit": cube.value_unit,
    }
    blob = json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8")
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<I", len(blob)))
        f.write(blob)
        f.write(np.ascontiguousarray(cube.values, dtype="<f4").tobytes())


def read_cube(path: str) -> SpaceTimeCube:
    with open(path, "rb") as f:
        raw = f.read()
    if len(raw) < len(MAGIC) + 4 or raw[: len(MAGIC)] != MAGIC:
        raise CubeError(f"{path}: bad magic, expected {MAGIC!r}")
    (hlen,) = struct.unpack_from("<I", raw, len(MAGIC))
    hstart = len(MAGIC) + 4
    header = json.loads(raw[hstart:hstart + hlen].decode("utf-8"))
    nx, ny, nt = int(header["nx"]), int(header["ny"]), int(header["nt"])
    payload = raw[hstart + hlen:]
    expected = nx * ny * nt * 4
    if len(payload) != expected:
        raise CubeError(f"{path}: payload is {len(payload)} bytes, expected {expected}")
    values = np.frombuffer(payload, dtype="<f4").astype(float).reshape(nt, ny, nx)
    meta = {}
    if nt != HOURS:
        meta["nonstandard_nt"] = True
    return SpaceTimeCube(
        grid=Grid(
            origin_x=float(header["origin_x"]),
            origin_y=float(header["origin_y"]),
            cell_size=float(header["cell_size"]),
            nx=nx,
            ny=ny,
        ),
        values=values,
        hour0=int(header.get("hour0", 0)),
        transform=str(header.get("transform", "none")),
        value_unit=str(header.get("value_unit", "")),
        meta=meta,
    )


def write_slice_csv(cube: SpaceTimeCube, hour: int, path: str) -> None:
    """Per-slice choropleth export: cell_col,cell_row,value for valid voxels."""
    if not (0 <= hour < cube.nt):
        raise CubeError(f"hour {hour} out of range 0..{cube.nt - 1}")
    layer = cube.values[hour]
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        writer.writerow(["cell_col", "cell_row", "value"])
        for row in range(layer.shape[0]):
            for col in range(layer.shape[1]):
                v = layer[row, col]
                if np.isfinite(v):
                    writer.writerow([col, row, repr(float(v))])
