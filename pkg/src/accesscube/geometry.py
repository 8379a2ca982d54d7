"""Planar grid tessellation, polygon clipping, and a bounding-box spatial index.

All coordinates are planar meters in a projected CRS. Inputs declared as
geographic degrees are refused; no reprojection is performed here.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Iterable, Iterator, Sequence

import numpy as np
from shapely import STRtree
from shapely.geometry import MultiPolygon, Polygon, box, shape
from shapely.geometry.base import BaseGeometry

# Clip pieces below this area (m^2) are numerical noise and are dropped.
SLIVER_AREA = 1e-9

_GEOGRAPHIC_CRS_TOKENS = ("4326", "crs84", "wgs84", "wgs 84")


class GeometryError(ValueError):
    """Invalid geometry or grid input."""


@dataclass(frozen=True)
class Grid:
    """Uniform square-cell tessellation anchored at (origin_x, origin_y).

    Cell (col, row) covers the half-open square
    [origin_x + col*cell_size, origin_x + (col+1)*cell_size) x analogous y.
    """

    origin_x: float
    origin_y: float
    cell_size: float
    nx: int
    ny: int

    def __post_init__(self) -> None:
        # normalize numeric types so serialization is stable however built
        object.__setattr__(self, "origin_x", float(self.origin_x))
        object.__setattr__(self, "origin_y", float(self.origin_y))
        object.__setattr__(self, "cell_size", float(self.cell_size))
        object.__setattr__(self, "nx", int(self.nx))
        object.__setattr__(self, "ny", int(self.ny))
        if self.cell_size <= 0:
            raise GeometryError(f"cell_size must be > 0, got {self.cell_size}")
        if self.nx < 1 or self.ny < 1:
            raise GeometryError(f"grid must have at least one cell, got {self.nx}x{self.ny}")

    @property
    def extent(self) -> tuple[float, float, float, float]:
        return (
            self.origin_x,
            self.origin_y,
            self.origin_x + self.nx * self.cell_size,
            self.origin_y + self.ny * self.cell_size,
        )

    def contains_cell(self, col: int, row: int) -> bool:
        return 0 <= col < self.nx and 0 <= row < self.ny

    def to_dict(self) -> dict:
        return {
            "origin_x": self.origin_x,
            "origin_y": self.origin_y,
            "cell_size": self.cell_size,
            "nx": self.nx,
            "ny": self.ny,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Grid":
        return cls(
            origin_x=float(d["origin_x"]),
            origin_y=float(d["origin_y"]),
            cell_size=float(d["cell_size"]),
            nx=int(d["nx"]),
            ny=int(d["ny"]),
        )


def tessellate_grid(extent: Sequence[float], cell_size: float) -> Grid:
    """Tessellate a covering grid over `extent` = (minx, miny, maxx, maxy).

    The origin is snapped down to an integer multiple of cell_size so that
    runs are reproducible regardless of extent jitter; the grid always covers
    the extent entirely.
    """
    minx, miny, maxx, maxy = (float(v) for v in extent)
    if cell_size <= 0:
        raise GeometryError(f"cell_size must be > 0, got {cell_size}")
    if not (maxx > minx and maxy > miny):
        raise GeometryError(f"inverted or degenerate extent {extent!r}")
    origin_x = math.floor(minx / cell_size) * cell_size
    origin_y = math.floor(miny / cell_size) * cell_size
    # Relative guard keeps exact tilings (width a multiple of cell_size) exact.
    nx = int(math.ceil((maxx - origin_x) / cell_size - 1e-12))
    ny = int(math.ceil((maxy - origin_y) / cell_size - 1e-12))
    return Grid(origin_x=origin_x, origin_y=origin_y, cell_size=cell_size, nx=max(nx, 1), ny=max(ny, 1))


def cell_centroid(grid: Grid, col: int, row: int) -> tuple[float, float]:
    """Geometric center of cell (col, row)."""
    if not grid.contains_cell(col, row):
        raise GeometryError(f"cell ({col},{row}) outside {grid.nx}x{grid.ny} grid")
    half = grid.cell_size / 2.0
    return (grid.origin_x + col * grid.cell_size + half, grid.origin_y + row * grid.cell_size + half)


def cell_polygon(grid: Grid, col: int, row: int) -> Polygon:
    """Square polygon of cell (col, row)."""
    if not grid.contains_cell(col, row):
        raise GeometryError(f"cell ({col},{row}) outside {grid.nx}x{grid.ny} grid")
    x0 = grid.origin_x + col * grid.cell_size
    y0 = grid.origin_y + row * grid.cell_size
    return box(x0, y0, x0 + grid.cell_size, y0 + grid.cell_size)


def cells_overlapping(grid: Grid, geom: BaseGeometry) -> Iterator[tuple[int, int]]:
    """Yield (col, row) of every grid cell whose bounding box meets `geom`'s.

    Row-major order; candidates only, callers clip to confirm.
    """
    if geom.is_empty:
        return
    minx, miny, maxx, maxy = geom.bounds
    c0 = max(0, int(math.floor((minx - grid.origin_x) / grid.cell_size)))
    c1 = min(grid.nx - 1, int(math.floor((maxx - grid.origin_x) / grid.cell_size)))
    r0 = max(0, int(math.floor((miny - grid.origin_y) / grid.cell_size)))
    r1 = min(grid.ny - 1, int(math.floor((maxy - grid.origin_y) / grid.cell_size)))
    for row in range(r0, r1 + 1):
        for col in range(c0, c1 + 1):
            yield (col, row)


def require_valid(geom: BaseGeometry, what: str = "polygon") -> BaseGeometry:
    if geom is None or geom.is_empty:
        raise GeometryError(f"{what} is empty")
    if not geom.is_valid:
        raise GeometryError(f"{what} is invalid (self-intersecting or malformed ring)")
    return geom


def polygon_from_rings(exterior: Iterable[tuple[float, float]],
                       holes: Iterable[Iterable[tuple[float, float]]] = ()) -> Polygon:
    """Build and validate a polygon from an exterior ring plus optional holes."""
    poly = Polygon(list(exterior), [list(h) for h in holes])
    require_valid(poly)
    return poly


def intersection_area(a: BaseGeometry, b: BaseGeometry) -> float:
    """Area of a∩b in m^2; 0 when disjoint. Commutative by construction."""
    require_valid(a, "first polygon")
    require_valid(b, "second polygon")
    area = a.intersection(b).area
    return 0.0 if area < SLIVER_AREA else area


class PolygonIndex:
    """Bounding-box index over a finite polygon set, keyed by caller ids.

    Queries return a superset of the truly intersecting polygons (bbox test,
    no false negatives).
    """

    def __init__(self, items: Sequence[tuple[str, BaseGeometry]]):
        self._ids = [i for i, _ in items]
        self._geoms = [g for _, g in items]
        self._tree = STRtree(self._geoms) if self._geoms else None

    def query(self, probe: BaseGeometry) -> list[str]:
        if self._tree is None or probe.is_empty:
            return []
        idx = self._tree.query(probe)
        return [self._ids[i] for i in np.sort(np.asarray(idx))]

    def geometry(self, poly_id: str) -> BaseGeometry:
        return self._geoms[self._ids.index(poly_id)]


def _check_crs_is_planar(doc: dict, path: str) -> None:
    crs = doc.get("crs")
    if crs is None:
        return
    name = ""
    if isinstance(crs, dict):
        name = str(crs.get("properties", {}).get("name", ""))
    else:
        name = str(crs)
    low = name.lower()
    if any(tok in low for tok in _GEOGRAPHIC_CRS_TOKENS):
        raise GeometryError(
            f"{path}: CRS {name!r} is geographic degrees; inputs must be planar meters"
        )


def read_polygons_geojson(path: str) -> list[tuple[str, BaseGeometry]]:
    """Read (id, geometry) pairs from a GeoJSON FeatureCollection.

    Accepts Polygon and MultiPolygon features carrying a string id property
    (feature "id" or properties["id"]). Coordinates must be planar meters.
    """
    with open(path, encoding="utf-8") as f:
        doc = json.load(f)
    _check_crs_is_planar(doc, path)
    if doc.get("type") != "FeatureCollection":
        raise GeometryError(f"{path}: expected a FeatureCollection, got {doc.get('type')!r}")
    out: list[tuple[str, BaseGeometry]] = []
    for i, feat in enumerate(doc.get("features", [])):
        fid = feat.get("id", feat.get("properties", {}).get("id"))
        if fid is None:
            raise GeometryError(f"{path}: feature #{i} has no id")
        geom = shape(feat["geometry"])
        if not isinstance(geom, (Polygon, MultiPolygon)):
            raise GeometryError(f"{path}: feature {fid!r} is {geom.geom_type}, not a polygon")
        require_valid(geom, f"feature {fid!r}")
        out.append((str(fid), geom))
    return out


def read_feature_properties(path: str) -> dict[str, dict]:
    """Map feature id -> properties for a GeoJSON FeatureCollection."""
    with open(path, encoding="utf-8") as f:
        doc = json.load(f)
    out: dict[str, dict] = {}
    for feat in doc.get("features", []):
        fid = feat.get("id", feat.get("properties", {}).get("id"))
        if fid is not None:
            out[str(fid)] = dict(feat.get("properties", {}))
    return out


def write_grid(grid: Grid, path: str) -> None:
    with open(path, "w", encoding="utf-8") as f:
        json.dump(grid.to_dict(), f, sort_keys=True, indent=2)
        f.write("\n")


def read_grid(path: str) -> Grid:
    with open(path, encoding="utf-8") as f:
        return Grid.from_dict(json.load(f))
