import json

import numpy as np
import pytest
from shapely.geometry import Polygon, box

from accesscube.geometry import (
    GeometryError,
    Grid,
    PolygonIndex,
    cell_centroid,
    cell_polygon,
    cells_overlapping,
    intersection_area,
    polygon_from_rings,
    read_grid,
    read_polygons_geojson,
    tessellate_grid,
    write_grid,
)


class TestTessellate:
    def test_exact_tiling(self):
        grid = tessellate_grid((0, 0, 1000, 500), 500)
        assert (grid.nx, grid.ny) == (2, 1)
        assert (grid.origin_x, grid.origin_y) == (0.0, 0.0)

    def test_origin_snaps_down(self):
        grid = tessellate_grid((10, 10, 990, 490), 500)
        assert (grid.origin_x, grid.origin_y) == (0.0, 0.0)
        assert (grid.nx, grid.ny) == (2, 1)

    def test_negative_extent_snaps_down(self):
        grid = tessellate_grid((-10, -10, 990, 490), 500)
        assert (grid.origin_x, grid.origin_y) == (-500.0, -500.0)
        assert (grid.nx, grid.ny) == (3, 2)

    def test_zero_cell_size_rejected(self):
        with pytest.raises(GeometryError):
            tessellate_grid((0, 0, 100, 100), 0)

    def test_inverted_extent_rejected(self):
        with pytest.raises(GeometryError):
            tessellate_grid((100, 0, 0, 100), 10)

    def test_grid_covers_extent(self):
        rng = np.random.default_rng(7)
        for _ in range(50):
            x0, y0 = rng.uniform(-5000, 5000, 2)
            w, h = rng.uniform(1, 9000, 2)
            cell = float(rng.uniform(10, 1500))
            grid = tessellate_grid((x0, y0, x0 + w, y0 + h), cell)
            gx0, gy0, gx1, gy1 = grid.extent
            assert gx0 <= x0 and gy0 <= y0
            assert gx1 >= x0 + w - 1e-9 and gy1 >= y0 + h - 1e-9
            k = grid.origin_x / cell
            assert abs(k - round(k)) < 1e-9


class TestCells:
    def test_centroid_first_cell(self):
        grid = Grid(0, 0, 500, 2, 1)
        assert cell_centroid(grid, 0, 0) == (250.0, 250.0)

    def test_centroid_second_cell(self):
        grid = Grid(0, 0, 500, 2, 1)
        assert cell_centroid(grid, 1, 0) == (750.0, 250.0)

    def test_centroid_out_of_range(self):
        grid = Grid(0, 0, 500, 2, 1)
        with pytest.raises(GeometryError):
            cell_centroid(grid, 5, 0)

    def test_cell_polygon_area(self):
        grid = Grid(100, 200, 250, 4, 4)
        assert cell_polygon(grid, 3, 3).area == pytest.approx(250 * 250)

    def test_cells_overlapping_clamps_to_grid(self):
        grid = Grid(0, 0, 100, 3, 3)
        probe = box(-500, -500, 150, 150)
        cells = list(cells_overlapping(grid, probe))
        assert cells == [(0, 0), (1, 0), (0, 1), (1, 1)]


class TestIntersectionArea:
    def test_identity(self):
        sq = box(0, 0, 1, 1)
        assert intersection_area(sq, sq) == pytest.approx(1.0)

    def test_disjoint(self):
        assert intersection_area(box(0, 0, 1, 1), box(5, 5, 6, 6)) == 0.0

    def test_half_shift(self):
        # analytic overlap rectangle: 0.5 x 1
        assert intersection_area(box(0, 0, 1, 1), box(0.5, 0, 1.5, 1)) == pytest.approx(0.5)

    def test_invalid_ring_rejected(self):
        bowtie = Polygon([(0, 0), (1, 1), (1, 0), (0, 1), (0, 0)])
        with pytest.raises(GeometryError):
            intersection_area(bowtie, box(0, 0, 1, 1))

    def test_commutative_and_bounded(self):
        rng = np.random.default_rng(11)
        for _ in range(100):
            a = box(*np.sort(rng.uniform(0, 10, 2)), *np.sort(rng.uniform(0, 10, 2)) + 10)
            b = box(*np.sort(rng.uniform(0, 10, 2)), *np.sort(rng.uniform(0, 10, 2)) + 10)
            ab = intersection_area(a, b)
            ba = intersection_area(b, a)
            assert abs(ab - ba) <= 1e-9 * max(ab, ba, 1.0)
            assert ab <= min(a.area, b.area) + 1e-9 * max(a.area, b.area)

    def test_partition_property(self):
        # clipping a polygon against every cell of a covering grid loses nothing
        rng = np.random.default_rng(3)
        for _ in range(20):
            cx, cy = rng.uniform(200, 800, 2)
            # star-shaped around (cx, cy): every angular gap < pi keeps it simple
            inc = rng.uniform(0.5, 1.0, 7)
            angles = 2 * np.pi * np.cumsum(inc) / inc.sum()
            radii = rng.uniform(50, 190, 7)
            ring = [(cx + r * np.cos(a), cy + r * np.sin(a)) for a, r in zip(angles, radii)]
            poly = polygon_from_rings(ring)
            grid = tessellate_grid(poly.bounds, 97.0)
            pieces = sum(
                intersection_area(poly, cell_polygon(grid, *cell))
                for cell in cells_overlapping(grid, poly)
            )
            assert pieces == pytest.approx(poly.area, rel=1e-6)


class TestPolygonIndex:
    def test_disjoint_probe(self):
        index = PolygonIndex([("a", box(0, 0, 1, 1))])
        assert index.query(box(10, 10, 11, 11)) == []

    def test_probe_equal_to_member(self):
        index = PolygonIndex([("a", box(0, 0, 1, 1)), ("b", box(5, 5, 6, 6))])
        assert "a" in index.query(box(0, 0, 1, 1))

    def test_no_false_negatives(self):
        rng = np.random.default_rng(23)
        boxes = []
        for i in range(60):
            x, y = rng.uniform(0, 50, 2)
            boxes.append((f"p{i}", box(x, y, x + rng.uniform(1, 8), y + rng.uniform(1, 8))))
        index = PolygonIndex(boxes)
        for _ in range(40):
            x, y = rng.uniform(0, 50, 2)
            probe = box(x, y, x + rng.uniform(1, 10), y + rng.uniform(1, 10))
            got = set(index.query(probe))
            truly = {pid for pid, g in boxes if g.intersects(probe)}
            assert truly <= got


class TestGeoJSON:
    def _write(self, path, doc):
        path.write_text(json.dumps(doc))
        return str(path)

    def test_read_polygons(self, tmp_path):
        doc = {
            "type": "FeatureCollection",
            "features": [
                {
                    "type": "Feature",
                    "id": "z1",
                    "properties": {},
                    "geometry": {
                        "type": "Polygon",
                        "coordinates": [[[0, 0], [10, 0], [10, 10], [0, 10], [0, 0]]],
                    },
                }
            ],
        }
        polys = read_polygons_geojson(self._write(tmp_path / "z.geojson", doc))
        assert len(polys) == 1
        assert polys[0][0] == "z1"
        assert polys[0][1].area == pytest.approx(100)

    def test_geographic_crs_refused(self, tmp_path):
        doc = {
            "type": "FeatureCollection",
            "crs": {"type": "name", "properties": {"name": "urn:ogc:def:crs:EPSG::4326"}},
            "features": [],
        }
        with pytest.raises(GeometryError, match="geographic"):
            read_polygons_geojson(self._write(tmp_path / "geo.geojson", doc))

    def test_missing_id_rejected(self, tmp_path):
        doc = {
            "type": "FeatureCollection",
            "features": [
                {
                    "type": "Feature",
                    "properties": {},
                    "geometry": {"type": "Polygon", "coordinates": [[[0, 0], [1, 0], [1, 1], [0, 0]]]},
                }
            ],
        }
        with pytest.raises(GeometryError, match="no id"):
            read_polygons_geojson(self._write(tmp_path / "noid.geojson", doc))


def test_grid_json_round_trip(tmp_path):
    grid = Grid(-500, 1000, 250, 8, 6)
    write_grid(grid, str(tmp_path / "grid.json"))
    assert read_grid(str(tmp_path / "grid.json")) == grid
