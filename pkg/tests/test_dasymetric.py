import numpy as np
import pytest
from shapely.geometry import box

from accesscube.dasymetric import (
    AuxiliaryZone,
    CountZone,
    DasymetricError,
    EMPLOYMENT,
    RESIDENTIAL,
    combine,
    filter_active_cells,
    interpolate,
    read_cell_counts,
    write_cell_counts,
)
from accesscube.geometry import Grid, tessellate_grid
from accesscube.temporal import HOURS


def _hourly(hour: int, count: float) -> np.ndarray:
    v = np.zeros(HOURS)
    v[hour] = count
    return v


def _grid_2cells() -> Grid:
    return Grid(0, 0, 1000, 2, 1)


class TestInterpolate:
    def test_parcel_split_across_two_cells(self):
        # one parcel lying 25%/75% across the cell boundary at x=1000
        grid = _grid_2cells()
        zone = CountZone("Z", box(0, 0, 2000, 1000), workers=_hourly(7, 100))
        parcel = AuxiliaryZone("P", box(900, 0, 1300, 500), RESIDENTIAL)
        cc = interpolate([zone], [parcel], grid, RESIDENTIAL)
        assert cc.workers[(0, 0)][7] == pytest.approx(25.0)
        assert cc.workers[(1, 0)][7] == pytest.approx(75.0)

    def test_two_parcels_weighted_by_area(self):
        # areas 1 km2 in cell A and 3 km2 in cell B split 100 as 25/75
        grid = Grid(0, 0, 2000, 2, 1)
        zone = CountZone("Z", box(0, 0, 4000, 2000), workers=_hourly(7, 100))
        a = AuxiliaryZone("A", box(0, 0, 1000, 1000), RESIDENTIAL)
        b = AuxiliaryZone("B", box(2000, 0, 4000, 1500), RESIDENTIAL)
        cc = interpolate([zone], [a, b], grid, RESIDENTIAL)
        assert cc.workers[(0, 0)][7] == pytest.approx(25.0)
        assert cc.workers[(1, 0)][7] == pytest.approx(75.0)

    def test_zero_count_zone_contributes_nothing(self):
        grid = _grid_2cells()
        zone = CountZone("Z", box(0, 0, 2000, 1000))
        parcel = AuxiliaryZone("P", box(0, 0, 500, 500), RESIDENTIAL)
        cc = interpolate([zone], [parcel], grid, RESIDENTIAL)
        assert cc.workers == {}

    def test_fallback_without_parcels_is_uniform_and_diagnosed(self):
        grid = _grid_2cells()
        zone = CountZone("Z", box(0, 0, 2000, 1000), workers=_hourly(7, 100))
        cc = interpolate([zone], [], grid, RESIDENTIAL)
        assert len(cc.diagnostics) == 1
        assert "Z" in cc.diagnostics[0]
        assert cc.workers[(0, 0)][7] == pytest.approx(50.0)
        assert cc.workers[(1, 0)][7] == pytest.approx(50.0)

    def test_parcel_straddling_zone_boundary_is_clipped(self):
        # parcel spans two zones; each zone distributes only over its clip
        grid = _grid_2cells()
        za = CountZone("A", box(0, 0, 1000, 1000), workers=_hourly(0, 10))
        zb = CountZone("B", box(1000, 0, 2000, 1000), workers=_hourly(0, 30))
        parcel = AuxiliaryZone("P", box(500, 0, 1500, 1000), RESIDENTIAL)
        cc = interpolate([za, zb], [parcel], grid, RESIDENTIAL)
        assert cc.workers[(0, 0)][0] == pytest.approx(10.0)
        assert cc.workers[(1, 0)][0] == pytest.approx(30.0)

    def test_only_intersecting_zones_contribute(self):
        grid = Grid(0, 0, 1000, 4, 1)
        near = CountZone("N", box(0, 0, 1000, 1000), workers=_hourly(0, 50))
        far = CountZone("F", box(3000, 0, 4000, 1000), workers=_hourly(0, 70))
        parcels = [
            AuxiliaryZone("PN", box(0, 0, 1000, 1000), RESIDENTIAL),
            AuxiliaryZone("PF", box(3000, 0, 4000, 1000), RESIDENTIAL),
        ]
        cc = interpolate([near, far], parcels, grid, RESIDENTIAL)
        assert set(cc.workers) == {(0, 0), (3, 0)}

    def test_monotone_in_zone_count(self):
        grid = _grid_2cells()
        parcel = AuxiliaryZone("P", box(900, 0, 1300, 500), RESIDENTIAL)
        base = interpolate(
            [CountZone("Z", box(0, 0, 2000, 1000), workers=_hourly(7, 100))],
            [parcel], grid, RESIDENTIAL,
        )
        scaled = interpolate(
            [CountZone("Z", box(0, 0, 2000, 1000), workers=_hourly(7, 300))],
            [parcel], grid, RESIDENTIAL,
        )
        for cell in base.workers:
            assert scaled.workers[cell][7] == pytest.approx(3 * base.workers[cell][7])

    def test_bad_kind_rejected(self):
        with pytest.raises(DasymetricError):
            interpolate([], [], _grid_2cells(), "industrial")

    def test_mass_preserved_random_layouts(self):
        rng = np.random.default_rng(17)
        for _ in range(10):
            cols = np.sort(rng.choice(np.arange(1, 10), size=3, replace=False)) * 1000.0
            edges = [0.0, *cols, 10_000.0]
            zones = []
            for i in range(4):
                counts = rng.uniform(0, 50, HOURS)
                zones.append(
                    CountZone(
                        f"Z{i}", box(edges[i], 0, edges[i + 1], 10_000.0),
                        workers=counts,
                    )
                )
            parcels = []
            for i in range(12):
                x, y = rng.uniform(0, 9000, 2)
                parcels.append(
                    AuxiliaryZone(
                        f"P{i}", box(x, y, x + rng.uniform(100, 900), y + rng.uniform(100, 900)),
                        RESIDENTIAL,
                    )
                )
            grid = tessellate_grid((0, 0, 10_000, 10_000), 500.0)
            cc = interpolate(zones, parcels, grid, RESIDENTIAL)
            for h in range(HOURS):
                total_in = sum(z.workers[h] for z in zones)
                total_out = cc.hour_total(RESIDENTIAL, h)
                assert total_out == pytest.approx(total_in, rel=1e-6)


class TestActiveCells:
    def _combined(self):
        grid = _grid_2cells()
        zone = CountZone(
            "Z", box(0, 0, 2000, 1000), workers=_hourly(7, 12), jobs=_hourly(9, 40)
        )
        res = AuxiliaryZone("R", box(0, 0, 800, 800), RESIDENTIAL)
        emp = AuxiliaryZone("E", box(1200, 0, 1800, 800), EMPLOYMENT)
        return combine(
            interpolate([zone], [res, emp], grid, RESIDENTIAL),
            interpolate([zone], [res, emp], grid, EMPLOYMENT),
        )

    def test_flags_follow_daily_totals(self):
        cc = self._combined()
        assert cc.active_residential == ((0, 0),)
        assert cc.active_employment == ((1, 0),)

    def test_zero_cells_dropped(self):
        grid = _grid_2cells()
        cc = filter_active_cells(
            combine(interpolate([], [], grid, RESIDENTIAL), interpolate([], [], grid, EMPLOYMENT))
        )
        assert cc.active_residential == ()
        assert cc.active_employment == ()

    def test_round_trip(self, tmp_path):
        cc = self._combined()
        path = str(tmp_path / "cells.csv")
        write_cell_counts(cc, path)
        back = read_cell_counts(path, cc.grid)
        assert back.active_residential == cc.active_residential
        assert back.active_employment == cc.active_employment
        for cell in cc.workers:
            assert np.array_equal(back.workers[cell], cc.workers[cell])
        for cell in cc.jobs:
            assert np.array_equal(back.jobs[cell], cc.jobs[cell])
