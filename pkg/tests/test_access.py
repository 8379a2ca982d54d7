import math

import numpy as np
import pytest

from accesscube.access import (
    AccessError,
    conservation_gap,
    hansen,
    pearson_correlation,
    run_scenarios,
    shen_static,
    spacetime_access,
    supply_demand_ratios,
    window_supply,
)
from accesscube.calibration import DecaySpec
from accesscube.dasymetric import CellCounts, filter_active_cells
from accesscube.geometry import Grid
from accesscube.network import CostMatrix, cell_id
from accesscube.temporal import HOURS

def _matrix(origins, destinations, values):
    return CostMatrix(
        origin_ids=[cell_id(c) for c in origins],
        destination_ids=[cell_id(c) for c in destinations],
        values=np.asarray(values, dtype=float),
    )


def make_counts(grid, workers, jobs):
    """CellCounts from explicit per-cell 24-vectors (or scalars at one hour)."""
    cc = CellCounts(grid=grid)
    cc.workers.update({c: np.asarray(v, dtype=float) for c, v in workers.items()})
    cc.jobs.update({c: np.asarray(v, dtype=float) for c, v in jobs.items()})
    return filter_active_cells(cc)


def _flat(count):
    return np.full(HOURS, count / HOURS)


def _at(hour, count):
    v = np.zeros(HOURS)
    v[hour] = count
    return v


def direct_two_step(workers, jobs, weights, t):
    """Unoptimized direct evaluation of the hour-t two-step measure."""
    nres, nemp = weights.shape
    supply = [jobs[j][t] + jobs[j][(t + 1) % HOURS] for j in range(nemp)]
    ratios = []
    for j in range(nemp):
        pot = sum(workers[k][t] * weights[k][j] for k in range(nres))
        ratios.append(supply[j] / pot if pot > 0 else 0.0)
    return [sum(ratios[j] * weights[i][j] for j in range(nemp)) for i in range(nres)]


class TestHansen:
    def test_unit_decay_sums_supply(self):
        grid = Grid(0, 0, 500, 2, 1)
        costs = _matrix([(0, 0), (1, 0)], [(1, 0)], [[700.0], [250.0]])
        surf = hansen([10.0], costs, lambda d: np.ones_like(d), grid)
        assert np.allclose(surf.values, [10.0, 10.0])

    def test_weighted_sum(self):
        grid = Grid(0, 0, 500, 3, 1)
        costs = _matrix([(0, 0)], [(1, 0), (2, 0)], [[1.0, 0.5]])
        surf = hansen([10.0, 10.0], costs, lambda d: d, grid)
        assert surf.values[0] == pytest.approx(15.0)

    def test_zero_supply(self):
        grid = Grid(0, 0, 500, 2, 1)
        costs = _matrix([(0, 0)], [(1, 0)], [[300.0]])
        surf = hansen([0.0], costs, DecaySpec("power", 0.6, floor=250), grid)
        assert np.all(surf.values == 0.0)

    def test_adding_supply_never_decreases(self):
        rng = np.random.default_rng(83)
        grid = Grid(0, 0, 500, 4, 4)
        origins = [(c, r) for c in range(2) for r in range(2)]
        dests = [(c + 2, r) for c in range(2) for r in range(2)]
        costs = _matrix(origins, dests, rng.uniform(300, 5000, (4, 4)))
        spec = DecaySpec("power", 0.8, floor=250)
        s = rng.uniform(0, 50, 4)
        base = hansen(s, costs, spec, grid).values
        s2 = s.copy()
        s2[2] += 10
        more = hansen(s2, costs, spec, grid).values
        assert np.all(more >= base - 1e-12)

    def test_shape_mismatch_rejected(self):
        grid = Grid(0, 0, 500, 2, 1)
        costs = _matrix([(0, 0)], [(1, 0)], [[300.0]])
        with pytest.raises(AccessError):
            hansen([1.0, 2.0], costs, DecaySpec("power", 0.6, floor=250), grid)


class TestShenStatic:
    def test_single_pair_ratio(self):
        grid = Grid(0, 0, 500, 2, 1)
        costs = _matrix([(0, 0)], [(1, 0)], [[400.0]])
        surf = shen_static([10.0], [5.0], costs, lambda d: np.ones_like(d), grid)
        assert surf.values[0] == pytest.approx(2.0)

    def test_unit_demand_potential_reduces_to_hansen(self):
        grid = Grid(0, 0, 500, 3, 1)
        costs = _matrix([(0, 0)], [(1, 0), (2, 0)], [[1.0, 0.5]])
        s = [10.0, 10.0]
        # a single demand cell with P=1 and unit decay gives D_j = 1 everywhere
        shen = shen_static(s, [1.0], costs, lambda d: np.ones_like(d), grid)
        h = hansen(s, costs, lambda d: np.ones_like(d), grid)
        assert np.allclose(shen.values, h.values)

    def test_two_cell_worked_example(self):
        # demand (4, 6), one job cell with 20 jobs, weights (1, 0.5):
        # potential = 4 + 3 = 7, A = (20/7, 10/7)
        grid = Grid(0, 0, 500, 3, 1)
        costs = _matrix([(0, 0), (1, 0)], [(2, 0)], [[1.0], [0.5]])
        surf = shen_static([20.0], [4.0, 6.0], costs, lambda d: d, grid)
        assert np.allclose(surf.values, [20.0 / 7.0, 10.0 / 7.0])

    def test_zero_demand_potential_diagnosed(self):
        grid = Grid(0, 0, 500, 2, 1)
        costs = _matrix([(0, 0)], [(1, 0)], [[400.0]])
        diags = {}
        surf = shen_static([10.0], [0.0], costs, lambda d: np.ones_like(d), grid, diagnostics=diags)
        assert np.all(surf.values == 0.0)
        assert diags["zero_demand_cells"] == 1


class TestSpacetime:
    def _uniform_setup(self, rng, nres=6, nemp=5):
        grid = Grid(0, 0, 500, 10, 10)
        res = [(i, 0) for i in range(nres)]
        emp = [(i, 1) for i in range(nemp)]
        workers = {c: _flat(float(rng.uniform(10, 200))) for c in res}
        jobs = {c: _flat(float(rng.uniform(10, 200))) for c in emp}
        cc = make_counts(grid, workers, jobs)
        costs = _matrix(res, emp, rng.uniform(300, 8000, (nres, nemp)))
        return cc, costs

    def test_uniform_time_doubles_static(self):
        rng = np.random.default_rng(89)
        cc, costs = self._uniform_setup(rng)
        spec = DecaySpec("power", 0.7, floor=250)
        daily_w = [cc.workers[c].sum() for c in cc.active_residential]
        daily_j = [cc.jobs[c].sum() for c in cc.active_employment]
        static = shen_static(daily_j, daily_w, costs, spec, cc.grid)
        for t in range(HOURS):
            surf = spacetime_access(cc, costs, spec, t)
            assert np.allclose(surf.values, 2.0 * static.values, rtol=1e-9)

    def test_two_cell_fixture_at_hour_seven(self):
        grid = Grid(0, 0, 500, 3, 1)
        cc = make_counts(
            grid,
            workers={(0, 0): _at(7, 4.0), (1, 0): _at(7, 6.0)},
            jobs={(2, 0): _at(7, 20.0)},
        )
        costs = _matrix([(0, 0), (1, 0)], [(2, 0)], [[1.0], [0.5]])
        surf7 = spacetime_access(cc, costs, lambda d: d, 7)
        assert np.allclose(surf7.values, [20.0 / 7.0, 10.0 / 7.0])
        surf9 = spacetime_access(cc, costs, lambda d: d, 9)
        assert np.all(surf9.values == 0.0)

    def test_zero_demand_hour_diagnosed(self):
        grid = Grid(0, 0, 500, 3, 1)
        cc = make_counts(
            grid,
            workers={(0, 0): _at(7, 4.0)},
            jobs={(2, 0): _at(3, 20.0)},
        )
        costs = _matrix([(0, 0)], [(2, 0)], [[900.0]])
        diags = {}
        surf = spacetime_access(cc, costs, DecaySpec("power", 0.7, floor=250), 3, diagnostics=diags)
        assert np.all(surf.values == 0.0)
        assert 3 in diags["hours_without_demand"]

    def test_matches_direct_evaluation(self):
        rng = np.random.default_rng(97)
        for _ in range(10):
            nres, nemp = int(rng.integers(2, 15)), int(rng.integers(2, 15))
            grid = Grid(0, 0, 500, 20, 20)
            res = [(int(i), 0) for i in range(nres)]
            emp = [(int(i), 1) for i in range(nemp)]
            workers = {c: rng.uniform(0, 40, HOURS) for c in res}
            jobs = {c: rng.uniform(0, 40, HOURS) for c in emp}
            cc = make_counts(grid, workers, jobs)
            costs = _matrix(res, emp, rng.uniform(250, 9000, (nres, nemp)))
            spec = DecaySpec("power", float(rng.uniform(0.3, 1.5)), floor=250)
            t = int(rng.integers(0, HOURS))
            surf = spacetime_access(cc, costs, spec, t)
            w = np.asarray(
                [[max(costs.values[i, j], 250.0) ** -spec.beta for j in range(nemp)]
                 for i in range(nres)]
            )
            expected = direct_two_step(
                [workers[c] for c in cc.active_residential],
                [jobs[c] for c in cc.active_employment],
                w, t,
            )
            assert np.allclose(surf.values, expected, rtol=1e-9)

    def test_supply_demand_scaling_exact(self):
        rng = np.random.default_rng(101)
        cc, costs = self._uniform_setup(rng)
        spec = DecaySpec("power", 0.7, floor=250)
        base = spacetime_access(cc, costs, spec, 8).values
        doubled_jobs = make_counts(
            cc.grid,
            {c: cc.workers[c] for c in cc.active_residential},
            {c: 2.0 * cc.jobs[c] for c in cc.active_employment},
        )
        assert np.array_equal(spacetime_access(doubled_jobs, costs, spec, 8).values, 2.0 * base)
        doubled_workers = make_counts(
            cc.grid,
            {c: 2.0 * cc.workers[c] for c in cc.active_residential},
            {c: cc.jobs[c] for c in cc.active_employment},
        )
        assert np.array_equal(spacetime_access(doubled_workers, costs, spec, 8).values, base / 2.0)

    def test_decay_constant_invariance(self):
        rng = np.random.default_rng(103)
        cc, costs = self._uniform_setup(rng)
        base_f = lambda d: np.maximum(d, 250.0) ** -0.7
        scaled_f = lambda d: 2.0 * np.maximum(d, 250.0) ** -0.7
        a = spacetime_access(cc, costs, base_f, 9).values
        b = spacetime_access(cc, costs, scaled_f, 9).values
        assert np.array_equal(a, b)

    def test_conservation_identity(self):
        rng = np.random.default_rng(107)
        for _ in range(5):
            cc, costs = self._uniform_setup(rng, nres=8, nemp=7)
            spec = DecaySpec("power", 0.9, floor=250)
            for t in range(0, HOURS, 5):
                assert conservation_gap(cc, costs, spec, t) <= 1e-9

    def test_missing_cost_column_rejected(self):
        grid = Grid(0, 0, 500, 3, 1)
        cc = make_counts(grid, {(0, 0): _at(7, 4.0)}, {(2, 0): _at(7, 20.0)})
        costs = _matrix([(0, 0)], [(1, 0)], [[900.0]])  # no column for job cell (2,0)
        with pytest.raises(AccessError, match="missing"):
            spacetime_access(cc, costs, DecaySpec("power", 0.7, floor=250), 7)

    def test_hour_out_of_range(self):
        grid = Grid(0, 0, 500, 2, 1)
        cc = make_counts(grid, {(0, 0): _at(0, 1.0)}, {(1, 0): _at(0, 1.0)})
        costs = _matrix([(0, 0)], [(1, 0)], [[300.0]])
        with pytest.raises(AccessError):
            spacetime_access(cc, costs, DecaySpec("power", 0.7, floor=250), 24)

    def test_ratio_surface_first_step(self):
        # hour-7 ratio at the single job cell: window supply 20 over potential 7
        grid = Grid(0, 0, 500, 3, 1)
        cc = make_counts(
            grid,
            workers={(0, 0): _at(7, 4.0), (1, 0): _at(7, 6.0)},
            jobs={(2, 0): _at(7, 20.0)},
        )
        costs = _matrix([(0, 0), (1, 0)], [(2, 0)], [[1.0], [0.5]])
        ratios = supply_demand_ratios(cc, costs, lambda d: d, 7)
        assert ratios.cells == ((2, 0),)
        assert ratios.values[0] == pytest.approx(20.0 / 7.0)
        assert ratios.zero_demand_cells == 0
        starved = supply_demand_ratios(cc, costs, lambda d: d, 8)
        assert starved.values[0] == 0.0
        assert starved.zero_demand_cells == 0  # no supply in the 8-9 window either


class TestScenarios:
    def test_uniform_fixture_mean_ratios(self):
        rng = np.random.default_rng(109)
        grid = Grid(0, 0, 500, 8, 8)
        res = [(i, 0) for i in range(6)]
        emp = [(i, 1) for i in range(5)]
        cc = make_counts(
            grid,
            {c: _flat(float(rng.uniform(20, 100))) for c in res},
            {c: _flat(float(rng.uniform(20, 100))) for c in emp},
        )
        costs = _matrix(res, emp, rng.uniform(300, 9000, (6, 5)))
        report = run_scenarios(cc, costs, DecaySpec("power", 0.8, floor=250))
        m1, m2, m3, m4 = report.means
        assert m2 / m1 == pytest.approx(1.0 / 12.0, rel=1e-9)
        assert m3 / m1 == pytest.approx(24.0, rel=1e-9)
        assert m4 / m1 == pytest.approx(2.0, rel=1e-9)

    def test_all_zero_jobs_all_scenarios_zero(self):
        grid = Grid(0, 0, 500, 3, 1)
        cc = make_counts(grid, {(0, 0): _flat(50.0)}, {})
        costs = _matrix([(0, 0)], [], np.zeros((1, 0)))
        report = run_scenarios(cc, costs, DecaySpec("power", 0.8, floor=250))
        assert report.means == [0.0, 0.0, 0.0, 0.0]

    def test_correlation_triangle_shape(self):
        rng = np.random.default_rng(113)
        grid = Grid(0, 0, 500, 8, 8)
        res = [(i, 0) for i in range(5)]
        emp = [(i, 1) for i in range(4)]
        cc = make_counts(
            grid,
            {c: rng.uniform(1, 50, HOURS) for c in res},
            {c: rng.uniform(1, 50, HOURS) for c in emp},
        )
        costs = _matrix(res, emp, rng.uniform(300, 9000, (5, 4)))
        report = run_scenarios(cc, costs, DecaySpec("power", 0.8, floor=250))
        assert [len(row) for row in report.correlations] == [0, 1, 2, 3]
        for row in report.correlations:
            for r in row:
                assert -1.0 - 1e-12 <= r <= 1.0 + 1e-12


class TestPearson:
    def test_perfectly_correlated(self):
        x = np.array([1.0, 2.0, 5.0, 9.0])
        assert pearson_correlation(x, 2 * x) == pytest.approx(1.0)

    def test_anticorrelated(self):
        x = np.array([1.0, 2.0, 5.0, 9.0])
        assert pearson_correlation(x, -x) == pytest.approx(-1.0)

    def test_closed_form_half(self):
        assert pearson_correlation([1, 2, 3], [1, 3, 2]) == pytest.approx(0.5)

    def test_zero_variance_rejected(self):
        with pytest.raises(AccessError, match="variance"):
            pearson_correlation([1, 1, 1], [1, 2, 3])

    def test_length_mismatch_rejected(self):
        with pytest.raises(AccessError):
            pearson_correlation([1, 2], [1, 2, 3])


def test_window_supply_wraps():
    jobs = np.zeros((2, HOURS))
    jobs[0, 0] = 5.0
    jobs[1, 23] = 7.0
    w = window_supply(jobs, 23)
    assert w[0] == 5.0 and w[1] == 7.0
