import numpy as np
import pytest

from accesscube.temporal import (
    HOURS,
    IntervalCount,
    TemporalError,
    daily_total,
    disaggregate_to_hourly,
    hourly_by_zone,
    read_interval_table,
    supply_window,
)


def _random_table(rng, max_intervals=12, lo=0, hi=1440):
    """Non-overlapping intervals from sorted random cut points in [lo, hi]."""
    n = int(rng.integers(1, max_intervals))
    cuts = np.sort(rng.choice(np.arange(lo, hi + 1), size=2 * n, replace=False))
    table = []
    for k in range(n):
        start, end = int(cuts[2 * k]), int(cuts[2 * k + 1])
        if start < end:
            table.append(IntervalCount(start, end, float(rng.uniform(0, 500))))
    return table


class TestDisaggregate:
    def test_four_quarter_hours_sum_into_one_bin(self):
        # four 15-minute departures of 50 between 6:00 and 7:00 total 200 in bin 6
        table = [IntervalCount(360 + 15 * k, 375 + 15 * k, 50) for k in range(4)]
        bins = disaggregate_to_hourly(table)
        assert bins[6] == pytest.approx(200.0)
        assert bins.sum() == pytest.approx(200.0)

    def test_five_hour_block_divides_evenly(self):
        # 150 arrivals between midnight and 5:00 put thirty in each night hour
        bins = disaggregate_to_hourly([IntervalCount(0, 300, 150)])
        assert np.allclose(bins[:5], 30.0)
        assert np.all(bins[5:] == 0.0)

    def test_empty_table(self):
        assert np.all(disaggregate_to_hourly([]) == 0.0)

    def test_partial_hour_overlap_is_proportional(self):
        # 90 minutes spanning 7:30-9:00: one third lands in bin 7, two thirds in bin 8
        bins = disaggregate_to_hourly([IntervalCount(450, 540, 90)])
        assert bins[7] == pytest.approx(30.0)
        assert bins[8] == pytest.approx(60.0)

    def test_overlapping_intervals_rejected(self):
        with pytest.raises(TemporalError, match="overlap"):
            disaggregate_to_hourly([IntervalCount(0, 120, 5), IntervalCount(60, 180, 5)])

    def test_negative_count_rejected(self):
        with pytest.raises(TemporalError, match="negative"):
            IntervalCount(0, 60, -1)

    def test_subminute_interval_rejected(self):
        with pytest.raises(TemporalError, match="minute grid"):
            IntervalCount(0.5, 60, 1)

    def test_out_of_day_interval_rejected(self):
        with pytest.raises(TemporalError):
            IntervalCount(1380, 1500, 1)

    def test_total_preserved(self):
        rng = np.random.default_rng(5)
        for _ in range(200):
            table = _random_table(rng)
            total_in = sum(iv.count for iv in table)
            total_out = disaggregate_to_hourly(table).sum()
            assert abs(total_out - total_in) <= 1e-12 * max(total_in, 1.0)

    def test_linearity(self):
        # tables over disjoint halves of the day combine bin-wise
        rng = np.random.default_rng(9)
        for _ in range(50):
            a = _random_table(rng, max_intervals=6, lo=0, hi=720)
            b = _random_table(rng, max_intervals=6, lo=720, hi=1440)
            joint = disaggregate_to_hourly(a + b)
            separate = disaggregate_to_hourly(a) + disaggregate_to_hourly(b)
            assert np.allclose(joint, separate, rtol=1e-12, atol=0)


class TestSupplyWindow:
    def test_wraps_past_midnight(self):
        assert supply_window(np.full(HOURS, 10.0), 23) == pytest.approx(20.0)

    def test_direct_sum(self):
        bins = np.zeros(HOURS)
        bins[7], bins[8] = 5, 7
        assert supply_window(bins, 7) == pytest.approx(12.0)

    def test_window_excludes_earlier_hour(self):
        bins = np.zeros(HOURS)
        bins[7] = 5
        assert supply_window(bins, 8) == 0.0

    def test_hour_out_of_range(self):
        with pytest.raises(TemporalError):
            supply_window(np.zeros(HOURS), 24)

    def test_windows_double_count_each_bin(self):
        rng = np.random.default_rng(13)
        for _ in range(20):
            bins = rng.uniform(0, 100, HOURS)
            total = sum(supply_window(bins, t) for t in range(HOURS))
            assert total == pytest.approx(2 * daily_total(bins), rel=1e-12)


class TestDailyTotal:
    def test_all_ones(self):
        assert daily_total(np.ones(HOURS)) == 24.0

    def test_preserves_disaggregated_total(self):
        table = [IntervalCount(360 + 15 * k, 375 + 15 * k, 50) for k in range(4)]
        assert daily_total(disaggregate_to_hourly(table)) == pytest.approx(200.0)

    def test_zeros(self):
        assert daily_total(np.zeros(HOURS)) == 0.0


class TestTableIO:
    def test_round_trip(self, tmp_path):
        path = tmp_path / "counts.csv"
        path.write_text(
            "zone_id,start_minute,end_minute,count\n"
            "A,360,375,50\nA,375,390,50\nA,390,405,50\nA,405,420,50\n"
            "B,0,300,150\n"
        )
        table = read_interval_table(str(path))
        assert set(table) == {"A", "B"}
        hourly = hourly_by_zone(str(path))
        assert hourly["A"][6] == pytest.approx(200.0)
        assert hourly["B"][2] == pytest.approx(30.0)

    def test_missing_columns(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("zone,start,end,n\nA,0,60,5\n")
        with pytest.raises(TemporalError, match="expected columns"):
            read_interval_table(str(path))

    def test_bad_row_names_line(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("zone_id,start_minute,end_minute,count\nA,120,60,5\n")
        with pytest.raises(TemporalError, match="bad.csv:2"):
            read_interval_table(str(path))
