import math

import numpy as np
import pytest

from accesscube.calibration import (
    CalibrationError,
    DecaySpec,
    FlowRecord,
    FrictionFit,
    decay,
    decay_weights,
    fit_friction,
    read_flows,
    write_fit,
)


class TestDecay:
    def test_power_halves_at_two(self):
        spec = DecaySpec("power", beta=1.0, floor=0.1)
        assert decay(spec, 2.0) == pytest.approx(0.5)

    def test_exponential_floor_rule(self):
        spec = DecaySpec("exponential", beta=0.01, floor=50.0)
        assert decay(spec, 0.0) == pytest.approx(math.exp(-0.01 * 50.0))

    def test_gaussian(self):
        spec = DecaySpec("gaussian", beta=10_000.0)
        assert decay(spec, 100.0) == pytest.approx(math.exp(-100.0**2 / 10_000.0))

    def test_unreachable_weighs_zero(self):
        spec = DecaySpec("power", beta=0.6, floor=250.0)
        assert decay(spec, float("nan")) == 0.0

    def test_vectorized(self):
        spec = DecaySpec("power", beta=1.0, floor=1.0)
        out = decay(spec, np.array([2.0, 4.0, np.nan]))
        assert np.allclose(out, [0.5, 0.25, 0.0])

    def test_non_positive_beta_rejected(self):
        with pytest.raises(CalibrationError):
            DecaySpec("power", beta=0.0, floor=1.0)

    def test_power_without_floor_rejected(self):
        with pytest.raises(CalibrationError, match="floor"):
            DecaySpec("power", beta=0.5)

    def test_unknown_family_rejected(self):
        with pytest.raises(CalibrationError):
            DecaySpec("cauchy", beta=1.0)

    @pytest.mark.parametrize(
        "spec",
        [
            DecaySpec("power", beta=0.602, floor=250.0),
            DecaySpec("exponential", beta=0.0002),
            DecaySpec("gaussian", beta=1e9),
        ],
    )
    def test_non_increasing_and_positive(self, spec):
        d = np.linspace(spec.floor, 50_000, 400)
        w = decay(spec, d)
        assert np.all(np.diff(w) <= 1e-15)
        assert np.all(w > 0)

    def test_callable_hook_zeroes_unreachable(self):
        w = decay_weights(lambda d: np.ones_like(d), np.array([1.0, np.nan]))
        assert np.array_equal(w, [1.0, 0.0])


def _exact_flows(rng, beta, n=100):
    """Flows drawn exactly from C = D * S * d**(-beta)."""
    flows, demand, supply, distances = [], {}, {}, {}
    for k in range(n):
        o, d = f"o{k}", f"d{k}"
        demand[o] = float(rng.uniform(100, 5000))
        supply[d] = float(rng.uniform(100, 5000))
        dist = float(rng.uniform(500, 40_000))
        distances[(o, d)] = dist
        flows.append(FlowRecord(o, d, demand[o] * supply[d] * dist ** (-beta)))
    return flows, demand, supply, distances


class TestFitFriction:
    def test_exact_model_recovery(self):
        rng = np.random.default_rng(61)
        flows, demand, supply, distances = _exact_flows(rng, beta=0.8)
        fit = fit_friction(flows, demand, supply, distances)
        assert fit.beta == pytest.approx(0.8, abs=1e-9)
        assert fit.r_squared == pytest.approx(1.0, abs=1e-12)
        assert fit.n_used == 100
        assert fit.n_excluded == 0

    def test_noisy_recovery(self):
        rng = np.random.default_rng(67)
        flows, demand, supply, distances = _exact_flows(rng, beta=0.8)
        noisy = [
            FlowRecord(f.origin_id, f.destination_id, f.commuters * float(rng.lognormal(0.0, 0.1)))
            for f in flows
        ]
        fit = fit_friction(noisy, demand, supply, distances)
        assert abs(fit.beta - 0.8) < 0.05

    def test_zero_records_excluded_and_counted(self):
        rng = np.random.default_rng(71)
        flows, demand, supply, distances = _exact_flows(rng, beta=0.5, n=10)
        flows.append(FlowRecord("o0", "d1", 0.0))
        distances[("o0", "d1")] = 1000.0
        fit = fit_friction(flows, demand, supply, distances)
        assert fit.n_used == 10
        assert fit.n_excluded == 1

    def test_equal_distances_rejected(self):
        flows = [FlowRecord(f"o{k}", f"d{k}", 10.0) for k in range(5)]
        demand = {f"o{k}": 1.0 for k in range(5)}
        supply = {f"d{k}": 1.0 for k in range(5)}
        distances = {(f"o{k}", f"d{k}"): 777.0 for k in range(5)}
        with pytest.raises(CalibrationError, match="variance"):
            fit_friction(flows, demand, supply, distances)

    def test_too_few_records_rejected(self):
        with pytest.raises(CalibrationError, match="at least 3"):
            fit_friction(
                [FlowRecord("a", "b", 5.0)], {"a": 1.0}, {"b": 1.0}, {("a", "b"): 100.0}
            )

    def test_flow_scaling_moves_only_intercept(self):
        rng = np.random.default_rng(73)
        flows, demand, supply, distances = _exact_flows(rng, beta=0.9)
        noisy = [
            FlowRecord(f.origin_id, f.destination_id, f.commuters * float(rng.lognormal(0.0, 0.2)))
            for f in flows
        ]
        base = fit_friction(noisy, demand, supply, distances)
        scaled = fit_friction(
            [FlowRecord(f.origin_id, f.destination_id, 7.0 * f.commuters) for f in noisy],
            demand, supply, distances,
        )
        assert scaled.beta == pytest.approx(base.beta, abs=1e-12)
        assert scaled.intercept == pytest.approx(base.intercept + math.log(7.0), abs=1e-9)

    def test_distance_doubling_keeps_beta(self):
        rng = np.random.default_rng(79)
        flows, demand, supply, distances = _exact_flows(rng, beta=0.7)
        noisy = [
            FlowRecord(f.origin_id, f.destination_id, f.commuters * float(rng.lognormal(0.0, 0.2)))
            for f in flows
        ]
        base = fit_friction(noisy, demand, supply, distances)
        doubled = fit_friction(noisy, demand, supply, {k: 2 * v for k, v in distances.items()})
        assert doubled.beta == pytest.approx(base.beta, abs=1e-9)


class TestFlowIO:
    def test_read(self, tmp_path):
        path = tmp_path / "flows.csv"
        path.write_text("origin_id,destination_id,commuters\nA,B,120.5\nB,A,90\n")
        flows = read_flows(str(path))
        assert len(flows) == 2
        assert flows[0].commuters == 120.5

    def test_missing_columns(self, tmp_path):
        path = tmp_path / "flows.csv"
        path.write_text("o,d,c\nA,B,1\n")
        with pytest.raises(CalibrationError):
            read_flows(str(path))

    def test_write_fit(self, tmp_path):
        fit = FrictionFit(beta=0.6, intercept=1.2, r_squared=0.97, n_used=50, n_excluded=3)
        path = str(tmp_path / "fit.json")
        write_fit(fit, path)
        import json

        assert json.load(open(path))["beta"] == 0.6
