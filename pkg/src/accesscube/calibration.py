"""Distance-decay functions and friction calibration from commuting flows.

The friction coefficient is fitted by ordinary least squares on the
log-linearized gravity relation ln(C/(D*S)) = a - beta*ln(d). Beta is stored
positive and applied as d**(-beta); published estimates sometimes quote the
signed exponent instead, so a coefficient reported elsewhere as -0.602
corresponds to beta = 0.602 here.
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from typing import Callable, Mapping, Sequence

import numpy as np

POWER = "power"
EXPONENTIAL = "exponential"
GAUSSIAN = "gaussian"
DECAY_FAMILIES = (POWER, EXPONENTIAL, GAUSSIAN)


class CalibrationError(ValueError):
    pass


@dataclass(frozen=True)
class DecaySpec:
    """Decay family plus friction coefficient, with a distance floor in meters.

    Distances below the floor are raised to it before evaluation; the power
    family is singular at zero, so it requires floor > 0.
    """

    family: str
    beta: float
    floor: float = 0.0

    def __post_init__(self) -> None:
        if self.family not in DECAY_FAMILIES:
            raise CalibrationError(f"unknown decay family {self.family!r}, expected one of {DECAY_FAMILIES}")
        if not (self.beta > 0):
            raise CalibrationError(f"beta must be > 0, got {self.beta}")
        if self.floor < 0:
            raise CalibrationError(f"distance floor must be >= 0, got {self.floor}")
        if self.family == POWER and self.floor <= 0:
            raise CalibrationError("power decay is singular at 0 and needs a positive distance floor")


def decay(spec: DecaySpec, d: float | np.ndarray) -> float | np.ndarray:
    """Decay weight for impedance(s) d; NaN (unreachable) maps to weight 0."""
    arr = np.asarray(d, dtype=float)
    unreachable = ~np.isfinite(arr)
    clipped = np.maximum(np.where(unreachable, spec.floor + 1.0, arr), spec.floor)
    if spec.family == POWER:
        w = clipped ** (-spec.beta)
    elif spec.family == EXPONENTIAL:
        w = np.exp(-spec.beta * clipped)
    else:
        w = np.exp(-(clipped ** 2) / spec.beta)
    w = np.where(unreachable, 0.0, w)
    return float(w) if np.isscalar(d) or arr.ndim == 0 else w


DecayLike = DecaySpec | Callable[[np.ndarray], np.ndarray]


def decay_weights(spec: DecayLike, d: np.ndarray) -> np.ndarray:
    """Weight matrix for a DecaySpec or an arbitrary callable test hook.

    Callables see raw distances; their outputs at unreachable (NaN) entries
    are forced to 0 so islands never contribute.
    """
    if isinstance(spec, DecaySpec):
        return np.asarray(decay(spec, d), dtype=float)
    arr = np.asarray(d, dtype=float)
    w = np.asarray(spec(arr), dtype=float)
    return np.where(np.isfinite(arr), w, 0.0)


@dataclass(frozen=True)
class FlowRecord:
    """Observed commuters from an origin zone to a destination zone."""

    origin_id: str
    destination_id: str
    commuters: float

    def __post_init__(self) -> None:
        if self.commuters < 0:
            raise CalibrationError(f"negative commuter count {self.commuters}")


@dataclass(frozen=True)
class FrictionFit:
    beta: float
    intercept: float
    r_squared: float
    n_used: int
    n_excluded: int

    def to_dict(self) -> dict:
        return {
            "beta": self.beta,
            "intercept": self.intercept,
            "r_squared": self.r_squared,
            "n_used": self.n_used,
            "n_excluded": self.n_excluded,
        }


def fit_friction(
    flows: Sequence[FlowRecord],
    demand: Mapping[str, float],
    supply: Mapping[str, float],
    distances: Mapping[tuple[str, str], float],
    floor: float = 0.0,
) -> FrictionFit:
    """OLS fit of the power-decay friction coefficient from observed flows.

    Records with zero flow, zero demand, zero supply, a distance at or below
    the floor, or a missing pair distance are excluded and counted. The fitted
    relation is invariant to rescaling all flows (only the intercept moves)
    and, for the power family, to rescaling all distances.
    """
    xs: list[float] = []
    ys: list[float] = []
    excluded = 0
    for rec in flows:
        d_i = float(demand.get(rec.origin_id, 0.0))
        s_j = float(supply.get(rec.destination_id, 0.0))
        dist = distances.get((rec.origin_id, rec.destination_id))
        if rec.commuters <= 0 or d_i <= 0 or s_j <= 0 or dist is None or not math.isfinite(dist) or dist <= floor:
            excluded += 1
            continue
        xs.append(math.log(dist))
        ys.append(math.log(rec.commuters / (d_i * s_j)))
    n = len(xs)
    if n < 3:
        raise CalibrationError(f"need at least 3 usable flow records, have {n} ({excluded} excluded)")
    x = np.asarray(xs)
    y = np.asarray(ys)
    xc = x - x.mean()
    sxx = float(xc @ xc)
    # guard against pure rounding noise posing as variance
    if sxx <= n * (1e-12 * max(1.0, float(np.abs(x).max()))) ** 2:
        raise CalibrationError("zero variance in ln(distance); flows are all at the same distance")
    slope = float(xc @ (y - y.mean())) / sxx
    intercept = float(y.mean() - slope * x.mean())
    resid = y - (intercept + slope * x)
    syy = float(np.sum((y - y.mean()) ** 2))
    r_squared = 1.0 if syy == 0 else 1.0 - float(resid @ resid) / syy
    return FrictionFit(
        beta=-slope,
        intercept=intercept,
        r_squared=r_squared,
        n_used=n,
        n_excluded=excluded,
    )


def read_flows(path: str) -> list[FlowRecord]:
    """Read origin_id,destination_id,commuters rows."""
    out: list[FlowRecord] = []
    with open(path, newline="", encoding="utf-8") as f:
        reader = csv.DictReader(f)
        required = {"origin_id", "destination_id", "commuters"}
        if reader.fieldnames is None or not required.issubset(reader.fieldnames):
            raise CalibrationError(f"{path}: expected columns {sorted(required)}")
        for row in reader:
            out.append(
                FlowRecord(
                    origin_id=row["origin_id"],
                    destination_id=row["destination_id"],
                    commuters=float(row["commuters"]),
                )
            )
    return out


def write_fit(fit: FrictionFit, path: str) -> None:
    with open(path, "w", encoding="utf-8") as f:
        json.dump(fit.to_dict(), f, sort_keys=True, indent=2)
        f.write("\n")
