"""Hourly scenario data and the conversions that produce it.

Converts raw meteorological/hydrological inputs into plant-level hourly
series: power-law hub-height extrapolation and power-curve conversion for
wind, a linear irradiance/cell-temperature model for PV, uniform
disaggregation of quarter-monthly or monthly hydro energy, monthly
capacity-factor profiles for aggregated small hydro, per-(month, hour)
multiplicative bias correction, empirical quantile mapping, seasonal peak
scaling, and zonal-to-bus load disaggregation.

All operations are pure functions over numpy arrays; timestamps are
timezone-naive hourly pandas DatetimeIndex values in a fixed standard time
(no DST transitions).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import pandas as pd

from .grid import Grid


class ScenarioError(ValueError):
    """Inconsistent or out-of-range scenario inputs."""


DEFAULT_QUANTILE_LEVELS = np.round(np.arange(0.0, 1.0000001, 0.005), 6)


def hourly_index(start: str | pd.Timestamp, hours: int) -> pd.DatetimeIndex:
    return pd.date_range(start=start, periods=hours, freq="h")


@dataclass
class ScenarioSeries:
    """Aligned hourly exogenous data for one simulation span.

    available_renewable holds the hourly usable power per dispatchable
    renewable unit; negative_load holds per-bus non-dispatchable injections
    (distributed PV, small hydro) subtracted from demand; tie price arrays
    override the static tie prices when present.
    """
    timestamps: pd.DatetimeIndex
    available_renewable: dict[str, np.ndarray] = field(default_factory=dict)
    load: dict[str, np.ndarray] = field(default_factory=dict)
    negative_load: dict[str, np.ndarray] = field(default_factory=dict)
    tie_import_price: dict[str, np.ndarray] = field(default_factory=dict)
    tie_export_price: dict[str, np.ndarray] = field(default_factory=dict)

    @property
    def n_hours(self) -> int:
        return len(self.timestamps)

    def validate(self, grid: Grid | None = None) -> None:
        if len(self.timestamps) == 0:
            raise ScenarioError("scenario has no hours")
        delta = np.diff(self.timestamps.asi8)
        if len(delta) and not np.all(delta == 3_600_000_000_000):
            raise ScenarioError("timestamps are not a gap-free hourly calendar")
        groups = (self.available_renewable, self.load, self.negative_load,
                  self.tie_import_price, self.tie_export_price)
        for group in groups:
            for key, arr in group.items():
                if len(arr) != self.n_hours:
                    raise ScenarioError(
                        f"series {key!r} has {len(arr)} hours, "
                        f"calendar has {self.n_hours}")
        for key, arr in self.load.items():
            if np.any(arr < 0):
                raise ScenarioError(f"load series {key!r} has negative values")
        if grid is not None:
            by_id = {u.id: u for u in grid.dispatchable_renewables}
            for unit in grid.dispatchable_renewables:
                if unit.id not in self.available_renewable:
                    raise ScenarioError(
                        f"no availability series for dispatchable unit {unit.id!r}")
            for key, arr in self.available_renewable.items():
                unit = by_id.get(key)
                if unit is None:
                    raise ScenarioError(f"availability for unknown unit {key!r}")
                if np.any(arr < -1e-9) or np.any(arr > unit.capacity * (1 + 1e-9)):
                    raise ScenarioError(
                        f"availability for {key!r} outside [0, capacity]")
            for key in list(self.load) + list(self.negative_load):
                if key not in grid.bus_by_id:
                    raise ScenarioError(f"load series for unknown bus {key!r}")

    def window(self, start: int, stop: int) -> "ScenarioSeries":
        sl = slice(start, stop)
        cut = lambda group: {k: v[sl] for k, v in group.items()}
        return ScenarioSeries(
            timestamps=self.timestamps[sl],
            available_renewable=cut(self.available_renewable),
            load=cut(self.load),
            negative_load=cut(self.negative_load),
            tie_import_price=cut(self.tie_import_price),
            tie_export_price=cut(self.tie_export_price),
        )

    def bus_demand(self, bus_id: str) -> np.ndarray:
        """Net demand: load minus non-dispatchable injections."""
        demand = np.zeros(self.n_hours)
        if bus_id in self.load:
            demand = demand + self.load[bus_id]
        if bus_id in self.negative_load:
            demand = demand - self.negative_load[bus_id]
        return demand


# --- wind -----------------------------------------------------------------

def extrapolate_wind_speed(v_ref, h_ref: float, h_target: float,
                           alpha: float = 1.0 / 7.0):
    """Power-law shear extrapolation of wind speed between heights."""
    v_ref = np.asarray(v_ref, dtype=float)
    if np.any(v_ref < 0):
        raise ScenarioError("negative wind speed")
    if h_ref <= 0 or h_target <= 0:
        raise ScenarioError("heights must be positive")
    out = v_ref * (h_target / h_ref) ** alpha
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class PowerCurve:
    """Normalized turbine power curve: zero below cut-in and at/above
    cut-out, one on the rated plateau, piecewise linear in between."""
    speeds: tuple[float, ...]
    powers: tuple[float, ...]
    cut_in: float
    rated: float
    cut_out: float

    def __post_init__(self):
        s = np.asarray(self.speeds)
        p = np.asarray(self.powers)
        if len(s) != len(p) or len(s) < 2:
            raise ScenarioError("power curve needs matching breakpoint arrays")
        if np.any(np.diff(s) <= 0):
            raise ScenarioError("breakpoint speeds must be strictly increasing")
        if np.any(p < 0) or np.any(p > 1):
            raise ScenarioError("normalized power must lie in [0, 1]")
        if not self.cut_in <= s[0] or not s[-1] <= self.rated <= self.cut_out:
            raise ScenarioError("cut-in/rated/cut-out speeds out of order")
        if abs(p[-1] - 1.0) > 1e-12:
            raise ScenarioError("normalized power must reach 1 at rated speed")

    def normalized_power(self, speed):
        speed = np.asarray(speed, dtype=float)
        out = np.interp(speed, self.speeds, self.powers)
        out = np.where(speed >= self.rated, 1.0, out)
        out = np.where((speed < self.cut_in) | (speed >= self.cut_out), 0.0, out)
        return float(out) if out.ndim == 0 else out


def default_power_curve() -> PowerCurve:
    return PowerCurve(speeds=(3.0, 12.0), powers=(0.0, 1.0),
                      cut_in=3.0, rated=12.0, cut_out=25.0)


def wind_power(speed_100m, curve: PowerCurve, capacity: float):
    return capacity * curve.normalized_power(speed_100m)


# --- bias correction --------------------------------------------------------

def stability_coefficients(raw: pd.Series, reference: pd.Series,
                           grouping: str = "month-hour") -> dict[tuple[int, int], float]:
    """Multiplicative correction ratios reference-mean / raw-mean per group.

    Computed on the timestamp overlap of the two series.  grouping is
    "month-hour" (per month and hour of day) or "month" (hour dimension
    collapsed; the key's hour is then always 0).
    """
    if grouping not in ("month-hour", "month"):
        raise ScenarioError(f"unknown grouping {grouping!r}")
    overlap = raw.index.intersection(reference.index)
    if len(overlap) == 0:
        raise ScenarioError("raw and reference series do not overlap")
    r = raw.loc[overlap]
    f = reference.loc[overlap]
    months = overlap.month
    hours = overlap.hour if grouping == "month-hour" else np.zeros(len(overlap), int)
    coeffs: dict[tuple[int, int], float] = {}
    frame = pd.DataFrame({"raw": r.to_numpy(), "ref": f.to_numpy(),
                          "m": months, "h": hours})
    for (m, h), grp in frame.groupby(["m", "h"]):
        raw_mean = grp["raw"].mean()
        if raw_mean <= 0:
            raise ScenarioError(
                f"raw group mean is not positive for month {m}, hour {h}")
        coeffs[(int(m), int(h))] = float(grp["ref"].mean() / raw_mean)
    return coeffs


def stability_bias_correct(raw: pd.Series, reference: pd.Series,
                           grouping: str = "month-hour") -> pd.Series:
    """Scale raw so its per-group means match the reference on the overlap.

    Every (month, hour) group present in raw must appear in the overlap.
    """
    coeffs = stability_coefficients(raw, reference, grouping)
    months = raw.index.month
    hours = raw.index.hour if grouping == "month-hour" else np.zeros(len(raw), int)
    factors = np.empty(len(raw))
    for i, (m, h) in enumerate(zip(months, hours)):
        try:
            factors[i] = coeffs[(int(m), int(h))]
        except KeyError:
            raise ScenarioError(
                f"no overlap samples for month {m}, hour {h}") from None
    return pd.Series(raw.to_numpy() * factors, index=raw.index)


def quantile_map(pred_train, obs_train, pred_apply,
                 levels: np.ndarray | None = None) -> np.ndarray:
    """Empirical quantile mapping of pred_apply onto the observed distribution.

    Each value is located on the predicted-training CDF (linear interpolation
    over the level grid, clamped at the ends) and mapped through the observed
    inverse CDF at the same level.
    """
    pred_train = np.asarray(pred_train, dtype=float)
    obs_train = np.asarray(obs_train, dtype=float)
    pred_apply = np.asarray(pred_apply, dtype=float)
    if pred_train.size == 0 or obs_train.size == 0:
        raise ScenarioError("training series must be non-empty")
    if levels is None:
        levels = DEFAULT_QUANTILE_LEVELS
    levels = np.asarray(levels, dtype=float)
    if np.any(np.diff(levels) <= 0) or levels[0] < 0 or levels[-1] > 1:
        raise ScenarioError("quantile levels must increase within [0, 1]")
    pred_q = np.quantile(pred_train, levels)
    obs_q = np.quantile(obs_train, levels)
    # np.interp clamps outside the grid, giving the documented end-quantile
    # extrapolation rule
    tau = np.interp(pred_apply, pred_q, levels)
    return np.interp(tau, levels, obs_q)


# --- solar ------------------------------------------------------------------

def solar_power(irradiance, temp_ambient, capacity: float,
                temp_coefficient: float = -0.004, noct: float = 45.0,
                ref_irradiance: float = 1000.0):
    """Linear irradiance PV model with NOCT cell-temperature correction."""
    g = np.asarray(irradiance, dtype=float)
    if np.any(g < 0):
        raise ScenarioError("negative irradiance")
    t_amb = np.asarray(temp_ambient, dtype=float)
    t_cell = t_amb + (noct - 20.0) / 800.0 * g
    out = capacity * (g / ref_irradiance) * (1.0 + temp_coefficient * (t_cell - 25.0))
    out = np.clip(out, 0.0, capacity)
    return float(out) if out.ndim == 0 else out


# --- hydro ------------------------------------------------------------------

def quarter_month_of(timestamps: pd.DatetimeIndex) -> np.ndarray:
    """Ordinal period index, months split at days 1/8/15/22."""
    day = timestamps.day.to_numpy()
    quarter = np.digitize(day, [8, 15, 22])
    year = timestamps.year.to_numpy()
    month = timestamps.month.to_numpy()
    key = (year * 12 + (month - 1)) * 4 + quarter
    _, ordinal = np.unique(key, return_inverse=True)
    return ordinal


def month_of(timestamps: pd.DatetimeIndex) -> np.ndarray:
    key = timestamps.year.to_numpy() * 12 + (timestamps.month.to_numpy() - 1)
    _, ordinal = np.unique(key, return_inverse=True)
    return ordinal


def disaggregate_hydro(period_energy, period_of_hour) -> np.ndarray:
    """Spread period energy uniformly over the hours of each period."""
    energy = np.asarray(period_energy, dtype=float)
    period = np.asarray(period_of_hour)
    if np.any(energy < 0):
        raise ScenarioError("period energies must be non-negative")
    n_periods = period.max() + 1 if period.size else 0
    if len(energy) != n_periods:
        raise ScenarioError(
            f"{len(energy)} period energies for {n_periods} calendar periods")
    counts = np.bincount(period, minlength=n_periods)
    if np.any(counts == 0):
        raise ScenarioError("calendar contains an empty period")
    return energy[period] / counts[period]


def small_hydro_series(capacity: float, monthly_capacity_factors,
                       timestamps: pd.DatetimeIndex) -> np.ndarray:
    """Constant output within each month: capacity times the month's factor."""
    factors = np.asarray(monthly_capacity_factors, dtype=float)
    if factors.shape != (12,):
        raise ScenarioError("expected 12 monthly capacity factors")
    if np.any(factors < 0) or np.any(factors > 1):
        raise ScenarioError("capacity factors must lie in [0, 1]")
    return capacity * factors[timestamps.month.to_numpy() - 1]


# --- load -------------------------------------------------------------------

SUMMER_MONTHS = (4, 5, 6, 7, 8, 9)  # April through September


def scale_load_to_peaks(load, timestamps: pd.DatetimeIndex,
                        summer_scale: float = 0.04,
                        winter_scale: float = 0.03) -> np.ndarray:
    """Scale April-September hours by (1+summer), October-March by (1+winter)."""
    if summer_scale <= -1 or winter_scale <= -1:
        raise ScenarioError("scales must exceed -1")
    load = np.asarray(load, dtype=float)
    summer = np.isin(timestamps.month.to_numpy(), SUMMER_MONTHS)
    return load * np.where(summer, 1.0 + summer_scale, 1.0 + winter_scale)


def disaggregate_zonal(zonal_series: dict[str, np.ndarray],
                       bus_ratios: dict[str, dict[str, float]]
                       ) -> dict[str, np.ndarray]:
    """Split per-zone series onto buses by fixed ratios summing to one."""
    out: dict[str, np.ndarray] = {}
    for zone, series in zonal_series.items():
        if zone not in bus_ratios:
            raise ScenarioError(f"no bus ratios for zone {zone!r}")
        ratios = bus_ratios[zone]
        total = sum(ratios.values())
        if abs(total - 1.0) > 1e-9:
            raise ScenarioError(
                f"zone {zone!r}: bus ratios sum to {total}, expected 1")
        if any(r < 0 for r in ratios.values()):
            raise ScenarioError(f"zone {zone!r}: negative bus ratio")
        series = np.asarray(series, dtype=float)
        for bus, ratio in ratios.items():
            out[bus] = out.get(bus, 0.0) + ratio * series
    return out
