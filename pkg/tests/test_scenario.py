import math

import numpy as np
import pandas as pd
import pytest

from lmpsim.scenario import (PowerCurve, ScenarioError, default_power_curve,
                             disaggregate_hydro, disaggregate_zonal,
                             extrapolate_wind_speed, hourly_index, month_of,
                             quantile_map, quarter_month_of,
                             scale_load_to_peaks, small_hydro_series,
                             solar_power, stability_bias_correct,
                             stability_coefficients, wind_power)


# --- wind speed extrapolation ------------------------------------------------

def test_extrapolation_identity_height():
    assert extrapolate_wind_speed(5.0, 10.0, 10.0, alpha=0.3) == pytest.approx(5.0)


def test_extrapolation_matches_closed_form():
    expected = 5.0 * math.exp(math.log(10.0) / 7.0)  # 5 * 10**(1/7)
    got = extrapolate_wind_speed(5.0, 10.0, 100.0, alpha=1.0 / 7.0)
    assert got == pytest.approx(expected, abs=1e-12)


def test_extrapolation_zero_preserved():
    assert extrapolate_wind_speed(0.0, 10.0, 100.0) == 0.0


def test_extrapolation_rejects_negative_speed():
    with pytest.raises(ScenarioError):
        extrapolate_wind_speed(-1.0, 10.0, 100.0)


def test_extrapolation_random_array_matches_formula():
    rng = np.random.default_rng(0)
    v = rng.uniform(0, 30, 50)
    out = extrapolate_wind_speed(v, 10.0, 80.0, alpha=0.2)
    np.testing.assert_allclose(out, v * (80.0 / 10.0) ** 0.2, atol=1e-12)


# --- power curve --------------------------------------------------------------

def test_wind_power_below_cut_in():
    curve = default_power_curve()
    assert wind_power(2.9, curve, 100.0) == 0.0


def test_wind_power_rated_plateau():
    curve = default_power_curve()
    assert wind_power(12.0, curve, 100.0) == pytest.approx(100.0)
    assert wind_power(20.0, curve, 100.0) == pytest.approx(100.0)


def test_wind_power_cut_out():
    curve = default_power_curve()
    assert wind_power(25.0, curve, 100.0) == 0.0
    assert wind_power(30.0, curve, 100.0) == 0.0


def test_wind_power_interpolates_between_breakpoints():
    curve = PowerCurve(speeds=(3.0, 4.0, 8.0, 12.0),
                       powers=(0.0, 0.2, 0.6, 1.0),
                       cut_in=3.0, rated=12.0, cut_out=25.0)
    # midway between the 0.2 and 0.6 breakpoints
    assert wind_power(6.0, curve, 100.0) == pytest.approx(40.0)


def test_wind_power_monotone_and_bounded():
    curve = default_power_curve()
    speeds = np.linspace(3.0, 12.0, 200)
    out = wind_power(speeds, curve, 50.0)
    assert np.all(np.diff(out) >= -1e-12)
    assert np.all((out >= 0) & (out <= 50.0))


def test_power_curve_rejects_bad_breakpoints():
    with pytest.raises(ScenarioError):
        PowerCurve(speeds=(5.0, 4.0), powers=(0.0, 1.0),
                   cut_in=3.0, rated=12.0, cut_out=25.0)


# --- stability bias correction -------------------------------------------------

def test_stability_identity():
    idx = hourly_index("2007-01-01", 24 * 40)
    raw = pd.Series(np.random.default_rng(1).uniform(1, 5, len(idx)), index=idx)
    out = stability_bias_correct(raw, raw)
    np.testing.assert_allclose(out.to_numpy(), raw.to_numpy(), atol=1e-12)


def test_stability_uniform_scale():
    idx = hourly_index("2007-01-01", 24 * 40)
    ref = pd.Series(np.random.default_rng(2).uniform(1, 5, len(idx)), index=idx)
    raw = ref / 2.0
    coeffs = stability_coefficients(raw, ref)
    assert all(c == pytest.approx(2.0) for c in coeffs.values())


def test_stability_single_group_hand_value():
    # January midnight samples with group means raw 4, ref 5 -> coefficient 1.25
    idx = pd.DatetimeIndex(["2007-01-01 00:00", "2007-01-02 00:00",
                            "2007-01-03 00:00"])
    raw = pd.Series([3.0, 5.0, 4.0], index=idx)
    ref = pd.Series([4.0, 6.0, 5.0], index=idx)
    coeffs = stability_coefficients(raw, ref)
    assert coeffs[(1, 0)] == pytest.approx(1.25)
    out = stability_bias_correct(raw, ref)
    assert out.iloc[2] == pytest.approx(5.0)  # raw 4.0 maps to 5.0


def test_stability_reproduces_group_means_on_overlap():
    idx = hourly_index("2007-01-01", 24 * 365)
    rng = np.random.default_rng(3)
    raw = pd.Series(rng.uniform(0.5, 4.0, len(idx)), index=idx)
    ref = pd.Series(rng.uniform(1.0, 6.0, len(idx)), index=idx)
    out = stability_bias_correct(raw, ref)
    frame = pd.DataFrame({"out": out.to_numpy(), "ref": ref.to_numpy(),
                          "m": idx.month, "h": idx.hour})
    grouped = frame.groupby(["m", "h"]).mean()
    np.testing.assert_allclose(grouped["out"], grouped["ref"], atol=1e-9)


def test_stability_month_grouping_collapses_hours():
    idx = hourly_index("2007-01-01", 24 * 60)
    raw = pd.Series(np.ones(len(idx)), index=idx)
    ref = pd.Series(np.full(len(idx), 3.0), index=idx)
    coeffs = stability_coefficients(raw, ref, grouping="month")
    assert set(h for _, h in coeffs) == {0}


def test_stability_missing_group_named_in_error():
    idx_raw = hourly_index("2007-01-01", 24 * 365)
    idx_ref = hourly_index("2007-01-01", 24 * 31)  # January only
    raw = pd.Series(np.ones(len(idx_raw)), index=idx_raw)
    ref = pd.Series(np.ones(len(idx_ref)), index=idx_ref)
    with pytest.raises(ScenarioError, match="month 2"):
        stability_bias_correct(raw, ref)


def test_stability_zero_raw_mean_rejected():
    idx = pd.DatetimeIndex(["2007-01-01 00:00"])
    raw = pd.Series([0.0], index=idx)
    ref = pd.Series([1.0], index=idx)
    with pytest.raises(ScenarioError, match="not positive"):
        stability_coefficients(raw, ref)


# --- quantile mapping -----------------------------------------------------------

def test_quantile_map_identity():
    rng = np.random.default_rng(4)
    train = rng.uniform(0, 10, 500)
    apply = rng.uniform(0.5, 9.5, 100)
    out = quantile_map(train, train, apply)
    np.testing.assert_allclose(out, apply, atol=1e-9)


def test_quantile_map_affine():
    rng = np.random.default_rng(5)
    train = rng.uniform(0, 1, 1000)
    apply = rng.uniform(0.01, 0.99, 1000)
    out = quantile_map(train, 2.0 * train, apply)
    rel_err = np.abs(out - 2.0 * apply) / (2.0 * apply)
    assert rel_err.max() <= 0.02


def test_quantile_map_median_to_median():
    rng = np.random.default_rng(6)
    pred = rng.normal(0, 1, 1001)
    obs = rng.normal(5, 2, 1001)
    out = quantile_map(pred, obs, np.array([np.median(pred)]))
    assert out[0] == pytest.approx(np.median(obs), abs=1e-9)


def test_quantile_map_monotone():
    rng = np.random.default_rng(7)
    pred = rng.gamma(2.0, 1.0, 400)
    obs = rng.gamma(3.0, 2.0, 400)
    apply = np.sort(rng.uniform(-1, 12, 300))  # includes out-of-range values
    out = quantile_map(pred, obs, apply)
    assert np.all(np.diff(out) >= -1e-12)


def test_quantile_map_clamps_out_of_range():
    train = np.linspace(1, 2, 100)
    obs = np.linspace(10, 20, 100)
    out = quantile_map(train, obs, np.array([0.0, 5.0]))
    assert out[0] == pytest.approx(10.0)
    assert out[1] == pytest.approx(20.0)


def test_quantile_map_empty_train_rejected():
    with pytest.raises(ScenarioError):
        quantile_map(np.array([]), np.array([1.0]), np.array([1.0]))


# --- solar ----------------------------------------------------------------------

def test_solar_night():
    assert solar_power(0.0, 12.0, 100.0) == 0.0


def test_solar_reference_conditions():
    # irradiance 1000 with ambient chosen so the cell sits at 25 C
    t_amb = 25.0 - (45.0 - 20.0) / 800.0 * 1000.0
    assert solar_power(1000.0, t_amb, 100.0) == pytest.approx(100.0)


def test_solar_hand_evaluation():
    # G=800: cell temp = 20 + 25/800*800 = 45, derating 1 - 0.004*20 = 0.92
    expected = 100.0 * 0.8 * 0.92
    assert solar_power(800.0, 20.0, 100.0) == pytest.approx(expected, abs=1e-12)


def test_solar_clipped_to_capacity():
    out = solar_power(np.array([1500.0]), np.array([-20.0]), 100.0)
    assert out[0] <= 100.0
    assert np.all(solar_power(np.linspace(0, 1400, 50), 30.0, 80.0) >= 0.0)


# --- hydro ----------------------------------------------------------------------

def test_hydro_uniform_month():
    idx = hourly_index("2030-01-01", 744)  # January has 744 hours
    period = month_of(idx)
    out = disaggregate_hydro([744.0], period)
    np.testing.assert_allclose(out, 1.0)


def test_hydro_two_periods():
    period = np.repeat([0, 1], 168)
    out = disaggregate_hydro([168.0, 336.0], period)
    assert set(np.round(out[:168], 12)) == {1.0}
    assert set(np.round(out[168:], 12)) == {2.0}


def test_hydro_reconstructs_totals():
    idx = hourly_index("2030-01-01", 24 * 365)
    period = quarter_month_of(idx)
    rng = np.random.default_rng(8)
    energy = rng.uniform(0, 5000, period.max() + 1)
    out = disaggregate_hydro(energy, period)
    assert out.sum() == pytest.approx(energy.sum(), rel=1e-9)


def test_quarter_month_boundaries():
    idx = pd.DatetimeIndex(["2030-01-01", "2030-01-07 23:00", "2030-01-08",
                            "2030-01-14 23:00", "2030-01-15", "2030-01-22",
                            "2030-01-31 23:00", "2030-02-01"])
    period = quarter_month_of(idx)
    assert list(period) == [0, 0, 1, 1, 2, 3, 3, 4]


def test_hydro_rejects_period_count_mismatch():
    with pytest.raises(ScenarioError):
        disaggregate_hydro([100.0, 200.0], np.zeros(10, dtype=int))


def test_small_hydro_paper_factors():
    # January factor 0.576 and September factor 0.278
    factors = [0.576, 0.551, 0.642, 0.663, 0.567, 0.397,
               0.388, 0.328, 0.278, 0.371, 0.523, 0.564]
    idx = hourly_index("2030-01-01", 24 * 365)
    out = small_hydro_series(100.0, factors, idx)
    assert out[0] == pytest.approx(57.6)
    sept = out[idx.month == 9]
    np.testing.assert_allclose(sept, 27.8)


def test_small_hydro_zero_factor():
    idx = hourly_index("2030-01-01", 48)
    out = small_hydro_series(100.0, [0.0] * 12, idx)
    np.testing.assert_allclose(out, 0.0)


def test_small_hydro_rejects_bad_factor():
    idx = hourly_index("2030-01-01", 24)
    with pytest.raises(ScenarioError):
        small_hydro_series(100.0, [1.5] + [0.5] * 11, idx)


# --- load scaling and disaggregation ---------------------------------------------

def test_scale_load_summer():
    idx = pd.DatetimeIndex(["2030-07-15 12:00"])
    out = scale_load_to_peaks(np.array([100.0]), idx)
    assert out[0] == pytest.approx(104.0)


def test_scale_load_winter():
    idx = pd.DatetimeIndex(["2030-01-15 12:00"])
    out = scale_load_to_peaks(np.array([100.0]), idx)
    assert out[0] == pytest.approx(103.0)


def test_scale_load_identity():
    idx = hourly_index("2030-01-01", 24 * 365)
    load = np.random.default_rng(9).uniform(0, 100, len(idx))
    out = scale_load_to_peaks(load, idx, summer_scale=0.0, winter_scale=0.0)
    np.testing.assert_allclose(out, load)


def test_disaggregate_zonal_two_buses():
    out = disaggregate_zonal({"A": np.array([100.0])},
                             {"A": {"b1": 0.25, "b2": 0.75}})
    assert out["b1"][0] == pytest.approx(25.0)
    assert out["b2"][0] == pytest.approx(75.0)


def test_disaggregate_zonal_passthrough():
    series = np.arange(5.0)
    out = disaggregate_zonal({"A": series}, {"A": {"b1": 1.0}})
    np.testing.assert_allclose(out["b1"], series)


def test_disaggregate_zonal_conserves_totals():
    rng = np.random.default_rng(10)
    series = {z: rng.uniform(0, 500, 100) for z in "ABC"}
    ratios = {}
    for z in "ABC":
        raw = rng.uniform(0.1, 1.0, 4)
        raw /= raw.sum()
        ratios[z] = {f"{z}{i}": float(r) for i, r in enumerate(raw)}
    out = disaggregate_zonal(series, ratios)
    for z in "ABC":
        zone_sum = sum(out[f"{z}{i}"] for i in range(4))
        np.testing.assert_allclose(zone_sum, series[z], rtol=1e-9)


def test_disaggregate_zonal_rejects_bad_ratio_sum():
    with pytest.raises(ScenarioError, match="sum"):
        disaggregate_zonal({"A": np.ones(3)}, {"A": {"b1": 0.5, "b2": 0.25}})
