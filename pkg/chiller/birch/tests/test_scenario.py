"""Tests for the scenario pipeline and its outputs"""

import os

import numpy as np
import pandas as pd
import pytest

from chiller.birch.scenario import (NO_TARGETS, MaxEntSettings, PointRecord,
                                    RunReport, ScenarioConfig, emit_outputs,
                                    first_crossing, fit_percentiles,
                                    load_preset, run_scenario,
                                    target_temperatures)
from chiller.larch.compare import Verdict, cooling_report
from chiller.larch.thermometry import mvu_estimator
from chiller.poplar.functions.io import read_json
from chiller.spruce.dynamics import RefrigeratorParams, Regime, Trajectory


def weak_params(temps=(0.9, 0.9, 100.0)):
    return RefrigeratorParams(E1=1.0, E2=10.0, E3=9.0, g=0.05, T1=temps[0],
                              T2=temps[1], T3=temps[2], alpha1=1e-3,
                              alpha2=1e-3, alpha3=1e-3, regime=Regime.WEAK)


@pytest.fixture(scope="module")
def short_config():
    return ScenarioConfig(params=weak_params(), t_end=300.0, dt=0.01,
                          sample_every=100, n_sample_points=3,
                          maxent=MaxEntSettings(M_max=4),
                          seed_label="short")


@pytest.fixture(scope="module")
def short_report(short_config):
    return run_scenario(short_config)


def test_preset_parameters():
    strong = load_preset("strong")
    weak = load_preset("weak")
    assert strong.params.g == 0.8
    assert (strong.params.alpha1, strong.params.alpha3) == (1e-4, 1e-2)
    assert strong.t_end == 30000.0
    assert weak.params.g == 0.05
    assert weak.params.regime == Regime.WEAK
    assert weak.params.temperatures == (0.9, 0.9, 100.0)
    assert weak.t_end == 4000.0


def test_unknown_preset():
    with pytest.raises(ValueError):
        load_preset("medium")


def test_config_round_trip(short_config):
    assert ScenarioConfig.from_dict(short_config.to_dict()) == short_config


def test_config_rejects_nonpositive_horizon():
    with pytest.raises(ValueError):
        ScenarioConfig(params=weak_params(), t_end=0.0, dt=0.01)


def test_config_overrides(short_config):
    changed = short_config.with_overrides(dt=0.005, t_end=None)
    assert changed.dt == 0.005
    assert changed.t_end == short_config.t_end


def test_maxent_settings_validation():
    with pytest.raises(ValueError):
        MaxEntSettings(M_start=3, M_max=3)


def test_target_temperatures():
    targets = target_temperatures(0.9, 0.33, 9, 0.05)
    assert len(targets) == 9
    assert targets[0] == pytest.approx(0.85)
    assert targets[7] == pytest.approx(0.50)
    assert targets[-1] == 0.33


def test_no_targets_without_cooling():
    assert target_temperatures(0.9, 0.9, 9, 0.05) == []


def test_first_crossing():
    traj = Trajectory(times=np.array([0.0, 1.0, 2.0, 3.0]), states=[],
                      cold_temps=np.array([0.9, 0.8, 0.7, 0.75]))
    assert first_crossing(traj, 0.8) == 1.0
    assert first_crossing(traj, 0.72) == 2.0
    assert first_crossing(traj, 0.5) is None


def test_scenario_without_gradient():
    config = ScenarioConfig(params=weak_params((0.9, 0.9, 0.9)), t_end=10.0,
                            dt=0.01, sample_every=100)
    report = run_scenario(config)
    assert report.points == []
    assert report.note == NO_TARGETS
    assert report.steady_temperature == pytest.approx(0.9, abs=1e-8)


def test_scenario_points(short_report):
    points = short_report.points
    assert len(points) == 3
    assert [p.steady for p in points] == [False, False, True]
    assert points[0].T_target == pytest.approx(0.85)
    assert points[-1].T_target == short_report.steady_temperature
    assert short_report.initial_percentiles is not None


def test_transient_points_are_compared(short_report):
    for point in short_report.points[:2]:
        assert point.time is not None and point.time > 0
        assert point.cooling is not None
        assert point.std_verdict in set(Verdict)
        assert point.M_used is not None


def test_transient_points_in_time_order(short_report):
    first, second = short_report.points[:2]
    assert first.time <= second.time


def test_emit_outputs(short_report, tmp_path):
    manifest = emit_outputs(short_report, str(tmp_path))
    assert "trajectory.csv" in manifest
    assert "figure2a.csv" in manifest
    assert "report.json" in manifest
    n_compared = sum(p.cooling is not None for p in short_report.points)
    n_percentile_files = sum(name.startswith("percentiles_")
                             for name in manifest)
    assert n_percentile_files == n_compared
    traj = pd.read_csv(manifest["trajectory.csv"])
    assert list(traj.columns) == ["t", "T1", "T2", "T3", "trace_err",
                                  "min_eig"]
    assert (traj["trace_err"] <= 1e-9).all()
    for path in manifest.values():
        assert os.path.exists(path)


def test_percentile_file_header(short_report, tmp_path):
    manifest = emit_outputs(short_report, str(tmp_path))
    df = pd.read_csv(manifest["percentiles_1.csv"])
    assert list(df.columns) == ["i", "initial_Qi", "final_Qi", "delta_Ti"]
    assert list(df["i"]) == list(range(1, 100))


def test_report_json_repeats_config(short_report, short_config, tmp_path):
    manifest = emit_outputs(short_report, str(tmp_path))
    saved = read_json(manifest["report.json"])
    assert ScenarioConfig.from_dict(saved["config"]) == short_config
    assert len(saved["points"]) == 3
    assert "numpy" in saved["provenance"]


def test_emit_is_deterministic(short_report, tmp_path):
    first = emit_outputs(short_report, str(tmp_path / "a"))
    second = emit_outputs(short_report, str(tmp_path / "b"))
    for name in first:
        if name.endswith(".csv"):
            with open(first[name]) as a, open(second[name]) as b:
                assert a.read() == b.read()


def test_emit_empty_report(short_config, tmp_path):
    manifest = emit_outputs(RunReport(config=short_config), str(tmp_path))
    assert list(manifest) == ["report.json"]


def test_failed_points(short_config):
    report = RunReport(config=short_config, points=[
        PointRecord(index=1, T_target=0.85, steady=False),
        PointRecord(index=2, T_target=0.8, steady=True, error="boom"),
    ])
    assert [p.index for p in report.failed_points] == [2]


def test_single_shot_points_report_two_moment_tables(short_report):
    for point in short_report.points:
        assert point.M_used == 2
        assert point.converged is False


def test_strong_preset_targets_cooling():
    config = load_preset("strong").with_overrides(
        maxent=MaxEntSettings(M_max=3))
    targets = target_temperatures(0.9, 0.33012, 9, 0.05)

    def table(T):
        fitted, M_used, converged, message = fit_percentiles(
            mvu_estimator(1.0, T), config)
        assert (M_used, converged) == (2, False)
        assert "2-moment table" in message
        return fitted

    initial = table(0.9)
    for T in targets:
        report = cooling_report(initial, table(T))
        assert np.all(np.diff(report.magnitudes) > 0)
        if T > 0.82:
            assert not report.cooled
        else:
            assert report.cooled
            assert report.first_cooling_percentile < 50
