import json

import numpy as np
import pandas as pd
import pytest

from src.baselines import CometForecaster, Forecaster, PersistenceForecaster
from src.core.comet import init_model
from src.core.errors import ConfigError, HorizonTooLongError, InsufficientHistoryError
from src.core.series import TimeSeries, WindowSpec
from src.datagen import GenConfig
from src.evalkit import (
    acceptance_checks,
    BenchSettings,
    EvalConfig,
    EvalReport,
    anchor_stops,
    build_forecaster,
    drift_curve,
    evaluate_forecaster,
    footprint_report,
    footprint_rows,
    mae_at_horizon,
    qualitative_rows,
    rollout_trace,
    seed_sweep,
    step_bound_violations,
    summarize,
    verify_manifest,
    write_manifest,
    write_metrics,
    write_rollouts,
)
from src.evalkit.footprint import format_kb
from src.evalkit.sweep import run_cell


class RampOracle(Forecaster):
    name = "ramp_oracle"

    @property
    def min_history(self):
        return 1

    def fit(self, train, validation=None, verbose=True):
        return self

    def predict_next(self, history):
        return float(np.asarray(history)[-1] + 1.0)

    def parameter_bytes(self):
        return 0


RAMP = TimeSeries(np.arange(400.0))


def test_anchor_stops():
    np.testing.assert_array_equal(anchor_stops(100, 60, 20, 10), [60, 70, 80])
    with pytest.raises(HorizonTooLongError):
        anchor_stops(100, 60, 41, 10)
    with pytest.raises(ConfigError):
        anchor_stops(100, 60, 0, 10)


def test_persistence_on_ramp_errs_by_horizon():
    model = PersistenceForecaster()
    assert mae_at_horizon(model, RAMP, 5) == pytest.approx(5.0)
    curve = drift_curve(model, RAMP, [20, 1, 10])
    assert [h for h, _ in curve] == [1, 10, 20]
    for h, drift in curve:
        assert drift == pytest.approx(float(h))


def test_oracle_has_zero_error():
    model = RampOracle()
    assert mae_at_horizon(model, RAMP, 1) == 0.0
    assert all(drift == 0.0 for _, drift in drift_curve(model, RAMP, [1, 50, 100]))


def test_drift_curve_matches_mae_on_shared_anchors(generated_series):
    model = PersistenceForecaster()
    test = generated_series.values[:500]
    curve = dict(drift_curve(model, test, [1, 5, 30], stride=7))
    for h in (1, 5, 30):
        mae = mae_at_horizon(model, test, h, stride=7, horizon_limit=30)
        assert abs(curve[h] - mae) <= 1e-12


def test_warmup_must_cover_model_history():
    model = CometForecaster.from_model(init_model(TimeSeries(np.full(200, 1.0)), WindowSpec(), 2, 3))
    with pytest.raises(InsufficientHistoryError):
        mae_at_horizon(model, RAMP, 1, warmup=30)


def test_constant_comet_has_zero_drift():
    model = CometForecaster.from_model(init_model(TimeSeries(np.full(200, 1.0)), WindowSpec(), 2, 3))
    test = TimeSeries(np.full(300, 1.0))
    assert all(drift == 0.0 for _, drift in drift_curve(model, test, [1, 10, 50]))
    assert mae_at_horizon(model, test, 5) == 0.0


def test_step_bound_violations():
    predictions = np.array([[1.0, 1.5, 1.4], [0.0, 0.1, 0.9]])
    assert step_bound_violations(predictions, np.array([1.2, 0.0]), 0.5) == 1
    assert step_bound_violations(predictions, np.array([1.2, 0.0]), 1.0) == 0


def test_rollout_trace_pads_past_the_end():
    frame = rollout_trace(PersistenceForecaster(), np.arange(10.0), 8, 4)
    assert list(frame.columns) == ["t", "predicted", "actual"]
    assert frame["t"].tolist() == [8, 9, 10, 11]
    assert frame["predicted"].tolist() == [7.0] * 4
    assert frame["actual"].iloc[:2].tolist() == [8.0, 9.0]
    assert frame["actual"].iloc[2:].isna().all()


def test_evaluate_forecaster_collects_everything(generated_series):
    model = build_forecaster("knn", 0)
    model.fit(TimeSeries(generated_series.values[:500]), verbose=False)
    config = EvalConfig(horizons_short=(1, 5), drift_horizons=(1, 10, 20), rollout_horizon=30, seeds=(0,))
    report = evaluate_forecaster(model, "knn", 0, TimeSeries(generated_series.values[500:]), config)
    assert set(report.mae) == {1, 5}
    assert [h for h, _ in report.drift_curve] == [1, 10, 20]
    assert report.mae[1] > 0 and report.drift_at(20) > 0
    assert len(report.rollout_trace) == 30
    assert report.bound_violations == 0
    assert report.param_bytes == 0 and report.memory_bytes > 0


def test_build_forecaster_rejects_unknown_model():
    with pytest.raises(ConfigError):
        build_forecaster("transformer", 0)


SWEEP_GEN = GenConfig(length=800)
SWEEP_EVAL = EvalConfig(horizons_short=(1, 5), drift_horizons=(1, 10, 20), rollout_horizon=30, seeds=(0, 1))


def test_seed_sweep_cardinality_and_order():
    reports = seed_sweep(["persistence", "knn"], SWEEP_GEN, SWEEP_EVAL, BenchSettings(), verbose=False)
    assert [(r.seed, r.model) for r in reports] == [
        (0, "persistence"), (0, "knn"), (1, "persistence"), (1, "knn")]
    for report in reports:
        assert len(report.metric_rows()) == 2 + 3


def test_seed_sweep_is_independent_of_model_order():
    forward = seed_sweep(["persistence", "knn"], SWEEP_GEN, SWEEP_EVAL, verbose=False)
    backward = seed_sweep(["knn", "persistence"], SWEEP_GEN, SWEEP_EVAL, verbose=False)
    by_cell = {(r.seed, r.model): r for r in backward}
    for report in forward:
        other = by_cell[(report.seed, report.model)]
        assert report.mae == other.mae
        assert report.drift_curve == other.drift_curve


def test_seed_sweep_rejects_unknown_model():
    with pytest.raises(ConfigError):
        seed_sweep(["knn", "nope"], SWEEP_GEN, SWEEP_EVAL, verbose=False)


def _report(seed, model, mae1, drift, violations=0):
    return EvalReport(seed, model, {1: mae1}, drift, 0, 0, None, violations)


def test_summarize_mean_and_worst():
    reports = [_report(0, "comet", 1.0, [(10, 2.0)]), _report(1, "comet", 3.0, [(10, 4.0)])]
    summary = summarize(reports)
    row = summary[(summary["metric"] == "mae") & (summary["horizon"] == 1)].iloc[0]
    assert row["mean"] == 2.0 and row["worst"] == 3.0
    assert len(summary) == 2


def test_qualitative_rows():
    drift = [(10, 1.0), (20, 2.0), (200, 4.0)]
    reports = [_report(0, "knn", 0.02, drift), _report(0, "comet", 0.01, drift, violations=0)]
    frame = qualitative_rows(reports)
    assert list(frame.columns) == ["seed", "model", "metric", "value", "limit", "passed"]
    values = {(r.model, r.metric): r.value for r in frame.itertuples()}
    assert values[("knn", "drift_ratio_200_10")] == 4.0
    assert values[("comet", "drift_ratio_200_20")] == 2.0
    assert values[("comet", "mae1_vs_best_baseline")] == 0.5
    assert values[("comet", "bound_violations")] == 0.0
    assert ("knn", "mae1_vs_best_baseline") not in values

    verdicts = {(r.model, r.metric): (r.limit, r.passed) for r in frame.itertuples()}
    assert verdicts[("comet", "drift_ratio_200_10")] == ("<=3", False)
    assert verdicts[("comet", "mae1_vs_best_baseline")] == ("<=2.5", True)
    assert verdicts[("comet", "bound_violations")] == ("<=0", True)
    assert verdicts[("knn", "drift_ratio_200_10")] == ("", None)


def test_qualitative_thresholds_are_inclusive():
    reports = [_report(0, "mlp", 0.25, [(10, 1.0), (20, 1.0), (200, 3.0)]),
               _report(0, "comet", 0.625, [(10, 1.0), (20, 2.0), (200, 3.0)])]
    frame = qualitative_rows(reports)
    passed = {(r.model, r.metric): r.passed for r in frame.itertuples()}
    assert passed[("comet", "drift_ratio_200_10")] is True
    assert passed[("comet", "mae1_vs_best_baseline")] is True
    assert passed[("mlp", "drift_ratio_200_20")] is True
    assert passed[("mlp", "drift_ratio_200_10")] is None


def test_acceptance_checks_pass_and_fail():
    stable = [(10, 1.0), (20, 1.2), (200, 2.0)]
    exploding = [(10, 1.0), (20, 1.0), (200, 5.0)]
    reports = []
    for seed in range(4):
        reports.append(_report(seed, "knn", 0.02, stable))
        reports.append(_report(seed, "mlp", 0.03, exploding if seed < 2 else stable))
        reports.append(_report(seed, "comet", 0.03, stable))
    checks = acceptance_checks(qualitative_rows(reports)).set_index("check")
    assert checks.loc["comet_drift_bounded", "passed"]
    assert checks.loc["comet_mae1_competitive", "passed"]
    assert checks.loc["step_bounds_hold", "passed"]
    assert checks.loc["baseline_drift_unstable", "passed"]
    assert "mlp 2/4 seeds" in checks.loc["baseline_drift_unstable", "detail"]

    reports[-1] = _report(3, "comet", 0.06, [(10, 1.0), (20, 1.5), (200, 3.1)], violations=2)
    checks = acceptance_checks(qualitative_rows(reports)).set_index("check")
    assert not checks.loc["comet_drift_bounded", "passed"]
    assert "3.1" in checks.loc["comet_drift_bounded", "detail"]
    assert not checks.loc["comet_mae1_competitive", "passed"]
    assert not checks.loc["step_bounds_hold", "passed"]


def test_acceptance_checks_skip_missing_metrics():
    reports = [_report(0, "knn", 0.02, [(1, 0.1), (10, 0.2)])]
    checks = acceptance_checks(qualitative_rows(reports))
    assert checks["check"].tolist() == ["step_bounds_hold"]


@pytest.mark.slow
@pytest.mark.parametrize("seed", [0, 1, 2, 3])
def test_default_comet_drift_stays_bounded(seed):
    report = run_cell(seed, "comet", GenConfig(), EvalConfig(seeds=(seed,)), BenchSettings())
    frame = qualitative_rows([report])
    row = frame[frame["metric"] == "drift_ratio_200_10"].iloc[0]
    assert row["passed"], f"drift(200)/drift(10) = {row['value']:.3f} on seed {seed}"
    assert report.bound_violations == 0


def test_footprint_formatting():
    frame = footprint_rows([("comet", 4112, 343200), ("knn", 0, 7600)])
    assert frame.loc[0, "param_kb"] == "4.015625"
    assert frame.loc[0, "memory_kb"] == "335.15625"
    assert frame.loc[1, "param_kb"] == "--"
    assert format_kb(0) == "--"


def test_footprint_report_uses_model_accounting():
    model = CometForecaster.from_model(init_model(TimeSeries(np.full(2661, 1.0)), WindowSpec(), 8, 8))
    frame = footprint_report({"comet": model, "persistence": PersistenceForecaster()})
    assert frame["model"].tolist() == ["comet", "persistence"]
    assert frame.loc[0, "param_kb"] == "4.015625"
    assert frame.loc[1, "memory_kb"] == "--"


def test_result_files_and_manifest(tmp_path):
    trace = pd.DataFrame({"t": [60, 61], "predicted": [1.0, 1.1], "actual": [1.0, np.nan]})
    reports = [EvalReport(0, "comet", {1: 0.01}, [(1, 0.01), (10, 0.05)], 4112, 1000, trace, 0)]
    metrics = write_metrics(reports, tmp_path / "metrics.csv")
    rollouts = write_rollouts(reports, tmp_path / "rollouts")
    assert metrics.read_text().splitlines() == [
        "seed,model,metric,horizon,value",
        "0,comet,mae,1,0.01",
        "0,comet,drift,1,0.01",
        "0,comet,drift,10,0.05",
    ]
    assert rollouts[0].name == "rollout_comet_0.csv"
    assert rollouts[0].read_text().splitlines()[-1] == "61,1.1,"

    manifest_path = write_manifest(tmp_path, {"epochs": 1}, [0], [metrics, *rollouts])
    manifest = json.loads(manifest_path.read_text())
    assert [entry["path"] for entry in manifest["outputs"]] == ["metrics.csv", "rollouts/rollout_comet_0.csv"]
    assert manifest["seeds"] == [0]
    assert verify_manifest(manifest_path) == []

    metrics.write_text("tampered\n")
    assert verify_manifest(manifest_path) == ["metrics.csv"]
