import json

import pandas as pd
import pytest

from src.cli import main
from src.core.serialization import load_model

SMALL_WINDOWS = ["--short-len", "3", "--medium-len", "5", "--long-len", "8"]


def _gen(path, *extra):
    return main(["gen", "--out", str(path), "--quiet", *extra])


@pytest.fixture
def series_csv(tmp_path):
    path = tmp_path / "series.csv"
    assert _gen(path, "--seed", "1", "--length", "600") == 0
    return path


@pytest.fixture
def model_file(tmp_path, series_csv):
    path = tmp_path / "model.bin"
    code = main(["train", "--series", str(series_csv), "--model-out", str(path), "--quiet",
                 "--dim", "2", "--k", "3", "--epochs", "1", *SMALL_WINDOWS])
    assert code == 0
    return path


def test_gen_is_byte_identical(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert _gen(a, "--seed", "7", "--length", "300") == 0
    assert _gen(b, "--seed", "7", "--length", "300") == 0
    assert a.read_bytes() == b.read_bytes()
    assert len(pd.read_csv(a)) == 300


def test_flags_override_config_file(tmp_path):
    config = tmp_path / "run.yaml"
    config.write_text("length: 300\nseed: 2\n")
    out = tmp_path / "series.csv"
    assert _gen(out, "--config", str(config)) == 0
    assert len(pd.read_csv(out)) == 300
    assert _gen(out, "--config", str(config), "--length", "400") == 0
    assert len(pd.read_csv(out)) == 400


def test_unknown_config_key_is_a_usage_error(tmp_path, capsys):
    config = tmp_path / "run.yaml"
    config.write_text("lenght: 300\n")
    assert _gen(tmp_path / "series.csv", "--config", str(config)) == 2
    assert capsys.readouterr().err.startswith("config_error: unknown config key 'lenght'")


def test_invalid_value_is_a_usage_error(tmp_path, capsys):
    assert _gen(tmp_path / "series.csv", "--length", "10") == 2
    assert capsys.readouterr().err.startswith("config_error:")


def test_missing_series_file(tmp_path, capsys):
    code = main(["train", "--series", str(tmp_path / "absent.csv"), "--model-out", str(tmp_path / "m.bin")])
    assert code == 3
    assert capsys.readouterr().err.startswith("missing_file:")


def test_malformed_series_file(tmp_path, capsys):
    path = tmp_path / "bad.csv"
    path.write_text("t,value\n0,1.0\n1,nan\n")
    assert main(["train", "--series", str(path), "--model-out", str(tmp_path / "m.bin")]) == 3
    assert capsys.readouterr().err.startswith("malformed_series:")


def test_train_writes_model_and_log(tmp_path, model_file):
    assert model_file.exists()
    log = pd.read_csv(tmp_path / "model.log.csv")
    assert list(log.columns) == ["epoch", "mean_loss", "val_mae"]
    assert len(log) == 1


def test_memory_train_only_flag(tmp_path, series_csv, model_file):
    train_only = tmp_path / "train_only.bin"
    code = main(["train", "--series", str(series_csv), "--model-out", str(train_only), "--quiet",
                 "--dim", "2", "--k", "3", "--epochs", "1", "--memory-train-only", *SMALL_WINDOWS])
    assert code == 0
    # 600 values split into 420 train and 60 validation, long window 8
    assert load_model(model_file).memory.count == 480 - 9
    assert load_model(train_only).memory.count == 420 - 9


def test_truncated_model_file(tmp_path, series_csv, model_file, capsys):
    truncated = tmp_path / "truncated.bin"
    truncated.write_bytes(model_file.read_bytes()[:-7])
    code = main(["rollout", "--model", str(truncated), "--series", str(series_csv),
                 "--out", str(tmp_path / "r.csv")])
    assert code == 3
    assert capsys.readouterr().err.startswith("truncated_file:")


def test_rollout_trace(tmp_path, series_csv, model_file):
    out = tmp_path / "rollout.csv"
    code = main(["rollout", "--model", str(model_file), "--series", str(series_csv), "--anchor", "100",
                 "--horizon", "20", "--trace-state", "--out", str(out), "--quiet"])
    assert code == 0
    frame = pd.read_csv(out)
    assert list(frame.columns) == ["t", "predicted", "actual", "dx_mem", "z_0", "z_1"]
    assert frame["t"].tolist() == list(range(100, 120))


def test_rollout_anchor_past_series(tmp_path, series_csv, model_file, capsys):
    code = main(["rollout", "--model", str(model_file), "--series", str(series_csv), "--anchor", "700",
                 "--out", str(tmp_path / "r.csv")])
    assert code == 3
    assert capsys.readouterr().err.startswith("insufficient_history:")


def test_eval_with_baselines(tmp_path, series_csv, model_file):
    out_dir = tmp_path / "eval"
    code = main(["eval", "--model", str(model_file), "--series", str(series_csv), "--quiet",
                 "--baselines", "knn,persistence", "--knn-window", "8", "--horizons", "1,5",
                 "--drift-horizons", "1,10", "--warmup", "8", "--stride", "5", "--out-dir", str(out_dir)])
    assert code == 0
    metrics = pd.read_csv(out_dir / "metrics.csv")
    assert list(metrics.columns) == ["seed", "model", "metric", "horizon", "value"]
    assert list(dict.fromkeys(metrics["model"])) == ["model", "knn", "persistence"]
    assert len(metrics) == 3 * (2 + 2)

    footprint = pd.read_csv(out_dir / "footprint.csv", dtype=str, keep_default_na=False)
    assert footprint.loc[2, "param_kb"] == "--"
    manifest = json.loads((out_dir / "manifest.json").read_text())
    assert [entry["path"] for entry in manifest["outputs"]] == ["footprint.csv", "metrics.csv"]


def test_help_exits_cleanly(capsys):
    with pytest.raises(SystemExit) as info:
        main(["--help"])
    assert info.value.code == 0
    assert "bench" in capsys.readouterr().out


def test_unknown_subcommand_exits_with_usage_error():
    with pytest.raises(SystemExit) as info:
        main(["fly"])
    assert info.value.code == 2


@pytest.mark.parametrize("argv", [["fly"], ["train"], ["gen", "--length", "many"], ["bench", "--frobnicate"]])
def test_usage_errors_print_one_coded_line(capsys, argv):
    with pytest.raises(SystemExit) as info:
        main(argv)
    assert info.value.code == 2
    err = capsys.readouterr().err
    assert err.count("\n") == 1
    assert err.startswith("config_error: comet")
    assert "usage:" not in err


@pytest.mark.slow
def test_bench_reruns_are_byte_identical(tmp_path):
    args = ["bench", "--quiet", "--seeds", "0", "--models", "knn,comet", "--length", "800",
            "--epochs", "1", "--dim", "2", "--k", "3", "--knn-window", "8", "--warmup", "8",
            "--horizons", "1,5", "--drift-horizons", "1,10,20", "--rollout-horizon", "30", *SMALL_WINDOWS]
    first, second = tmp_path / "first", tmp_path / "second"
    assert main([*args, "--out-dir", str(first)]) == 0
    assert main([*args, "--out-dir", str(second)]) == 0

    for name in ("metrics.csv", "summary.csv", "footprint.csv", "qualitative.csv", "acceptance.csv",
                 "manifest.json", "rollout_comet_0.csv", "rollout_knn_0.csv"):
        assert (first / name).read_bytes() == (second / name).read_bytes(), name
    assert len(pd.read_csv(first / "metrics.csv")) == 2 * (2 + 3)
