import numpy as np
import pytest

from src.core.data_loaders import load_run_config, load_series, write_series
from src.core.errors import ConfigError, SeriesFormatError
from src.core.parsers import parse_bool, parse_float_pair, parse_int_list
from src.core.series import TimeSeries


def test_series_csv_round_trip(tmp_path):
    series = TimeSeries(np.random.default_rng(2).normal(size=300).cumsum())
    path = write_series(series, tmp_path / "series.csv")
    loaded = load_series(path)
    np.testing.assert_array_equal(loaded.values, series.values)
    assert path.read_text().splitlines()[0] == "t,value"


def test_load_series_rejects_bad_header(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("step,value\n0,1.0\n")
    with pytest.raises(SeriesFormatError):
        load_series(path)


def test_load_series_rejects_non_finite(tmp_path):
    path = tmp_path / "nan.csv"
    path.write_text("t,value\n0,1.0\n1,nan\n")
    with pytest.raises(SeriesFormatError):
        load_series(path)
    path.write_text("t,value\n0,1.0\n1,abc\n")
    with pytest.raises(SeriesFormatError):
        load_series(path)


def test_load_series_rejects_out_of_order_steps(tmp_path):
    path = tmp_path / "order.csv"
    path.write_text("t,value\n0,1.0\n2,2.0\n1,3.0\n")
    with pytest.raises(SeriesFormatError, match="monotonic"):
        load_series(path)


def test_load_series_missing_file(tmp_path):
    with pytest.raises(FileNotFoundError):
        load_series(tmp_path / "missing.csv")


def test_load_run_config_flat(tmp_path):
    path = tmp_path / "run.yaml"
    path.write_text("epochs: 3\nlearning-rate: 0.01\nseeds: [0, 1]\n")
    assert load_run_config(path) == {"epochs": 3, "learning_rate": 0.01, "seeds": [0, 1]}


def test_load_run_config_empty_and_nested(tmp_path):
    path = tmp_path / "empty.yaml"
    path.write_text("")
    assert load_run_config(path) == {}
    path.write_text("train:\n  epochs: 3\n")
    with pytest.raises(ConfigError):
        load_run_config(path)
    path.write_text("- 1\n- 2\n")
    with pytest.raises(ConfigError):
        load_run_config(path)


def test_parse_int_list():
    assert parse_int_list("1,5") == [1, 5]
    assert parse_int_list("1,10:30:10") == [1, 10, 20, 30]
    assert parse_int_list("0:3") == [0, 1, 2, 3]
    assert parse_int_list(7) == [7]
    assert parse_int_list([2, 3]) == [2, 3]
    with pytest.raises(ConfigError):
        parse_int_list("a,b")
    with pytest.raises(ConfigError):
        parse_int_list("1:5:0")
    with pytest.raises(ConfigError):
        parse_int_list("")


def test_parse_float_pair_and_bool():
    assert parse_float_pair("0.005,0.02") == (0.005, 0.02)
    assert parse_float_pair([1, 2]) == (1.0, 2.0)
    with pytest.raises(ConfigError):
        parse_float_pair("1")
    assert parse_bool("yes") is True
    assert parse_bool("0") is False
    with pytest.raises(ConfigError):
        parse_bool("maybe")
