import struct

import numpy as np
import pytest

from src.core.comet import predict_step
from src.core.errors import (
    BadMagicError,
    ModelFormatError,
    TruncatedFileError,
    UnsupportedVersionError,
)
from src.core.models import BehaviorState
from src.core.serialization import HEADER, load_model, model_from_bytes, model_to_bytes, save_model


def test_round_trip_predictions_agree(tiny_model, generated_series, tmp_path):
    path = save_model(tiny_model, tmp_path / "model.bin")
    loaded = load_model(path)
    assert loaded.window_spec == tiny_model.window_spec
    assert loaded.k == tiny_model.k
    assert loaded.memory.count == tiny_model.memory.count

    starts = np.random.default_rng(0).integers(0, generated_series.length - 40, size=100)
    for start in starts:
        history = generated_series.values[start:start + 40]
        original, _, _ = predict_step(tiny_model, history, BehaviorState.zeros(2))
        restored, _, _ = predict_step(loaded, history, BehaviorState.zeros(2))
        assert restored == pytest.approx(original, rel=1e-6, abs=1e-6)


def test_file_size_matches_layout(tiny_model):
    data = model_to_bytes(tiny_model)
    params = 2 * tiny_model.window_spec.total + 2 * 8 + 4
    assert len(data) == HEADER.size + 4 * params + tiny_model.memory.count * 9 * 4
    assert data[:4] == b"CSG1"


def test_bad_magic(tiny_model):
    data = bytearray(model_to_bytes(tiny_model))
    data[:4] = b"NOPE"
    with pytest.raises(BadMagicError, match="not a COMET model file"):
        model_from_bytes(bytes(data))


def test_truncated_memory_reports_byte_counts(tiny_model):
    data = model_to_bytes(tiny_model)
    with pytest.raises(TruncatedFileError) as info:
        model_from_bytes(data[:-10])
    assert info.value.actual == info.value.expected - 10
    assert "memory section" in str(info.value)


def test_truncated_header(tiny_model):
    data = model_to_bytes(tiny_model)
    with pytest.raises(TruncatedFileError):
        model_from_bytes(data[:10])
    with pytest.raises(TruncatedFileError):
        model_from_bytes(data[:2])


def test_unsupported_version(tiny_model):
    data = bytearray(model_to_bytes(tiny_model))
    struct.pack_into("<H", data, 4, 2)
    with pytest.raises(UnsupportedVersionError):
        model_from_bytes(bytes(data))


def test_trailing_bytes_rejected(tiny_model):
    with pytest.raises(ModelFormatError):
        model_from_bytes(model_to_bytes(tiny_model) + b"\x00\x00")


def test_missing_model_file(tmp_path):
    with pytest.raises(FileNotFoundError):
        load_model(tmp_path / "absent.bin")
