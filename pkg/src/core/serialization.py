"""Binary model file format.

Layout (little-endian, no padding)::

    magic      4 bytes   b"CSG1"
    version    u16       1
    D          u16       latent dimension
    L_s L_m L_l u16 x3   window lengths
    N          u32       memory entries
    K          u16       neighbourhood size
    float32 x D*L_s      encoder short   (row-major)
    float32 x D*L_m      encoder medium
    float32 x D*L_l      encoder long
    float32 x D*4D       W_f
    float32 x 4          log_w_s, log_w_m, log_w_l, log_gamma
    N x float32 x (4D+1) z_s, z_m, z_l, dz, dx per entry
"""
import struct
from pathlib import Path
from typing import Union

import numpy as np

from src.config import BYTES_PER_PARAM, MODEL_MAGIC, MODEL_VERSION
from .errors import (
    BadMagicError,
    CometError,
    DimensionMismatchError,
    ModelFormatError,
    TruncatedFileError,
    UnsupportedVersionError,
)
from .models import CometModel, CorrectionParams, EncoderParams, MemoryStore, RetrievalParams
from .series import WindowSpec

HEADER = struct.Struct("<4sHHHHHIH")
_FLOAT = np.dtype("<f4")


def _pack_floats(*arrays) -> bytes:
    return b"".join(np.ascontiguousarray(a, dtype=_FLOAT).tobytes() for a in arrays)


def model_to_bytes(model: CometModel) -> bytes:
    """Serialize a model to the binary layout described in the module docstring."""
    dim = model.latent_dim
    spec = model.window_spec
    memory = model.memory
    if dim > 0xFFFF or max(spec.lengths) > 0xFFFF or model.k > 0xFFFF or memory.count > 0xFFFFFFFF:
        raise DimensionMismatchError("model dimensions exceed the file format's integer fields")

    header = HEADER.pack(MODEL_MAGIC, MODEL_VERSION, dim, spec.short_len, spec.medium_len,
                         spec.long_len, memory.count, model.k)
    params = _pack_floats(*model.encoder.matrices(), model.correction.weights,
                          model.retrieval.log_vector())
    rows = np.hstack([memory.z_short, memory.z_medium, memory.z_long, memory.dz, memory.dx[:, None]])
    return header + params + _pack_floats(rows)


def model_from_bytes(data: bytes) -> CometModel:
    """Parse a model from bytes.

    Raises:
        BadMagicError: If the file does not start with ``CSG1``
        UnsupportedVersionError: If the version is not 1
        TruncatedFileError: If a section is shorter than the header implies
        DimensionMismatchError: If the header dimensions are inconsistent
        ModelFormatError: If bytes follow the memory section
    """
    if len(data) < len(MODEL_MAGIC) and MODEL_MAGIC.startswith(data):
        raise TruncatedFileError("header", HEADER.size, len(data))
    if data[:len(MODEL_MAGIC)] != MODEL_MAGIC:
        raise BadMagicError(bytes(data[:len(MODEL_MAGIC)]))
    if len(data) < HEADER.size:
        raise TruncatedFileError("header", HEADER.size, len(data))

    _, version, dim, short_len, medium_len, long_len, count, k = HEADER.unpack_from(data, 0)
    if version != MODEL_VERSION:
        raise UnsupportedVersionError(f"model file version {version}, expected {MODEL_VERSION}")
    if dim == 0 or k == 0:
        raise DimensionMismatchError(f"invalid header: D={dim}, K={k}")
    try:
        spec = WindowSpec(short_len, medium_len, long_len)
    except CometError as e:
        raise DimensionMismatchError(f"invalid window lengths in header: {e}") from e
    if count < k:
        raise DimensionMismatchError(f"memory holds {count} entries, fewer than K={k}")

    n_params = dim * spec.total + dim * 4 * dim + 4
    offset = HEADER.size
    available = len(data) - offset
    if available < n_params * BYTES_PER_PARAM:
        raise TruncatedFileError("parameter section", n_params * BYTES_PER_PARAM, available)
    params = np.frombuffer(data, dtype=_FLOAT, count=n_params, offset=offset).astype(np.float64)
    offset += n_params * BYTES_PER_PARAM

    row = 4 * dim + 1
    expected = count * row * BYTES_PER_PARAM
    available = len(data) - offset
    if available < expected:
        raise TruncatedFileError("memory section", expected, available)
    if available > expected:
        raise ModelFormatError(f"{available - expected} unexpected bytes after the memory section")
    rows = np.frombuffer(data, dtype=_FLOAT, count=count * row, offset=offset).astype(np.float64)
    rows = rows.reshape(count, row)

    cursor = 0
    matrices = []
    for length in spec.lengths:
        matrices.append(params[cursor:cursor + dim * length].reshape(dim, length))
        cursor += dim * length
    correction = params[cursor:cursor + 4 * dim * dim].reshape(dim, 4 * dim)
    cursor += 4 * dim * dim
    log_w_s, log_w_m, log_w_l, log_gamma = params[cursor:cursor + 4]

    memory = MemoryStore(rows[:, 0:dim], rows[:, dim:2 * dim], rows[:, 2 * dim:3 * dim],
                         rows[:, 3 * dim:4 * dim], rows[:, 4 * dim])
    return CometModel(EncoderParams(*matrices), CorrectionParams(correction),
                      RetrievalParams(log_w_s, log_w_m, log_w_l, log_gamma, k), memory, spec)


def save_model(model: CometModel, path: Union[str, Path]) -> Path:
    """Write a model file; values are stored in single precision."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(model_to_bytes(model))
    return path


def load_model(path: Union[str, Path]) -> CometModel:
    """Read a model file written by :func:`save_model`.

    Raises:
        FileNotFoundError: If the file does not exist
        ModelFormatError: (or a subclass) on any format problem
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Model file not found: {path}")
    return model_from_bytes(path.read_bytes())
