"""Binary weight-file format for the regression networks.

Layout (little-endian):

    magic   4 bytes  b"LLMW"
    version u32      format revision, currently 1
    desc    u32 length + UTF-8 JSON architecture descriptor
    count   u64      number of float64 parameters that follow
    params  count * 8 bytes, per layer: weights row-major, then bias
    crc     u32      CRC-32 of every preceding byte

Round trips are bit exact because parameters are stored as raw IEEE doubles.
"""

from __future__ import annotations

import json
import struct
import zlib
from pathlib import Path

import numpy as np

from .errors import (
    ModelChecksumError,
    ModelFormatError,
    ModelVersionError,
)
from .nn import ACTIVATIONS, DenseLayer, MlpModel

MAGIC = b"LLMW"
FORMAT_VERSION = 1


def _pack_params(model: MlpModel) -> bytes:
    chunks = []
    for layer in model.layers:
        chunks.append(np.ascontiguousarray(layer.weights, dtype="<f8").tobytes())
        chunks.append(np.ascontiguousarray(layer.bias, dtype="<f8").tobytes())
    return b"".join(chunks)


def save_model(model: MlpModel, path: str | Path) -> None:
    """Write the model's architecture and parameters to ``path``."""
    desc = json.dumps(model.describe(), sort_keys=True).encode("utf-8")
    raw = _pack_params(model)
    count = len(raw) // 8
    body = b"".join(
        (
            MAGIC,
            struct.pack("<I", FORMAT_VERSION),
            struct.pack("<I", len(desc)),
            desc,
            struct.pack("<Q", count),
            raw,
        )
    )
    crc = zlib.crc32(body) & 0xFFFFFFFF
    Path(path).write_bytes(body + struct.pack("<I", crc))


def load_model(path: str | Path) -> MlpModel:
    """Read a model back; validates magic, version, checksum and layout."""
    blob = Path(path).read_bytes()
    if len(blob) < 4 or blob[:4] != MAGIC:
        raise ModelFormatError(f"{path}: not a model weight file")
    if len(blob) < 8:
        raise ModelFormatError(f"{path}: header truncated")
    (version,) = struct.unpack_from("<I", blob, 4)
    if version != FORMAT_VERSION:
        raise ModelVersionError(
            f"{path}: format version {version}, expected {FORMAT_VERSION}"
        )
    if len(blob) < 12:
        raise ModelChecksumError(f"{path}: file truncated before checksum")
    (stored_crc,) = struct.unpack_from("<I", blob, len(blob) - 4)
    actual_crc = zlib.crc32(blob[:-4]) & 0xFFFFFFFF
    if stored_crc != actual_crc:
        raise ModelChecksumError(
            f"{path}: checksum mismatch "
            f"(stored {stored_crc:#010x}, computed {actual_crc:#010x})"
        )

    offset = 8
    (desc_len,) = struct.unpack_from("<I", blob, offset)
    offset += 4
    if offset + desc_len > len(blob) - 4:
        raise ModelFormatError(f"{path}: descriptor overruns file")
    try:
        desc = json.loads(blob[offset : offset + desc_len].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ModelFormatError(f"{path}: bad architecture descriptor: {exc}") from exc
    offset += desc_len
    (count,) = struct.unpack_from("<Q", blob, offset)
    offset += 8
    if offset + 8 * count != len(blob) - 4:
        raise ModelFormatError(
            f"{path}: expected {count} parameters, "
            f"payload holds {(len(blob) - 4 - offset) // 8}"
        )
    flat = np.frombuffer(blob, dtype="<f8", count=count, offset=offset).astype(
        np.float64
    )
    return _model_from_descriptor(desc, flat, str(path))


def _model_from_descriptor(desc: dict, flat: np.ndarray, origin: str) -> MlpModel:
    try:
        dims = [int(d) for d in desc["dims"]]
        acts = [str(a) for a in desc["activations"]]
        skips = [(int(s), int(t)) for s, t in desc.get("skips", [])]
        kind = str(desc.get("kind", "mlp"))
    except (KeyError, TypeError, ValueError) as exc:
        raise ModelFormatError(f"{origin}: malformed descriptor: {exc}") from exc
    if len(acts) != len(dims) - 1 or len(dims) < 2:
        raise ModelFormatError(
            f"{origin}: descriptor lists {len(dims)} widths "
            f"and {len(acts)} activations"
        )
    for a in acts:
        if a not in ACTIVATIONS:
            raise ModelFormatError(f"{origin}: unknown activation {a!r}")

    expected = sum(dims[i + 1] * dims[i] + dims[i + 1] for i in range(len(acts)))
    if flat.size != expected:
        raise ModelFormatError(
            f"{origin}: descriptor implies {expected} parameters, file has {flat.size}"
        )
    layers = []
    pos = 0
    for i, act in enumerate(acts):
        fan_in, fan_out = dims[i], dims[i + 1]
        w = flat[pos : pos + fan_out * fan_in].reshape(fan_out, fan_in).copy()
        pos += fan_out * fan_in
        b = flat[pos : pos + fan_out].copy()
        pos += fan_out
        layers.append(DenseLayer(w, b, act))
    return MlpModel(layers, skips, kind=kind)
