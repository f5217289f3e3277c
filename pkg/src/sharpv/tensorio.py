"""Binary tensor file format for video tokens.

Layout (little-endian throughout):

    bytes 0..7    magic "SHRPVID1"
    bytes 8..19   three uint32: n frames, f tokens per frame, d dims
    bytes 20..    n*f*d IEEE-754 float32 values, frame-major row-major

Values are stored as float32; arrays holding values outside the float32
grid are rounded on write. Each failure mode gets its own exception so
callers can distinguish a wrong file from a damaged one.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .errors import BadMagicError, DimensionError, TensorFormatError, TruncatedFileError
from .pruner import VideoTokens

MAGIC = b"SHRPVID1"
_HEADER = struct.Struct("<8s3I")

# Hard cap on element count (1 GiB of float32 payload).
MAX_ELEMENTS = 1 << 28


def _check_dims(n: int, f: int, d: int) -> None:
    if n < 1 or f < 1 or d < 1:
        raise DimensionError(f"dimensions must be >= 1, got n={n} f={f} d={d}")
    if n * f * d > MAX_ELEMENTS:
        raise DimensionError(
            f"n*f*d = {n * f * d} exceeds the element budget of {MAX_ELEMENTS}"
        )


def write_video(path: str | Path, video: VideoTokens) -> None:
    """Write a video token tensor; see module docstring for the layout."""
    _check_dims(video.n, video.f, video.d)
    payload = np.ascontiguousarray(video.data, dtype="<f4")
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, video.n, video.f, video.d))
        fh.write(payload.tobytes())


def read_video(path: str | Path) -> VideoTokens:
    """Read a video token tensor, validating magic, dimensions, and length."""
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < _HEADER.size:
        if blob[: len(MAGIC)] != MAGIC[: len(blob)]:
            raise BadMagicError(f"not a video tensor file: {path}")
        raise TruncatedFileError(f"file ends inside the header: {path}")
    magic, n, f, d = _HEADER.unpack_from(blob)
    if magic != MAGIC:
        raise BadMagicError(f"bad magic {magic!r} in {path}")
    _check_dims(n, f, d)
    expected = _HEADER.size + n * f * d * 4
    if len(blob) < expected:
        raise TruncatedFileError(
            f"expected {expected} bytes but file has {len(blob)}: {path}"
        )
    if len(blob) > expected:
        raise TensorFormatError(
            f"{len(blob) - expected} bytes of trailing data after the payload: {path}"
        )
    values = np.frombuffer(blob, dtype="<f4", offset=_HEADER.size)
    if not np.isfinite(values).all():
        raise TensorFormatError(f"payload contains NaN or Inf: {path}")
    data = values.astype(np.float64).reshape(n * f, d)
    return VideoTokens(n, f, d, data)
