"""
FMAT codec: a 16 byte header (magic "FMAT", u32 version, u32 rows, u32 cols,
all little-endian) followed by rows*cols little-endian float32 values in
row-major order.
"""
import struct
from pathlib import Path
import numpy as np
from utils import settings as st
from utils.exceptions import FormatError
from utils.helpers import PathLike, atomic_write_bytes, crc32

_HEADER = struct.Struct("<4sIII")


def encode_fmat(matrix) -> bytes:
    values = np.asarray(matrix)
    if values.ndim != 2:
        raise ValueError(f"FMAT stores 2-D matrices, got shape {values.shape}")
    rows, cols = values.shape
    if rows == 0 or cols == 0:
        raise ValueError(f"FMAT matrices need at least one row and column, got shape {values.shape}")
    payload = np.ascontiguousarray(values, dtype=st.FMAT_DTYPE).tobytes(order="C")
    return _HEADER.pack(st.FMAT_MAGIC, st.FMAT_VERSION, rows, cols) + payload


def decode_fmat(data: bytes, path: PathLike = None) -> np.ndarray:
    source = str(path) if path is not None else None
    if len(data) < st.FMAT_HEADER_SIZE:
        raise FormatError("truncated header", offset=len(data), path=source)

    magic, version, rows, cols = _HEADER.unpack_from(data, 0)
    if magic != st.FMAT_MAGIC:
        raise FormatError(f"bad magic {magic!r}", offset=0, path=source)
    if version != st.FMAT_VERSION:
        raise FormatError(f"unsupported version {version}", offset=4, path=source)
    if rows == 0 or cols == 0:
        raise FormatError(f"empty shape {rows}x{cols}", offset=8, path=source)

    expected = st.FMAT_HEADER_SIZE + rows * cols * 4
    if len(data) < expected:
        raise FormatError(
            f"truncated payload: header says {rows}x{cols} ({expected} bytes), file has {len(data)}",
            offset=len(data),
            path=source,
        )
    if len(data) > expected:
        raise FormatError(f"trailing bytes after payload ({len(data) - expected})", offset=expected, path=source)

    values = np.frombuffer(data, dtype=st.FMAT_DTYPE, count=rows * cols, offset=st.FMAT_HEADER_SIZE)
    return values.reshape(rows, cols).astype(np.float32)


def payload_checksum(data: bytes) -> int:
    """CRC32 of the payload part of an encoded FMAT file."""
    return crc32(data[st.FMAT_HEADER_SIZE:])


def write_fmat(path: PathLike, matrix) -> int:
    """Atomically write `matrix`; returns the payload CRC32."""
    data = encode_fmat(matrix)
    atomic_write_bytes(path, data)
    return payload_checksum(data)


def read_fmat(path: PathLike) -> np.ndarray:
    return decode_fmat(Path(path).read_bytes(), path=path)


def read_fmat_with_checksum(path: PathLike) -> tuple[np.ndarray, int]:
    data = Path(path).read_bytes()
    return decode_fmat(data, path=path), payload_checksum(data)
