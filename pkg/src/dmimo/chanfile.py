"""Binary channel-tensor file format (version 1).

Little-endian layout:

    offset  size            field
    0       4               magic "DMCT"
    4       2 (u16)         format version, currently 1
    6       8 (4 x u16)     dims T, L, K, M
    14      2 (u16)         access-point count
    16      M  (u8 each)    antenna AP map
    16+M    8*T*L*K*M       payload: (real, imag) float32 pairs,
                            antenna index fastest (C order of (T,L,K,M))

Total size is therefore 16 + M + 8*T*L*K*M bytes. Coefficients are stored in
float32; reading promotes to the in-memory complex128 representation, so a
file round-trips to identical bytes.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .errors import FormatError
from .tensor import ChannelTensor

MAGIC = b"DMCT"
FORMAT_VERSION = 1

_HEADER = struct.Struct("<4sH4HH")
HEADER_SIZE = _HEADER.size  # 16 bytes

_DIM_LIMIT = 0xFFFF
_AP_ID_LIMIT = 0xFF


def expected_file_size(dims) -> int:
    """Total byte count a file with the given (T, L, K, M) dims must have."""
    t, l, k, m = (int(v) for v in dims)
    return HEADER_SIZE + m + 8 * t * l * k * m


def write_channel_file(ch: ChannelTensor, path) -> None:
    """Serialize a ChannelTensor; dims above 65535 do not fit the header."""
    if not isinstance(ch, ChannelTensor):
        raise FormatError("write_channel_file expects a ChannelTensor")
    for name, value in zip("TLKM", ch.dims):
        if value > _DIM_LIMIT:
            raise FormatError(
                f"dimension {name}={value} exceeds the format's u16 limit {_DIM_LIMIT}"
            )
    ap_map = np.asarray(ch.antenna_ap_map)
    if ap_map.max() > _AP_ID_LIMIT:
        raise FormatError(
            f"AP id {int(ap_map.max())} exceeds the format's u8 limit {_AP_ID_LIMIT}"
        )
    t, l, k, m = ch.dims
    header = _HEADER.pack(MAGIC, FORMAT_VERSION, t, l, k, m, ch.num_aps)
    payload = np.ascontiguousarray(ch.data).astype("<c8").tobytes()
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(ap_map.astype(np.uint8).tobytes())
        fh.write(payload)


def read_channel_file(path) -> ChannelTensor:
    """Parse a channel file back into a ChannelTensor.

    Malformed files raise FormatError with the byte offset of the problem;
    truncation errors also carry the total size the header promised.
    """
    blob = Path(path).read_bytes()
    if len(blob) < HEADER_SIZE:
        raise FormatError(
            f"file ends inside the {HEADER_SIZE}-byte header ({len(blob)} bytes)",
            byte_offset=len(blob),
        )
    magic, version, t, l, k, m, ap_count = _HEADER.unpack_from(blob, 0)
    if magic != MAGIC:
        raise FormatError(
            f"bad magic {magic!r}, expected {MAGIC!r}", byte_offset=0
        )
    if version != FORMAT_VERSION:
        raise FormatError(
            f"unsupported format version {version}, expected {FORMAT_VERSION}",
            byte_offset=4,
        )
    for index, (name, value) in enumerate(zip("TLKM", (t, l, k, m))):
        if value == 0:
            raise FormatError(
                f"dimension {name} is zero", byte_offset=6 + 2 * index
            )
    if ap_count == 0:
        raise FormatError("AP count is zero", byte_offset=14)

    expected = expected_file_size((t, l, k, m))
    if len(blob) < expected:
        raise FormatError(
            f"file truncated: header promises {expected} bytes "
            f"(16-byte header + {m}-byte AP map + {8 * t * l * k * m}-byte "
            f"payload), found {len(blob)}",
            byte_offset=len(blob),
            expected_size=expected,
        )
    if len(blob) > expected:
        raise FormatError(
            f"{len(blob) - expected} trailing bytes after the "
            f"{expected}-byte tensor",
            byte_offset=expected,
            expected_size=expected,
        )

    ap_map = np.frombuffer(blob, dtype=np.uint8, count=m, offset=HEADER_SIZE)
    distinct = np.unique(ap_map)
    if distinct.size != ap_count:
        raise FormatError(
            f"AP map holds {distinct.size} distinct ids but the header "
            f"declares {ap_count}",
            byte_offset=HEADER_SIZE,
        )
    boundaries = np.flatnonzero(np.diff(ap_map.astype(np.int64)) != 0) + 1
    run_ids = ap_map[np.concatenate(([0], boundaries))]
    if len(np.unique(run_ids)) != len(run_ids):
        raise FormatError(
            "AP map does not group antennas contiguously per AP",
            byte_offset=HEADER_SIZE,
        )

    payload = np.frombuffer(
        blob, dtype="<c8", count=t * l * k * m, offset=HEADER_SIZE + m
    )
    bad = np.flatnonzero(~np.isfinite(payload))
    if bad.size:
        raise FormatError(
            "payload holds a non-finite coefficient",
            byte_offset=HEADER_SIZE + m + 8 * int(bad[0]),
        )
    data = payload.astype(np.complex128).reshape(t, l, k, m)
    return ChannelTensor(data, ap_map.astype(np.int64))
