"""Binary time-tag file format.

Little-endian layout:
  header (32 bytes): magic "HBTT", version u16 = 1, reserved u16 = 0,
                     resolution_fs u64, duration_ticks u64, record_count u64
  records (9 bytes): channel u8, tick u64
"""

from __future__ import annotations

import struct

import numpy as np

from .detector import TagStream

MAGIC = b"HBTT"
VERSION = 1
HEADER = struct.Struct("<4sHHQQQ")
RECORD_DTYPE = np.dtype([("channel", "<u1"), ("tick", "<u8")])
assert HEADER.size == 32
assert RECORD_DTYPE.itemsize == 9


class TagFileError(Exception):
    code = "tagfile-error"


class BadMagicError(TagFileError):
    code = "bad-magic"


class VersionMismatchError(TagFileError):
    code = "version-mismatch"


class TruncatedFileError(TagFileError):
    code = "truncated"


class UnsortedRecordsError(TagFileError):
    code = "unsorted-records"


def _check_sorted(channels: np.ndarray, ticks: np.ndarray) -> None:
    if len(ticks) < 2:
        return
    t = ticks.astype(np.int64)
    dt = np.diff(t)
    if np.any(dt < 0) or np.any(np.diff(channels.astype(np.int16))[dt == 0] < 0):
        raise UnsortedRecordsError("records not sorted by (tick, channel)")


def write_tags(tags: TagStream, path) -> None:
    _check_sorted(tags.channels, tags.ticks)
    records = np.empty(len(tags), dtype=RECORD_DTYPE)
    records["channel"] = tags.channels
    records["tick"] = tags.ticks
    with open(path, "wb") as f:
        f.write(
            HEADER.pack(MAGIC, VERSION, 0, tags.resolution_fs, tags.duration_ticks, len(tags))
        )
        f.write(records.tobytes())


def read_tags(path) -> TagStream:
    with open(path, "rb") as f:
        head = f.read(HEADER.size)
        if len(head) < HEADER.size:
            raise TruncatedFileError("file shorter than header")
        magic, version, _reserved, resolution, duration_ticks, count = HEADER.unpack(head)
        if magic != MAGIC:
            raise BadMagicError(f"bad magic {magic!r}")
        if version != VERSION:
            raise VersionMismatchError(f"unsupported version {version}")
        payload = f.read(count * RECORD_DTYPE.itemsize)
    if len(payload) != count * RECORD_DTYPE.itemsize:
        raise TruncatedFileError(
            f"expected {count} records, payload holds {len(payload) // RECORD_DTYPE.itemsize}"
        )
    records = np.frombuffer(payload, dtype=RECORD_DTYPE)
    _check_sorted(records["channel"], records["tick"])
    return TagStream(
        resolution_fs=int(resolution),
        duration_ticks=int(duration_ticks),
        channels=records["channel"].copy(),
        ticks=records["tick"].copy(),
    )


def write_tags_csv(tags: TagStream, path) -> None:
    with open(path, "w") as f:
        f.write("channel,tick\n")
        for ch, tk in zip(tags.channels, tags.ticks):
            f.write(f"{ch},{tk}\n")
