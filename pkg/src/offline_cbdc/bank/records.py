"""Append-only record logs: each record is a 4-byte big-endian length followed by its bytes."""

from __future__ import annotations

import os
import struct
import threading
from pathlib import Path

from ..crypto.encoding import DecodeError

_LEN = struct.Struct(">I")


def parse_records(data: bytes, torn_tail_ok: bool = False) -> tuple[list[bytes], int]:
    """Split a log into records; returns them with the length of the complete prefix.

    A truncated record raises DecodeError with its offset, unless
    ``torn_tail_ok``, in which case parsing stops before it.
    """
    out, pos = [], 0
    while pos < len(data):
        if pos + 4 > len(data):
            if torn_tail_ok:
                break
            raise DecodeError("truncated record length", pos)
        (n,) = _LEN.unpack_from(data, pos)
        if pos + 4 + n > len(data):
            if torn_tail_ok:
                break
            raise DecodeError(f"truncated record: need {n} bytes", pos)
        out.append(bytes(data[pos + 4 : pos + 4 + n]))
        pos += 4 + n
    return out, pos


def frame_record(payload: bytes) -> bytes:
    return _LEN.pack(len(payload)) + payload


class RecordLog:
    """A file that only ever grows; ``path=None`` keeps records in memory.

    A record cut short by a crash during its write is dropped on open (the
    writer never acknowledged it), so the log restarts from its last complete
    record.
    """

    def __init__(self, path: str | Path | None, fsync: bool = False):
        self.path = Path(path) if path is not None else None
        self.fsync = fsync
        self._lock = threading.Lock()
        self._fh = None
        self.records: list[bytes] = []
        self.dropped_tail = 0
        if self.path is not None:
            if self.path.exists():
                data = self.path.read_bytes()
                self.records, good = parse_records(data, torn_tail_ok=True)
                if good < len(data):
                    self.dropped_tail = len(data) - good
                    with open(self.path, "r+b") as fh:
                        fh.truncate(good)
            else:
                self.path.parent.mkdir(parents=True, exist_ok=True)
            self._fh = open(self.path, "ab")

    def append(self, payload: bytes) -> None:
        with self._lock:
            self.records.append(payload)
            if self._fh is not None:
                self._fh.write(frame_record(payload))
                self._fh.flush()
                if self.fsync:
                    os.fsync(self._fh.fileno())

    def close(self) -> None:
        with self._lock:
            if self._fh is not None:
                self._fh.close()
                self._fh = None
