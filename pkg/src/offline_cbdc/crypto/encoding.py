"""Canonical byte encoding shared by the wire protocol and persisted records.

Layout rules: field elements are 32 bytes big-endian, integers are fixed-width
big-endian, variable-length byte strings carry a 4-byte length prefix and
optional values a one-byte presence flag. Field order is fixed per message.
"""

from __future__ import annotations

import struct

from . import field


class DecodeError(ValueError):
    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (at byte offset {offset})")
        self.message = message
        self.offset = offset


class Writer:
    def __init__(self) -> None:
        self._parts: list[bytes] = []

    def fe(self, x: int) -> "Writer":
        self._parts.append(field.encode(x))
        return self

    def fes(self, xs) -> "Writer":
        for x in xs:
            self.fe(x)
        return self

    def u8(self, x: int) -> "Writer":
        self._parts.append(struct.pack(">B", x))
        return self

    def u16(self, x: int) -> "Writer":
        self._parts.append(struct.pack(">H", x))
        return self

    def u32(self, x: int) -> "Writer":
        self._parts.append(struct.pack(">I", x))
        return self

    def u64(self, x: int) -> "Writer":
        self._parts.append(struct.pack(">Q", x))
        return self

    def blob(self, data: bytes) -> "Writer":
        self.u32(len(data))
        self._parts.append(bytes(data))
        return self

    def raw(self, data: bytes) -> "Writer":
        self._parts.append(bytes(data))
        return self

    def flag(self, present: bool) -> "Writer":
        return self.u8(1 if present else 0)

    def text(self, s: str) -> "Writer":
        return self.blob(s.encode("utf-8"))

    def getvalue(self) -> bytes:
        return b"".join(self._parts)


class Reader:
    def __init__(self, data: bytes, offset: int = 0) -> None:
        self.data = memoryview(bytes(data))
        self.pos = offset

    def _take(self, n: int, what: str) -> bytes:
        if self.pos + n > len(self.data):
            raise DecodeError(f"truncated {what}: need {n} bytes", self.pos)
        out = bytes(self.data[self.pos : self.pos + n])
        self.pos += n
        return out

    def fe(self) -> int:
        start = self.pos
        raw = self._take(field.BYTES, "field element")
        try:
            return field.decode(raw)
        except ValueError as exc:
            raise DecodeError(str(exc), start) from None

    def fes(self, n: int) -> list[int]:
        return [self.fe() for _ in range(n)]

    def u8(self) -> int:
        return self._take(1, "u8")[0]

    def u16(self) -> int:
        return struct.unpack(">H", self._take(2, "u16"))[0]

    def u32(self) -> int:
        return struct.unpack(">I", self._take(4, "u32"))[0]

    def u64(self) -> int:
        return struct.unpack(">Q", self._take(8, "u64"))[0]

    def blob(self) -> bytes:
        n = self.u32()
        return self._take(n, "byte string")

    def raw(self, n: int) -> bytes:
        return self._take(n, "bytes")

    def flag(self) -> bool:
        start = self.pos
        v = self.u8()
        if v not in (0, 1):
            raise DecodeError(f"invalid presence flag {v}", start)
        return v == 1

    def text(self) -> str:
        start = self.pos
        try:
            return self.blob().decode("utf-8")
        except UnicodeDecodeError:
            raise DecodeError("invalid utf-8 text", start) from None

    def remaining(self) -> int:
        return len(self.data) - self.pos

    def expect_end(self) -> None:
        if self.pos != len(self.data):
            raise DecodeError(f"{self.remaining()} trailing bytes", self.pos)
