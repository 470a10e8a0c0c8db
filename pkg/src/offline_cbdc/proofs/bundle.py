"""ProofBundle: relation tag, public slots and opaque proof bytes.

Wire layout: tag (1 byte) | slot count (2 bytes) | slots (32 bytes each) |
proof length (4 bytes) | proof bytes.
"""

from __future__ import annotations

from dataclasses import dataclass

from ..crypto.encoding import DecodeError, Reader, Writer
from .relations import RelationId


@dataclass(frozen=True)
class ProofBundle:
    relation: RelationId
    public: tuple[int, ...]
    proof: bytes

    def write(self, w: Writer) -> Writer:
        w.u8(int(self.relation)).u16(len(self.public)).fes(self.public)
        return w.blob(self.proof)

    def to_bytes(self) -> bytes:
        return self.write(Writer()).getvalue()

    @classmethod
    def read(cls, r: Reader) -> "ProofBundle":
        start = r.pos
        tag = r.u8()
        try:
            rel = RelationId(tag)
        except ValueError:
            raise DecodeError(f"unknown relation tag {tag}", start) from None
        public = tuple(r.fes(r.u16()))
        return cls(rel, public, r.blob())

    @classmethod
    def from_bytes(cls, data: bytes) -> "ProofBundle":
        r = Reader(data)
        out = cls.read(r)
        r.expect_end()
        return out

    def with_public(self, public) -> "ProofBundle":
        return ProofBundle(self.relation, tuple(public), self.proof)
