"""History elements and protocol messages with their canonical byte layouts.

Proofs travel as raw proof bytes. Receivers rebuild each proof's public inputs
from the fields of the message that carries it, so a proof can never be
checked against inputs that differ from the values the message asserts.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Iterable, Iterator, Union

from .crypto.commit import commit
from .crypto.encoding import DecodeError, Reader, Writer


class ElementTag(enum.IntEnum):
    SIGNED_LEAF = 1
    CREATION_WITH_DEP = 2
    CREATION_WITH_OPENINGS = 3
    COMPLETION_WITH_DEP = 4
    COMPLETION_WITH_OPENINGS = 5


@dataclass(frozen=True)
class SignedLeaf:
    scm: int
    sig: bytes

    tag = ElementTag.SIGNED_LEAF
    is_creation = False
    is_completion = False

    def write(self, w: Writer) -> None:
        w.fe(self.scm).blob(self.sig)

    @classmethod
    def read(cls, r: Reader) -> "SignedLeaf":
        return cls(r.fe(), r.blob())


@dataclass(frozen=True)
class CreationWithDep:
    sn: int
    ds: int
    scm: int
    dcm: int
    zkp_state: bytes
    zkp_dep: bytes

    tag = ElementTag.CREATION_WITH_DEP
    is_creation = True
    is_completion = False

    def write(self, w: Writer) -> None:
        w.fes((self.sn, self.ds, self.scm, self.dcm)).blob(self.zkp_state).blob(self.zkp_dep)

    @classmethod
    def read(cls, r: Reader) -> "CreationWithDep":
        return cls(r.fe(), r.fe(), r.fe(), r.fe(), r.blob(), r.blob())


@dataclass(frozen=True)
class CreationWithOpenings:
    sn: int
    ds: int
    scm: int
    zkp_state: bytes
    blind_dep: int
    scm_prev: int

    tag = ElementTag.CREATION_WITH_OPENINGS
    is_creation = True
    is_completion = False

    @property
    def dcm(self) -> int:
        return commit(self.blind_dep, [self.scm_prev])

    def write(self, w: Writer) -> None:
        w.fes((self.sn, self.ds, self.scm)).blob(self.zkp_state).fes((self.blind_dep, self.scm_prev))

    @classmethod
    def read(cls, r: Reader) -> "CreationWithOpenings":
        sn, ds, scm = r.fes(3)
        proof = r.blob()
        return cls(sn, ds, scm, proof, r.fe(), r.fe())


@dataclass(frozen=True)
class CompletionWithDep:
    scm: int
    dcm: int
    pcm: int
    zkp_state: bytes
    zkp_pm: bytes
    zkp_dep: bytes

    tag = ElementTag.COMPLETION_WITH_DEP
    is_creation = False
    is_completion = True

    def write(self, w: Writer) -> None:
        w.fes((self.scm, self.dcm, self.pcm)).blob(self.zkp_state).blob(self.zkp_pm).blob(self.zkp_dep)

    @classmethod
    def read(cls, r: Reader) -> "CompletionWithDep":
        scm, dcm, pcm = r.fes(3)
        return cls(scm, dcm, pcm, r.blob(), r.blob(), r.blob())


@dataclass(frozen=True)
class CompletionWithOpenings:
    scm: int
    pcm: int
    zkp_state: bytes
    zkp_pm: bytes
    blind_dep: int
    scm_prev: int
    ccm: int

    tag = ElementTag.COMPLETION_WITH_OPENINGS
    is_creation = False
    is_completion = True

    @property
    def dcm(self) -> int:
        return commit(self.blind_dep, [self.scm_prev, self.ccm])

    def write(self, w: Writer) -> None:
        w.fes((self.scm, self.pcm)).blob(self.zkp_state).blob(self.zkp_pm)
        w.fes((self.blind_dep, self.scm_prev, self.ccm))

    @classmethod
    def read(cls, r: Reader) -> "CompletionWithOpenings":
        scm, pcm = r.fes(2)
        zs, zp = r.blob(), r.blob()
        return cls(scm, pcm, zs, zp, r.fe(), r.fe(), r.fe())


HistoryElement = Union[SignedLeaf, CreationWithDep, CreationWithOpenings, CompletionWithDep, CompletionWithOpenings]

ELEMENT_TYPES = {
    cls.tag: cls
    for cls in (SignedLeaf, CreationWithDep, CreationWithOpenings, CompletionWithDep, CompletionWithOpenings)
}


def write_element(w: Writer, el: HistoryElement) -> Writer:
    w.u8(int(el.tag))
    el.write(w)
    return w


def read_element(r: Reader) -> HistoryElement:
    start = r.pos
    tag = r.u8()
    cls = ELEMENT_TYPES.get(tag)
    if cls is None:
        raise DecodeError(f"unknown history element tag {tag}", start)
    return cls.read(r)


class RelatedHistory:
    """History elements keyed by state commitment, in assembly order."""

    def __init__(self, elements: Iterable[HistoryElement] = ()):
        self._items: dict[int, HistoryElement] = {}
        for el in elements:
            self.add(el)

    def add(self, el: HistoryElement) -> None:
        self._items.setdefault(el.scm, el)

    def get(self, scm: int) -> HistoryElement | None:
        return self._items.get(scm)

    def __contains__(self, scm: int) -> bool:
        return scm in self._items

    def __len__(self) -> int:
        return len(self._items)

    def __iter__(self) -> Iterator[HistoryElement]:
        return iter(self._items.values())

    def __eq__(self, other) -> bool:
        return isinstance(other, RelatedHistory) and list(self) == list(other)

    def without(self, scm: int) -> "RelatedHistory":
        return RelatedHistory(el for el in self if el.scm != scm)

    def replace(self, el: HistoryElement) -> "RelatedHistory":
        return RelatedHistory(el if old.scm == el.scm else old for old in self)

    def unsigned_count(self) -> int:
        return sum(1 for el in self if not isinstance(el, SignedLeaf))

    def write(self, w: Writer) -> Writer:
        w.u32(len(self._items))
        for el in self:
            write_element(w, el)
        return w

    @classmethod
    def read(cls, r: Reader) -> "RelatedHistory":
        out = cls()
        for _ in range(r.u32()):
            start = r.pos
            el = read_element(r)
            if el.scm in out:
                raise DecodeError("duplicate state commitment in related history", start)
            out.add(el)
        return out


# --- offline payment messages -------------------------------------------------


def _codec(cls):
    """Give a message class to_bytes/from_bytes built on its write/read."""

    def to_bytes(self) -> bytes:
        w = Writer()
        self.write(w)
        return w.getvalue()

    @classmethod
    def from_bytes(klass, data: bytes):
        r = Reader(data)
        out = klass.read(r)
        r.expect_end()
        return out

    cls.to_bytes = to_bytes
    cls.from_bytes = from_bytes
    return cls


@_codec
@dataclass(frozen=True)
class PaymentRequest:
    rcm: int
    value: int

    def write(self, w: Writer) -> None:
        w.fe(self.rcm).u64(self.value)

    @classmethod
    def read(cls, r: Reader) -> "PaymentRequest":
        return cls(r.fe(), r.u64())


@_codec
@dataclass(frozen=True)
class PaymentProof:
    """m_pm: the opening of the payment commitment plus the payment proof."""

    scm: int
    value: int
    epoch: int
    blind_pm: int
    zkp_pm: bytes

    def write(self, w: Writer) -> None:
        w.fe(self.scm).u64(self.value).u32(self.epoch).fe(self.blind_pm).blob(self.zkp_pm)

    @classmethod
    def read(cls, r: Reader) -> "PaymentProof":
        return cls(r.fe(), r.u64(), r.u32(), r.fe(), r.blob())


@_codec
@dataclass(frozen=True)
class Payment:
    history: RelatedHistory
    proof: PaymentProof

    def write(self, w: Writer) -> None:
        self.history.write(w)
        self.proof.write(w)

    @classmethod
    def read(cls, r: Reader) -> "Payment":
        return cls(RelatedHistory.read(r), PaymentProof.read(r))


# --- online messages ------------------------------------------------------------


@_codec
@dataclass(frozen=True)
class EpochChallenge:
    epoch: int
    challenge: int

    def write(self, w: Writer) -> None:
        w.u32(self.epoch).fe(self.challenge)

    @classmethod
    def read(cls, r: Reader) -> "EpochChallenge":
        return cls(r.u32(), r.fe())


@_codec
@dataclass(frozen=True)
class EnrollRequest:
    id: int
    scm: int
    epoch: int
    holding_limit: int
    challenge: int
    zkp_enroll: bytes

    def write(self, w: Writer) -> None:
        w.fe(self.id).fe(self.scm).u32(self.epoch).u64(self.holding_limit).fe(self.challenge)
        w.blob(self.zkp_enroll)

    @classmethod
    def read(cls, r: Reader) -> "EnrollRequest":
        return cls(r.fe(), r.fe(), r.u32(), r.u64(), r.fe(), r.blob())


@_codec
@dataclass(frozen=True)
class CreationSigRequest:
    element: CreationWithDep

    def write(self, w: Writer) -> None:
        self.element.write(w)

    @classmethod
    def read(cls, r: Reader) -> "CreationSigRequest":
        return cls(CreationWithDep.read(r))


@_codec
@dataclass(frozen=True)
class CompletionSigRequest:
    element: CompletionWithDep

    def write(self, w: Writer) -> None:
        self.element.write(w)

    @classmethod
    def read(cls, r: Reader) -> "CompletionSigRequest":
        return cls(CompletionWithDep.read(r))


SigRequest = Union[CreationSigRequest, CompletionSigRequest]


@_codec
@dataclass(frozen=True)
class SyncRequest:
    scm: int
    epoch: int
    challenge: int
    zkp_sync: bytes

    def write(self, w: Writer) -> None:
        w.fe(self.scm).u32(self.epoch).fe(self.challenge).blob(self.zkp_sync)

    @classmethod
    def read(cls, r: Reader) -> "SyncRequest":
        return cls(r.fe(), r.u32(), r.fe(), r.blob())


@_codec
@dataclass(frozen=True)
class RecoveryRequest:
    scm: int
    id: int
    value: int
    zkp_recovery: bytes
    history: RelatedHistory

    def write(self, w: Writer) -> None:
        w.fe(self.scm).fe(self.id).u64(self.value).blob(self.zkp_recovery)
        self.history.write(w)

    @classmethod
    def read(cls, r: Reader) -> "RecoveryRequest":
        return cls(r.fe(), r.fe(), r.u64(), r.blob(), RelatedHistory.read(r))


@_codec
@dataclass(frozen=True)
class LedgerQuery:
    scm: int

    def write(self, w: Writer) -> None:
        w.fe(self.scm)

    @classmethod
    def read(cls, r: Reader) -> "LedgerQuery":
        return cls(r.fe())


@_codec
@dataclass(frozen=True)
class LedgerEntry:
    """One ledger record: serial number and tag for creations, commitment, signature once issued."""

    scm: int
    sn: int | None = None
    ds: int | None = None
    sig: bytes | None = None

    def write(self, w: Writer) -> None:
        w.fe(self.scm)
        w.flag(self.sn is not None)
        if self.sn is not None:
            w.fe(self.sn).fe(self.ds)
        w.flag(self.sig is not None)
        if self.sig is not None:
            w.blob(self.sig)

    @classmethod
    def read(cls, r: Reader) -> "LedgerEntry":
        scm = r.fe()
        sn = ds = None
        if r.flag():
            sn, ds = r.fe(), r.fe()
        sig = r.blob() if r.flag() else None
        return cls(scm, sn, ds, sig)


class Status(enum.IntEnum):
    SIGNED = 0
    DOUBLE_SPEND = 1
    REJECTED = 2


@_codec
@dataclass(frozen=True)
class Response:
    """Bank answer to a state-changing request: a signature, ⊥ (double spend) or a rejection."""

    status: Status
    sig: bytes | None = None
    reason: str = ""

    @classmethod
    def signed(cls, sig: bytes) -> "Response":
        return cls(Status.SIGNED, sig)

    @classmethod
    def double_spend(cls) -> "Response":
        return cls(Status.DOUBLE_SPEND, None, "serial number already spent")

    @classmethod
    def rejected(cls, reason: str) -> "Response":
        return cls(Status.REJECTED, None, reason)

    @property
    def ok(self) -> bool:
        return self.status is Status.SIGNED

    def write(self, w: Writer) -> None:
        w.u8(int(self.status))
        if self.status is Status.SIGNED:
            w.blob(self.sig)
        else:
            w.text(self.reason)

    @classmethod
    def read(cls, r: Reader) -> "Response":
        start = r.pos
        try:
            status = Status(r.u8())
        except ValueError:
            raise DecodeError("unknown response status", start) from None
        if status is Status.SIGNED:
            return cls(status, r.blob())
        return cls(status, None, r.text())


@_codec
@dataclass(frozen=True)
class LedgerAnswer:
    entry: LedgerEntry | None = None

    def write(self, w: Writer) -> None:
        w.flag(self.entry is not None)
        if self.entry is not None:
            self.entry.write(w)

    @classmethod
    def read(cls, r: Reader) -> "LedgerAnswer":
        return cls(LedgerEntry.read(r) if r.flag() else None)


@_codec
@dataclass(frozen=True)
class Empty:
    def write(self, w: Writer) -> None:
        pass

    @classmethod
    def read(cls, r: Reader) -> "Empty":
        return cls()


def element_bytes(el: HistoryElement) -> bytes:
    return write_element(Writer(), el).getvalue()

