"""Wallet state openings and the three history stores."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace

from ..crypto.commit import commit
from ..crypto.encoding import DecodeError, Reader, Writer
from ..messages import (
    CompletionWithDep,
    CompletionWithOpenings,
    CreationWithDep,
    CreationWithOpenings,
    HistoryElement,
    SignedLeaf,
)


class StateKind(enum.IntEnum):
    UNKNOWN = 0  # a foreign state only ever seen with its signature
    ANCHOR = 1  # enrollment, synchronization or bank issuance: signed online
    CREATION = 2
    COMPLETION = 3


@dataclass(frozen=True)
class WalletState:
    """Opening of a state commitment."""

    sk: int
    holding_limit: int
    ctr: int
    bal: int
    epoch: int
    scm_prev: int
    ccm: int
    blind: int

    @property
    def payload(self) -> list[int]:
        return [self.sk, self.holding_limit, self.ctr, self.bal, self.epoch, self.scm_prev, self.ccm]

    @property
    def scm(self) -> int:
        return commit(self.blind, self.payload)

    def next(self, **changes) -> "WalletState":
        return replace(self, **changes)

    def write(self, w: Writer) -> None:
        w.fe(self.sk).u64(self.holding_limit).u64(self.ctr).u64(self.bal).u32(self.epoch)
        w.fes((self.scm_prev, self.ccm, self.blind))

    @classmethod
    def read(cls, r: Reader) -> "WalletState":
        return cls(r.fe(), r.u64(), r.u64(), r.u64(), r.u32(), r.fe(), r.fe(), r.fe())


@dataclass
class InternalEntry:
    """hist_int: the opening of an own state and the blind of a request issued from it."""

    state: WalletState
    blind_req: int | None = None


@dataclass
class RecoveryEntry:
    """hist_recovery: opening of the payment commitment of a received payment."""

    blind_pm: int
    value: int
    epoch_sender: int


def _opt_fe(w: Writer, x: int | None) -> None:
    w.flag(x is not None)
    if x is not None:
        w.fe(x)


def _opt_blob(w: Writer, b: bytes | None) -> None:
    w.flag(b is not None)
    if b is not None:
        w.blob(b)


@dataclass
class ExternalEntry:
    """hist_ext: forwardable material about one state (own or learned from a related history)."""

    scm: int
    kind: StateKind = StateKind.UNKNOWN
    sig: bytes | None = None
    sn: int | None = None
    ds: int | None = None
    dcm: int | None = None
    pcm: int | None = None
    zkp_state: bytes | None = None
    zkp_pm: bytes | None = None
    zkp_dep: bytes | None = None
    blind_dep: int | None = None
    scm_prev: int | None = None
    ccm: int | None = None

    _FE = ("sn", "ds", "dcm", "pcm", "blind_dep", "scm_prev", "ccm")
    _BLOB = ("sig", "zkp_state", "zkp_pm", "zkp_dep")

    @property
    def dependencies(self) -> tuple[int, ...]:
        if self.kind is StateKind.CREATION:
            return (self.scm_prev,)
        if self.kind is StateKind.COMPLETION:
            return (self.scm_prev, self.ccm)
        return ()

    def element(self) -> HistoryElement:
        """The history element this entry forwards, following the branch order of GetElement."""
        if self.sig is not None:
            return SignedLeaf(self.scm, self.sig)
        if self.kind is StateKind.CREATION:
            if self.zkp_dep is not None:
                return CreationWithDep(self.sn, self.ds, self.scm, self.dcm, self.zkp_state, self.zkp_dep)
            return CreationWithOpenings(self.sn, self.ds, self.scm, self.zkp_state, self.blind_dep, self.scm_prev)
        if self.kind is StateKind.COMPLETION:
            if self.zkp_dep is not None:
                return CompletionWithDep(self.scm, self.dcm, self.pcm, self.zkp_state, self.zkp_pm, self.zkp_dep)
            return CompletionWithOpenings(
                self.scm, self.pcm, self.zkp_state, self.zkp_pm, self.blind_dep, self.scm_prev, self.ccm
            )
        raise ValueError(f"state {self.scm:#x} has no signature and no forwardable proof material")

    def merge(self, el: HistoryElement) -> None:
        """Fill in whatever ``el`` carries that this entry lacks; never overwrite."""
        if isinstance(el, SignedLeaf):
            if self.sig is None:
                self.sig = el.sig
            return
        if self.kind is StateKind.UNKNOWN:
            self.kind = StateKind.CREATION if el.is_creation else StateKind.COMPLETION
        for name in ("sn", "ds", "dcm", "pcm", "zkp_state", "zkp_pm", "zkp_dep", "blind_dep", "scm_prev", "ccm"):
            if getattr(self, name) is None and hasattr(el, name):
                setattr(self, name, getattr(el, name))

    @classmethod
    def from_element(cls, el: HistoryElement) -> "ExternalEntry":
        entry = cls(el.scm)
        entry.merge(el)
        return entry

    def write(self, w: Writer) -> None:
        w.fe(self.scm).u8(int(self.kind))
        for name in self._FE:
            _opt_fe(w, getattr(self, name))
        for name in self._BLOB:
            _opt_blob(w, getattr(self, name))

    @classmethod
    def read(cls, r: Reader) -> "ExternalEntry":
        scm = r.fe()
        start = r.pos
        try:
            kind = StateKind(r.u8())
        except ValueError:
            raise DecodeError("unknown state kind", start) from None
        entry = cls(scm, kind)
        for name in cls._FE:
            setattr(entry, name, r.fe() if r.flag() else None)
        for name in cls._BLOB:
            setattr(entry, name, r.blob() if r.flag() else None)
        return entry


@dataclass
class Histories:
    internal: dict[int, InternalEntry] = field(default_factory=dict)
    external: dict[int, ExternalEntry] = field(default_factory=dict)
    recovery: dict[int, RecoveryEntry] = field(default_factory=dict)

    def ext(self, scm: int) -> ExternalEntry:
        entry = self.external.get(scm)
        if entry is None:
            entry = self.external[scm] = ExternalEntry(scm)
        return entry

    def signed(self, scm: int) -> bool:
        entry = self.external.get(scm)
        return entry is not None and entry.sig is not None
