"""The public ledger: append-only entries, indexed by commitment and serial number.

On disk the ledger is a record log of two record kinds: an APPEND carrying a
new entry (never with a signature) and a SIGN filling the signature of an
existing entry exactly once. Replaying the log rebuilds the ledger.
"""

from __future__ import annotations

import threading
from pathlib import Path

from ..crypto.commit import solve_identity
from ..crypto.encoding import DecodeError, Reader, Writer
from ..messages import LedgerEntry
from .records import RecordLog, parse_records

APPEND = 1
SIGN = 2


class LedgerError(Exception):
    pass


def encode_append(entry: LedgerEntry) -> bytes:
    w = Writer().u8(APPEND)
    LedgerEntry(entry.scm, entry.sn, entry.ds, None).write(w)
    return w.getvalue()


def encode_sign(scm: int, sig: bytes) -> bytes:
    return Writer().u8(SIGN).fe(scm).blob(sig).getvalue()


class Ledger:
    def __init__(self, path: str | Path | None = None, fsync: bool = False):
        self._lock = threading.RLock()
        self.entries: list[LedgerEntry] = []
        self._by_scm: dict[int, int] = {}
        self._by_sn: dict[int, list[int]] = {}
        self.log = RecordLog(path, fsync)
        offset = 0
        for rec in self.log.records:
            try:
                self._apply(rec)
            except (DecodeError, LedgerError) as exc:
                raise DecodeError(f"bad ledger record: {exc}", offset) from None
            offset += 4 + len(rec)

    def _apply(self, rec: bytes) -> None:
        r = Reader(rec)
        kind = r.u8()
        if kind == APPEND:
            entry = LedgerEntry.read(r)
            r.expect_end()
            self._append_mem(entry)
        elif kind == SIGN:
            scm, sig = r.fe(), r.blob()
            r.expect_end()
            self._sign_mem(scm, sig)
        else:
            raise DecodeError(f"unknown ledger record kind {kind}", 0)

    def _append_mem(self, entry: LedgerEntry) -> int:
        if entry.scm in self._by_scm:
            raise LedgerError("state commitment already on the ledger")
        idx = len(self.entries)
        self.entries.append(LedgerEntry(entry.scm, entry.sn, entry.ds, None))
        self._by_scm[entry.scm] = idx
        if entry.sn is not None:
            self._by_sn.setdefault(entry.sn, []).append(idx)
        return idx

    def _sign_mem(self, scm: int, sig: bytes) -> None:
        idx = self._by_scm.get(scm)
        if idx is None:
            raise LedgerError("signature for an unknown state commitment")
        old = self.entries[idx]
        if old.sig is not None:
            raise LedgerError("signature already filled")
        self.entries[idx] = LedgerEntry(old.scm, old.sn, old.ds, sig)

    # -- public API ---------------------------------------------------------------

    def append(self, scm: int, sn: int | None = None, ds: int | None = None) -> bool:
        """Append an unsigned entry unless ``scm`` is already present; True when appended."""
        with self._lock:
            if scm in self._by_scm:
                return False
            entry = LedgerEntry(scm, sn, ds, None)
            self._append_mem(entry)
            self.log.append(encode_append(entry))
            return True

    def sign(self, scm: int, sig: bytes) -> None:
        with self._lock:
            self._sign_mem(scm, sig)
            self.log.append(encode_sign(scm, sig))

    def get(self, scm: int) -> LedgerEntry | None:
        with self._lock:
            idx = self._by_scm.get(scm)
            return None if idx is None else self.entries[idx]

    def with_serial(self, sn: int) -> list[LedgerEntry]:
        with self._lock:
            return [self.entries[i] for i in self._by_sn.get(sn, ())]

    def conflicts(self) -> dict[int, list[LedgerEntry]]:
        """Serial numbers carried by more than one entry."""
        with self._lock:
            return {sn: [self.entries[i] for i in idx] for sn, idx in self._by_sn.items() if len(idx) > 1}

    def __len__(self) -> int:
        return len(self.entries)

    def close(self) -> None:
        self.log.close()


def identify_double_spenders(ledger: Ledger) -> list[int]:
    """Identifiers solved from every pair of entries sharing a serial number, deduplicated."""
    found: list[int] = []
    for entries in ledger.conflicts().values():
        for i, a in enumerate(entries):
            for b in entries[i + 1 :]:
                if a.scm == b.scm:
                    continue
                ident = solve_identity(a.scm, a.ds, b.scm, b.ds)
                if ident not in found:
                    found.append(ident)
    return found


def read_ledger_file(path: str | Path) -> list[LedgerEntry]:
    """Parse a ledger log without opening it for writing (inspection)."""
    data = Path(path).read_bytes()
    ledger = Ledger()
    offset = 0
    for rec in parse_records(data)[0]:
        try:
            ledger._apply(rec)
        except (DecodeError, LedgerError) as exc:
            raise DecodeError(f"bad ledger record: {exc}", offset) from None
        offset += 4 + len(rec)
    return ledger.entries
