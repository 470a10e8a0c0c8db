"""Versioned wallet files.

Layout: the magic ``OCBDCWAL``, a u16 version, then two length-prefixed
sections, each opened by a 4-byte marker. The ``PUBL`` section holds what
may be shown to an operator (the bank key, parameters, the own chain and the
external history); the ``SECR`` section holds the state openings, request
blinds and payment openings.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from pathlib import Path

from ..crypto import eddsa
from ..crypto.encoding import DecodeError, Reader, Writer
from .state import ExternalEntry, Histories, InternalEntry, RecoveryEntry, WalletState
from .wallet import Wallet

MAGIC = b"OCBDCWAL"
VERSION = 1
PUBLIC = b"PUBL"
SECRETS = b"SECR"


@dataclass
class WalletFile:
    """Decoded wallet file; ``internal`` and ``recovery`` come from the secrets section."""

    name: str
    bank_key: eddsa.PublicKey
    delta_sync: int
    head: int | None
    chain: list[int]
    external: dict[int, ExternalEntry]
    internal: dict[int, InternalEntry]
    recovery: dict[int, RecoveryEntry]


def _opt_fe(w: Writer, x: int | None) -> None:
    w.flag(x is not None)
    if x is not None:
        w.fe(x)


def encode_wallet(wallet: Wallet) -> bytes:
    pub = Writer().text(wallet.name).raw(wallet.bank_key.to_bytes()).u32(wallet.delta_sync)
    _opt_fe(pub, wallet.head)
    chain = wallet.chain() if wallet.head is not None else []
    pub.u32(len(chain)).fes(chain)
    pub.u32(len(wallet.hist.external))
    for entry in wallet.hist.external.values():
        entry.write(pub)

    sec = Writer().u32(len(wallet.hist.internal))
    for scm, entry in wallet.hist.internal.items():
        sec.fe(scm)
        entry.state.write(sec)
        _opt_fe(sec, entry.blind_req)
    sec.u32(len(wallet.hist.recovery))
    for scm, rec in wallet.hist.recovery.items():
        sec.fe(scm).fe(rec.blind_pm).u64(rec.value).u32(rec.epoch_sender)

    w = Writer().raw(MAGIC).u16(VERSION)
    w.raw(PUBLIC).blob(pub.getvalue()).raw(SECRETS).blob(sec.getvalue())
    return w.getvalue()


def _section(r: Reader, marker: bytes) -> Reader:
    """A reader confined to the next section; its offsets stay relative to the whole file."""
    start = r.pos
    if r.raw(4) != marker:
        raise DecodeError(f"expected section {marker.decode()}", start)
    n = r.u32()
    body = r.pos
    r.raw(n)
    return Reader(r.data[: body + n], body)


def decode_wallet(data: bytes, secrets: bool = True) -> WalletFile:
    r = Reader(data)
    if r.raw(len(MAGIC)) != MAGIC:
        raise DecodeError("not a wallet file", 0)
    version = r.u16()
    if version != VERSION:
        raise DecodeError(f"unsupported wallet file version {version}", len(MAGIC))

    pub = _section(r, PUBLIC)
    name = pub.text()
    key_at = pub.pos
    try:
        bank_key = eddsa.PublicKey.from_bytes(pub.raw(64))
    except ValueError as exc:
        raise DecodeError(f"bad bank key: {exc}", key_at) from None
    delta_sync = pub.u32()
    head = pub.fe() if pub.flag() else None
    chain = pub.fes(pub.u32())
    external = {}
    for _ in range(pub.u32()):
        entry = ExternalEntry.read(pub)
        external[entry.scm] = entry
    pub.expect_end()

    sec = _section(r, SECRETS)
    internal, recovery = {}, {}
    if secrets:
        for _ in range(sec.u32()):
            scm = sec.fe()
            state = WalletState.read(sec)
            internal[scm] = InternalEntry(state, sec.fe() if sec.flag() else None)
        for _ in range(sec.u32()):
            scm = sec.fe()
            recovery[scm] = RecoveryEntry(sec.fe(), sec.u64(), sec.u32())
        sec.expect_end()
    r.expect_end()
    return WalletFile(name, bank_key, delta_sync, head, chain, external, internal, recovery)


def save_wallet(wallet: Wallet, path: str | Path) -> None:
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_bytes(encode_wallet(wallet))
    os.replace(tmp, path)


def load_wallet(path: str | Path, backend, rng=None, clock=None) -> Wallet:
    f = decode_wallet(Path(path).read_bytes())
    w = Wallet(backend, f.bank_key, f.delta_sync, rng=rng, clock=clock, name=f.name)
    w.hist = Histories(f.internal, f.external, f.recovery)
    w.head = f.head
    return w
