"""The central bank service: enrollment, signature issuance, synchronization, recovery.

Proof verification runs without locks. The check-then-append around a serial
number runs under a lock for that serial number, so of two concurrent
creations sharing one, exactly one is signed and the other gets ⊥.
"""

from __future__ import annotations

import hashlib
import threading
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

from .. import proofs
from ..crypto import eddsa, field
from ..crypto.encoding import DecodeError, Reader, Writer
from ..messages import (
    CompletionSigRequest,
    CreationSigRequest,
    EnrollRequest,
    EpochChallenge,
    LedgerEntry,
    RecoveryRequest,
    Response,
    SigRequest,
    SyncRequest,
)
from ..proofs import ProofBundle, RelationId
from ..verifier import MISSING, StateVerifier
from .ledger import Ledger, identify_double_spenders
from .records import RecordLog

DEFAULT_EPOCH_SECONDS = 86400
DEFAULT_DELTA_SYNC = 30
DEFAULT_MAX_HOLDING_LIMIT = 3000


@dataclass(frozen=True)
class BankConfig:
    epoch_seconds: float = DEFAULT_EPOCH_SECONDS
    delta_sync: int = DEFAULT_DELTA_SYNC
    max_holding_limit: int = DEFAULT_MAX_HOLDING_LIMIT
    challenge_ttl: int = 1  # epochs a challenge stays usable after the one it was issued in


@dataclass(frozen=True)
class Disclosure:
    """Audit record: a recovering user's identity and received value, or a treasury issuance."""

    kind: str  # "recovery" or "issuance"
    id: int
    value: int
    scm: int

    _KINDS = {"recovery": 1, "issuance": 2}

    def to_bytes(self) -> bytes:
        return Writer().u8(self._KINDS[self.kind]).fe(self.id).u64(self.value).fe(self.scm).getvalue()

    @classmethod
    def from_bytes(cls, data: bytes) -> "Disclosure":
        r = Reader(data)
        code = r.u8()
        kinds = {v: k for k, v in cls._KINDS.items()}
        if code not in kinds:
            raise DecodeError(f"unknown audit record kind {code}", 0)
        out = cls(kinds[code], r.fe(), r.u64(), r.fe())
        r.expect_end()
        return out


class _KeyedLocks:
    def __init__(self):
        self._guard = threading.Lock()
        self._locks: dict[object, threading.Lock] = {}

    def __call__(self, key) -> threading.Lock:
        with self._guard:
            lock = self._locks.get(key)
            if lock is None:
                lock = self._locks[key] = threading.Lock()
            return lock


def state_paths(ledger_path: str | Path) -> dict[str, Path]:
    """Files of a persistent bank, all next to the ledger log."""
    p = Path(ledger_path)
    return {
        "ledger": p,
        "registry": p.with_name(p.name + ".registry"),
        "challenges": p.with_name(p.name + ".challenges"),
        "audit": p.with_name(p.name + ".audit"),
        "key": p.with_name(p.name + ".key"),
    }


def load_or_create_key(path: Path | None, seed: int | None = None) -> eddsa.SigningKey:
    if path is not None and path.exists():
        return eddsa.SigningKey(path.read_bytes())
    if seed is not None:
        key_seed = hashlib.sha256(b"offline-cbdc/bank-key/" + str(seed).encode()).digest()
    else:
        key_seed = eddsa.SigningKey.generate().seed
    if path is not None:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_bytes(key_seed)
    return eddsa.SigningKey(key_seed)


class BankService:
    def __init__(
        self,
        backend: proofs.Backend,
        config: BankConfig = BankConfig(),
        ledger_path: str | Path | None = None,
        clock: Callable[[], float] = time.time,
        seed: int | None = None,
        fsync: bool = False,
    ):
        self.backend = backend
        self.config = config
        self.clock = clock
        paths = state_paths(ledger_path) if ledger_path is not None else None
        self.signing_key = load_or_create_key(paths["key"] if paths else None, seed)
        self.public_key = self.signing_key.public_key
        self.ledger = Ledger(paths["ledger"] if paths else None, fsync)
        self._registry_log = RecordLog(paths["registry"] if paths else None, fsync)
        self._challenge_log = RecordLog(paths["challenges"] if paths else None, fsync)
        self._audit_log = RecordLog(paths["audit"] if paths else None, fsync)
        self.verifier = StateVerifier(backend, self.public_key, config.delta_sync)
        self._locks = _KeyedLocks()
        self._online_lock = threading.Lock()  # enrollment, sync and challenge bookkeeping
        self.registry: dict[int, tuple[int, int, int]] = {}  # id -> (scm, holding limit, epoch)
        self.challenges: dict[int, int] = {}  # challenge -> epoch issued
        self.used_challenges: set[int] = set()
        self._issued = 0
        self._restore()

    # -- persistence --------------------------------------------------------------

    def _restore(self) -> None:
        for rec in self._registry_log.records:
            r = Reader(rec)
            ident, scm, h, e = r.fe(), r.fe(), r.u64(), r.u32()
            self.registry[ident] = (scm, h, e)
        for rec in self._challenge_log.records:
            r = Reader(rec)
            kind, c = r.u8(), r.fe()
            if kind == 1:
                self.challenges[c] = r.u32()
                self._issued += 1
            else:
                self.used_challenges.add(c)

    @property
    def audit_log(self) -> list[Disclosure]:
        return [Disclosure.from_bytes(rec) for rec in self._audit_log.records]

    def close(self) -> None:
        for log in (self.ledger.log, self._registry_log, self._challenge_log, self._audit_log):
            log.close()

    # -- helpers --------------------------------------------------------------------

    def current_epoch(self) -> int:
        return int(self.clock() // self.config.epoch_seconds)

    def _sign(self, scm: int) -> bytes:
        return self.signing_key.sign(scm).to_bytes()

    def _verify(self, rid: RelationId, public, proof: bytes) -> bool:
        return proofs.verify(self.backend, ProofBundle(rid, tuple(public), proof), rid)

    def _challenge_problem(self, epoch: int, challenge: int) -> str | None:
        issued = self.challenges.get(challenge)
        if issued is None:
            return "challenge: unknown"
        if challenge in self.used_challenges:
            return "challenge: already used"
        if issued != epoch:
            return "challenge: epoch mismatch"
        if self.current_epoch() - issued > self.config.challenge_ttl:
            return "challenge: expired"
        return None

    def _use_challenge(self, challenge: int) -> None:
        self.used_challenges.add(challenge)
        self._challenge_log.append(Writer().u8(2).fe(challenge).getvalue())

    def _signed(self, scm: int) -> bytes | None:
        entry = self.ledger.get(scm)
        return entry.sig if entry is not None else None

    def _append_and_sign(self, scm: int, sn: int | None = None, ds: int | None = None) -> bytes:
        self.ledger.append(scm, sn, ds)
        sig = self._signed(scm)
        if sig is None:
            sig = self._sign(scm)
            self.ledger.sign(scm, sig)
        return sig

    # -- online operations ------------------------------------------------------------

    def epoch_challenge(self) -> EpochChallenge:
        with self._online_lock:
            e = self.current_epoch()
            seed = self.signing_key.seed + self._issued.to_bytes(8, "big")
            c = int.from_bytes(hashlib.sha256(b"offline-cbdc/challenge/" + seed).digest(), "big") % field.P
            self._issued += 1
            self.challenges[c] = e
            self._challenge_log.append(Writer().u8(1).fe(c).u32(e).getvalue())
            return EpochChallenge(e, c)

    def enroll(self, req: EnrollRequest) -> Response:
        with self._online_lock:
            known = self.registry.get(req.id)
            if known is not None and known[0] == req.scm and self._signed(req.scm) is not None:
                return Response.signed(self._signed(req.scm))
            if not 0 < req.holding_limit <= self.config.max_holding_limit:
                return Response.rejected("holding limit policy")
            problem = self._challenge_problem(req.epoch, req.challenge)
            if problem:
                return Response.rejected(problem)
            public = (req.id, req.scm, req.epoch, req.holding_limit, req.challenge)
            if not self._verify(RelationId.ENROLL, public, req.zkp_enroll):
                return Response.rejected("enrollment proof")
            if known is not None:
                return Response.rejected("already registered")
            if self.ledger.get(req.scm) is not None:
                return Response.rejected("state commitment already on the ledger")
            self._use_challenge(req.challenge)
            self.registry[req.id] = (req.scm, req.holding_limit, req.epoch)
            self._registry_log.append(
                Writer().fe(req.id).fe(req.scm).u64(req.holding_limit).u32(req.epoch).getvalue()
            )
            return Response.signed(self._append_and_sign(req.scm))

    def request_signature(self, req: SigRequest) -> Response:
        el = req.element
        reason = self.verifier.check_state(el)
        if reason is not None:
            return Response.rejected(reason)
        if isinstance(req, CreationSigRequest):
            with self._locks(("sn", el.sn)):
                existing = self.ledger.get(el.scm)
                if existing is not None and existing.sig is not None:
                    return Response.signed(existing.sig)
                self.ledger.append(el.scm, el.sn, el.ds)
                if len(self.ledger.with_serial(el.sn)) > 1:
                    return Response.double_spend()
                return Response.signed(self._append_and_sign(el.scm))
        if isinstance(req, CompletionSigRequest):
            with self._locks(("scm", el.scm)):
                return Response.signed(self._append_and_sign(el.scm))
        return Response.rejected("unknown request kind")

    def synchronize(self, req: SyncRequest) -> Response:
        with self._online_lock:
            sig = self._signed(req.scm)
            if sig is not None:
                return Response.signed(sig)
            problem = self._challenge_problem(req.epoch, req.challenge)
            if problem:
                return Response.rejected(problem)
            public = (self.public_key.x, self.public_key.y, req.scm, req.epoch, req.challenge)
            if not self._verify(RelationId.SYNC, public, req.zkp_sync):
                return Response.rejected("synchronization proof")
            if self.ledger.get(req.scm) is not None:
                return Response.rejected("state commitment already on the ledger")
            self._use_challenge(req.challenge)
        with self._locks(("scm", req.scm)):
            return Response.signed(self._append_and_sign(req.scm))

    def recover(self, req: RecoveryRequest) -> Response:
        sig = self._signed(req.scm)
        if sig is not None:
            return Response.signed(sig)
        el = req.history.get(req.scm)
        if el is None or not el.is_completion:
            return Response.rejected(MISSING)
        public = (self.public_key.x, self.public_key.y, req.id, req.value, req.scm, el.pcm)
        if not self._verify(RelationId.RECOVERY, public, req.zkp_recovery):
            return Response.rejected("recovery proof")
        failure = self.verifier.check_offline_completion(req.history, req.scm)
        if failure is not None:
            return Response.rejected(str(failure))
        for item in req.history:
            if item.is_creation:
                with self._locks(("sn", item.sn)):
                    self.ledger.append(item.scm, item.sn, item.ds)
            elif item.is_completion and item.scm != req.scm:
                self.ledger.append(item.scm)
        with self._locks(("scm", req.scm)):
            if self._signed(req.scm) is not None:
                return Response.signed(self._signed(req.scm))
            sig = self._append_and_sign(req.scm)
            self._audit_log.append(Disclosure("recovery", req.id, req.value, req.scm).to_bytes())
        return Response.signed(sig)

    def query_ledger(self, scm: int) -> LedgerEntry | None:
        return self.ledger.get(scm)

    # -- bank-internal operations ---------------------------------------------------

    def issue(self, state) -> bytes:
        """Sign a fresh treasury state whose opening the bank itself holds (money issuance)."""
        if state.ctr != 0 or state.scm_prev != 0 or not 0 <= state.bal <= state.holding_limit:
            raise ValueError("issued state must be a fresh state with 0 <= bal <= holding limit")
        scm = state.scm
        if self.ledger.get(scm) is not None:
            raise ValueError("state commitment already on the ledger")
        sig = self._append_and_sign(scm)
        self._audit_log.append(Disclosure("issuance", 0, state.bal, scm).to_bytes())
        return sig

    def identify_double_spenders(self) -> list[int]:
        return identify_double_spenders(self.ledger)
