"""User wallet: enrollment, offline payments, reconnect, synchronization and state recovery."""

from __future__ import annotations

import random
from collections import Counter
from dataclasses import dataclass
from typing import Callable, Protocol

from .. import proofs
from ..crypto import eddsa, field
from ..crypto.commit import commit, double_spend_tag, prf_id, prf_sn
from ..messages import (
    CompletionSigRequest,
    CompletionWithDep,
    CreationSigRequest,
    CreationWithDep,
    EnrollRequest,
    EpochChallenge,
    LedgerEntry,
    Payment,
    PaymentProof,
    PaymentRequest,
    RecoveryRequest,
    RelatedHistory,
    Response,
    SigRequest,
    Status,
    SyncRequest,
)
from ..proofs import RelationId, pack
from ..proofs.relations import ContractViolation, sig_values
from ..verifier import MISSING, StateVerifier
from .state import Histories, InternalEntry, RecoveryEntry, StateKind, WalletState


class BankApi(Protocol):
    def epoch_challenge(self) -> EpochChallenge: ...

    def enroll(self, req: EnrollRequest) -> Response: ...

    def request_signature(self, req: SigRequest) -> Response: ...

    def synchronize(self, req: SyncRequest) -> Response: ...

    def recover(self, req: RecoveryRequest) -> Response: ...

    def query_ledger(self, scm: int) -> LedgerEntry | None: ...


class WalletError(Exception):
    """A local refusal: the operation's precondition does not hold."""


class PaymentRejected(WalletError):
    def __init__(self, reason: str):
        super().__init__(f"payment rejected: {reason}")
        self.reason = reason


class BankRejected(WalletError):
    def __init__(self, reason: str):
        super().__init__(f"bank rejected the request: {reason}")
        self.reason = reason


@dataclass(frozen=True)
class ReconnectResult:
    status: str  # "signed", "recovery_needed" or "double_spend"
    recovery_scm: int | None = None
    requests: int = 0

    @property
    def signed(self) -> bool:
        return self.status == "signed"


class Wallet:
    def __init__(
        self,
        backend: proofs.Backend,
        bank_key: eddsa.PublicKey,
        delta_sync: int,
        rng: random.Random | None = None,
        clock: Callable[[], int] | None = None,
        name: str = "",
    ):
        self.backend = backend
        self.bank_key = bank_key
        self.delta_sync = delta_sync
        self.rng = rng if rng is not None else random.SystemRandom()
        self.clock = clock
        self.name = name
        self.hist = Histories()
        self.head: int | None = None
        self.verifier = StateVerifier(backend, bank_key, delta_sync)
        self.stats: Counter = Counter()

    # -- helpers ----------------------------------------------------------------

    def _rand(self) -> int:
        return field.random_element(self.rng)

    @property
    def state(self) -> WalletState:
        if self.head is None:
            raise WalletError("wallet is not enrolled")
        return self.hist.internal[self.head].state

    @property
    def id(self) -> int:
        return prf_id(self.state.sk)

    @property
    def balance(self) -> int:
        return self.state.bal

    def owns(self, scm: int) -> bool:
        return scm in self.hist.internal

    def expired(self) -> bool:
        return self.clock is not None and self.clock() - self.state.epoch > self.delta_sync

    def _check_not_expired(self) -> None:
        if self.expired():
            raise WalletError("wallet expired: synchronize first")

    def _prove(self, rid: RelationId, public: dict, witness: dict) -> bytes:
        self.stats[f"prove:{rid.name}"] += 1
        bundle = proofs.prove(self.backend, rid, pack(rid, "public", **public), pack(rid, "witness", **witness))
        return bundle.proof

    def _sig(self, scm: int) -> eddsa.Signature:
        return eddsa.Signature.from_bytes(self.hist.external[scm].sig)

    def _accept_sig(self, scm: int, sig: bytes | None) -> bool:
        if sig is None or not eddsa.verify_bytes(self.bank_key, scm, sig):
            return False
        self.hist.ext(scm).sig = sig
        return True

    def chain(self) -> list[int]:
        """Own state commitments from the latest back to the first."""
        out, scm = [], self.head
        while scm is not None and scm in self.hist.internal:
            out.append(scm)
            scm = self.hist.internal[scm].state.scm_prev
        return out

    def unsigned_states(self) -> list[int]:
        return [scm for scm in self.chain() if not self.hist.signed(scm)]

    # -- enrollment -------------------------------------------------------------

    def enroll_message(self, holding_limit: int, epoch: int, challenge: int) -> EnrollRequest:
        sk = self._rand()
        state = WalletState(sk, holding_limit, 0, 0, epoch, 0, challenge, self._rand())
        scm = state.scm
        proof = self._prove(
            RelationId.ENROLL,
            dict(id=prf_id(sk), scm=scm, epoch=epoch, holding_limit=holding_limit, challenge=challenge),
            dict(sk=sk, blind=state.blind),
        )
        self.hist.internal[scm] = InternalEntry(state)
        self.hist.ext(scm).kind = StateKind.ANCHOR
        return EnrollRequest(prf_id(sk), scm, epoch, holding_limit, challenge, proof)

    def enroll(self, bank: BankApi, holding_limit: int) -> int:
        ec = bank.epoch_challenge()
        msg = self.enroll_message(holding_limit, ec.epoch, ec.challenge)
        resp = bank.enroll(msg)
        if not resp.ok or not self._accept_sig(msg.scm, resp.sig):
            del self.hist.internal[msg.scm]
            del self.hist.external[msg.scm]
            raise BankRejected(resp.reason or "invalid signature")
        self.head = msg.scm
        return msg.scm

    def adopt_issued_state(self, state: WalletState, sig: bytes) -> None:
        """Start from a state the bank created and signed directly (treasury funding)."""
        scm = state.scm
        if not eddsa.verify_bytes(self.bank_key, scm, sig):
            raise WalletError("issued state carries no valid bank signature")
        self.hist.internal[scm] = InternalEntry(state)
        entry = self.hist.ext(scm)
        entry.kind, entry.sig = StateKind.ANCHOR, sig
        self.head = scm

    # -- offline payment --------------------------------------------------------

    def request_payment(self, value: int) -> PaymentRequest:
        self._check_not_expired()
        if not field.in_value_range(value):
            raise WalletError("value outside the 64-bit value domain")
        blind_req = self._rand()
        self.hist.internal[self.head].blind_req = blind_req
        return PaymentRequest(commit(blind_req, [self.head]), value)

    def create_payment(self, req: PaymentRequest) -> Payment:
        self._check_not_expired()
        new, payment = self._create_from(self.state, req)
        self.head = new.scm
        return payment

    def _create_from(self, base: WalletState, req: PaymentRequest) -> tuple[WalletState, Payment]:
        v = req.value
        if v > base.bal:
            raise WalletError("insufficient balance")
        old = base.scm
        new = base.next(ctr=base.ctr + 1, bal=base.bal - v, scm_prev=old, ccm=req.rcm, blind=self._rand())
        scm_new = new.scm
        blind_dep = self._rand()
        dcm = commit(blind_dep, [old])
        sn = prf_sn(base.sk, new.ctr)
        ds = double_spend_tag(base.sk, new.ctr, scm_new)
        zkp_state = self._prove(
            RelationId.CREATE_STATE,
            dict(scm_new=scm_new, dcm=dcm, sn=sn, ds=ds),
            dict(
                sk=base.sk, holding_limit=base.holding_limit, ctr=base.ctr, bal=base.bal, epoch=base.epoch,
                value=v, scm_prev=base.scm_prev, ccm=base.ccm, ccm_new=req.rcm, blind=base.blind,
                blind_new=new.blind, blind_dep=blind_dep, id=prf_id(base.sk), scm=old,
            ),
        )
        self.hist.internal[scm_new] = InternalEntry(new)
        entry = self.hist.ext(scm_new)
        entry.kind = StateKind.CREATION
        entry.sn, entry.ds, entry.dcm, entry.zkp_state = sn, ds, dcm, zkp_state
        entry.blind_dep, entry.scm_prev, entry.ccm = blind_dep, old, req.rcm
        self._dependency_proof(scm_new)
        history = self.related_history(scm_new)

        blind_pm = self._rand()
        pcm = commit(blind_pm, [v, req.rcm, scm_new, base.epoch])
        zkp_pm = self._prove(
            RelationId.PAYMENT,
            dict(pcm=pcm),
            dict(
                sk=base.sk, holding_limit=base.holding_limit, ctr=base.ctr, bal=base.bal, epoch=base.epoch,
                value=v, scm_prev=base.scm_prev, scm_new=scm_new, ccm=base.ccm, ccm_new=req.rcm,
                blind=base.blind, blind_new=new.blind, blind_pm=blind_pm, scm=old,
            ),
        )
        self.stats["payments_sent"] += 1
        return new, Payment(history, PaymentProof(scm_new, v, base.epoch, blind_pm, zkp_pm))

    def accept_payment(self, payment: Payment) -> None:
        """Raise PaymentRejected naming the failed check; never mutates state."""
        pm, hist = payment.proof, payment.history
        blind_req = self.hist.internal[self.head].blind_req
        if blind_req is None:
            raise PaymentRejected("no outstanding payment request")
        if self.expired():
            raise PaymentRejected("wallet expired")
        el = hist.get(pm.scm)
        if el is None or not el.is_creation:
            raise PaymentRejected(MISSING)
        if abs(pm.epoch - self.state.epoch) > self.delta_sync:
            raise PaymentRejected("sender epoch too far from ours")
        rcm = commit(blind_req, [self.head])
        pcm = commit(pm.blind_pm, [pm.value, rcm, pm.scm, pm.epoch])
        if not self.verifier.payment_ok(pcm, pm.zkp_pm):
            raise PaymentRejected("payment proof")
        failure = self.verifier.check_offline_creation(hist, pm.scm)
        if failure is not None:
            raise PaymentRejected(failure.reason if failure.reason == MISSING else str(failure))

    def complete_payment(self, payment: Payment) -> int:
        s = self.state
        if s.bal + payment.proof.value > s.holding_limit:
            raise WalletError("holding limit would be exceeded")
        return self._complete(payment)

    def _complete(self, payment: Payment) -> int:
        pm = payment.proof
        s = self.state
        old = self.head
        blind_req = self.hist.internal[old].blind_req
        if blind_req is None:
            raise WalletError("no outstanding payment request")
        rcm = commit(blind_req, [old])
        pcm = commit(pm.blind_pm, [pm.value, rcm, pm.scm, pm.epoch])
        new = s.next(bal=s.bal + pm.value, scm_prev=old, ccm=pm.scm, blind=self._rand())
        scm_new = new.scm
        for el in payment.history:
            if el.scm not in self.hist.internal:
                self.hist.ext(el.scm).merge(el)
        blind_dep = self._rand()
        dcm = commit(blind_dep, [old, pm.scm])
        zkp_state = self._prove(
            RelationId.COMPLETE_STATE,
            dict(delta_sync=self.delta_sync, scm_new=scm_new, dcm=dcm, pcm=pcm),
            dict(
                sk=s.sk, holding_limit=s.holding_limit, ctr=s.ctr, bal=s.bal, epoch=s.epoch,
                epoch_sender=pm.epoch, value=pm.value, scm_prev=s.scm_prev, ccm=s.ccm, ccm_new=pm.scm,
                blind_req=blind_req, blind=s.blind, blind_new=new.blind, blind_dep=blind_dep,
                blind_pm=pm.blind_pm, scm=old, rcm=rcm,
            ),
        )
        self.hist.internal[scm_new] = InternalEntry(new)
        self.hist.recovery[scm_new] = RecoveryEntry(pm.blind_pm, pm.value, pm.epoch)
        entry = self.hist.ext(scm_new)
        entry.kind = StateKind.COMPLETION
        entry.dcm, entry.pcm, entry.zkp_state, entry.zkp_pm = dcm, pcm, zkp_state, pm.zkp_pm
        entry.blind_dep, entry.scm_prev, entry.ccm = blind_dep, old, pm.scm
        self.head = scm_new
        self._dependency_proof(scm_new)
        self.stats["payments_received"] += 1
        return scm_new

    def receive_payment(self, payment: Payment) -> int:
        self.accept_payment(payment)
        return self.complete_payment(payment)

    # -- related history --------------------------------------------------------

    def get_element(self, scm: int):
        entry = self.hist.external.get(scm)
        if entry is None:
            raise ContractViolation(f"state {scm:#x} is not in the external history")
        return entry.element()

    def related_history(self, scm: int) -> RelatedHistory:
        """Elements for ``scm`` and, until a signature or zkp_dep anchors it, its dependencies."""
        out = RelatedHistory()
        stack = [scm]
        while stack:
            s = stack.pop()
            if s in out:
                continue
            el = self.get_element(s)
            out.add(el)
            entry = self.hist.external[s]
            if entry.sig is not None or entry.zkp_dep is not None:
                continue
            if entry.kind is StateKind.COMPLETION:
                stack.append(entry.ccm)
            stack.append(entry.scm_prev)
        return out

    # -- reconnect ----------------------------------------------------------------

    def _dependency_proof(self, scm: int) -> bool:
        """Build zkp_dep for ``scm`` once all its dependencies are signed."""
        entry = self.hist.external[scm]
        if entry.zkp_dep is not None:
            return True
        deps = entry.dependencies
        if not deps or not all(self.hist.signed(d) for d in deps):
            return False
        pk = dict(pk_x=self.bank_key.x, pk_y=self.bank_key.y)
        if entry.kind is StateKind.CREATION:
            entry.dcm = entry.dcm if entry.dcm is not None else commit(entry.blind_dep, [entry.scm_prev])
            entry.zkp_dep = self._prove(
                RelationId.CREATE_DEP,
                dict(**pk, dcm=entry.dcm),
                dict(scm=entry.scm_prev, blind_dep=entry.blind_dep, **sig_values("sig", self._sig(entry.scm_prev))),
            )
        else:
            if entry.dcm is None:
                entry.dcm = commit(entry.blind_dep, [entry.scm_prev, entry.ccm])
            entry.zkp_dep = self._prove(
                RelationId.COMPLETE_DEP,
                dict(**pk, dcm=entry.dcm),
                dict(
                    scm=entry.scm_prev, ccm_new=entry.ccm, blind_dep=entry.blind_dep,
                    **sig_values("sig", self._sig(entry.scm_prev)),
                    **sig_values("cp_sig", self._sig(entry.ccm)),
                ),
            )
        return True

    def create_sig_request(self, scm: int) -> SigRequest | None:
        entry = self.hist.external[scm]
        if not self._dependency_proof(scm):
            return None
        if entry.kind is StateKind.CREATION:
            return CreationSigRequest(
                CreationWithDep(entry.sn, entry.ds, scm, entry.dcm, entry.zkp_state, entry.zkp_dep)
            )
        return CompletionSigRequest(
            CompletionWithDep(scm, entry.dcm, entry.pcm, entry.zkp_state, entry.zkp_pm, entry.zkp_dep)
        )

    def query_signature(self, bank: BankApi, scm: int) -> bool:
        if self.hist.signed(scm):
            return True
        self.stats["ledger_queries"] += 1
        found = bank.query_ledger(scm)
        return found is not None and self._accept_sig(scm, found.sig)

    def _reconnect(self, bank: BankApi, scm: int) -> tuple[bool, int | None]:
        if self.query_signature(bank, scm):
            return False, None
        entry = self.hist.external.get(scm)
        if entry is None or entry.kind in (StateKind.UNKNOWN, StateKind.ANCHOR):
            raise WalletError(f"state {scm:#x} is unsigned and has no proof material")
        if entry.zkp_dep is None:
            flag, rec = self._reconnect(bank, entry.scm_prev)
            if flag:
                return flag, rec
            if entry.kind is StateKind.COMPLETION:
                flag, rec = self._reconnect(bank, entry.ccm)
                if flag:
                    return (True, scm) if self.owns(scm) else (True, rec)
        req = self.create_sig_request(scm)
        if req is None:
            raise WalletError(f"dependencies of {scm:#x} are still unsigned")
        self.stats["sig_requests"] += 1
        resp = bank.request_signature(req)
        if resp.status is Status.REJECTED:
            raise BankRejected(resp.reason)
        if resp.ok and self._accept_sig(scm, resp.sig):
            return False, None
        return True, None

    def reconnect(self, bank: BankApi, scm: int | None = None) -> ReconnectResult:
        before = self.stats["sig_requests"]
        flag, rec = self._reconnect(bank, self.head if scm is None else scm)
        sent = self.stats["sig_requests"] - before
        if not flag:
            return ReconnectResult("signed", None, sent)
        return ReconnectResult("recovery_needed" if rec is not None else "double_spend", rec, sent)

    def settle(self, bank: BankApi) -> tuple[ReconnectResult, list[int]]:
        """Reconnect, running state recovery whenever reconnect asks for it."""
        recovered: list[int] = []
        while True:
            result = self.reconnect(bank)
            if result.status != "recovery_needed":
                return result, recovered
            if result.recovery_scm in recovered:
                raise WalletError("recovery did not unblock reconnect")
            self.state_recovery(bank, result.recovery_scm)
            recovered.append(result.recovery_scm)

    # -- synchronization and recovery ---------------------------------------------

    def sync_message(self, ec: EpochChallenge) -> SyncRequest:
        s, old = self.state, self.head
        if not self.hist.signed(old):
            raise WalletError("latest state is unsigned: reconnect before synchronizing")
        new = s.next(epoch=ec.epoch, scm_prev=old, ccm=ec.challenge, blind=self._rand())
        scm_new = new.scm
        proof = self._prove(
            RelationId.SYNC,
            dict(pk_x=self.bank_key.x, pk_y=self.bank_key.y, scm_new=scm_new, epoch_new=ec.epoch, challenge=ec.challenge),
            dict(
                sk=s.sk, holding_limit=s.holding_limit, ctr=s.ctr, bal=s.bal, epoch=s.epoch,
                scm_prev=s.scm_prev, ccm=s.ccm, blind=s.blind, blind_new=new.blind, scm=old,
                **sig_values("sig", self._sig(old)),
            ),
        )
        self.hist.internal[scm_new] = InternalEntry(new)
        self.hist.ext(scm_new).kind = StateKind.ANCHOR
        return SyncRequest(scm_new, ec.epoch, ec.challenge, proof)

    def synchronize(self, bank: BankApi) -> int:
        msg = self.sync_message(bank.epoch_challenge())
        resp = bank.synchronize(msg)
        if not resp.ok or not self._accept_sig(msg.scm, resp.sig):
            self.hist.internal.pop(msg.scm, None)
            self.hist.external.pop(msg.scm, None)
            raise BankRejected(resp.reason or "invalid signature")
        self.head = msg.scm
        return msg.scm

    def recovery_message(self, scm: int) -> RecoveryRequest:
        entry = self.hist.external.get(scm)
        if not self.owns(scm) or entry is None or entry.kind is not StateKind.COMPLETION:
            raise WalletError("state recovery applies only to own payment completions: not a completion")
        state = self.hist.internal[scm].state
        prev = state.scm_prev
        if not self.hist.signed(prev):
            raise WalletError("predecessor of the recovering state is unsigned")
        blind_req = self.hist.internal[prev].blind_req
        rec = self.hist.recovery[scm]
        rcm = commit(blind_req, [prev])
        proof = self._prove(
            RelationId.RECOVERY,
            dict(
                pk_x=self.bank_key.x, pk_y=self.bank_key.y, id=prf_id(state.sk), value=rec.value,
                scm=scm, pcm=entry.pcm,
            ),
            dict(
                sk=state.sk, holding_limit=state.holding_limit, ctr=state.ctr, bal=state.bal, epoch=state.epoch,
                epoch_sender=rec.epoch_sender, scm_prev=prev, ccm=state.ccm, blind=state.blind,
                blind_req=blind_req, blind_pm=rec.blind_pm, rcm=rcm, **sig_values("sig", self._sig(prev)),
            ),
        )
        return RecoveryRequest(scm, prf_id(state.sk), rec.value, proof, self.related_history(scm))

    def state_recovery(self, bank: BankApi, scm: int) -> None:
        msg = self.recovery_message(scm)
        self.stats["recoveries"] += 1
        resp = bank.recover(msg)
        if not resp.ok or not self._accept_sig(scm, resp.sig):
            raise BankRejected(resp.reason or "invalid signature")

    # -- housekeeping -----------------------------------------------------------

    def prune(self) -> int:
        """Drop signed foreign entries no unsigned entry depends on; returns the count removed."""
        needed = set(self.hist.internal)
        for entry in self.hist.external.values():
            if entry.sig is None:
                needed.update(d for d in entry.dependencies if d is not None)
        drop = [s for s, e in self.hist.external.items() if e.sig is not None and s not in needed]
        for s in drop:
            del self.hist.external[s]
        return len(drop)
