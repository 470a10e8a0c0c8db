"""Recursive state verification shared by payment recipients and the bank.

``check_*`` functions return ``None`` on success or a :class:`Failure` naming
the element and the check that failed; the ``verify_*`` functions are the
boolean forms.
"""

from __future__ import annotations

from dataclasses import dataclass

from . import proofs
from .crypto import eddsa
from .messages import (
    CompletionWithDep,
    CompletionWithOpenings,
    CreationWithDep,
    CreationWithOpenings,
    HistoryElement,
    RelatedHistory,
    SignedLeaf,
)
from .proofs import ProofBundle, RelationId

MISSING = "incomplete related history"
STATE_PROOF = "state proof"
PAYMENT_PROOF = "payment proof"
DEPENDENCY_PROOF = "dependency proof"
SIGNATURE = "signature"
WRONG_KIND = "unexpected state kind"
CYCLE = "commitment cycle"


@dataclass(frozen=True)
class Failure:
    scm: int
    reason: str

    def __str__(self) -> str:
        return f"{self.reason} (state {self.scm:#x})"


@dataclass
class StateVerifier:
    backend: proofs.Backend
    bank_key: eddsa.PublicKey
    delta_sync: int

    def _ok(self, rid: RelationId, public, proof: bytes) -> bool:
        return proofs.verify(self.backend, ProofBundle(rid, tuple(public), proof), rid)

    def _pk(self) -> tuple[int, int]:
        return self.bank_key.x, self.bank_key.y

    # -- local checks ---------------------------------------------------------

    def creation_state_ok(self, el) -> bool:
        return self._ok(RelationId.CREATE_STATE, (el.scm, el.dcm, el.sn, el.ds), el.zkp_state)

    def completion_state_ok(self, el) -> bool:
        return self._ok(RelationId.COMPLETE_STATE, (self.delta_sync, el.scm, el.dcm, el.pcm), el.zkp_state)

    def payment_ok(self, pcm: int, proof: bytes) -> bool:
        return self._ok(RelationId.PAYMENT, (pcm,), proof)

    def signature_ok(self, scm: int, sig: bytes) -> bool:
        return eddsa.verify_bytes(self.bank_key, scm, sig)

    def check_state(self, el: HistoryElement) -> str | None:
        """State and dependency proofs of an element carrying zkp_dep; the reason on failure."""
        if isinstance(el, CreationWithDep):
            if not self.creation_state_ok(el):
                return STATE_PROOF
            if not self._ok(RelationId.CREATE_DEP, (*self._pk(), el.dcm), el.zkp_dep):
                return DEPENDENCY_PROOF
            return None
        if isinstance(el, CompletionWithDep):
            if not self.completion_state_ok(el):
                return STATE_PROOF
            if not self.payment_ok(el.pcm, el.zkp_pm):
                return PAYMENT_PROOF
            if not self._ok(RelationId.COMPLETE_DEP, (*self._pk(), el.dcm), el.zkp_dep):
                return DEPENDENCY_PROOF
            return None
        return WRONG_KIND

    def verify_state(self, el: HistoryElement) -> bool:
        return self.check_state(el) is None

    # -- recursive checks -----------------------------------------------------

    def check_offline_creation(self, hist: RelatedHistory, scm: int) -> Failure | None:
        return _Walk(self, hist).creation(scm)

    def check_offline_completion(self, hist: RelatedHistory, scm: int) -> Failure | None:
        return _Walk(self, hist).completion(scm)

    def verify_offline_creation(self, hist: RelatedHistory, scm: int) -> bool:
        return self.check_offline_creation(hist, scm) is None

    def verify_offline_completion(self, hist: RelatedHistory, scm: int) -> bool:
        return self.check_offline_completion(hist, scm) is None


class _Walk:
    """One verification pass: memoises shared ancestors and rejects cycles."""

    def __init__(self, v: StateVerifier, hist: RelatedHistory):
        self.v = v
        self.hist = hist
        self.done: dict[int, Failure | None] = {}
        self.active: set[int] = set()

    def creation(self, scm: int) -> Failure | None:
        return self._visit(scm, want_creation=True)

    def completion(self, scm: int) -> Failure | None:
        return self._visit(scm, want_creation=False)

    def _visit(self, scm: int, want_creation: bool) -> Failure | None:
        el = self.hist.get(scm)
        if el is None:
            return Failure(scm, MISSING)
        if isinstance(el, SignedLeaf):
            return None if self.v.signature_ok(scm, el.sig) else Failure(scm, SIGNATURE)
        if el.is_creation != want_creation:
            return Failure(scm, WRONG_KIND)
        if scm in self.done:
            return self.done[scm]
        if scm in self.active:
            return Failure(scm, CYCLE)
        self.active.add(scm)
        try:
            result = self._check(el)
        finally:
            self.active.discard(scm)
        self.done[scm] = result
        return result

    def _check(self, el: HistoryElement) -> Failure | None:
        if isinstance(el, (CreationWithDep, CompletionWithDep)):
            reason = self.v.check_state(el)
            return None if reason is None else Failure(el.scm, reason)
        if isinstance(el, CreationWithOpenings):
            # dcm is recomputed from the openings, so a wrong opening fails the state proof
            if not self.v.creation_state_ok(el):
                return Failure(el.scm, STATE_PROOF)
            return self._predecessor(el.scm_prev)
        assert isinstance(el, CompletionWithOpenings)
        if not self.v.completion_state_ok(el):
            return Failure(el.scm, STATE_PROOF)
        if not self.v.payment_ok(el.pcm, el.zkp_pm):
            return Failure(el.scm, PAYMENT_PROOF)
        return self._predecessor(el.scm_prev) or self.creation(el.ccm)

    def _predecessor(self, scm: int) -> Failure | None:
        el = self.hist.get(scm)
        if el is None:
            return Failure(scm, MISSING)
        return self._visit(scm, want_creation=bool(el.is_creation) or isinstance(el, SignedLeaf))
