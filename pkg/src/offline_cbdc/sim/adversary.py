"""A wallet whose secure element is compromised.

It deviates only at the protocol level: it forks states, omits history
elements, pays from old states and skips its own local checks. It cannot
forge signatures or proofs, so every proof it produces still has to satisfy
its relation.
"""

from __future__ import annotations

from ..messages import Payment, PaymentRequest, SignedLeaf
from ..wallet import Wallet, WalletError


class CompromisedWallet(Wallet):
    def __init__(self, *args, **kwargs):
        super().__init__(*args, **kwargs)
        self.snapshots: dict[str, int] = {}

    def snapshot(self, label: str) -> int:
        """Remember the current state so later payments can fork from it."""
        self.snapshots[label] = self.head
        return self.head

    def pay_from(self, label: str, req: PaymentRequest) -> Payment:
        """Create a payment from a remembered (possibly already spent) state."""
        scm = self.snapshots.get(label)
        if scm is None:
            raise WalletError(f"no snapshot named {label!r}")
        new, payment = self._create_from(self.hist.internal[scm].state, req)
        self.head = new.scm
        return payment

    def fork_state(self, req1: PaymentRequest, req2: PaymentRequest) -> tuple[Payment, Payment]:
        """Two payments from the current state: equal serial numbers, different commitments."""
        base = self.state
        _, first = self._create_from(base, req1)
        new, second = self._create_from(base, req2)
        self.head = new.scm
        return first, second

    def omit(self, payment: Payment) -> Payment:
        """Drop one element the recipient needs: the first dependency that is not the payment itself."""
        for el in payment.history:
            if el.scm != payment.proof.scm and not isinstance(el, SignedLeaf):
                return Payment(payment.history.without(el.scm), payment.proof)
        for el in payment.history:
            if el.scm != payment.proof.scm:
                return Payment(payment.history.without(el.scm), payment.proof)
        return payment

    def complete_unchecked(self, payment: Payment) -> int:
        """Complete a payment skipping acceptance and the holding-limit check.

        The completion proof still has to satisfy its relation, so an
        over-limit completion is refused by the prover.
        """
        return self._complete(payment)
