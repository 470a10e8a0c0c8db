from __future__ import annotations

import random

import pytest

from offline_cbdc.bank import BankConfig, BankService
from offline_cbdc.crypto import eddsa
from offline_cbdc.crypto import field as ff
from offline_cbdc.proofs import MockBackend, SnarkBackend
from offline_cbdc.sim.adversary import CompromisedWallet
from offline_cbdc.wallet import Wallet, WalletState


@pytest.fixture
def mock():
    return MockBackend(seed=7)


@pytest.fixture(scope="session")
def snark(tmp_path_factory):
    """Keys are generated on first use of each relation and shared by the whole session."""
    return SnarkBackend(key_dir=tmp_path_factory.mktemp("keys"), seed=1)


@pytest.fixture(scope="session")
def signer():
    return eddsa.SigningKey(b"test-signer".ljust(32, b"."))


class Net:
    """A bank on a virtual clock, a treasury and helpers for funded, signed wallets."""

    def __init__(self, backend, seed: int = 0, config: BankConfig = BankConfig(), ledger_path=None):
        self.now = 0.0
        self.backend = backend
        self.seed = seed
        self.bank = BankService(backend, config, ledger_path, clock=lambda: self.now, seed=seed)
        rng = random.Random(f"{seed}/treasury")
        self.treasury = Wallet(backend, self.bank.public_key, config.delta_sync, rng=rng, name="treasury")
        state = WalletState(ff.random_element(rng), 2**62, 0, 2**61, 0, 0, 0, ff.random_element(rng))
        self.treasury.adopt_issued_state(state, self.bank.issue(state))
        self.count = 0

    def epoch(self) -> int:
        return int(self.now // self.bank.config.epoch_seconds)

    def wallet(self, funding: int = 0, holding_limit: int = 3000, compromised: bool = False, name=None) -> Wallet:
        self.count += 1
        cls = CompromisedWallet if compromised else Wallet
        rng = random.Random(f"{self.seed}/w{self.count}")
        w = cls(
            self.backend, self.bank.public_key, self.bank.config.delta_sync, rng=rng,
            clock=self.epoch, name=name or f"w{self.count}",
        )
        w.enroll(self.bank, holding_limit)
        if funding:
            pay(self.treasury, w, funding)
            assert w.reconnect(self.bank).signed
        return w


def pay(sender: Wallet, recipient: Wallet, value: int):
    payment = sender.create_payment(recipient.request_payment(value))
    recipient.receive_payment(payment)
    return payment


def relayed_history(net: Net):
    """Alice and Bob each paid offline once; Alice then pays Bob and Bob pays Carol."""
    alice, x, bob, y, carol = net.wallet(1000), net.wallet(), net.wallet(1000), net.wallet(), net.wallet()
    pay(alice, x, 100)
    a2 = alice.head
    pay(bob, y, 100)
    b8 = bob.head
    pay(alice, bob, 300)
    a3, b9 = alice.head, bob.head
    payment = pay(bob, carol, 50)
    return dict(alice=alice, bob=bob, carol=carol, a2=a2, a3=a3, b8=b8, b9=b9, b10=bob.head, payment=payment)


@pytest.fixture
def net(mock):
    return Net(mock)


# -- acceptance report ------------------------------------------------------------

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)


def pytest_collection_modifyitems(items):
    for item in items:
        if "snark" in getattr(item, "fixturenames", ()):
            item.add_marker(pytest.mark.snark)
