"""Benchmarks: bank operation latency, sequential throughput, payment sizes, proof costs.

Reference columns hold the timings and sizes measured for the original Go
prototype (gnark Groth16 on a laptop). They are printed for comparison only:
hardware, language and encoding differ, so nothing here asserts equality.
"""

from __future__ import annotations

import random
import statistics
import time
from collections import defaultdict
from dataclasses import dataclass, field

from . import proofs
from .bank import BankConfig, BankService
from .crypto import eddsa
from .crypto import field as ff
from .proofs import RelationId
from .proofs.circuits import blank
from .proofs.samples import instance
from .sim.adversary import CompromisedWallet
from .transport import Channel, ChannelModel, MsgType, encode_frame, local_bank
from .wallet import Wallet, WalletState

# seconds per bank operation
REFERENCE_BANK = {
    "enroll": 0.0016,
    "creation": 0.0029,
    "creation_double_spend": 0.0026,
    "completion": 0.0041,
    "recovery": 0.0017,
    "sync": 0.0017,
}
REFERENCE_THROUGHPUT = 143  # payments per second, sequential
# relation -> (prove s, verify s, constraints)
REFERENCE_CIRCUITS = {
    RelationId.ENROLL: (0.0239, 0.0012, 2312),
    RelationId.PAYMENT: (0.0552, 0.0013, 6931),
    RelationId.CREATE_STATE: (0.0741, 0.0013, 9801),
    RelationId.CREATE_DEP: (0.0512, 0.0013, 7662),
    RelationId.COMPLETE_STATE: (0.0795, 0.0013, 12674),
    RelationId.COMPLETE_DEP: (0.0906, 0.0014, 14993),
    RelationId.SYNC: (0.0857, 0.0014, 12283),
    RelationId.RECOVERY: (0.0828, 0.0014, 11954),
}
# unsigned history -> (create s, accept s, complete s, request kB, payment kB)
REFERENCE_PAYMENTS = {
    1: (0.2097, 0.004, 0.0917, 0.077, 1.033),
    51: (0.1554, 0.0944, 0.0903, 0.077, 46.990),
    101: (0.157, 0.1843, 0.0903, 0.077, 92.945),
}
# unsigned history -> (reconnect s, kB sent to the bank)
REFERENCE_RECONNECT = {1: (0.0029, 0.786), 51: (4.2891, 42.286), 101: (8.5675, 83.786)}

BANK_OPS = tuple(REFERENCE_BANK)


class TimedBank:
    """Wraps a bank and records the processing time of each call by operation."""

    def __init__(self, bank: BankService):
        self.bank = bank
        self.times: dict[str, list[float]] = defaultdict(list)

    def _timed(self, op: str, fn, *args):
        start = time.perf_counter()
        out = fn(*args)
        self.times[op].append(time.perf_counter() - start)
        return out

    def epoch_challenge(self):
        return self.bank.epoch_challenge()

    def enroll(self, req):
        return self._timed("enroll", self.bank.enroll, req)

    def request_signature(self, req):
        kind = "creation" if req.element.is_creation else "completion"
        start = time.perf_counter()
        resp = self.bank.request_signature(req)
        if kind == "creation" and resp.status.name == "DOUBLE_SPEND":
            kind = "creation_double_spend"
        self.times[kind].append(time.perf_counter() - start)
        return resp

    def synchronize(self, req):
        return self._timed("sync", self.bank.synchronize, req)

    def recover(self, req):
        return self._timed("recovery", self.bank.recover, req)

    def query_ledger(self, scm):
        return self.bank.query_ledger(scm)


class _Setup:
    """A bank, a treasury and helpers to make funded, signed wallets."""

    def __init__(self, backend, seed: int, clock=None):
        self.now = [0.0]
        self.backend = backend
        self.bank = BankService(backend, BankConfig(), clock=lambda: self.now[0], seed=seed)
        self.timed = TimedBank(self.bank)
        self.seed = seed
        rng = random.Random(f"{seed}/treasury")
        self.treasury = Wallet(backend, self.bank.public_key, 30, rng=rng, name="treasury")
        state = WalletState(ff.random_element(rng), 2**62, 0, 2**61, 0, 0, 0, ff.random_element(rng))
        self.treasury.adopt_issued_state(state, self.bank.issue(state))
        self.count = 0

    def wallet(self, funding: int = 0, cls=Wallet, holding_limit: int = 3000) -> Wallet:
        self.count += 1
        rng = random.Random(f"{self.seed}/w{self.count}")
        w = cls(self.backend, self.bank.public_key, 30, rng=rng, name=f"w{self.count}")
        w.enroll(self.timed, holding_limit)
        if funding:
            w.receive_payment(self.treasury.create_payment(w.request_payment(funding)))
            w.reconnect(self.bank)
        return w


def pay(sender: Wallet, recipient: Wallet, value: int):
    payment = sender.create_payment(recipient.request_payment(value))
    recipient.receive_payment(payment)
    return payment


def bank_operations(backend, rounds: int = 10, seed: int = 0) -> dict[str, list[float]]:
    """Bank-side processing time of every online operation, ``rounds`` samples each."""
    s = _Setup(backend, seed)
    for _ in range(rounds):
        a, b, c = s.wallet(1000, CompromisedWallet), s.wallet(), s.wallet()
        a.snapshot("fork")
        b.receive_payment(a.pay_from("fork", b.request_payment(10)))
        c.receive_payment(a.pay_from("fork", c.request_payment(10)))
        b.reconnect(s.timed)  # a creation and a completion
        c.settle(s.timed)  # a double-spending creation, then a recovery
        b.synchronize(s.timed)
    return dict(s.timed.times)


def throughput(backend, payments: int, seed: int = 0) -> tuple[int, float]:
    """Sequential payments between two wallets; returns (payments, bank seconds spent on them)."""
    s = _Setup(backend, seed)
    a, b = s.wallet(1500), s.wallet(1500)
    s.timed.times.clear()
    for i in range(payments):
        sender, recipient = (a, b) if i % 2 == 0 else (b, a)
        pay(sender, recipient, 1)
        sender.reconnect(s.timed)
        recipient.reconnect(s.timed)
    spent = sum(s.timed.times["creation"]) + sum(s.timed.times["completion"])
    return payments, spent


@dataclass
class SizeRow:
    unsigned: int
    create_s: float
    accept_s: float
    complete_s: float
    request_bytes: int
    payment_bytes: int
    reconnect_s: float
    reconnect_bytes: int


def payment_sizes(backend, sizes=(1, 51, 101), seed: int = 0, reconnect: bool = True) -> list[SizeRow]:
    """Measure a payment whose sender holds ``n`` unsigned states after creating it.

    The sender makes n - 1 earlier offline payments (each leaves one unsigned
    creation), then the measured one. Afterwards the sender reconnects and the
    bytes it sends to the bank are counted.
    """
    rows = []
    for n in sizes:
        s = _Setup(backend, seed)
        sender = s.wallet(2000)
        shop = s.wallet(holding_limit=3000)
        for _ in range(n - 1):
            pay(sender, shop, 1)
        req = shop.request_payment(1)
        t0 = time.perf_counter()
        payment = sender.create_payment(req)
        t1 = time.perf_counter()
        shop.accept_payment(payment)
        t2 = time.perf_counter()
        shop.complete_payment(payment)
        t3 = time.perf_counter()
        assert payment.history.unsigned_count() == n
        rec_s, rec_bytes = 0.0, 0
        if reconnect:
            channel = Channel(ChannelModel.online(), tap=[])
            api = local_bank(s.bank, channel)
            t4 = time.perf_counter()
            sender.reconnect(api)
            rec_s = time.perf_counter() - t4
            rec_bytes = sum(len(f) for f in channel.tap if f[0] < MsgType.RESPONSE)
        rows.append(SizeRow(n, t1 - t0, t2 - t1, t3 - t2, len(encode_frame(req)), len(encode_frame(payment)),
                            rec_s, rec_bytes))
    return rows


def circuits(backend, samples: int = 1, seed: int = 0) -> dict[RelationId, tuple[float, float, int]]:
    """Mean prove and verify time per relation on random honest instances."""
    rng = random.Random(f"{seed}/circuits")
    signer = eddsa.SigningKey.generate(rng)
    out = {}
    for rid in RelationId:
        if hasattr(backend, "proving_key"):
            backend.proving_key(rid)
            backend.verifying_key(rid)
        prove_t, verify_t = [], []
        for _ in range(samples):
            pub, wit = instance(rid, rng, signer)
            t0 = time.perf_counter()
            bundle = proofs.prove(backend, rid, pub, wit)
            t1 = time.perf_counter()
            ok = proofs.verify(backend, bundle, rid)
            t2 = time.perf_counter()
            if not ok:
                raise RuntimeError(f"{rid.name}: honest proof failed to verify")
            prove_t.append(t1 - t0)
            verify_t.append(t2 - t1)
        out[rid] = (statistics.fmean(prove_t), statistics.fmean(verify_t), blank(rid).num_constraints)
    return out


@dataclass
class BenchReport:
    backend: str
    payments: int = 0
    bank_seconds: float = 0.0
    bank_ops: dict[str, list[float]] = field(default_factory=dict)
    sizes: list[SizeRow] = field(default_factory=list)
    circuits: dict[RelationId, tuple[float, float, int]] = field(default_factory=dict)

    @property
    def payments_per_second(self) -> float | None:
        return self.payments / self.bank_seconds if self.payments and self.bank_seconds else None

    def to_dict(self) -> dict:
        return {
            "backend": self.backend,
            "payments": self.payments,
            "bank_seconds": self.bank_seconds,
            "payments_per_second": self.payments_per_second,
            "bank_ops": {k: statistics.fmean(v) for k, v in self.bank_ops.items() if v},
            "sizes": [vars(r) for r in self.sizes],
            "circuits": {rid.name: list(v) for rid, v in self.circuits.items()},
        }

    def render(self) -> str:
        out = [f"backend: {self.backend}"]
        if not (self.payments or self.bank_ops or self.sizes or self.circuits):
            out.append("empty workload: nothing measured")
            return "\n".join(out)
        if self.circuits:
            out += ["", "Proof circuits          prove (s)  verify (s)  constraints | ref. prove  ref. verify  ref. constraints"]
            for rid, (p, v, n) in self.circuits.items():
                rp, rv, rn = REFERENCE_CIRCUITS[rid]
                out.append(f"{rid.name:<22} {p:>9.4f}  {v:>10.4f}  {n:>11} | {rp:>10.4f}  {rv:>11.4f}  {rn:>16}")
        if self.sizes:
            out += ["", "Unsigned  create (s)  accept (s)  complete (s)  request (kB)  payment (kB)  NFC (s) "
                        "| ref. create  ref. accept  ref. complete  ref. payment (kB)"]
            nfc = ChannelModel.proximity()
            for r in self.sizes:
                ref = REFERENCE_PAYMENTS.get(r.unsigned)
                ref_txt = f"{ref[0]:>11.4f}  {ref[1]:>11.4f}  {ref[2]:>13.4f}  {ref[4]:>17.3f}" if ref else "-"
                transfer = nfc.transfer_time(r.request_bytes) + nfc.transfer_time(r.payment_bytes)
                out.append(
                    f"{r.unsigned:>8}  {r.create_s:>10.4f}  {r.accept_s:>10.4f}  {r.complete_s:>12.4f}  "
                    f"{r.request_bytes / 1000:>12.3f}  {r.payment_bytes / 1000:>12.3f}  {transfer:>7.3f} | {ref_txt}"
                )
            if any(r.reconnect_s for r in self.sizes):
                out += ["", "Unsigned  reconnect (s)  sent to bank (kB) | ref. reconnect (s)  ref. sent (kB)"]
                for r in self.sizes:
                    ref = REFERENCE_RECONNECT.get(r.unsigned)
                    ref_txt = f"{ref[0]:>18.4f}  {ref[1]:>14.3f}" if ref else "-"
                    out.append(f"{r.unsigned:>8}  {r.reconnect_s:>13.4f}  {r.reconnect_bytes / 1000:>17.3f} | {ref_txt}")
        if self.bank_ops:
            out += ["", "Bank operation            mean (s)  samples | ref. (s)"]
            for op in BANK_OPS:
                v = self.bank_ops.get(op)
                if v:
                    out.append(f"{op:<24} {statistics.fmean(v):>9.5f}  {len(v):>7} | {REFERENCE_BANK[op]:>8.4f}")
        if self.payments:
            pps = self.payments_per_second
            out += [
                "",
                f"sequential payments: {self.payments} in {self.bank_seconds:.3f} s of bank processing "
                f"= {pps:.0f} payments/s (ref. {REFERENCE_THROUGHPUT} payments/s)",
            ]
        return "\n".join(out)


def run_bench(
    backend,
    payments: int = 1000,
    bank_rounds: int = 10,
    sizes=(1, 51, 101),
    circuit_samples: int = 0,
    seed: int = 0,
) -> BenchReport:
    report = BenchReport(getattr(backend, "name", type(backend).__name__))
    if circuit_samples:
        report.circuits = circuits(backend, circuit_samples, seed)
    if sizes:
        report.sizes = payment_sizes(backend, sizes, seed)
    if bank_rounds:
        report.bank_ops = bank_operations(backend, bank_rounds, seed)
    if payments:
        report.payments, report.bank_seconds = throughput(backend, payments, seed)
    return report
