"""Deterministic discrete-event scenario runner.

Virtual time drives epochs and the bank clock. The trace and the metrics
derived from it depend only on the scenario, so two runs with equal seeds
produce identical records. Wall-clock compute times are measured separately
and kept apart from the deterministic report.
"""

from __future__ import annotations

import random
import statistics
import time
from collections import defaultdict
from dataclasses import dataclass, field

from .. import proofs
from ..bank import BankConfig, BankService
from ..crypto import field as ff
from ..messages import Payment
from ..proofs import UnsatisfiedWitness
from ..transport import Channel, ChannelDown, ChannelModel, decode_message, encode_frame, local_bank
from ..wallet import BankRejected, PaymentRejected, Wallet, WalletError, WalletState
from .adversary import CompromisedWallet
from .scenario import Event, Scenario, ScenarioError

TREASURY_LIMIT = 2**63


@dataclass
class PaymentRecord:
    t: float
    sender: str
    recipient: str
    value: int
    outcome: str
    request_bytes: int = 0
    payment_bytes: int = 0
    unsigned_history: int = 0
    history_elements: int = 0
    transfer_seconds: float = 0.0

    def to_dict(self) -> dict:
        return dict(vars(self))


@dataclass
class MetricsReport:
    payments: list[PaymentRecord] = field(default_factory=list)
    bank_frames: int = 0
    bank_bytes: int = 0
    ledger_entries: int = 0
    recoveries: list[tuple[str, int]] = field(default_factory=list)
    double_spenders: list[str] = field(default_factory=list)
    expired: list[str] = field(default_factory=list)
    properties: dict[str, bool] = field(default_factory=dict)
    timings: dict[str, list[float]] = field(default_factory=lambda: defaultdict(list))

    @property
    def accepted(self) -> list[PaymentRecord]:
        return [p for p in self.payments if p.outcome == "accepted"]

    def history_by_day(self, epoch_seconds: float) -> dict[int, float]:
        days: dict[int, list[int]] = defaultdict(list)
        for p in self.accepted:
            days[int(p.t // epoch_seconds)].append(p.unsigned_history)
        return {d: statistics.fmean(v) for d, v in sorted(days.items())}

    def mean_unsigned_history(self) -> float:
        sizes = [p.unsigned_history for p in self.accepted]
        return statistics.fmean(sizes) if sizes else 0.0

    def final_payment_estimate(self) -> float | None:
        """Transfer time of the last accepted payment plus the mean measured compute time."""
        if not self.accepted:
            return None
        compute = self.timings.get("payment_compute") or [0.0]
        return self.accepted[-1].transfer_seconds + statistics.fmean(compute)

    def to_dict(self, timings: bool = False) -> dict:
        out = {
            "payments": [p.to_dict() for p in self.payments],
            "bank_frames": self.bank_frames,
            "bank_bytes": self.bank_bytes,
            "ledger_entries": self.ledger_entries,
            "recoveries": [list(r) for r in self.recoveries],
            "double_spenders": list(self.double_spenders),
            "expired": list(self.expired),
            "properties": dict(self.properties),
            "mean_unsigned_history": self.mean_unsigned_history(),
        }
        if timings:
            out["timings"] = {k: list(v) for k, v in self.timings.items()}
        return out

    def summary(self, epoch_seconds: float = 86400) -> str:
        lines = [
            f"payments: {len(self.payments)} attempted, {len(self.accepted)} accepted",
            f"mean unsigned history per payment: {self.mean_unsigned_history():.1f}",
        ]
        by_day = self.history_by_day(epoch_seconds)
        if by_day:
            lines.append("day  mean unsigned history")
            lines += [f"{d:>3}  {m:8.1f}" for d, m in by_day.items()]
        if self.accepted:
            last = self.accepted[-1]
            lines.append(
                f"last payment: {last.payment_bytes} bytes, {last.unsigned_history} unsigned elements, "
                f"transfer {last.transfer_seconds:.3f} s"
            )
        lines.append(f"bank: {self.bank_frames} frames, {self.bank_bytes} bytes, {self.ledger_entries} ledger entries")
        if self.recoveries:
            lines.append("recoveries: " + ", ".join(f"{n} ({v})" for n, v in self.recoveries))
        if self.double_spenders:
            lines.append("double spenders: " + ", ".join(self.double_spenders))
        if self.expired:
            lines.append("expired wallets: " + ", ".join(self.expired))
        lines.append("properties: " + ", ".join(f"{k}={'ok' if v else 'VIOLATED'}" for k, v in self.properties.items()))
        return "\n".join(lines)


@dataclass
class RunResult:
    scenario: Scenario
    trace: list[dict]
    metrics: MetricsReport
    runner: "Runner"


class Runner:
    def __init__(
        self,
        scenario: Scenario,
        backend: proofs.Backend | None = None,
        proximity: ChannelModel = ChannelModel.proximity(),
        online: ChannelModel = ChannelModel.online(),
        ledger_path=None,
        tap: bool = False,
    ):
        scenario.validate()
        self.scenario = scenario
        self.backend = backend if backend is not None else proofs.make_backend("mock", seed=scenario.seed)
        self.now = 0.0
        self.rng = random.Random(f"{scenario.seed}/runner")
        limits = [a.holding_limit or scenario.holding_limit for a in scenario.actors if a.role != "treasury"]
        config = BankConfig(scenario.epoch_seconds, scenario.delta_sync, max([scenario.holding_limit, *limits]))
        self.bank = BankService(self.backend, config, ledger_path, clock=lambda: self.now, seed=scenario.seed)
        self.proximity = Channel(proximity)
        self.online = Channel(online, up=self._bank_up, tap=[] if tap else None)
        self.api = local_bank(self.bank, self.online)
        self.offline: set[str] = set()
        self.wallets: dict[str, Wallet] = {}
        self.names: dict[int, str] = {}
        self.trace: list[dict] = []
        self.metrics = MetricsReport()
        self.counterfeit = False
        self.delivered: list[tuple[PaymentRecord, Payment]] = []  # accepted payments as received

    # -- helpers ---------------------------------------------------------------

    def epoch(self) -> int:
        return int(self.now // self.scenario.epoch_seconds)

    def _bank_up(self) -> bool:
        return not any(a <= self.now < b for a, b in self.scenario.outages)

    def _record(self, op: str, **fields) -> dict:
        rec = {"seq": len(self.trace), "t": self.now, "op": op, **fields}
        self.trace.append(rec)
        return rec

    def _timed(self, key: str, fn, *args):
        start = time.perf_counter()
        try:
            return fn(*args)
        finally:
            self.metrics.timings[key].append(time.perf_counter() - start)

    def _reachable(self, name: str) -> bool:
        return name not in self.offline and self._bank_up()

    def _identified(self) -> list[str]:
        return sorted(self.names.get(i, f"unknown:{i:#x}") for i in self.bank.identify_double_spenders())

    # -- setup -------------------------------------------------------------------

    def setup(self) -> None:
        s = self.scenario
        for spec in s.actors:
            cls = CompromisedWallet if spec.role == "compromised" else Wallet
            rng = random.Random(f"{s.seed}/{spec.name}")
            clock = None if spec.role == "treasury" else self.epoch
            w = cls(self.backend, self.bank.public_key, s.delta_sync, rng=rng, clock=clock, name=spec.name)
            if spec.role == "treasury":
                state = WalletState(
                    ff.random_element(rng), TREASURY_LIMIT, 0, spec.balance, self.epoch(), 0, 0,
                    ff.random_element(rng),
                )
                w.adopt_issued_state(state, self.bank.issue(state))
                self._record("issue", actor=spec.name, value=spec.balance)
            else:
                w.enroll(self.api, spec.holding_limit or s.holding_limit)
                self._record("enroll", actor=spec.name)
            self.wallets[spec.name] = w
            self.names[w.id] = spec.name

    # -- events -------------------------------------------------------------------

    def run(self) -> RunResult:
        self.setup()
        for ev in self.scenario.events:
            self.step(ev)
        return self.finish()

    def step(self, ev: Event) -> None:
        if ev.at is not None:
            self.now = max(self.now, ev.at)
        getattr(self, f"_do_{ev.op}")(ev)
        self._check_limits()

    def _deliver(self, sender: str, recipient: str, value: int, make_payment, unchecked=False) -> PaymentRecord:
        """One offline payment: request, creation, transfer, acceptance, completion."""
        to = self.wallets[recipient]
        rec = PaymentRecord(self.now, sender, recipient, value, "accepted")
        try:
            req = to.request_payment(value)
        except WalletError as exc:
            rec.outcome = f"recipient refused: {exc}"
            return rec
        req_frame = encode_frame(req)
        self.proximity.carry(req_frame)
        start = time.perf_counter()
        try:
            payment = make_payment(decode_message(req_frame))
        except (WalletError, UnsatisfiedWitness) as exc:
            rec.outcome = f"sender refused: {exc}"
            return rec
        frame = encode_frame(payment)
        self.proximity.carry(frame)
        payment = decode_message(frame)
        rec.request_bytes, rec.payment_bytes = len(req_frame), len(frame)
        rec.unsigned_history = payment.history.unsigned_count()
        rec.history_elements = len(payment.history)
        rec.transfer_seconds = self.proximity.model.transfer_time(req_frame) + self.proximity.model.transfer_time(frame)
        try:
            if unchecked:
                to.complete_unchecked(payment)
            else:
                to.receive_payment(payment)
        except PaymentRejected as exc:
            rec.outcome = f"rejected: {exc.reason}"
        except UnsatisfiedWitness as exc:
            rec.outcome = f"refused by relation: {exc.constraint}"
        except WalletError as exc:
            rec.outcome = f"refused: {exc}"
        self.metrics.timings["payment_compute"].append(time.perf_counter() - start)
        if rec.outcome == "accepted":
            self.delivered.append((rec, payment))
        return rec

    def _log_payment(self, rec: PaymentRecord) -> None:
        self.metrics.payments.append(rec)
        self._record("pay", **{k: v for k, v in rec.to_dict().items() if k != "t"})

    def _do_pay(self, ev: Event) -> None:
        a = ev.args
        sender = self.wallets[a["from"]]
        if a.get("from_state"):
            self.counterfeit = True
            make = lambda req: sender.pay_from(a["from_state"], req)  # noqa: E731
        else:
            make = sender.create_payment
        if a.get("omit"):
            inner = make
            make = lambda req: sender.omit(inner(req))  # noqa: E731
        self._log_payment(self._deliver(a["from"], a["to"], a["value"], make, bool(a.get("unchecked"))))

    def _do_fork(self, ev: Event) -> None:
        a = ev.args
        self.counterfeit = True
        sender = self.wallets[a["from"]]
        sender.snapshot("fork")
        for to, value in ((a["to"], a["value"]), (a["to2"], a["value2"])):
            make = lambda req: sender.pay_from("fork", req)  # noqa: E731
            self._log_payment(self._deliver(a["from"], to, value, make))

    def _do_reconnect(self, ev: Event) -> None:
        name = ev.args["actor"]
        w = self.wallets[name]
        if not self._reachable(name):
            self._record("reconnect", actor=name, status="unreachable")
            return
        if self.scenario.reconnect_jitter:
            self.now += self.rng.uniform(0, self.scenario.reconnect_jitter)
        try:
            if ev.args.get("recover", True):
                result, recovered = self._timed("reconnect", w.settle, self.api)
            else:
                result, recovered = self._timed("reconnect", w.reconnect, self.api), []
        except (BankRejected, ChannelDown, WalletError) as exc:
            self._record("reconnect", actor=name, status=f"failed: {exc}")
            return
        values = [w.hist.recovery[scm].value for scm in recovered]
        self.metrics.recoveries += [(name, v) for v in values]
        if result.status == "double_spend":
            self.counterfeit = True
        self._record(
            "reconnect", actor=name, status=result.status, requests=result.requests,
            recovered=values, identified=self._identified(),
        )

    def _do_recover(self, ev: Event) -> None:
        name = ev.args["actor"]
        w = self.wallets[name]
        if not self._reachable(name):
            self._record("recover", actor=name, status="unreachable")
            return
        scm = w.head
        try:
            self._timed("recovery", w.state_recovery, self.api, scm)
        except (BankRejected, ChannelDown, WalletError) as exc:
            self._record("recover", actor=name, status=f"failed: {exc}")
            return
        value = w.hist.recovery[scm].value
        self.metrics.recoveries.append((name, value))
        self._record("recover", actor=name, status="signed", value=value, identified=self._identified())

    def _do_sync(self, ev: Event) -> None:
        name = ev.args["actor"]
        if not self._reachable(name):
            self._record("sync", actor=name, status="unreachable")
            return
        w = self.wallets[name]
        try:
            self._timed("sync", w.synchronize, self.api)
        except (BankRejected, ChannelDown, WalletError) as exc:
            self._record("sync", actor=name, status=f"failed: {exc}")
            return
        self._record("sync", actor=name, status="signed", epoch=w.state.epoch)

    def _do_snapshot(self, ev: Event) -> None:
        self.wallets[ev.args["actor"]].snapshot(ev.args["label"])
        self._record("snapshot", actor=ev.args["actor"], label=ev.args["label"])

    def _do_go_offline(self, ev: Event) -> None:
        self.offline.add(ev.args["actor"])
        self._record("go_offline", actor=ev.args["actor"])

    def _do_go_online(self, ev: Event) -> None:
        self.offline.discard(ev.args["actor"])
        self._record("go_online", actor=ev.args["actor"])

    def _do_advance(self, ev: Event) -> None:
        self.now += ev.args.get("days", 0) * self.scenario.epoch_seconds + ev.args.get("seconds", 0)
        self._record("advance", epoch=self.epoch())

    # -- properties ---------------------------------------------------------------

    def _check_limits(self) -> None:
        ok = True
        for spec in self.scenario.actors:
            if spec.role != "honest":
                continue
            for entry in self.wallets[spec.name].hist.internal.values():
                if entry.state.bal > entry.state.holding_limit:
                    ok = False
        self.metrics.properties["holding_limit"] = self.metrics.properties.get("holding_limit", True) and ok

    def finish(self) -> RunResult:
        m = self.metrics
        m.bank_frames, m.bank_bytes = self.online.frames, self.online.bytes_sent
        m.ledger_entries = len(self.bank.ledger)
        m.double_spenders = self._identified()
        m.expired = sorted(n for n, w in self.wallets.items() if w.head is not None and w.expired())
        m.properties.setdefault("holding_limit", True)
        m.properties["counterfeit_answered"] = not self.counterfeit or not m.double_spenders or bool(
            m.recoveries or m.expired
        )
        return RunResult(self.scenario, self.trace, m, self)


def run_scenario(scenario: Scenario, backend: proofs.Backend | None = None, **kwargs) -> RunResult:
    """Execute ``scenario`` and return its trace and metrics."""
    if not isinstance(scenario, Scenario):
        raise ScenarioError("run_scenario expects a Scenario")
    return Runner(scenario, backend, **kwargs).run()
