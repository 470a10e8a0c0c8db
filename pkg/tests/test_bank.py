from __future__ import annotations

import dataclasses
import random
import threading

import pytest
from conftest import Net, pay

from offline_cbdc.bank import BankConfig, BankService, Ledger, read_ledger_file, state_paths
from offline_cbdc.bank.records import RecordLog, frame_record, parse_records
from offline_cbdc.crypto import eddsa, field
from offline_cbdc.crypto.commit import double_spend_tag, prf_id, prf_sn
from offline_cbdc.crypto.encoding import DecodeError
from offline_cbdc.messages import CreationSigRequest, RecoveryRequest, Status, SyncRequest
from offline_cbdc.wallet import Wallet


def _fork(net: Net, value=1000):
    alice = net.wallet(1200, compromised=True, name="alice")
    bob, carol = net.wallet(name="bob"), net.wallet(name="carol")
    alice.snapshot("a1")
    bob.receive_payment(alice.pay_from("a1", bob.request_payment(value)))
    carol.receive_payment(alice.pay_from("a1", carol.request_payment(value)))
    return alice, bob, carol


# -- epoch challenges -----------------------------------------------------------------


def test_challenges_are_distinct(net):
    assert net.bank.epoch_challenge().challenge != net.bank.epoch_challenge().challenge


def test_epoch_follows_clock(net):
    assert net.bank.epoch_challenge().epoch == 0
    net.now = 2.5 * net.bank.config.epoch_seconds
    assert net.bank.epoch_challenge().epoch == 2


def test_challenge_expires(net):
    ec = net.bank.epoch_challenge()
    net.now = 5 * net.bank.config.epoch_seconds
    w = Wallet(net.backend, net.bank.public_key, 30, rng=random.Random(1))
    resp = net.bank.enroll(w.enroll_message(3000, ec.epoch, ec.challenge))
    assert resp.status is Status.REJECTED and "expired" in resp.reason


def test_unknown_challenge(net):
    w = Wallet(net.backend, net.bank.public_key, 30, rng=random.Random(1))
    resp = net.bank.enroll(w.enroll_message(3000, 0, 12345))
    assert resp.reason == "challenge: unknown"


# -- enrollment -----------------------------------------------------------------------


def test_enroll_signature_verifies(net):
    w = Wallet(net.backend, net.bank.public_key, 30, rng=random.Random(2))
    ec = net.bank.epoch_challenge()
    msg = w.enroll_message(3000, ec.epoch, ec.challenge)
    resp = net.bank.enroll(msg)
    assert resp.ok and eddsa.verify_bytes(net.bank.public_key, msg.scm, resp.sig)
    assert net.bank.enroll(msg) == resp  # replay is idempotent
    assert len(net.bank.ledger) == 2  # treasury issuance and this enrollment


def test_enroll_holding_limit_policy(net):
    w = Wallet(net.backend, net.bank.public_key, 30, rng=random.Random(3))
    ec = net.bank.epoch_challenge()
    resp = net.bank.enroll(w.enroll_message(3001, ec.epoch, ec.challenge))
    assert resp.status is Status.REJECTED and resp.reason == "holding limit policy"


def test_enroll_forged_proof(net):
    w = Wallet(net.backend, net.bank.public_key, 30, rng=random.Random(4))
    ec = net.bank.epoch_challenge()
    msg = w.enroll_message(3000, ec.epoch, ec.challenge)
    resp = net.bank.enroll(dataclasses.replace(msg, id=field.add(msg.id, 1)))
    assert resp.reason == "enrollment proof"


# -- signature requests -----------------------------------------------------------------


def test_double_spend_gets_bottom(net):
    alice, bob, carol = _fork(net)
    assert bob.reconnect(net.bank).signed
    sn = bob.hist.external[bob.hist.external[bob.head].ccm].sn
    result = carol.reconnect(net.bank)
    assert result.status == "recovery_needed"
    entries = net.bank.ledger.with_serial(sn)
    assert len(entries) == 2 and len({e.scm for e in entries}) == 2
    assert [e.sig is not None for e in entries] == [True, False]
    assert net.bank.identify_double_spenders() == [alice.id]


def test_resubmitted_request_is_idempotent(net):
    alice, bob = net.wallet(500), net.wallet()
    pay(alice, bob, 10)
    req = alice.create_sig_request(alice.head)
    first = net.bank.request_signature(req)
    size = len(net.bank.ledger)
    for _ in range(3):
        assert net.bank.request_signature(req) == first
    assert len(net.bank.ledger) == size


def test_bottom_is_idempotent(net):
    alice, bob, carol = _fork(net)
    bob.reconnect(net.bank)
    sn = bob.hist.external[bob.hist.external[bob.head].ccm].sn
    el = carol.hist.external[carol.hist.external[carol.head].ccm]
    req = CreationSigRequest(el.element())
    assert net.bank.request_signature(req).status is Status.DOUBLE_SPEND
    assert net.bank.request_signature(req).status is Status.DOUBLE_SPEND
    assert len(net.bank.ledger.with_serial(sn)) == 2


def test_mutated_request_rejected(net):
    alice, bob = net.wallet(500), net.wallet()
    pay(alice, bob, 10)
    el = alice.create_sig_request(alice.head).element
    for name in ("scm", "dcm", "sn", "ds"):
        bad = dataclasses.replace(el, **{name: field.add(getattr(el, name), 1)})
        resp = net.bank.request_signature(CreationSigRequest(bad))
        assert resp.status is Status.REJECTED and resp.reason == "state proof"
    resp = net.bank.request_signature(CreationSigRequest(dataclasses.replace(el, zkp_dep=b"\x00" * 128)))
    assert resp.reason == "dependency proof"


def test_no_double_spenders_without_collision(net):
    alice, bob = net.wallet(500), net.wallet()
    pay(alice, bob, 10)
    bob.reconnect(net.bank)
    assert net.bank.identify_double_spenders() == []


def test_identify_forward_constructed_pairs():
    rng = random.Random(5)
    ledger = Ledger()
    ids = []
    for _ in range(50):
        sk, ctr = field.random_element(rng), rng.randrange(2**32)
        sn = prf_sn(sk, ctr)
        for _ in range(2):
            scm = field.random_element(rng)
            ledger.append(scm, sn, double_spend_tag(sk, ctr, scm))
        ids.append(prf_id(sk))
    from offline_cbdc.bank import identify_double_spenders

    assert identify_double_spenders(ledger) == ids


# -- synchronization --------------------------------------------------------------------


def test_sync_replay_returns_same_signature(net):
    w = net.wallet(100)
    msg = w.sync_message(net.bank.epoch_challenge())
    first = net.bank.synchronize(msg)
    assert first.ok and net.bank.synchronize(msg) == first


def test_sync_forged_proof(net):
    w = net.wallet(100)
    msg = w.sync_message(net.bank.epoch_challenge())
    resp = net.bank.synchronize(SyncRequest(field.add(msg.scm, 1), msg.epoch, msg.challenge, msg.zkp_sync))
    assert resp.reason == "synchronization proof"


# -- recovery --------------------------------------------------------------------------


def test_recovery_signs_and_audits(net):
    alice, bob, carol = _fork(net)
    bob.reconnect(net.bank)
    result, recovered = carol.settle(net.bank)
    assert result.signed and recovered == [carol.head]
    audit = [d for d in net.bank.audit_log if d.kind == "recovery"]
    assert [(d.id, d.value) for d in audit] == [(carol.id, 1000)]
    msg = carol.recovery_message(carol.head)
    assert net.bank.recover(msg).ok  # replay: same signature, no second audit record
    assert len([d for d in net.bank.audit_log if d.kind == "recovery"]) == 1


def test_downstream_after_recovery_needs_none(net):
    alice, bob, carol = _fork(net)
    david = net.wallet(name="david")
    pay(carol, david, 500)
    bob.reconnect(net.bank)
    carol.settle(net.bank)
    result, recovered = david.settle(net.bank)
    assert result.signed and recovered == []


def test_recovery_missing_double_spend_element(net):
    alice, bob, carol = _fork(net)
    bob.reconnect(net.bank)
    assert carol.reconnect(net.bank).status == "recovery_needed"
    msg = carol.recovery_message(carol.head)
    creation = carol.hist.external[carol.head].ccm
    stripped = RecoveryRequest(msg.scm, msg.id, msg.value, msg.zkp_recovery, msg.history.without(creation))
    resp = net.bank.recover(stripped)
    assert resp.status is Status.REJECTED and resp.reason.startswith("incomplete related history")


# -- persistence ----------------------------------------------------------------------------


def test_state_paths_are_siblings(tmp_path):
    paths = state_paths(tmp_path / "ledger.log")
    assert {p.parent for p in paths.values()} == {tmp_path}
    assert len(set(paths.values())) == 5


def test_restart_preserves_everything(tmp_path, mock):
    path = tmp_path / "ledger.log"
    net = Net(mock, ledger_path=path)
    alice, bob, carol = _fork(net)
    bob.reconnect(net.bank)
    carol.settle(net.bank)
    before = path.read_bytes()
    entries, audit, registry = list(net.bank.ledger.entries), net.bank.audit_log, dict(net.bank.registry)
    key = net.bank.public_key
    net.bank.close()

    again = BankService(mock, BankConfig(), path, clock=lambda: 0.0)
    assert again.public_key == key
    assert again.ledger.entries == entries and again.audit_log == audit and again.registry == registry
    assert again.identify_double_spenders() == [alice.id]
    ec = again.epoch_challenge()
    assert ec.challenge not in net.bank.challenges
    w = Wallet(mock, again.public_key, 30, rng=random.Random(9))
    w.enroll(again, 3000)
    again.close()
    assert path.read_bytes().startswith(before)


def test_torn_tail_dropped_on_open(tmp_path):
    path = tmp_path / "log"
    log = RecordLog(path)
    log.append(b"one")
    log.append(b"two")
    log.close()
    good = path.read_bytes()
    path.write_bytes(good + frame_record(b"three")[:5])
    with pytest.raises(DecodeError) as exc:
        parse_records(path.read_bytes())
    assert exc.value.offset == len(good)
    reopened = RecordLog(path)
    assert reopened.records == [b"one", b"two"] and reopened.dropped_tail == 5
    reopened.append(b"four")
    reopened.close()
    assert parse_records(path.read_bytes())[0] == [b"one", b"two", b"four"]


def test_truncated_ledger_file_reports_offset(tmp_path, mock):
    path = tmp_path / "ledger.log"
    net = Net(mock, ledger_path=path)
    net.wallet(100)
    net.bank.close()
    data = path.read_bytes()
    assert len(read_ledger_file(path)) == len(net.bank.ledger)
    records, _ = parse_records(data)
    cut = 4 + len(records[0]) + 10
    path.write_bytes(data[:cut])
    with pytest.raises(DecodeError) as exc:
        read_ledger_file(path)
    assert exc.value.offset == 4 + len(records[0])


def test_corrupt_ledger_record(tmp_path):
    path = tmp_path / "ledger.log"
    path.write_bytes(frame_record(b"\x09junk"))
    with pytest.raises(DecodeError) as exc:
        read_ledger_file(path)
    assert exc.value.offset == 0


# -- concurrency --------------------------------------------------------------------------


def test_concurrent_conflicting_creations(mock):
    net = Net(mock)
    alice, bob, carol = _fork(net)
    reqs = []
    for w in (bob, carol):
        el = w.hist.external[w.hist.external[w.head].ccm]
        reqs.append(CreationSigRequest(el.element()))
    barrier = threading.Barrier(2)
    out = [None, None]

    def run(i):
        barrier.wait()
        out[i] = net.bank.request_signature(reqs[i])

    threads = [threading.Thread(target=run, args=(i,)) for i in range(2)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert sorted(r.status for r in out) == [Status.SIGNED, Status.DOUBLE_SPEND]


# -- SNARK backend end to end --------------------------------------------------------------


def test_snark_payment_and_adversarial_requests(snark):
    net = Net(snark, seed=3)
    alice, bob = net.wallet(500), net.wallet()
    pay(alice, bob, 120)
    el = alice.create_sig_request(alice.head).element
    assert len(CreationSigRequest(el).to_bytes()) <= 2048
    for name in ("scm", "dcm", "sn", "ds"):
        bad = dataclasses.replace(el, **{name: field.add(getattr(el, name), 1)})
        assert net.bank.request_signature(CreationSigRequest(bad)).status is Status.REJECTED
    result = bob.reconnect(net.bank)
    assert result.signed and result.requests == 2
    assert bob.balance == 120 and alice.balance == 380
