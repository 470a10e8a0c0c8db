from __future__ import annotations

import itertools

import pytest
from dag_oracle import check_dag

from offline_cbdc.crypto import field
from offline_cbdc.sim import (
    BUILTIN,
    Runner,
    Scenario,
    ScenarioError,
    from_dict,
    load_scenario,
    random_dag_scenario,
    run_scenario,
    unsigned_closure,
)
from offline_cbdc.transport import MsgType


def _scenario(events, actors=None, **params):
    actors = actors or [{"name": "treasury", "role": "treasury", "balance": 10000}, "alice", "bob", "carol"]
    return from_dict({"actors": actors, "events": events, **params})


def _reconnects(result):
    return [r for r in result.trace if r["op"] == "reconnect"]


# -- loading and validation --------------------------------------------------------


@pytest.mark.parametrize("name", BUILTIN)
def test_builtin_scenarios_load_and_round_trip(name):
    s = load_scenario(name)
    again = from_dict(s.to_dict())
    assert again.events == s.events and again.actors == s.actors


@pytest.mark.parametrize(
    "data, message",
    [
        ({"actors": ["a"], "events": [{"op": "pay", "from": "a", "to": "zed", "value": 1}]}, "unknown actor"),
        ({"actors": ["a", "b"], "events": [{"op": "pay", "from": "a", "to": "b", "value": 1, "from_state": "x"}]},
         "only a compromised actor"),
        ({"actors": ["a", "b"], "events": [{"op": "fork", "from": "a", "to": "b", "value": 1, "to2": "b",
                                            "value2": 1}]}, "only a compromised actor"),
        ({"actors": ["a"], "events": [{"op": "snapshot", "actor": "a", "label": "x"}]}, "snapshots"),
        ({"actors": ["a", "b"], "events": [{"op": "pay", "from": "a", "to": "b", "value": -1}]}, "non-negative"),
        ({"actors": ["a"], "events": [{"op": "teleport"}]}, "unknown op"),
        ({"actors": ["a"], "events": [{"op": "sync"}]}, "missing actor"),
        ({"actors": ["a"], "events": [{"op": "sync", "actor": "a", "colour": 1}]}, "unexpected colour"),
        ({"actors": ["a", "a"]}, "duplicate"),
        ({"actors": [{"name": "a", "role": "wizard"}]}, "unknown role"),
        ({"actors": [{"name": "a", "balance": 5}]}, "only a treasury"),
        ({"actors": [{"name": "a", "wings": 2}]}, "wings"),
        ({"planets": 3}, "unknown scenario keys"),
        ({"population": {"users": 2, "moons": 1}}, "population"),
    ],
)
def test_invalid_scenarios_rejected(data, message):
    with pytest.raises(ScenarioError, match=message):
        from_dict(data)


def test_bad_yaml_file(tmp_path):
    path = tmp_path / "bad.yaml"
    path.write_text("actors: [unclosed\n")
    with pytest.raises(ScenarioError, match="YAML"):
        load_scenario(path)
    with pytest.raises(ScenarioError):
        run_scenario({"not": "a scenario"})


# -- runner basics -------------------------------------------------------------------


def test_empty_scenario():
    result = Runner(Scenario()).run()
    assert result.trace == []
    m = result.metrics
    assert m.payments == [] and m.ledger_entries == 0 and m.bank_frames == 0
    assert m.double_spenders == [] and m.recoveries == [] and m.mean_unsigned_history() == 0.0
    assert all(m.properties.values())


def test_same_seed_same_trace():
    a, b = (run_scenario(random_dag_scenario(11)) for _ in range(2))
    assert a.trace == b.trace
    assert a.metrics.to_dict() == b.metrics.to_dict()
    c = run_scenario(load_scenario("triple_spend"))
    d = run_scenario(load_scenario("triple_spend"))
    assert c.trace == d.trace


def test_timings_kept_out_of_deterministic_metrics():
    m = run_scenario(load_scenario("triple_spend")).metrics
    assert "timings" not in m.to_dict()
    assert m.to_dict(timings=True)["timings"]["payment_compute"]


def test_outage_and_offline_actor():
    s = _scenario(
        [
            {"op": "pay", "from": "treasury", "to": "alice", "value": 100, "day": 1},
            {"op": "reconnect", "actor": "alice", "at": 86400 * 2 + 10},
            {"op": "go_offline", "actor": "bob"},
            {"op": "reconnect", "actor": "bob", "day": 3},
            {"op": "go_online", "actor": "bob"},
            {"op": "reconnect", "actor": "alice"},
        ],
        outages=[[86400 * 2, 86400 * 2 + 60]],
    )
    statuses = [(r["actor"], r["status"]) for r in _reconnects(run_scenario(s))]
    assert statuses == [("alice", "unreachable"), ("bob", "unreachable"), ("alice", "signed")]


def test_expired_wallet_reported():
    s = _scenario(
        [{"op": "pay", "from": "treasury", "to": "alice", "value": 100}, {"op": "advance", "days": 5}],
        delta_sync=2,
    )
    assert run_scenario(s).metrics.expired == ["alice", "bob", "carol"]


def test_sync_renews_epoch():
    s = _scenario([{"op": "advance", "days": 4}, {"op": "sync", "actor": "alice"}], delta_sync=2)
    result = run_scenario(s)
    assert result.trace[-1]["status"] == "signed" and result.trace[-1]["epoch"] == 4
    assert result.metrics.expired == ["bob", "carol"]


# -- the unsigned closure oracle ---------------------------------------------------------


def test_closure_chain():
    assert unsigned_closure({3: (2,), 2: (1,)}, {1}, 3) == ({3, 2}, {1})


def test_closure_diamond_and_completion():
    edges = {5: (4, 3), 4: (2,), 3: (2,), 2: (1,)}
    assert unsigned_closure(edges, {1}, 5) == ({5, 4, 3, 2}, {1})
    assert unsigned_closure(edges, {2}, 5) == ({5, 4, 3}, {2})


def test_closure_signed_root_and_anchor():
    assert unsigned_closure({2: (1,)}, {2}, 2) == (set(), {2})
    # an anchored state has no outgoing edges: nothing behind it is reached
    assert unsigned_closure({3: (2,), 2: ()}, set(), 3) == ({3, 2}, set())


def test_closure_terminates_on_cycle():
    assert unsigned_closure({1: (2,), 2: (1,)}, set(), 1) == ({1, 2}, set())


@pytest.mark.parametrize("seed", range(12))
def test_random_dag_histories_match_closure(seed):
    assert check_dag(seed) >= 1


# -- adversarial scenarios ---------------------------------------------------------------


def test_triple_spend_outcome():
    result = run_scenario(load_scenario("triple_spend"))
    m = result.metrics
    assert all(p.outcome == "accepted" for p in m.payments)
    by_actor = {r["actor"]: r for r in _reconnects(result)}
    assert by_actor["bob"]["identified"] == []
    assert by_actor["david"]["identified"] == ["alice"]
    assert sorted(m.recoveries) == [("carol", 1000), ("david", 500), ("eve", 1000)]
    assert by_actor["fred"]["recovered"] == [] and by_actor["fred"]["status"] == "signed"
    assert m.double_spenders == ["alice"]
    assert m.properties == {"holding_limit": True, "counterfeit_answered": True}
    runner = result.runner
    recovered = {(d.id, d.value) for d in runner.bank.audit_log if d.kind == "recovery"}
    assert recovered == {(runner.wallets[n].id, v) for n, v in m.recoveries}


def _omit_events(carol_reconnects=True, second_branch=True):
    events = load_scenario("omit_and_continue").to_dict()["events"]
    if not second_branch:
        events = [e for e in events if e.get("to") != "carol"]
    if not carol_reconnects:
        events = [e for e in events if e.get("actor") != "carol" or e["op"] != "reconnect"]
    return events


def _omit_run(**kw):
    base = load_scenario("omit_and_continue").to_dict()
    base["events"] = _omit_events(**kw)
    return run_scenario(from_dict(base))


def test_omit_and_continue_both_branches_detected():
    m = _omit_run().metrics
    assert m.double_spenders == ["mallory"]
    assert m.recoveries == [("carol", 300)]
    assert m.properties["counterfeit_answered"]


def test_omit_and_continue_single_branch_is_clean():
    m = _omit_run(second_branch=False).metrics
    assert m.double_spenders == [] and m.recoveries == []


def test_unused_fork_branch_goes_undetected():
    m = _omit_run(carol_reconnects=False).metrics
    assert m.double_spenders == []
    assert [p.outcome for p in m.payments] == ["accepted"] * 3


def test_omitted_history_element_rejected():
    s = _scenario(
        [
            {"op": "pay", "from": "treasury", "to": "alice", "value": 500},
            {"op": "reconnect", "actor": "alice"},
            {"op": "pay", "from": "alice", "to": "bob", "value": 10},
            {"op": "pay", "from": "alice", "to": "carol", "value": 10, "omit": True},
        ],
        actors=[{"name": "treasury", "role": "treasury", "balance": 1000},
                {"name": "alice", "role": "compromised"}, "bob", "carol"],
    )
    outcomes = [p.outcome for p in run_scenario(s).metrics.payments]
    assert outcomes[:2] == ["accepted", "accepted"]
    assert outcomes[2].startswith("rejected: incomplete related history")


def test_triple_fork_any_two_uploads_identify(mock):
    from conftest import Net

    for pair in itertools.combinations(range(3), 2):
        net = Net(mock)
        alice = net.wallet(900, compromised=True)
        recipients = [net.wallet() for _ in range(3)]
        alice.snapshot("a")
        for r in recipients:
            r.receive_payment(alice.pay_from("a", r.request_payment(300)))
        for i in pair:
            recipients[i].settle(net.bank)
        assert net.bank.identify_double_spenders() == [alice.id]


def test_fork_spending_full_balance_twice():
    s = _scenario(
        [
            {"op": "pay", "from": "treasury", "to": "alice", "value": 1000},
            {"op": "reconnect", "actor": "alice"},
            {"op": "fork", "from": "alice", "to": "bob", "value": 1000, "to2": "carol", "value2": 1000},
            {"op": "reconnect", "actor": "bob"},
            {"op": "reconnect", "actor": "carol"},
        ],
        actors=[{"name": "treasury", "role": "treasury", "balance": 5000},
                {"name": "alice", "role": "compromised"}, "bob", "carol"],
    )
    result = run_scenario(s)
    m = result.metrics
    assert [p.outcome for p in m.payments] == ["accepted"] * 3
    assert m.double_spenders == ["alice"] and m.recoveries == [("carol", 1000)]
    assert result.runner.wallets["bob"].balance == result.runner.wallets["carol"].balance == 1000


def test_holding_limit_scenario():
    result = run_scenario(load_scenario("holding_limit"))
    outcomes = [p.outcome for p in result.metrics.payments]
    assert outcomes == [
        "accepted",
        "refused: holding limit would be exceeded",
        "accepted",
        "refused by relation: holding limit",
    ]
    assert result.metrics.properties["holding_limit"]
    assert result.runner.wallets["bob"].balance == result.runner.wallets["mallory"].balance == 900


def test_counterfeit_answered_requires_a_response():
    m = run_scenario(load_scenario("triple_spend")).metrics
    assert m.properties["counterfeit_answered"]
    quiet = _omit_run(carol_reconnects=False).metrics
    assert quiet.properties["counterfeit_answered"]  # nothing detected, nothing to answer


# -- privacy and growth ------------------------------------------------------------------


def test_online_frames_hide_identity_balance_and_value():
    scenario = random_dag_scenario(21)
    runner = Runner(scenario, tap=True)
    result = runner.run()
    secrets: set[int] = set()
    for w in runner.wallets.values():
        secrets.add(w.id)
        for entry in w.hist.internal.values():
            secrets |= {entry.state.bal, entry.state.sk}
    secrets |= {p.value for p in result.metrics.payments}
    secrets.discard(0)
    patterns = [field.encode(x) for x in secrets]
    patterns += [x.to_bytes(8, "big") for x in secrets if x < 2**64 and x > 255]
    frames = [f for f in runner.online.tap if f[0] in (MsgType.SIG_REQUEST_CREATE, MsgType.SIG_REQUEST_COMPLETE)]
    assert len(frames) >= 2
    for frame in frames:
        for pat in patterns:
            assert pat not in frame


def test_offline_week_history_grows():
    m = run_scenario(load_scenario("offline_week")).metrics
    by_day = m.history_by_day(86400)
    offline_days = [by_day[d] for d in sorted(by_day) if d >= 1]
    assert len(offline_days) == 7
    assert offline_days == sorted(offline_days)
    assert offline_days[-1] > 10 * offline_days[0]
    assert "day  mean unsigned history" in m.summary()
