"""Scenario files: actors, parameters and a scripted event list.

Schema (YAML)::

    name: triple_spend
    seed: 1
    epoch_seconds: 86400        # length of one epoch in virtual seconds
    delta_sync: 30              # epochs a wallet may stay unsynchronized
    holding_limit: 3000         # default limit for enrolled actors
    reconnect_jitter: 0         # max random virtual delay before each reconnect
    outages: [[start, end]]     # virtual-second windows where the bank is unreachable
    actors:
      - {name: treasury, role: treasury, balance: 100000}
      - {name: alice, role: compromised}
      - {name: bob}                       # role defaults to honest
    events:
      - {op: pay, from: treasury, to: alice, value: 1200}
      - {op: snapshot, actor: alice, label: a1}
      - {op: pay, from: alice, to: bob, value: 1000, from_state: a1}

Every event may carry ``at`` (virtual seconds) or ``day`` (epochs); events
without either happen at the time of the previous event. A ``population``
mapping (the keyword arguments of ``population_scenario``) generates the
actors and events of an offline population instead.
"""

from __future__ import annotations

from dataclasses import dataclass, field

ROLES = ("honest", "compromised", "treasury")

# op -> (required keys, optional keys)
EVENT_OPS: dict[str, tuple[tuple[str, ...], tuple[str, ...]]] = {
    "pay": (("from", "to", "value"), ("from_state", "omit", "unchecked")),
    "fork": (("from", "to", "value", "to2", "value2"), ()),
    "reconnect": (("actor",), ("recover",)),
    "recover": (("actor",), ()),
    "sync": (("actor",), ()),
    "snapshot": (("actor", "label"), ()),
    "go_offline": (("actor",), ()),
    "go_online": (("actor",), ()),
    "advance": ((), ("days", "seconds")),
}
_ACTOR_KEYS = {"pay": ("from", "to"), "fork": ("from", "to", "to2")}


class ScenarioError(ValueError):
    pass


@dataclass(frozen=True)
class ActorSpec:
    name: str
    role: str = "honest"
    holding_limit: int | None = None
    balance: int = 0  # treasury only: the issued amount


@dataclass(frozen=True)
class Event:
    op: str
    args: dict
    at: float | None = None

    def actors(self) -> list[str]:
        keys = _ACTOR_KEYS.get(self.op, ("actor",) if "actor" in EVENT_OPS[self.op][0] else ())
        return [self.args[k] for k in keys]


@dataclass
class Scenario:
    name: str = "scenario"
    seed: int = 0
    epoch_seconds: float = 86400
    delta_sync: int = 30
    holding_limit: int = 3000
    reconnect_jitter: float = 0.0
    outages: list[tuple[float, float]] = field(default_factory=list)
    actors: list[ActorSpec] = field(default_factory=list)
    events: list[Event] = field(default_factory=list)

    def actor(self, name: str) -> ActorSpec:
        for a in self.actors:
            if a.name == name:
                return a
        raise ScenarioError(f"unknown actor {name!r}")

    def validate(self) -> "Scenario":
        names = [a.name for a in self.actors]
        if len(set(names)) != len(names):
            raise ScenarioError("duplicate actor names")
        for a in self.actors:
            if a.role not in ROLES:
                raise ScenarioError(f"actor {a.name!r}: unknown role {a.role!r}")
            if a.role != "treasury" and a.balance:
                raise ScenarioError(f"actor {a.name!r}: only a treasury starts with a balance")
        if self.epoch_seconds <= 0 or self.delta_sync < 0:
            raise ScenarioError("epoch_seconds must be positive and delta_sync non-negative")
        roles = {a.name: a.role for a in self.actors}
        for i, ev in enumerate(self.events):
            for name in ev.actors():
                if name not in roles:
                    raise ScenarioError(f"event {i} ({ev.op}): unknown actor {name!r}")
            if ev.op == "fork" or (ev.op == "pay" and (ev.args.get("from_state") or ev.args.get("omit"))):
                if roles[ev.args["from"]] != "compromised":
                    raise ScenarioError(f"event {i} ({ev.op}): only a compromised actor may deviate")
            if ev.op == "pay" and ev.args.get("unchecked") and roles[ev.args["to"]] != "compromised":
                raise ScenarioError(f"event {i} (pay): only a compromised recipient may skip checks")
            if ev.op == "snapshot" and roles[ev.args["actor"]] != "compromised":
                raise ScenarioError(f"event {i} (snapshot): only a compromised actor keeps snapshots")
        return self

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "seed": self.seed,
            "epoch_seconds": self.epoch_seconds,
            "delta_sync": self.delta_sync,
            "holding_limit": self.holding_limit,
            "reconnect_jitter": self.reconnect_jitter,
            "outages": [list(o) for o in self.outages],
            "actors": [
                {k: v for k, v in vars(a).items() if v not in (None, 0) or k == "name"} for a in self.actors
            ],
            "events": [{"op": e.op, **e.args, **({"at": e.at} if e.at is not None else {})} for e in self.events],
        }
