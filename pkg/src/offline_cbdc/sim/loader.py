"""Reading scenario files and the bundled scenarios."""

from __future__ import annotations

from importlib import resources
from pathlib import Path

import yaml

from .generate import population_scenario
from .scenario import EVENT_OPS, ActorSpec, Event, Scenario, ScenarioError

_TIME_KEYS = ("at", "day")


def _event(i: int, raw: dict, epoch_seconds: float) -> Event:
    if not isinstance(raw, dict) or "op" not in raw:
        raise ScenarioError(f"event {i}: expected a mapping with an 'op' key")
    op = raw["op"]
    if op not in EVENT_OPS:
        raise ScenarioError(f"event {i}: unknown op {op!r}")
    required, optional = EVENT_OPS[op]
    args = {k: v for k, v in raw.items() if k != "op" and k not in _TIME_KEYS}
    missing = [k for k in required if k not in args]
    if missing:
        raise ScenarioError(f"event {i} ({op}): missing {', '.join(missing)}")
    extra = [k for k in args if k not in required + optional]
    if extra:
        raise ScenarioError(f"event {i} ({op}): unexpected {', '.join(extra)}")
    for key in ("value", "value2"):
        if key in args and (not isinstance(args[key], int) or args[key] < 0):
            raise ScenarioError(f"event {i} ({op}): {key} must be a non-negative integer")
    at = None
    if "at" in raw:
        at = float(raw["at"])
    elif "day" in raw:
        at = float(raw["day"]) * epoch_seconds
    return Event(op, args, at)


def from_dict(data: dict) -> Scenario:
    if not isinstance(data, dict):
        raise ScenarioError("a scenario must be a mapping")
    known = {"name", "seed", "epoch_seconds", "delta_sync", "holding_limit", "reconnect_jitter", "outages",
             "actors", "events", "population"}
    extra = set(data) - known
    if extra:
        raise ScenarioError(f"unknown scenario keys: {', '.join(sorted(extra))}")
    s = Scenario(
        name=str(data.get("name", "scenario")),
        seed=int(data.get("seed", 0)),
        epoch_seconds=float(data.get("epoch_seconds", 86400)),
        delta_sync=int(data.get("delta_sync", 30)),
        holding_limit=int(data.get("holding_limit", 3000)),
        reconnect_jitter=float(data.get("reconnect_jitter", 0)),
        outages=[(float(a), float(b)) for a, b in data.get("outages") or []],
    )
    for raw in data.get("actors") or []:
        if isinstance(raw, str):
            raw = {"name": raw}
        try:
            s.actors.append(ActorSpec(**raw))
        except TypeError as exc:
            raise ScenarioError(f"actor {raw!r}: {exc}") from None
    s.events = [_event(i, raw, s.epoch_seconds) for i, raw in enumerate(data.get("events") or [])]
    if data.get("population"):
        params = dict(data["population"])
        if "value_range" in params:
            params["value_range"] = tuple(params["value_range"])
        try:
            generated = population_scenario(
                seed=s.seed, epoch_seconds=s.epoch_seconds, delta_sync=s.delta_sync,
                holding_limit=s.holding_limit, **params,
            )
        except TypeError as exc:
            raise ScenarioError(f"population: {exc}") from None
        s.actors += generated.actors
        s.events += generated.events
    return s.validate()


BUILTIN = ("triple_spend", "offline_week", "omit_and_continue", "holding_limit")


def load_scenario(source: str | Path) -> Scenario:
    """Load a scenario file, or a bundled one by name."""
    text = None
    if str(source) in BUILTIN:
        text = resources.files(__package__).joinpath("scenarios", f"{source}.yaml").read_text()
    else:
        text = Path(source).read_text()
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ScenarioError(f"not valid YAML: {exc}") from None
    return from_dict(data or {})
