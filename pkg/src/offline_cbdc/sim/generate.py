"""Generated scenarios: an offline population and random offline payment DAGs."""

from __future__ import annotations

import random

from .scenario import ActorSpec, Event, Scenario


def _funding(s: Scenario, users: list[str], amount: int) -> None:
    s.actors.append(ActorSpec("treasury", "treasury", balance=amount * len(users)))
    s.actors += [ActorSpec(u) for u in users]
    for u in users:
        s.events.append(Event("pay", {"from": "treasury", "to": u, "value": amount}, 0.0))
    for u in users:
        s.events.append(Event("reconnect", {"actor": u}, 0.0))


def population_scenario(
    users: int = 8,
    days: int = 7,
    payments_per_day: float = 1.3,
    receive_daily: bool = True,
    value_range: tuple[int, int] = (1, 20),
    funding: int = 1000,
    seed: int = 0,
    epoch_seconds: float = 86400,
    delta_sync: int = 30,
    holding_limit: int = 3000,
) -> Scenario:
    """Users funded and signed on day 0, then offline for ``days`` days paying each other.

    With ``receive_daily`` every user pays one other user per day along a
    random cycle, so everyone also receives daily; the remaining rate is
    spent on extra payments to random users.
    """
    rng = random.Random(f"{seed}/population")
    names = [f"user{i}" for i in range(users)]
    s = Scenario(f"population-{users}x{days}", seed, epoch_seconds, delta_sync, holding_limit)
    _funding(s, names, funding)
    if users < 2:
        return s.validate()
    for day in range(1, days + 1):
        payments: list[tuple[str, str]] = []
        rate = payments_per_day
        if receive_daily:
            order = names[:]
            rng.shuffle(order)
            payments += [(order[i], order[(i + 1) % users]) for i in range(users)]
            rate = max(0.0, rate - 1)
        for u in names:
            extra = int(rate) + (rng.random() < rate - int(rate))
            for _ in range(extra):
                payments.append((u, rng.choice([v for v in names if v != u])))
        rng.shuffle(payments)
        for i, (a, b) in enumerate(payments):
            at = day * epoch_seconds + (i + 1) * epoch_seconds / (len(payments) + 1)
            value = rng.randint(*value_range)
            s.events.append(Event("pay", {"from": a, "to": b, "value": value}, at))
    return s.validate()


def random_dag_scenario(seed: int, max_wallets: int = 5, max_states: int = 12) -> Scenario:
    """Funded, signed wallets make random offline payments, then every recipient reconnects.

    Each payment adds two unsigned states (the sender's creation and the
    recipient's completion), so at most ``max_states // 2`` payments are made.
    """
    rng = random.Random(f"{seed}/dag")
    n = rng.randint(2, max_wallets)
    names = [f"w{i}" for i in range(n)]
    s = Scenario(f"dag-{seed}", seed, holding_limit=3000)
    funding = 100
    _funding(s, names, funding)
    balance = dict.fromkeys(names, funding)
    at = 86400.0
    recipients: list[str] = []
    for _ in range(rng.randint(1, max_states // 2)):
        sender = rng.choice([u for u in names if balance[u] > 0])
        to = rng.choice([u for u in names if u != sender])
        value = rng.randint(1, balance[sender])
        balance[sender] -= value
        balance[to] += value
        s.events.append(Event("pay", {"from": sender, "to": to, "value": value}, at))
        at += 60
        if to not in recipients:
            recipients.append(to)
    rng.shuffle(recipients)
    for u in recipients:
        s.events.append(Event("reconnect", {"actor": u, "recover": False}, at))
        at += 60
    return s.validate()


def unsigned_closure(edges: dict[int, tuple[int, ...]], signed: set[int], root: int) -> tuple[set[int], set[int]]:
    """Brute-force fixpoint: unsigned states reachable from ``root`` and the signed states bordering them.

    ``edges`` maps a state to the states it was derived from. Iterates over
    every edge until nothing changes, independently of the wallet's search.
    """
    if root in signed:
        return set(), {root}
    closure, frontier = {root}, set()
    changed = True
    while changed:
        changed = False
        for state, deps in edges.items():
            if state not in closure:
                continue
            for d in deps:
                target = frontier if d in signed else closure
                if d not in target:
                    target.add(d)
                    changed = True
    return closure, frontier
