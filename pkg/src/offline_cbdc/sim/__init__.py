"""Deterministic scenario simulation with honest and compromised wallets."""

from __future__ import annotations

from .adversary import CompromisedWallet
from .generate import population_scenario, random_dag_scenario, unsigned_closure
from .loader import BUILTIN, from_dict, load_scenario
from .runner import MetricsReport, PaymentRecord, Runner, RunResult, run_scenario
from .scenario import ActorSpec, Event, Scenario, ScenarioError

__all__ = [
    "BUILTIN",
    "ActorSpec",
    "CompromisedWallet",
    "Event",
    "MetricsReport",
    "PaymentRecord",
    "RunResult",
    "Runner",
    "Scenario",
    "ScenarioError",
    "from_dict",
    "load_scenario",
    "population_scenario",
    "random_dag_scenario",
    "run_scenario",
    "unsigned_closure",
]
