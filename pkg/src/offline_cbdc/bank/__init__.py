"""Central bank: the public ledger and the online service around it."""

from __future__ import annotations

from .ledger import Ledger, identify_double_spenders, read_ledger_file
from .service import BankConfig, BankService, Disclosure, state_paths

__all__ = [
    "BankConfig",
    "BankService",
    "Disclosure",
    "Ledger",
    "identify_double_spenders",
    "read_ledger_file",
    "state_paths",
]
