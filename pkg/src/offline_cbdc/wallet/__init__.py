"""User wallets and their history stores."""

from __future__ import annotations

from .state import ExternalEntry, Histories, InternalEntry, RecoveryEntry, StateKind, WalletState
from .storage import WalletFile, decode_wallet, encode_wallet, load_wallet, save_wallet
from .wallet import BankApi, BankRejected, PaymentRejected, ReconnectResult, Wallet, WalletError

__all__ = [
    "BankApi",
    "BankRejected",
    "ExternalEntry",
    "Histories",
    "InternalEntry",
    "PaymentRejected",
    "ReconnectResult",
    "RecoveryEntry",
    "StateKind",
    "Wallet",
    "WalletError",
    "WalletFile",
    "WalletState",
    "decode_wallet",
    "encode_wallet",
    "load_wallet",
    "save_wallet",
]
