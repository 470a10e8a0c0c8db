"""Offline-capable CBDC payments with provable double-spend recovery."""

__version__ = "0.1.0"
