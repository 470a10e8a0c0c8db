"""Field arithmetic, MiMC hashing, commitments, PRFs and EdDSA."""

from __future__ import annotations

from .commit import commit, double_spend_tag, prf_ds, prf_id, prf_sn, random_blind, solve_identity
from .eddsa import PublicKey, Signature, SigningKey, verify
from .field import P

__all__ = [
    "P",
    "commit",
    "double_spend_tag",
    "prf_ds",
    "prf_id",
    "prf_sn",
    "random_blind",
    "solve_identity",
    "PublicKey",
    "Signature",
    "SigningKey",
    "verify",
]
