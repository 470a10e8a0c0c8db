"""MiMC-x^5 over the BN254 scalar field with Miyaguchi-Preneel chaining.

110 rounds (ceil(254 / log2 5)); the first round constant is zero and the rest
come from a SHA-256 chain. The same parameters are used by the in-circuit
gadget, so the two must never drift apart.
"""

from __future__ import annotations

import hashlib

import gmpy2

from .field import P

ROUNDS = 110
EXPONENT = 5
_SEED = b"offline-cbdc/mimc-bn254-x5"


def _round_constants() -> list[int]:
    out = [0]
    h = hashlib.sha256(_SEED).digest()
    while len(out) < ROUNDS:
        out.append(int.from_bytes(h, "big") % P)
        h = hashlib.sha256(h).digest()
    return out


ROUND_CONSTANTS: tuple[int, ...] = tuple(_round_constants())
_C = tuple(gmpy2.mpz(c) for c in ROUND_CONSTANTS)
_P = gmpy2.mpz(P)


def encrypt(x: int, k: int) -> int:
    """The keyed permutation E_k(x)."""
    x = gmpy2.mpz(x)
    k = gmpy2.mpz(k)
    for c in _C:
        x = gmpy2.powmod(x + k + c, EXPONENT, _P)
    return int((x + k) % _P)


def absorb(state: int, values) -> int:
    for m in values:
        state = (encrypt(m, state) + state + m) % P
    return state


def hash_values(values, iv: int = 0) -> int:
    return absorb(iv, values)


def domain_tag(label: bytes) -> int:
    """Field constant used as chaining IV to separate hash uses."""
    return int.from_bytes(hashlib.sha256(b"offline-cbdc/tag/" + label).digest(), "big") % P
