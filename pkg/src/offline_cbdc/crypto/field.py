"""Arithmetic in the BN254 scalar field.

Field elements are plain ``int`` values in ``[0, P)``. Every commitment, key,
serial number and tag in the protocol lives here, so the helpers stay thin.
"""

from __future__ import annotations

import secrets

P = 21888242871839275222246405745257275088548364400416034343698204186575808495617
BYTES = 32

# Amounts, balances and limits are minor-unit integers below 2**64; epochs below 2**32.
VALUE_BITS = 64
EPOCH_BITS = 32


def is_canonical(x: object) -> bool:
    return isinstance(x, int) and not isinstance(x, bool) and 0 <= x < P


def fe(x: int) -> int:
    return x % P


def add(a: int, b: int) -> int:
    return (a + b) % P


def sub(a: int, b: int) -> int:
    return (a - b) % P


def mul(a: int, b: int) -> int:
    return (a * b) % P


def neg(a: int) -> int:
    return (-a) % P


def inv(a: int) -> int:
    if a % P == 0:
        raise ZeroDivisionError("zero has no inverse in the field")
    return pow(a, P - 2, P)


def div(a: int, b: int) -> int:
    return a * inv(b) % P


def random_element(rng=None) -> int:
    """Uniform element; ``rng`` is a ``random.Random`` for reproducible runs."""
    if rng is None:
        return secrets.randbelow(P)
    return rng.randrange(P)


def encode(x: int) -> bytes:
    if not is_canonical(x):
        raise ValueError(f"not a canonical field element: {x!r}")
    return x.to_bytes(BYTES, "big")


def decode(data: bytes) -> int:
    if len(data) != BYTES:
        raise ValueError(f"field element needs {BYTES} bytes, got {len(data)}")
    x = int.from_bytes(data, "big")
    if x >= P:
        raise ValueError("encoded value is not reduced modulo the field prime")
    return x


def in_value_range(x: int) -> bool:
    return 0 <= x < 2**VALUE_BITS


def in_epoch_range(x: int) -> bool:
    return 0 <= x < 2**EPOCH_BITS
