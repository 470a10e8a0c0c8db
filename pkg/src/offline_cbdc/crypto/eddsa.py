"""EdDSA over Baby Jubjub with a MiMC challenge, so signatures verify cheaply in-circuit.

A signature on a field element ``m`` is ``(R, S)`` with ``S*B = R + h*A`` where
``h = H(A.x, A.y, R.x, R.y, m)``. Nonces are derived deterministically from the
secret seed, so signing the same message twice yields the same bytes.
"""

from __future__ import annotations

import hashlib
import secrets
from dataclasses import dataclass
from functools import lru_cache

from . import curve, field, mimc

CHALLENGE_TAG = mimc.domain_tag(b"eddsa")
SIGNATURE_BYTES = 3 * field.BYTES
PUBLIC_KEY_BYTES = 2 * field.BYTES


@lru_cache(maxsize=256)
def _key_state(ax: int, ay: int) -> int:
    return mimc.absorb(CHALLENGE_TAG, [ax, ay])


def challenge(pk, r_point, msg: int) -> int:
    state = _key_state(pk[0], pk[1])
    return mimc.absorb(state, [r_point[0], r_point[1], msg])


@dataclass(frozen=True)
class Signature:
    rx: int
    ry: int
    s: int

    def to_bytes(self) -> bytes:
        return field.encode(self.rx) + field.encode(self.ry) + self.s.to_bytes(32, "big")

    @classmethod
    def from_bytes(cls, data: bytes) -> "Signature":
        if len(data) != SIGNATURE_BYTES:
            raise ValueError(f"signature must be {SIGNATURE_BYTES} bytes")
        rx = field.decode(data[:32])
        ry = field.decode(data[32:64])
        s = int.from_bytes(data[64:], "big")
        if s >= curve.ORDER:
            raise ValueError("signature scalar is not reduced")
        return cls(rx, ry, s)


@dataclass(frozen=True)
class PublicKey:
    x: int
    y: int

    @property
    def point(self):
        return (self.x, self.y)

    def to_bytes(self) -> bytes:
        return field.encode(self.x) + field.encode(self.y)

    @classmethod
    def from_bytes(cls, data: bytes) -> "PublicKey":
        if len(data) != PUBLIC_KEY_BYTES:
            raise ValueError(f"public key must be {PUBLIC_KEY_BYTES} bytes")
        pk = cls(field.decode(data[:32]), field.decode(data[32:]))
        if not curve.on_curve(pk.point) or curve.mul(curve.ORDER, pk.point) != curve.IDENTITY:
            raise ValueError("public key is not in the prime-order subgroup")
        return pk


class SigningKey:
    def __init__(self, seed: bytes):
        if len(seed) != 32:
            raise ValueError("signing seed must be 32 bytes")
        self.seed = bytes(seed)
        digest = hashlib.blake2b(self.seed, digest_size=64).digest()
        self._scalar = int.from_bytes(digest[:32], "big") % curve.ORDER or 1
        self._prefix = digest[32:]
        x, y = curve.mul_fixed(self._scalar)
        self.public_key = PublicKey(x, y)

    @classmethod
    def generate(cls, rng=None) -> "SigningKey":
        if rng is None:
            return cls(secrets.token_bytes(32))
        return cls(rng.randbytes(32))

    def sign(self, msg: int) -> Signature:
        if not field.is_canonical(msg):
            raise ValueError("can only sign canonical field elements")
        nonce_src = hashlib.blake2b(self._prefix + field.encode(msg), digest_size=64).digest()
        r = int.from_bytes(nonce_src, "big") % curve.ORDER
        r_point = curve.mul_fixed(r)
        h = challenge(self.public_key.point, r_point, msg)
        s = (r + h * self._scalar) % curve.ORDER
        return Signature(r_point[0], r_point[1], s)


def verify(pk: PublicKey, msg: int, sig: Signature) -> bool:
    if not isinstance(sig, Signature) or not field.is_canonical(msg):
        return False
    r_point = (sig.rx, sig.ry)
    if not curve.on_curve(r_point) or not 0 <= sig.s < curve.ORDER:
        return False
    h = challenge(pk.point, r_point, msg)
    lhs = curve.mul_fixed(sig.s)
    rhs = curve.add(r_point, curve.mul_fixed(h % curve.ORDER, pk.point))
    return lhs == rhs


def verify_bytes(pk: PublicKey, msg: int, data: bytes) -> bool:
    try:
        sig = Signature.from_bytes(data)
    except ValueError:
        return False
    return verify(pk, msg, sig)
