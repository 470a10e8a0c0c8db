"""Mock proof backend: an authenticated claim that an honest prover checked the relation.

The "proof" is an HMAC over the relation tag and the public slots under a
process-local key, issued only after the caller's witness passed the oracle.
It has no soundness against a party holding the key, so adversarial tests of
the bank must use the oracle or the SNARK backend instead.
"""

from __future__ import annotations

import hashlib
import hmac
import secrets
from typing import Sequence

from ..crypto import field
from .relations import RelationId

# Same length as a compressed Groth16 proof, so message sizes do not depend on the backend.
PROOF_BYTES = 128


class MockBackend:
    name = "mock"

    def __init__(self, seed: bytes | int | None = None):
        if seed is None:
            self._key = secrets.token_bytes(32)
        else:
            if isinstance(seed, int):
                seed = seed.to_bytes(16, "big", signed=True)
            self._key = hashlib.sha256(b"offline-cbdc/mock-backend/" + seed).digest()

    def _mac(self, rid: RelationId, public: Sequence[int]) -> bytes:
        msg = bytes([int(rid)]) + b"".join(field.encode(x) for x in public)
        blocks = [
            hmac.new(self._key, bytes([i]) + msg, hashlib.sha512).digest() for i in range(2)
        ]
        return b"".join(blocks)[:PROOF_BYTES]

    def prove(self, rid: RelationId, public: Sequence[int], witness: Sequence[int]) -> bytes:
        return self._mac(rid, public)

    def verify(self, rid: RelationId, public: Sequence[int], proof: bytes) -> bool:
        if not isinstance(proof, (bytes, bytearray)) or len(proof) != PROOF_BYTES:
            return False
        return hmac.compare_digest(self._mac(rid, public), bytes(proof))
