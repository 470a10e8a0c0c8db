"""Relation registry, satisfaction oracle and the pluggable proof backends."""

from __future__ import annotations

from typing import Protocol, Sequence

from ..crypto.encoding import DecodeError
from .bundle import ProofBundle
from .mock import MockBackend
from .relations import (
    ContractViolation,
    RelationId,
    check_arity,
    get,
    pack,
    relation_satisfied,
    violations,
)
from .snark import MissingKeys, SnarkBackend


class Backend(Protocol):
    name: str

    def prove(self, rid: RelationId, public: Sequence[int], witness: Sequence[int]) -> bytes: ...

    def verify(self, rid: RelationId, public: Sequence[int], proof: bytes) -> bool: ...


class UnsatisfiedWitness(ValueError):
    """Raised when asked to prove a statement whose witness breaks a constraint."""

    def __init__(self, rid: RelationId, constraint: str, all_violations: list[str]):
        super().__init__(f"{RelationId(rid).name}: constraint '{constraint}' does not hold")
        self.relation = RelationId(rid)
        self.constraint = constraint
        self.violations = all_violations


def prove(backend: Backend, rid: RelationId, public: Sequence[int], witness: Sequence[int]) -> ProofBundle:
    """Prove after checking the witness against the oracle; refuse naming the first broken constraint."""
    rid = RelationId(rid)
    broken = violations(rid, public, witness)
    if broken:
        raise UnsatisfiedWitness(rid, broken[0], broken)
    return ProofBundle(rid, tuple(int(x) for x in public), backend.prove(rid, public, witness))


def verify(backend: Backend, bundle: ProofBundle, expected: RelationId | None = None) -> bool:
    """Never raises on malformed input; a relation mismatch with ``expected`` is False."""
    try:
        if expected is not None and bundle.relation != RelationId(expected):
            return False
        check_arity(bundle.relation, bundle.public)
        return bool(backend.verify(bundle.relation, bundle.public, bundle.proof))
    except (ContractViolation, DecodeError, ValueError, TypeError, AttributeError):
        return False


def make_backend(name: str, seed: int | None = None, key_dir=None) -> Backend:
    if name == "mock":
        return MockBackend(seed)
    if name == "snark":
        return SnarkBackend(key_dir=key_dir, seed=seed)
    raise ValueError(f"unknown proof backend {name!r} (expected 'mock' or 'snark')")


__all__ = [
    "Backend",
    "ContractViolation",
    "MissingKeys",
    "MockBackend",
    "ProofBundle",
    "RelationId",
    "SnarkBackend",
    "UnsatisfiedWitness",
    "get",
    "make_backend",
    "pack",
    "prove",
    "relation_satisfied",
    "verify",
    "violations",
]
