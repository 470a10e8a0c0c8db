"""Groth16 backend: per-relation keys generated once, cached in memory and optionally on disk.

Key files carry a versioned header binding them to the relation and to the
digest of the circuit structure, so a stale key is detected instead of
producing proofs that never verify.
"""

from __future__ import annotations

import os
import random
import threading
from functools import lru_cache
from pathlib import Path
from typing import Sequence

from ..crypto.encoding import DecodeError, Reader, Writer
from . import groth16
from .circuits import blank, synthesize
from .relations import RelationId

KEY_MAGIC = b"OCBDCKEY"
KEY_VERSION = 1
KIND_PROVING = 0
KIND_VERIFYING = 1
KEY_DIR_ENV = "OFFLINE_CBDC_KEY_DIR"


class MissingKeys(Exception):
    """A key file is missing, corrupt or belongs to a different circuit."""


def default_key_dir() -> Path:
    env = os.environ.get(KEY_DIR_ENV)
    return Path(env) if env else Path.home() / ".cache" / "offline-cbdc" / "keys"


@lru_cache(maxsize=None)
def circuit_digest(rid: RelationId) -> bytes:
    return blank(rid).digest()


def _key_path(key_dir: Path, rid: RelationId, kind: int) -> Path:
    suffix = "pk" if kind == KIND_PROVING else "vk"
    return Path(key_dir) / f"{rid.name.lower()}.{suffix}"


def _encode_key(rid: RelationId, kind: int, digest: bytes, body: bytes) -> bytes:
    w = Writer().raw(KEY_MAGIC).u16(KEY_VERSION).u8(kind).u8(int(rid)).raw(digest)
    return w.blob(body).getvalue()


def _decode_key(data: bytes, rid: RelationId, kind: int, digest: bytes) -> Reader:
    r = Reader(data)
    if r.raw(len(KEY_MAGIC)) != KEY_MAGIC:
        raise DecodeError("not an offline-cbdc key file", 0)
    version = r.u16()
    if version != KEY_VERSION:
        raise DecodeError(f"unsupported key version {version}", len(KEY_MAGIC))
    if r.u8() != kind or r.u8() != int(rid):
        raise DecodeError(f"key file is not the {rid.name} key of the expected kind", len(KEY_MAGIC) + 2)
    if r.raw(32) != digest:
        raise DecodeError(f"key file was generated for a different {rid.name} circuit", len(KEY_MAGIC) + 4)
    body = r.blob()
    r.expect_end()
    return Reader(body)


def write_keys(key_dir: Path, rid: RelationId, pk: groth16.ProvingKey, vk: groth16.VerifyingKey) -> None:
    key_dir = Path(key_dir)
    key_dir.mkdir(parents=True, exist_ok=True)
    digest = circuit_digest(rid)
    for kind, body in ((KIND_PROVING, pk.to_bytes()), (KIND_VERIFYING, vk.to_bytes())):
        path = _key_path(key_dir, rid, kind)
        tmp = path.with_suffix(path.suffix + ".tmp")
        tmp.write_bytes(_encode_key(rid, kind, digest, body))
        os.replace(tmp, path)


def read_key(key_dir: Path, rid: RelationId, kind: int):
    path = _key_path(Path(key_dir), rid, kind)
    if not path.exists():
        raise MissingKeys(f"no {rid.name} key at {path}; run `offline-cbdc keygen` first")
    try:
        r = _decode_key(path.read_bytes(), rid, kind, circuit_digest(rid))
        key = (groth16.ProvingKey if kind == KIND_PROVING else groth16.VerifyingKey).read(r)
        r.expect_end()
    except DecodeError as exc:
        raise MissingKeys(f"{path}: {exc}; regenerate with `offline-cbdc keygen`") from None
    return key


class SnarkBackend:
    """Groth16 proofs over the relation circuits.

    With ``key_dir`` set, keys are loaded from disk when present and written
    after generation; otherwise they live only in this process. ``seed`` makes
    key generation reproducible (test and benchmark use only).
    """

    name = "snark"

    def __init__(self, key_dir: str | Path | None = None, seed: int | None = None, generate: bool = True):
        self.key_dir = Path(key_dir) if key_dir is not None else None
        self.seed = seed
        self.generate = generate
        self._pk: dict[RelationId, groth16.ProvingKey] = {}
        self._vk: dict[RelationId, groth16.VerifyingKey] = {}
        self._lock = threading.Lock()

    def _setup(self, rid: RelationId) -> None:
        rng = random.Random(f"{self.seed}/{rid.name}") if self.seed is not None else None
        pk, vk = groth16.setup(blank(rid), rng)
        self._pk[rid], self._vk[rid] = pk, vk
        if self.key_dir is not None:
            write_keys(self.key_dir, rid, pk, vk)

    def _load(self, rid: RelationId, kind: int) -> None:
        if self.key_dir is not None:
            try:
                key = read_key(self.key_dir, rid, kind)
            except MissingKeys:
                if not self.generate:
                    raise
            else:
                (self._pk if kind == KIND_PROVING else self._vk)[rid] = key
                return
        elif not self.generate:
            raise MissingKeys(f"no {rid.name} keys and key generation is disabled")
        self._setup(rid)

    def proving_key(self, rid: RelationId) -> groth16.ProvingKey:
        rid = RelationId(rid)
        with self._lock:
            if rid not in self._pk:
                self._load(rid, KIND_PROVING)
            return self._pk[rid]

    def verifying_key(self, rid: RelationId) -> groth16.VerifyingKey:
        rid = RelationId(rid)
        with self._lock:
            if rid not in self._vk:
                self._load(rid, KIND_VERIFYING)
            return self._vk[rid]

    def keygen(self, relations: Sequence[RelationId] = tuple(RelationId)) -> None:
        with self._lock:
            for rid in relations:
                self._setup(RelationId(rid))

    def prove(self, rid: RelationId, public: Sequence[int], witness: Sequence[int]) -> bytes:
        cs = synthesize(rid, public, witness)
        return groth16.prove(self.proving_key(rid), cs).to_bytes()

    def verify(self, rid: RelationId, public: Sequence[int], proof: bytes) -> bool:
        try:
            parsed = groth16.Proof.from_bytes(bytes(proof))
        except (DecodeError, TypeError):
            return False
        return groth16.verify(self.verifying_key(rid), list(public), parsed)
