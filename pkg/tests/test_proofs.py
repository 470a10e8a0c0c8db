from __future__ import annotations

import random

import pytest
from relation_cases import complete_state, create_state, mutate, violation, violation_cases

from offline_cbdc import proofs
from offline_cbdc.proofs import (
    ContractViolation,
    MockBackend,
    ProofBundle,
    RelationId,
    UnsatisfiedWitness,
    get,
    relation_satisfied,
    violations,
)
from offline_cbdc.proofs import groth16
from offline_cbdc.proofs.circuits import blank, synthesize
from offline_cbdc.proofs.samples import instance
from offline_cbdc.proofs.snark import MissingKeys, SnarkBackend


def test_eight_relations():
    assert len(RelationId) == 8
    assert sum(len(get(r).constraint_names) for r in RelationId) >= 25


def test_create_state_paying_1000_of_1200():
    assert relation_satisfied(RelationId.CREATE_STATE, *create_state(random.Random(1), bal=1200, value=1000))


def test_create_state_zero_value():
    assert relation_satisfied(RelationId.CREATE_STATE, *create_state(random.Random(2), bal=0, value=0))


def test_create_state_exact_balance():
    assert relation_satisfied(RelationId.CREATE_STATE, *create_state(random.Random(3), bal=500, value=500))


def test_complete_state_over_holding_limit():
    pub, wit = complete_state(random.Random(4), bal=90, value=20, holding_limit=100)
    assert violations(RelationId.COMPLETE_STATE, pub, wit) == ["holding limit"]


def test_complete_state_at_holding_limit():
    pub, wit = complete_state(random.Random(5), bal=80, value=20, holding_limit=100)
    assert relation_satisfied(RelationId.COMPLETE_STATE, pub, wit)


@pytest.mark.parametrize("epoch,sender,ok", [(10, 40, True), (10, 41, False), (50, 19, False), (50, 20, True)])
def test_complete_state_epoch_distance(epoch, sender, ok):
    pub, wit = complete_state(random.Random(6), bal=0, value=5, epoch=epoch, epoch_sender=sender, delta_sync=30)
    assert relation_satisfied(RelationId.COMPLETE_STATE, pub, wit) is ok


def test_arity_mismatch_is_a_contract_violation():
    with pytest.raises(ContractViolation):
        relation_satisfied(RelationId.ENROLL, [1, 2], [3, 4])
    with pytest.raises(ContractViolation):
        proofs.pack(RelationId.ENROLL, "public", id=1)


@pytest.mark.parametrize("rid", list(RelationId), ids=lambda r: r.name)
def test_honest_instances_satisfy_oracle_and_round_trip(rid, mock, signer):
    rng = random.Random(f"honest/{rid.name}")
    for _ in range(100):
        pub, wit = instance(rid, rng, signer)
        assert relation_satisfied(rid, pub, wit)
        bundle = proofs.prove(mock, rid, pub, wit)
        assert proofs.verify(mock, bundle, rid)


@pytest.mark.parametrize("case", violation_cases(), ids=lambda c: f"{c[0].name}:{c[1]}")
def test_targeted_violation_refused(case, mock, signer):
    rid, constraint = case
    pub, wit = violation(rid, constraint, random.Random(f"violation/{constraint}"), signer)
    assert constraint in violations(rid, pub, wit)
    with pytest.raises(UnsatisfiedWitness) as exc:
        proofs.prove(mock, rid, pub, wit)
    assert constraint in exc.value.violations
    assert constraint in synthesize(rid, pub, wit).unsatisfied_labels()


def test_random_single_slot_violations(mock, signer):
    rng = random.Random(9)
    cases = violation_cases()
    for _ in range(100):
        rid, constraint = rng.choice(cases)
        pub, wit = violation(rid, constraint, rng, signer)
        assert not relation_satisfied(rid, pub, wit)
        with pytest.raises(UnsatisfiedWitness):
            proofs.prove(mock, rid, pub, wit)


def test_tampered_sn_names_the_constraint(mock, signer):
    pub, wit = instance(RelationId.CREATE_STATE, random.Random(10), signer)
    pub, wit = mutate(RelationId.CREATE_STATE, pub, wit, "sn")
    with pytest.raises(UnsatisfiedWitness) as exc:
        proofs.prove(mock, RelationId.CREATE_STATE, pub, wit)
    assert exc.value.constraint == "sn recomputation"


@pytest.mark.parametrize("rid", list(RelationId), ids=lambda r: r.name)
def test_circuits_accept_honest_witnesses(rid, signer):
    for seed in range(3):
        pub, wit = instance(rid, random.Random(f"circuit/{seed}"), signer)
        cs = synthesize(rid, pub, wit)
        assert cs.is_satisfied()
        assert cs.public_values() == list(pub)
        assert cs.digest() == blank(rid).digest()


# -- mock backend -----------------------------------------------------------------


def test_mock_rejects_mutations(mock, signer):
    pub, wit = instance(RelationId.PAYMENT, random.Random(11), signer)
    bundle = proofs.prove(mock, RelationId.PAYMENT, pub, wit)
    assert len(bundle.proof) == 128
    assert not proofs.verify(mock, bundle.with_public([pub[0] + 1]))
    assert not proofs.verify(mock, ProofBundle(RelationId.ENROLL, bundle.public, bundle.proof))
    assert not proofs.verify(mock, bundle, RelationId.CREATE_STATE)
    assert not proofs.verify(mock, ProofBundle(bundle.relation, bundle.public, bundle.proof[:-1]))
    assert not proofs.verify(MockBackend(seed=8), bundle)


def test_bundle_round_trip(mock, signer):
    pub, wit = instance(RelationId.SYNC, random.Random(12), signer)
    bundle = proofs.prove(mock, RelationId.SYNC, pub, wit)
    assert ProofBundle.from_bytes(bundle.to_bytes()) == bundle


def test_make_backend():
    assert proofs.make_backend("mock", seed=1).name == "mock"
    with pytest.raises(ValueError):
        proofs.make_backend("plonk")


# -- SNARK backend -------------------------------------------------------------------


@pytest.mark.parametrize("rid", list(RelationId), ids=lambda r: r.name)
def test_snark_round_trip_and_mutations(rid, snark, signer):
    pub, wit = instance(rid, random.Random(f"snark/{rid.name}"), signer)
    bundle = proofs.prove(snark, rid, pub, wit)
    assert len(bundle.proof) == groth16.PROOF_BYTES == 128
    assert proofs.verify(snark, bundle, rid)
    bumped = list(pub)
    bumped[-1] = (bumped[-1] + 1) % proofs.relations.field.P
    assert not proofs.verify(snark, bundle.with_public(bumped))
    flipped = bytearray(bundle.proof)
    flipped[5] ^= 1
    assert not proofs.verify(snark, ProofBundle(rid, bundle.public, bytes(flipped)))


def test_snark_relation_confusion(snark, signer):
    pub, wit = instance(RelationId.CREATE_DEP, random.Random(13), signer)
    bundle = proofs.prove(snark, RelationId.CREATE_DEP, pub, wit)
    # COMPLETE_DEP has the same public slot layout
    assert not proofs.verify(snark, ProofBundle(RelationId.COMPLETE_DEP, bundle.public, bundle.proof))


def test_snark_proof_size_constant(snark, signer):
    rng = random.Random(14)
    sizes = set()
    for _ in range(20):
        pub, wit = instance(RelationId.ENROLL, rng, signer)
        sizes.add(len(snark.prove(RelationId.ENROLL, pub, wit)))
    assert sizes == {128}


@pytest.mark.parametrize(
    "case",
    [
        (RelationId.CREATE_STATE, "balance covers value"),
        (RelationId.COMPLETE_STATE, "holding limit"),
        (RelationId.COMPLETE_STATE, "epoch distance"),
        (RelationId.ENROLL, "identifier derivation"),
    ],
    ids=lambda c: c[1],
)
def test_snark_cannot_prove_violations(case, snark, signer):
    rid, constraint = case
    pub, wit = violation(rid, constraint, random.Random(15), signer)
    with pytest.raises(ValueError, match="does not satisfy"):
        snark.prove(rid, pub, wit)


def test_snark_keys_persist(tmp_path, signer):
    a = SnarkBackend(key_dir=tmp_path, seed=3)
    a.keygen([RelationId.ENROLL])
    pub, wit = instance(RelationId.ENROLL, random.Random(16), signer)
    proof = a.prove(RelationId.ENROLL, pub, wit)
    b = SnarkBackend(key_dir=tmp_path, generate=False)
    assert b.verify(RelationId.ENROLL, pub, proof)
    with pytest.raises(MissingKeys):
        b.verifying_key(RelationId.SYNC)
