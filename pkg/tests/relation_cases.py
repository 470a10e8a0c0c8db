"""Honest and targeted-violation instances for every relation, built from the primitives."""

from __future__ import annotations

import random

from offline_cbdc.crypto import field
from offline_cbdc.crypto.commit import commit, double_spend_tag, prf_id, prf_sn
from offline_cbdc.proofs import RelationId, get, pack

# Constraint -> slot whose increment breaks it. Range constraints are broken by
# building an otherwise consistent instance instead (see RANGE_CASES).
SLOT_MUTATIONS = {
    RelationId.ENROLL: {"initial state commitment": "scm", "identifier derivation": "id"},
    RelationId.PAYMENT: {
        "current state opening": "blind",
        "new state commitment": "blind_new",
        "payment commitment": "pcm",
    },
    RelationId.CREATE_STATE: {
        "identifier derivation": "id",
        "current state opening": "blind",
        "new state commitment": "blind_new",
        "sn recomputation": "sn",
        "ds recomputation": "ds",
        "dependency commitment": "dcm",
    },
    RelationId.CREATE_DEP: {"dependency commitment": "dcm", "predecessor signature": "sig_s"},
    RelationId.COMPLETE_STATE: {
        "current state opening": "blind",
        "request commitment": "blind_req",
        "new state commitment": "blind_new",
        "payment commitment": "pcm",
        "dependency commitment": "dcm",
    },
    RelationId.COMPLETE_DEP: {
        "dependency commitment": "dcm",
        "predecessor signature": "sig_s",
        "counterparty signature": "cp_sig_s",
    },
    RelationId.SYNC: {
        "current state opening": "blind",
        "new state commitment": "blind_new",
        "predecessor signature": "sig_s",
    },
    RelationId.RECOVERY: {
        "request commitment": "blind_req",
        "state opening": "blind",
        "identifier derivation": "id",
        "predecessor signature": "sig_s",
        "payment commitment": "pcm",
    },
}


def mutate(rid: RelationId, public, witness, slot: str):
    rel = get(rid)
    public, witness = list(public), list(witness)
    if slot in rel.public:
        i = rel.public.index(slot)
        public[i] = field.add(public[i], 1)
    else:
        i = rel.witness.index(slot)
        witness[i] = field.add(witness[i], 1)
    return public, witness


def _r(rng):
    return field.random_element(rng)


def create_state(rng: random.Random, bal: int, value: int, holding_limit: int = 3000, ctr: int = 3, epoch: int = 10):
    sk, prev, ccm, ccm_new = _r(rng), _r(rng), _r(rng), _r(rng)
    blind, blind_new, blind_dep = _r(rng), _r(rng), _r(rng)
    scm = commit(blind, [sk, holding_limit, ctr, bal, epoch, prev, ccm])
    scm_new = commit(blind_new, [sk, holding_limit, ctr + 1, field.sub(bal, value), epoch, scm, ccm_new])
    rid = RelationId.CREATE_STATE
    public = pack(
        rid, "public", scm_new=scm_new, dcm=commit(blind_dep, [scm]),
        sn=prf_sn(sk, ctr + 1), ds=double_spend_tag(sk, ctr + 1, scm_new),
    )
    witness = pack(
        rid, "witness", sk=sk, holding_limit=holding_limit, ctr=ctr, bal=bal, epoch=epoch, value=value,
        scm_prev=prev, ccm=ccm, ccm_new=ccm_new, blind=blind, blind_new=blind_new, blind_dep=blind_dep,
        id=prf_id(sk), scm=scm,
    )
    return public, witness


def complete_state(
    rng: random.Random, bal: int, value: int, holding_limit: int = 3000,
    epoch: int = 10, epoch_sender: int = 10, delta_sync: int = 30,
):
    sk, prev, ccm, ccm_new = _r(rng), _r(rng), _r(rng), _r(rng)
    blind, blind_new, blind_dep, blind_req, blind_pm = (_r(rng) for _ in range(5))
    ctr = 4
    scm = commit(blind, [sk, holding_limit, ctr, bal, epoch, prev, ccm])
    rcm = commit(blind_req, [scm])
    scm_new = commit(blind_new, [sk, holding_limit, ctr, field.add(bal, value), epoch, scm, ccm_new])
    rid = RelationId.COMPLETE_STATE
    public = pack(
        rid, "public", delta_sync=delta_sync, scm_new=scm_new,
        dcm=commit(blind_dep, [scm, ccm_new]),
        pcm=commit(blind_pm, [value, rcm, ccm_new, epoch_sender]),
    )
    witness = pack(
        rid, "witness", sk=sk, holding_limit=holding_limit, ctr=ctr, bal=bal, epoch=epoch,
        epoch_sender=epoch_sender, value=value, scm_prev=prev, ccm=ccm, ccm_new=ccm_new,
        blind_req=blind_req, blind=blind, blind_new=blind_new, blind_dep=blind_dep, blind_pm=blind_pm,
        scm=scm, rcm=rcm,
    )
    return public, witness


RANGE_CASES = {
    (RelationId.CREATE_STATE, "balance covers value"): lambda rng: create_state(rng, bal=90, value=100),
    (RelationId.COMPLETE_STATE, "holding limit"): lambda rng: complete_state(
        rng, bal=90, value=20, holding_limit=100
    ),
    (RelationId.COMPLETE_STATE, "epoch distance"): lambda rng: complete_state(
        rng, bal=0, value=5, epoch=10, epoch_sender=41, delta_sync=30
    ),
}


def violation_cases():
    """(relation, constraint) for every listed constraint of every relation."""
    return [(rid, name) for rid in RelationId for name in get(rid).constraint_names]


def violation(rid: RelationId, constraint: str, rng: random.Random, signer):
    """An instance breaking ``constraint`` of ``rid``."""
    from offline_cbdc.proofs.samples import instance

    if (rid, constraint) in RANGE_CASES:
        return RANGE_CASES[(rid, constraint)](rng)
    public, witness = instance(rid, rng, signer)
    return mutate(rid, public, witness, SLOT_MUTATIONS[rid][constraint])
