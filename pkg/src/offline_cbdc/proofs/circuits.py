"""Arithmetic circuits for the eight relations.

Each builder allocates the public slots, then the witness slots, and emits the
constraints of the relation under the same names the oracle uses.
"""

from __future__ import annotations

from typing import Callable, Sequence

from ..crypto.field import EPOCH_BITS, VALUE_BITS
from . import gadgets as g
from .r1cs import LC, ConstraintSystem
from .relations import RelationId, check_arity, get

Builder = Callable[[ConstraintSystem, dict], None]


def _state(cs, v, blind, ctr, bal, epoch, prev, ccm) -> LC:
    return g.commit(cs, v[blind], [v["sk"], v["holding_limit"], ctr, bal, epoch, prev, ccm])


def _current_state(cs, v, label="current state opening"):
    with cs.scope(label):
        scm = _state(cs, v, "blind", v["ctr"], v["bal"], v["epoch"], v["scm_prev"], v["ccm"])
        cs.enforce_equal(scm, v["scm"])


def _signature(cs, verifier: g.SignatureVerifier, v, prefix: str, msg: LC, label: str):
    with cs.scope(label):
        verifier.verify(msg, v[f"{prefix}_r_x"], v[f"{prefix}_r_y"], v[f"{prefix}_s"])


def _enroll(cs, v):
    with cs.scope("initial state commitment"):
        scm = _state(cs, v, "blind", 0, 0, v["epoch"], 0, v["challenge"])
        cs.enforce_equal(scm, v["scm"])
    with cs.scope("identifier derivation"):
        cs.enforce_equal(g.prf_id(cs, v["sk"]), v["id"])


def _new_sender_state(cs, v):
    with cs.scope("new state commitment"):
        scm_new = _state(
            cs, v, "blind_new", v["ctr"] + 1, v["bal"] - v["value"], v["epoch"], v["scm"], v["ccm_new"]
        )
        cs.enforce_equal(scm_new, v["scm_new"])


def _payment(cs, v):
    _current_state(cs, v)
    _new_sender_state(cs, v)
    with cs.scope("payment commitment"):
        pcm = g.commit(cs, v["blind_pm"], [v["value"], v["ccm_new"], v["scm_new"], v["epoch"]])
        cs.enforce_equal(pcm, v["pcm"])


def _create_state(cs, v):
    with cs.scope("identifier derivation"):
        cs.enforce_equal(g.prf_id(cs, v["sk"]), v["id"])
    _current_state(cs, v)
    _new_sender_state(cs, v)
    ctr_next = v["ctr"] + 1
    with cs.scope("sn recomputation"):
        cs.enforce_equal(g.prf_sn(cs, v["sk"], ctr_next), v["sn"])
    with cs.scope("ds recomputation"):
        t = g.prf_ds(cs, v["sk"], ctr_next)
        cs.enforce_equal(v["id"] + cs.mul(v["scm_new"], t), v["ds"])
    with cs.scope("dependency commitment"):
        cs.enforce_equal(g.commit(cs, v["blind_dep"], [v["scm"]]), v["dcm"])
    with cs.scope("balance covers value"):
        g.range_check(cs, v["bal"], VALUE_BITS)
        g.range_check(cs, v["value"], VALUE_BITS)
        g.range_check(cs, v["bal"] - v["value"], VALUE_BITS)


def _create_dep(cs, v):
    with cs.scope("dependency commitment"):
        cs.enforce_equal(g.commit(cs, v["blind_dep"], [v["scm"]]), v["dcm"])
    verifier = g.SignatureVerifier(cs, (v["pk_x"], v["pk_y"]))
    _signature(cs, verifier, v, "sig", v["scm"], "predecessor signature")


def _complete_state(cs, v):
    _current_state(cs, v)
    with cs.scope("request commitment"):
        cs.enforce_equal(g.commit(cs, v["blind_req"], [v["scm"]]), v["rcm"])
    with cs.scope("new state commitment"):
        scm_new = _state(
            cs, v, "blind_new", v["ctr"], v["bal"] + v["value"], v["epoch"], v["scm"], v["ccm_new"]
        )
        cs.enforce_equal(scm_new, v["scm_new"])
    with cs.scope("payment commitment"):
        pcm = g.commit(cs, v["blind_pm"], [v["value"], v["rcm"], v["ccm_new"], v["epoch_sender"]])
        cs.enforce_equal(pcm, v["pcm"])
    with cs.scope("dependency commitment"):
        cs.enforce_equal(g.commit(cs, v["blind_dep"], [v["scm"], v["ccm_new"]]), v["dcm"])
    with cs.scope("holding limit"):
        for name in ("bal", "value", "holding_limit"):
            g.range_check(cs, v[name], VALUE_BITS)
        g.range_check(cs, v["holding_limit"] - v["bal"] - v["value"], VALUE_BITS)
    with cs.scope("epoch distance"):
        for name in ("epoch", "epoch_sender", "delta_sync"):
            g.range_check(cs, v[name], EPOCH_BITS)
        diff = v["epoch_sender"] - v["epoch"]
        g.range_check(cs, v["delta_sync"] - diff, EPOCH_BITS + 1)
        g.range_check(cs, v["delta_sync"] + diff, EPOCH_BITS + 1)


def _complete_dep(cs, v):
    with cs.scope("dependency commitment"):
        cs.enforce_equal(g.commit(cs, v["blind_dep"], [v["scm"], v["ccm_new"]]), v["dcm"])
    verifier = g.SignatureVerifier(cs, (v["pk_x"], v["pk_y"]))
    _signature(cs, verifier, v, "sig", v["scm"], "predecessor signature")
    _signature(cs, verifier, v, "cp_sig", v["ccm_new"], "counterparty signature")


def _sync(cs, v):
    _current_state(cs, v)
    with cs.scope("new state commitment"):
        scm_new = _state(
            cs, v, "blind_new", v["ctr"], v["bal"], v["epoch_new"], v["scm"], v["challenge"]
        )
        cs.enforce_equal(scm_new, v["scm_new"])
    verifier = g.SignatureVerifier(cs, (v["pk_x"], v["pk_y"]))
    _signature(cs, verifier, v, "sig", v["scm"], "predecessor signature")


def _recovery(cs, v):
    with cs.scope("request commitment"):
        cs.enforce_equal(g.commit(cs, v["blind_req"], [v["scm_prev"]]), v["rcm"])
    _current_state(cs, v, "state opening")
    with cs.scope("identifier derivation"):
        cs.enforce_equal(g.prf_id(cs, v["sk"]), v["id"])
    verifier = g.SignatureVerifier(cs, (v["pk_x"], v["pk_y"]))
    _signature(cs, verifier, v, "sig", v["scm_prev"], "predecessor signature")
    with cs.scope("payment commitment"):
        pcm = g.commit(cs, v["blind_pm"], [v["value"], v["rcm"], v["ccm"], v["epoch_sender"]])
        cs.enforce_equal(pcm, v["pcm"])


BUILDERS: dict[RelationId, Builder] = {
    RelationId.ENROLL: _enroll,
    RelationId.PAYMENT: _payment,
    RelationId.CREATE_STATE: _create_state,
    RelationId.CREATE_DEP: _create_dep,
    RelationId.COMPLETE_STATE: _complete_state,
    RelationId.COMPLETE_DEP: _complete_dep,
    RelationId.SYNC: _sync,
    RelationId.RECOVERY: _recovery,
}


def synthesize(rid: RelationId, public: Sequence[int], witness: Sequence[int]) -> ConstraintSystem:
    rel = check_arity(rid, public, witness)
    cs = ConstraintSystem()
    v: dict[str, LC] = {}
    for name, x in zip(rel.public, public):
        v[name] = cs.public_input(x)
    for name, x in zip(rel.witness, witness):
        v[name] = cs.witness(x)
    BUILDERS[rel.rid](cs, v)
    return cs


def blank(rid: RelationId) -> ConstraintSystem:
    """The circuit shape with an all-zero assignment, used for key generation."""
    rel = get(rid)
    return synthesize(rid, [0] * len(rel.public), [0] * len(rel.witness))
