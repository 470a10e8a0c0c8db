"""The eight statements wallets prove, as plain predicates over field elements.

Each relation has a fixed ordered list of public slots and witness slots and an
ordered list of named constraints. The witness carries, next to the secret
values, the values the statement *defines* (for example the sender's current
state commitment), so that every listed constraint can be checked on its own.
This module is the ground truth both proof backends are tested against.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Callable, Mapping, Sequence

from ..crypto import eddsa, field
from ..crypto.commit import commit, prf_ds, prf_id, prf_sn


class ContractViolation(ValueError):
    """A caller broke an interface contract (wrong slot count, unknown key, ...)."""


class RelationId(enum.IntEnum):
    ENROLL = 1
    PAYMENT = 2
    CREATE_STATE = 3
    CREATE_DEP = 4
    COMPLETE_STATE = 5
    COMPLETE_DEP = 6
    SYNC = 7
    RECOVERY = 8


SIG = ("r_x", "r_y", "s")


def _sig_slots(prefix: str) -> tuple[str, ...]:
    return tuple(f"{prefix}_{s}" for s in SIG)


@dataclass(frozen=True)
class Constraint:
    name: str
    check: Callable[[Mapping[str, int]], bool]


@dataclass(frozen=True)
class Relation:
    rid: RelationId
    public: tuple[str, ...]
    witness: tuple[str, ...]
    constraints: tuple[Constraint, ...]

    @property
    def constraint_names(self) -> tuple[str, ...]:
        return tuple(c.name for c in self.constraints)


def _state(w: Mapping[str, int], blind: str, ctr, bal, epoch, prev, ccm) -> int:
    return commit(w[blind], [w["sk"], w["holding_limit"], ctr, bal, epoch, prev, ccm])


def _sig_ok(v: Mapping[str, int], prefix: str, msg: int) -> bool:
    sig = eddsa.Signature(v[f"{prefix}_r_x"], v[f"{prefix}_r_y"], v[f"{prefix}_s"])
    return eddsa.verify(eddsa.PublicKey(v["pk_x"], v["pk_y"]), msg, sig)


def _values_ok(*xs: int) -> bool:
    return all(field.in_value_range(x) for x in xs)


def _epochs_ok(*xs: int) -> bool:
    return all(field.in_epoch_range(x) for x in xs)


# -- enrollment --------------------------------------------------------------

ENROLL = Relation(
    RelationId.ENROLL,
    public=("id", "scm", "epoch", "holding_limit", "challenge"),
    witness=("sk", "blind"),
    constraints=(
        Constraint(
            "initial state commitment",
            lambda v: v["scm"]
            == commit(v["blind"], [v["sk"], v["holding_limit"], 0, 0, v["epoch"], 0, v["challenge"]]),
        ),
        Constraint("identifier derivation", lambda v: v["id"] == prf_id(v["sk"])),
    ),
)

# -- payment proof handed to the recipient ----------------------------------

PAYMENT = Relation(
    RelationId.PAYMENT,
    public=("pcm",),
    witness=(
        "sk", "holding_limit", "ctr", "bal", "epoch", "value", "scm_prev", "scm_new",
        "ccm", "ccm_new", "blind", "blind_new", "blind_pm", "scm",
    ),
    constraints=(
        Constraint(
            "current state opening",
            lambda v: v["scm"]
            == _state(v, "blind", v["ctr"], v["bal"], v["epoch"], v["scm_prev"], v["ccm"]),
        ),
        Constraint(
            "new state commitment",
            lambda v: v["scm_new"]
            == _state(
                v, "blind_new", field.add(v["ctr"], 1), field.sub(v["bal"], v["value"]),
                v["epoch"], v["scm"], v["ccm_new"],
            ),
        ),
        Constraint(
            "payment commitment",
            lambda v: v["pcm"]
            == commit(v["blind_pm"], [v["value"], v["ccm_new"], v["scm_new"], v["epoch"]]),
        ),
    ),
)

# -- payment creation ---------------------------------------------------------

CREATE_STATE = Relation(
    RelationId.CREATE_STATE,
    public=("scm_new", "dcm", "sn", "ds"),
    witness=(
        "sk", "holding_limit", "ctr", "bal", "epoch", "value", "scm_prev", "ccm", "ccm_new",
        "blind", "blind_new", "blind_dep", "id", "scm",
    ),
    constraints=(
        Constraint("identifier derivation", lambda v: v["id"] == prf_id(v["sk"])),
        Constraint(
            "current state opening",
            lambda v: v["scm"]
            == _state(v, "blind", v["ctr"], v["bal"], v["epoch"], v["scm_prev"], v["ccm"]),
        ),
        Constraint(
            "new state commitment",
            lambda v: v["scm_new"]
            == _state(
                v, "blind_new", field.add(v["ctr"], 1), field.sub(v["bal"], v["value"]),
                v["epoch"], v["scm"], v["ccm_new"],
            ),
        ),
        Constraint(
            "sn recomputation",
            lambda v: v["sn"] == prf_sn(v["sk"], field.add(v["ctr"], 1)),
        ),
        Constraint(
            "ds recomputation",
            lambda v: v["ds"]
            == field.add(v["id"], field.mul(v["scm_new"], prf_ds(v["sk"], field.add(v["ctr"], 1)))),
        ),
        Constraint("dependency commitment", lambda v: v["dcm"] == commit(v["blind_dep"], [v["scm"]])),
        Constraint(
            "balance covers value",
            lambda v: _values_ok(v["bal"], v["value"]) and v["bal"] >= v["value"],
        ),
    ),
)

CREATE_DEP = Relation(
    RelationId.CREATE_DEP,
    public=("pk_x", "pk_y", "dcm"),
    witness=("scm", *_sig_slots("sig"), "blind_dep"),
    constraints=(
        Constraint("dependency commitment", lambda v: v["dcm"] == commit(v["blind_dep"], [v["scm"]])),
        Constraint("predecessor signature", lambda v: _sig_ok(v, "sig", v["scm"])),
    ),
)

# -- payment completion -------------------------------------------------------

COMPLETE_STATE = Relation(
    RelationId.COMPLETE_STATE,
    public=("delta_sync", "scm_new", "dcm", "pcm"),
    witness=(
        "sk", "holding_limit", "ctr", "bal", "epoch", "epoch_sender", "value", "scm_prev",
        "ccm", "ccm_new", "blind_req", "blind", "blind_new", "blind_dep", "blind_pm",
        "scm", "rcm",
    ),
    constraints=(
        Constraint(
            "current state opening",
            lambda v: v["scm"]
            == _state(v, "blind", v["ctr"], v["bal"], v["epoch"], v["scm_prev"], v["ccm"]),
        ),
        Constraint("request commitment", lambda v: v["rcm"] == commit(v["blind_req"], [v["scm"]])),
        Constraint(
            "new state commitment",
            lambda v: v["scm_new"]
            == _state(
                v, "blind_new", v["ctr"], field.add(v["bal"], v["value"]),
                v["epoch"], v["scm"], v["ccm_new"],
            ),
        ),
        Constraint(
            "payment commitment",
            lambda v: v["pcm"]
            == commit(v["blind_pm"], [v["value"], v["rcm"], v["ccm_new"], v["epoch_sender"]]),
        ),
        Constraint(
            "dependency commitment",
            lambda v: v["dcm"] == commit(v["blind_dep"], [v["scm"], v["ccm_new"]]),
        ),
        Constraint(
            "holding limit",
            lambda v: _values_ok(v["bal"], v["value"], v["holding_limit"])
            and v["bal"] + v["value"] <= v["holding_limit"],
        ),
        Constraint(
            "epoch distance",
            lambda v: _epochs_ok(v["epoch"], v["epoch_sender"], v["delta_sync"])
            and abs(v["epoch_sender"] - v["epoch"]) <= v["delta_sync"],
        ),
    ),
)

COMPLETE_DEP = Relation(
    RelationId.COMPLETE_DEP,
    public=("pk_x", "pk_y", "dcm"),
    witness=("scm", "ccm_new", *_sig_slots("sig"), *_sig_slots("cp_sig"), "blind_dep"),
    constraints=(
        Constraint(
            "dependency commitment",
            lambda v: v["dcm"] == commit(v["blind_dep"], [v["scm"], v["ccm_new"]]),
        ),
        Constraint("predecessor signature", lambda v: _sig_ok(v, "sig", v["scm"])),
        Constraint("counterparty signature", lambda v: _sig_ok(v, "cp_sig", v["ccm_new"])),
    ),
)

# -- synchronization and recovery --------------------------------------------

SYNC = Relation(
    RelationId.SYNC,
    public=("pk_x", "pk_y", "scm_new", "epoch_new", "challenge"),
    witness=(
        "sk", "holding_limit", "ctr", "bal", "epoch", "scm_prev", "ccm", "blind", "blind_new",
        *_sig_slots("sig"), "scm",
    ),
    constraints=(
        Constraint(
            "current state opening",
            lambda v: v["scm"]
            == _state(v, "blind", v["ctr"], v["bal"], v["epoch"], v["scm_prev"], v["ccm"]),
        ),
        Constraint(
            "new state commitment",
            lambda v: v["scm_new"]
            == _state(v, "blind_new", v["ctr"], v["bal"], v["epoch_new"], v["scm"], v["challenge"]),
        ),
        Constraint("predecessor signature", lambda v: _sig_ok(v, "sig", v["scm"])),
    ),
)

RECOVERY = Relation(
    RelationId.RECOVERY,
    public=("pk_x", "pk_y", "id", "value", "scm", "pcm"),
    witness=(
        "sk", "holding_limit", "ctr", "bal", "epoch", "epoch_sender", "scm_prev", "ccm",
        "blind", "blind_req", "blind_pm", *_sig_slots("sig"), "rcm",
    ),
    constraints=(
        Constraint("request commitment", lambda v: v["rcm"] == commit(v["blind_req"], [v["scm_prev"]])),
        Constraint(
            "state opening",
            lambda v: v["scm"]
            == _state(v, "blind", v["ctr"], v["bal"], v["epoch"], v["scm_prev"], v["ccm"]),
        ),
        Constraint("identifier derivation", lambda v: v["id"] == prf_id(v["sk"])),
        Constraint("predecessor signature", lambda v: _sig_ok(v, "sig", v["scm_prev"])),
        Constraint(
            "payment commitment",
            lambda v: v["pcm"]
            == commit(v["blind_pm"], [v["value"], v["rcm"], v["ccm"], v["epoch_sender"]]),
        ),
    ),
)

REGISTRY: dict[RelationId, Relation] = {
    r.rid: r
    for r in (ENROLL, PAYMENT, CREATE_STATE, CREATE_DEP, COMPLETE_STATE, COMPLETE_DEP, SYNC, RECOVERY)
}


def get(rid: RelationId) -> Relation:
    try:
        return REGISTRY[RelationId(rid)]
    except (KeyError, ValueError):
        raise ContractViolation(f"unknown relation {rid!r}") from None


def check_arity(rid: RelationId, public: Sequence[int], witness: Sequence[int] | None = None) -> Relation:
    rel = get(rid)
    if len(public) != len(rel.public):
        raise ContractViolation(
            f"{rel.rid.name} takes {len(rel.public)} public slots, got {len(public)}"
        )
    if witness is not None and len(witness) != len(rel.witness):
        raise ContractViolation(
            f"{rel.rid.name} takes {len(rel.witness)} witness slots, got {len(witness)}"
        )
    for x in list(public) + list(witness or ()):
        if not field.is_canonical(x):
            raise ContractViolation(f"slot value {x!r} is not a canonical field element")
    return rel


def assignment(rid: RelationId, public: Sequence[int], witness: Sequence[int]) -> dict[str, int]:
    rel = check_arity(rid, public, witness)
    out = dict(zip(rel.public, public))
    out.update(zip(rel.witness, witness))
    return out


def violations(rid: RelationId, public: Sequence[int], witness: Sequence[int]) -> list[str]:
    """Names of every listed constraint the assignment breaks, in listing order."""
    values = assignment(rid, public, witness)
    return [c.name for c in get(rid).constraints if not c.check(values)]


def relation_satisfied(rid: RelationId, public: Sequence[int], witness: Sequence[int]) -> bool:
    return not violations(rid, public, witness)


def pack(rid: RelationId, kind: str, **values: int) -> list[int]:
    """Order keyword values into the slot list of ``kind`` ('public' or 'witness')."""
    names = getattr(get(rid), kind)
    missing = [n for n in names if n not in values]
    extra = [k for k in values if k not in names]
    if missing or extra:
        raise ContractViolation(f"{rid.name} {kind}: missing {missing}, unexpected {extra}")
    return [values[n] for n in names]


def sig_values(prefix: str, sig: eddsa.Signature) -> dict[str, int]:
    return {f"{prefix}_r_x": sig.rx, f"{prefix}_r_y": sig.ry, f"{prefix}_s": sig.s}


def pk_values(pk: eddsa.PublicKey) -> dict[str, int]:
    return {"pk_x": pk.x, "pk_y": pk.y}

