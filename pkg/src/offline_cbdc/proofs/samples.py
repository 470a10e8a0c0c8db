"""Random honest instances for every relation (tests, benchmarks, key checks)."""

from __future__ import annotations

import random

from ..crypto import eddsa, field
from ..crypto.commit import commit, double_spend_tag, prf_id, prf_sn
from .relations import RelationId, get, pack, pk_values, sig_values

_HOLDING_LIMIT = 3000


def _state_values(rng: random.Random, bal=None, ctr=None, epoch=None) -> dict[str, int]:
    h = _HOLDING_LIMIT
    return {
        "sk": field.random_element(rng),
        "holding_limit": h,
        "ctr": rng.randrange(0, 50) if ctr is None else ctr,
        "bal": rng.randrange(0, h + 1) if bal is None else bal,
        "epoch": rng.randrange(0, 1000) if epoch is None else epoch,
        "scm_prev": field.random_element(rng),
        "ccm": field.random_element(rng),
        "blind": field.random_element(rng),
    }


def _scm(v: dict, blind="blind", **over) -> int:
    s = {**v, **over}
    return commit(
        s[blind], [s["sk"], s["holding_limit"], s["ctr"], s["bal"], s["epoch"], s["scm_prev"], s["ccm"]]
    )


def _witness(rid: RelationId, v: dict) -> list[int]:
    return [v[name] for name in get(rid).witness]


def instance(rid: RelationId, rng: random.Random, signer: eddsa.SigningKey):
    """(public, witness) satisfying relation ``rid``."""
    rid = RelationId(rid)
    r = lambda: field.random_element(rng)  # noqa: E731
    pk = pk_values(signer.public_key)

    if rid is RelationId.ENROLL:
        sk, blind, e, c = r(), r(), rng.randrange(0, 1000), r()
        scm = commit(blind, [sk, _HOLDING_LIMIT, 0, 0, e, 0, c])
        pub = pack(rid, "public", id=prf_id(sk), scm=scm, epoch=e, holding_limit=_HOLDING_LIMIT, challenge=c)
        return pub, pack(rid, "witness", sk=sk, blind=blind)

    if rid in (RelationId.PAYMENT, RelationId.CREATE_STATE):
        v = _state_values(rng)
        v["value"] = rng.randrange(0, v["bal"] + 1)
        v["scm"] = _scm(v)
        v["ccm_new"] = r()
        v["blind_new"] = r()
        v["scm_new"] = commit(
            v["blind_new"],
            [v["sk"], v["holding_limit"], v["ctr"] + 1, v["bal"] - v["value"], v["epoch"], v["scm"], v["ccm_new"]],
        )
        if rid is RelationId.PAYMENT:
            v["blind_pm"] = r()
            pcm = commit(v["blind_pm"], [v["value"], v["ccm_new"], v["scm_new"], v["epoch"]])
            return pack(rid, "public", pcm=pcm), _witness(rid, v)
        v["blind_dep"] = r()
        v["id"] = prf_id(v["sk"])
        pub = pack(
            rid, "public",
            scm_new=v["scm_new"],
            dcm=commit(v["blind_dep"], [v["scm"]]),
            sn=prf_sn(v["sk"], v["ctr"] + 1),
            ds=double_spend_tag(v["sk"], v["ctr"] + 1, v["scm_new"]),
        )
        return pub, _witness(rid, v)

    if rid is RelationId.CREATE_DEP:
        scm, blind_dep = r(), r()
        pub = pack(rid, "public", **pk, dcm=commit(blind_dep, [scm]))
        wit = pack(rid, "witness", scm=scm, blind_dep=blind_dep, **sig_values("sig", signer.sign(scm)))
        return pub, wit

    if rid is RelationId.COMPLETE_STATE:
        v = _state_values(rng)
        v["value"] = rng.randrange(0, v["holding_limit"] - v["bal"] + 1)
        delta = rng.randrange(0, 60)
        v["epoch_sender"] = max(0, v["epoch"] + rng.randrange(-delta, delta + 1))
        v["scm"] = _scm(v)
        v["blind_req"] = r()
        v["rcm"] = commit(v["blind_req"], [v["scm"]])
        v["ccm_new"], v["blind_new"], v["blind_dep"], v["blind_pm"] = r(), r(), r(), r()
        scm_new = commit(
            v["blind_new"],
            [v["sk"], v["holding_limit"], v["ctr"], v["bal"] + v["value"], v["epoch"], v["scm"], v["ccm_new"]],
        )
        pub = pack(
            rid, "public",
            delta_sync=delta,
            scm_new=scm_new,
            dcm=commit(v["blind_dep"], [v["scm"], v["ccm_new"]]),
            pcm=commit(v["blind_pm"], [v["value"], v["rcm"], v["ccm_new"], v["epoch_sender"]]),
        )
        return pub, _witness(rid, v)

    if rid is RelationId.COMPLETE_DEP:
        scm, ccm_new, blind_dep = r(), r(), r()
        pub = pack(rid, "public", **pk, dcm=commit(blind_dep, [scm, ccm_new]))
        wit = pack(
            rid, "witness",
            scm=scm, ccm_new=ccm_new, blind_dep=blind_dep,
            **sig_values("sig", signer.sign(scm)),
            **sig_values("cp_sig", signer.sign(ccm_new)),
        )
        return pub, wit

    if rid is RelationId.SYNC:
        v = _state_values(rng)
        v["scm"] = _scm(v)
        v["blind_new"] = r()
        e_new = v["epoch"] + rng.randrange(0, 40)
        c = r()
        scm_new = commit(
            v["blind_new"], [v["sk"], v["holding_limit"], v["ctr"], v["bal"], e_new, v["scm"], c]
        )
        pub = pack(rid, "public", **pk, scm_new=scm_new, epoch_new=e_new, challenge=c)
        wit = pack(rid, "witness", **v, **sig_values("sig", signer.sign(v["scm"])))
        return pub, wit

    if rid is RelationId.RECOVERY:
        v = _state_values(rng)
        v["epoch_sender"] = rng.randrange(0, 1000)
        v["blind_req"], v["blind_pm"] = r(), r()
        value = rng.randrange(0, _HOLDING_LIMIT + 1)
        v["rcm"] = commit(v["blind_req"], [v["scm_prev"]])
        scm = _scm(v)
        pcm = commit(v["blind_pm"], [value, v["rcm"], v["ccm"], v["epoch_sender"]])
        pub = pack(rid, "public", **pk, id=prf_id(v["sk"]), value=value, scm=scm, pcm=pcm)
        wit = pack(rid, "witness", **v, **sig_values("sig", signer.sign(v["scm_prev"])))
        return pub, wit

    raise AssertionError(rid)
