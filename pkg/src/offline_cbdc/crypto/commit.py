"""Hash commitments and the three PRF roles, all built on MiMC."""

from __future__ import annotations

from functools import lru_cache

from . import field, mimc


@lru_cache(maxsize=None)
def commit_tag(arity: int) -> int:
    return mimc.domain_tag(b"commit/%d" % arity)


PRF_ID_TAG = mimc.domain_tag(b"prf/id")
PRF_SN_TAG = mimc.domain_tag(b"prf/sn")
PRF_DS_TAG = mimc.domain_tag(b"prf/ds")


def commit(blind: int, values) -> int:
    """Commit to an ordered, non-empty list of field elements under ``blind``."""
    values = list(values)
    if not values:
        raise ValueError("commit needs at least one value")
    return mimc.hash_values([blind, *values], iv=commit_tag(len(values)))


def prf_id(sk: int) -> int:
    return mimc.hash_values([sk, 0], iv=PRF_ID_TAG)


def prf_sn(sk: int, ctr: int) -> int:
    return mimc.hash_values([sk, ctr], iv=PRF_SN_TAG)


def prf_ds(sk: int, ctr: int) -> int:
    return mimc.hash_values([sk, ctr], iv=PRF_DS_TAG)


def double_spend_tag(sk: int, ctr: int, scm: int) -> int:
    """Tag that reveals prf_id(sk) once two tags share a counter."""
    return field.add(prf_id(sk), field.mul(scm, prf_ds(sk, ctr)))


def solve_identity(scm_a: int, ds_a: int, scm_b: int, ds_b: int) -> int:
    """Recover the identifier from two tags over the same serial number."""
    if scm_a == scm_b:
        raise ValueError("tags over the same state commitment do not conflict")
    t = field.div(field.sub(ds_a, ds_b), field.sub(scm_a, scm_b))
    return field.sub(ds_a, field.mul(scm_a, t))


def random_blind(rng=None) -> int:
    return field.random_element(rng)
