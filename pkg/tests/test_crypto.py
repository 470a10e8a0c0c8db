from __future__ import annotations

import random

import pytest
import sympy
from hypothesis import given, settings
from hypothesis import strategies as st
from zksnake.constant import BN254_SCALAR_FIELD

from offline_cbdc.crypto import curve, eddsa, field, mimc
from offline_cbdc.crypto.commit import (
    commit,
    double_spend_tag,
    prf_ds,
    prf_id,
    prf_sn,
    random_blind,
    solve_identity,
)
from offline_cbdc.crypto.encoding import DecodeError, Reader, Writer

P = field.P
fe = st.integers(min_value=0, max_value=P - 1)


# -- field ---------------------------------------------------------------------


def test_modulus_is_the_bn254_scalar_field():
    assert P == BN254_SCALAR_FIELD
    assert P.bit_length() == 254
    assert sympy.isprime(P)


@given(fe, fe, fe)
def test_field_ring_axioms(a, b, c):
    assert field.add(field.add(a, b), c) == field.add(a, field.add(b, c))
    assert field.mul(field.mul(a, b), c) == field.mul(a, field.mul(b, c))
    assert field.mul(a, field.add(b, c)) == field.add(field.mul(a, b), field.mul(a, c))
    assert field.add(field.sub(a, b), b) == a
    assert field.add(a, field.neg(a)) == 0
    assert field.mul(a, b) == a * b % P


@given(fe.filter(lambda x: x != 0))
def test_field_inverse(a):
    assert field.mul(a, field.inv(a)) == 1
    assert field.div(a, a) == 1


def test_inverse_of_zero_raises():
    with pytest.raises(ZeroDivisionError):
        field.inv(0)


@given(fe)
def test_field_encoding_round_trip(x):
    data = field.encode(x)
    assert len(data) == 32
    assert data == x.to_bytes(32, "big")
    assert field.decode(data) == x


@pytest.mark.parametrize("bad", [b"\x00" * 31, b"\x00" * 33, P.to_bytes(32, "big"), b"\xff" * 32])
def test_field_decode_rejects_non_canonical(bad):
    with pytest.raises(ValueError):
        field.decode(bad)


def test_value_and_epoch_domains():
    assert field.in_value_range(0) and field.in_value_range(2**64 - 1)
    assert not field.in_value_range(2**64) and not field.in_value_range(P - 1)
    assert field.in_epoch_range(2**32 - 1) and not field.in_epoch_range(2**32)


# -- canonical encoding ------------------------------------------------------------


@given(
    st.lists(fe, max_size=5),
    st.integers(0, 255),
    st.integers(0, 2**16 - 1),
    st.integers(0, 2**32 - 1),
    st.integers(0, 2**64 - 1),
    st.binary(max_size=64),
    st.booleans(),
    st.text(max_size=20),
)
def test_writer_reader_round_trip(xs, a, b, c, d, blob, flag, text):
    data = Writer().fes(xs).u8(a).u16(b).u32(c).u64(d).blob(blob).flag(flag).text(text).getvalue()
    r = Reader(data)
    assert r.fes(len(xs)) == xs
    assert (r.u8(), r.u16(), r.u32(), r.u64()) == (a, b, c, d)
    assert (r.blob(), r.flag(), r.text()) == (blob, flag, text)
    r.expect_end()


def test_reader_reports_truncation_offset():
    data = Writer().u32(7).fe(5).getvalue()
    r = Reader(data[:-1])
    r.u32()
    with pytest.raises(DecodeError) as exc:
        r.fe()
    assert exc.value.offset == 4


def test_reader_rejects_trailing_bytes():
    r = Reader(b"\x01\x02")
    r.u8()
    with pytest.raises(DecodeError) as exc:
        r.expect_end()
    assert exc.value.offset == 1


# -- MiMC ------------------------------------------------------------------------------


def _mimc_decrypt(y: int, k: int) -> int:
    """Inverse permutation, undoing each x -> (x + k + c)^5 round with the 5th root."""
    root = pow(mimc.EXPONENT, -1, P - 1)
    x = (y - k) % P
    for c in reversed(mimc.ROUND_CONSTANTS):
        x = (pow(x, root, P) - k - c) % P
    return x


def test_mimc_exponent_is_a_permutation():
    assert sympy.gcd(mimc.EXPONENT, P - 1) == 1
    assert len(mimc.ROUND_CONSTANTS) == mimc.ROUNDS


@settings(max_examples=30)
@given(fe, fe)
def test_mimc_encrypt_inverts(x, k):
    assert _mimc_decrypt(mimc.encrypt(x, k), k) == x


# -- commitments and PRFs -------------------------------------------------------------


@given(fe, st.lists(fe, min_size=1, max_size=8))
def test_commit_is_deterministic(b, xs):
    assert commit(b, xs) == commit(b, list(xs))
    assert 0 <= commit(b, xs) < P


def test_commit_requires_values():
    with pytest.raises(ValueError):
        commit(1, [])


def test_commit_blind_changes_output():
    rng = random.Random(1)
    for _ in range(10_000):
        b1, b2, x = (field.random_element(rng) for _ in range(3))
        assert commit(b1, [x]) != commit(b2, [x])


def test_commit_arity_separation():
    rng = random.Random(2)
    for _ in range(1000):
        b, x, y = (field.random_element(rng) for _ in range(3))
        joined = field.fe(int(field.encode(x).hex() + field.encode(y).hex(), 16))
        assert commit(b, [x, y]) != commit(b, [joined])
        assert commit(b, [x, y]) != commit(b, [x, y, 0])


def test_commit_no_collisions_in_100k_samples():
    rng = random.Random(3)
    seen = {commit(field.random_element(rng), [field.random_element(rng)]) for _ in range(100_000)}
    assert len(seen) == 100_000


def test_random_blinds_are_fresh():
    rng = random.Random(4)
    assert len({random_blind(rng) for _ in range(1000)}) == 1000


def test_prf_roles_are_separated():
    rng = random.Random(5)
    for _ in range(1000):
        sk, c = field.random_element(rng), rng.randrange(2**32)
        assert prf_sn(sk, c) == prf_sn(sk, c)
        assert len({prf_sn(sk, c), prf_ds(sk, c), prf_id(sk)}) == 3


def test_serial_numbers_distinct_across_counters():
    sk = field.random_element(random.Random(6))
    assert len({prf_sn(sk, c) for c in range(10_000)}) == 10_000


@settings(max_examples=200)
@given(fe, st.integers(0, 2**32), fe, fe)
def test_double_spend_tags_reveal_identity(sk, ctr, scm1, scm2):
    if scm1 == scm2:
        return
    ds1, ds2 = double_spend_tag(sk, ctr, scm1), double_spend_tag(sk, ctr, scm2)
    assert ds1 == (prf_id(sk) + scm1 * prf_ds(sk, ctr)) % P
    assert solve_identity(scm1, ds1, scm2, ds2) == prf_id(sk)


def test_solve_identity_needs_distinct_commitments():
    with pytest.raises(ValueError):
        solve_identity(5, 1, 5, 2)


# -- Baby Jubjub and EdDSA ------------------------------------------------------------


def test_curve_parameters():
    x, y = curve.BASE
    assert (curve.A * x * x + y * y - 1 - curve.D * x * x * y * y) % P == 0
    assert sympy.legendre_symbol(curve.A, P) == 1 and sympy.legendre_symbol(curve.D, P) == -1
    assert sympy.isprime(curve.ORDER)
    assert curve.mul(curve.ORDER, curve.BASE) == curve.IDENTITY
    assert curve.mul_fixed(curve.ORDER) == curve.IDENTITY


@settings(max_examples=25)
@given(st.integers(1, curve.ORDER - 1), st.integers(1, curve.ORDER - 1))
def test_scalar_multiplication_is_linear(a, b):
    lhs = curve.mul_fixed((a + b) % curve.ORDER)
    rhs = curve.add(curve.mul(a, curve.BASE), curve.mul_fixed(b))
    assert curve.eq(lhs, rhs) and curve.on_curve(lhs)


def test_sign_verify_round_trip(signer):
    rng = random.Random(7)
    for _ in range(20):
        m = field.random_element(rng)
        sig = signer.sign(m)
        assert eddsa.verify(signer.public_key, m, sig)
        assert not eddsa.verify(signer.public_key, field.add(m, 1), sig)


def test_signature_bit_flips_rejected(signer):
    rng = random.Random(8)
    m = field.random_element(rng)
    data = signer.sign(m).to_bytes()
    assert len(data) == eddsa.SIGNATURE_BYTES
    for _ in range(100):
        bit = rng.randrange(len(data) * 8)
        flipped = bytearray(data)
        flipped[bit // 8] ^= 1 << (bit % 8)
        assert not eddsa.verify_bytes(signer.public_key, m, bytes(flipped))


@pytest.mark.parametrize("data", [b"", b"\x00" * 10, b"\xff" * 96, b"\x00" * 97])
def test_malformed_signature_bytes_verify_false(signer, data):
    assert eddsa.verify_bytes(signer.public_key, 1, data) is False


def test_wrong_key_rejected(signer):
    other = eddsa.SigningKey(b"someone else".ljust(32, b"."))
    assert not eddsa.verify(other.public_key, 3, signer.sign(3))


def test_public_key_round_trip(signer):
    pk = signer.public_key
    assert eddsa.PublicKey.from_bytes(pk.to_bytes()) == pk
    with pytest.raises(ValueError, match="subgroup"):
        eddsa.PublicKey.from_bytes(b"\x01" * 64)
