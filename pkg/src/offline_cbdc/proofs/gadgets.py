"""Circuit gadgets mirroring the native primitives in ``offline_cbdc.crypto``.

Every gadget computes its outputs from its inputs and only the explicit
``enforce_equal`` calls of a relation can fail for a wrong witness, which keeps
failure labels aligned with the named constraints of the oracle.
"""

from __future__ import annotations

from functools import lru_cache

from ..crypto import curve, mimc
from ..crypto.commit import PRF_DS_TAG, PRF_ID_TAG, PRF_SN_TAG, commit_tag
from ..crypto.eddsa import CHALLENGE_TAG
from ..crypto.field import P
from .r1cs import LC, ConstraintSystem

# -- MiMC ----------------------------------------------------------------------


def mimc_encrypt(cs: ConstraintSystem, x: LC, k: LC) -> LC:
    for c in mimc.ROUND_CONSTANTS:
        t = x + k + c
        t2 = cs.mul(t, t)
        t4 = cs.mul(t2, t2)
        x = cs.mul(t4, t)
    return x + k


def mimc_absorb(cs: ConstraintSystem, state: LC, values) -> LC:
    for m in values:
        state = mimc_encrypt(cs, m, state) + state + m
    return state


def _lc(x) -> LC:
    return x if isinstance(x, LC) else LC.const(x)


def commit(cs: ConstraintSystem, blind: LC, values) -> LC:
    values = [_lc(v) for v in values]
    return mimc_absorb(cs, LC.const(commit_tag(len(values))), [blind, *values])


def prf_id(cs: ConstraintSystem, sk: LC) -> LC:
    return mimc_absorb(cs, LC.const(PRF_ID_TAG), [sk, LC.const(0)])


def prf_sn(cs: ConstraintSystem, sk: LC, ctr: LC) -> LC:
    return mimc_absorb(cs, LC.const(PRF_SN_TAG), [sk, ctr])


def prf_ds(cs: ConstraintSystem, sk: LC, ctr: LC) -> LC:
    return mimc_absorb(cs, LC.const(PRF_DS_TAG), [sk, ctr])


# -- bits and ranges -------------------------------------------------------------


def to_bits(cs: ConstraintSystem, x: LC, n: int) -> list[LC]:
    """Little-endian bits of ``x``; unsatisfiable unless 0 <= x < 2**n."""
    xv = x.value
    bits = []
    acc = LC.const(0)
    for i in range(n):
        b = cs.witness((xv >> i) & 1)
        cs.enforce(b, b, b)
        acc = acc + b.scale(1 << i)
        bits.append(b)
    cs.enforce_equal(acc, x)
    return bits


def assert_at_most(cs: ConstraintSystem, bits: list[LC], bound: int) -> None:
    """Little-endian boolean ``bits`` encode a number <= ``bound``.

    Walks from the top bit keeping the product of the bits that sit where the
    bound has ones; wherever the bound has a zero that product must kill the bit.
    """
    run = None
    for i in reversed(range(len(bits))):
        b = bits[i]
        if (bound >> i) & 1:
            run = b if run is None else cs.mul(run, b)
        elif run is not None:
            cs.enforce(run, b, LC.const(0))


def range_check(cs: ConstraintSystem, x: LC, n: int) -> None:
    to_bits(cs, x, n)


# -- Baby Jubjub -----------------------------------------------------------------

Point = tuple  # (LC, LC)


def point_const(pt) -> Point:
    return (LC.const(pt[0]), LC.const(pt[1]))


def point_add(cs: ConstraintSystem, p1: Point, p2: Point) -> Point:
    x1, y1 = p1
    x2, y2 = p2
    beta = cs.mul(x1, y2)
    gamma = cs.mul(y1, x2)
    delta = cs.mul(y1 - x1.scale(curve.A), x2 + y2)
    tau = cs.mul(beta, gamma)
    dtau = tau.scale(curve.D)
    x3 = cs.div(beta + gamma, dtau + 1)
    y3 = cs.div(delta + beta.scale(curve.A) - gamma, 1 - dtau)
    return (x3, y3)


def point_select(cs: ConstraintSystem, bit: LC, pt: Point) -> Point:
    """``pt`` if bit else the identity (0, 1)."""
    return (cs.mul(bit, pt[0]), cs.mul(bit, pt[1] - 1) + 1)


def assert_on_curve(cs: ConstraintSystem, pt: Point) -> None:
    x, y = pt
    xx = cs.mul(x, x)
    yy = cs.mul(y, y)
    t = cs.mul(xx, yy)
    cs.enforce_equal(xx.scale(curve.A) + yy, t.scale(curve.D) + 1)


def doublings(cs: ConstraintSystem, pt: Point, n: int) -> list[Point]:
    out = [pt]
    for _ in range(n - 1):
        out.append(point_add(cs, out[-1], out[-1]))
    return out


def mul_variable(cs: ConstraintSystem, bits: list[LC], table: list[Point]) -> Point:
    """sum(bit_i * table[i]) where table[i] = 2**i * A, shared across signatures."""
    acc = point_select(cs, bits[0], table[0])
    for b, pt in zip(bits[1:], table[1:]):
        acc = point_add(cs, acc, point_select(cs, b, pt))
    return acc


@lru_cache(maxsize=None)
def _base_windows(nwin: int):
    out = []
    base = curve.BASE
    for _ in range(nwin):
        row = [curve.IDENTITY, base, curve.add(base, base)]
        row.append(curve.add(row[2], base))
        out.append(row)
        for _ in range(2):
            base = curve.add(base, base)
    return out


def mul_base(cs: ConstraintSystem, bits: list[LC]) -> Point:
    """Fixed-base multiplication with 2-bit windows over constant point tables."""
    bits = list(bits)
    if len(bits) % 2:
        bits.append(LC.const(0))
    windows = _base_windows(len(bits) // 2)
    acc = None
    for w, row in enumerate(windows):
        b0, b1 = bits[2 * w], bits[2 * w + 1]
        b01 = cs.mul(b0, b1)
        coords = []
        for j in range(2):
            t0, t1, t2, t3 = (row[k][j] for k in range(4))
            coords.append(
                LC.const(t0) + b0.scale(t1 - t0) + b1.scale(t2 - t0) + b01.scale(t3 - t2 - t1 + t0)
            )
        sel = (coords[0], coords[1])
        acc = sel if acc is None else point_add(cs, acc, sel)
    return acc


# -- EdDSA ---------------------------------------------------------------------

CHALLENGE_BITS = 254
SCALAR_BITS = 251


class SignatureVerifier:
    """Verifies signatures under one public key, sharing the key's precomputation."""

    def __init__(self, cs: ConstraintSystem, pk: Point):
        self.cs = cs
        self.pk = pk
        self.key_state = mimc_absorb(cs, LC.const(CHALLENGE_TAG), [pk[0], pk[1]])
        self._table = None

    def _doublings(self):
        if self._table is None:
            self._table = doublings(self.cs, self.pk, CHALLENGE_BITS)
        return self._table

    def verify(self, msg: LC, rx: LC, ry: LC, s: LC) -> None:
        cs = self.cs
        r_point = (rx, ry)
        assert_on_curve(cs, r_point)
        h = mimc_absorb(cs, self.key_state, [rx, ry, msg])
        h_bits = to_bits(cs, h, CHALLENGE_BITS)
        assert_at_most(cs, h_bits, P - 1)
        s_bits = to_bits(cs, s, SCALAR_BITS)
        assert_at_most(cs, s_bits, curve.ORDER - 1)
        lhs = mul_base(cs, s_bits)
        rhs = point_add(cs, r_point, mul_variable(cs, h_bits, self._doublings()))
        cs.enforce_equal(lhs[0], rhs[0])
        cs.enforce_equal(lhs[1], rhs[1])
