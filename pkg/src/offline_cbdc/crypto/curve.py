"""Baby Jubjub, the twisted Edwards curve whose base field is the BN254 scalar field.

a*x^2 + y^2 = 1 + d*x^2*y^2 with a = 168700, d = 168696. ``a`` is a square and
``d`` is not, so the addition law is complete (doubling needs no special case),
which is what lets the circuit gadget use one formula everywhere.
"""

from __future__ import annotations

from functools import lru_cache

import gmpy2

from .field import P

A = 168700
D = 168696
# Generator of the prime-order subgroup.
BASE = (
    5299619240641551281634865583518297030282874472190772894086521144482721001553,
    16950150798460657717958625567821834550301663161624707787222815936182638968203,
)
ORDER = 2736030358979909402780800718157159386076813972158567259200215660948447373041
IDENTITY = (0, 1)

_P = gmpy2.mpz(P)
_A = gmpy2.mpz(A)
_D = gmpy2.mpz(D)

Point = tuple  # affine (x, y)


def on_curve(pt) -> bool:
    try:
        x, y = pt
    except (TypeError, ValueError):
        return False
    if not (isinstance(x, int) and isinstance(y, int) and 0 <= x < P and 0 <= y < P):
        return False
    xx, yy = x * x % P, y * y % P
    return (A * xx + yy - 1 - D * xx % P * yy) % P == 0


def add(p1, p2):
    """Affine addition (slow path, used by tests and the circuit's witness code)."""
    x1, y1 = p1
    x2, y2 = p2
    t = D * x1 % P * x2 % P * y1 % P * y2 % P
    x3 = (x1 * y2 + y1 * x2) * pow(1 + t, P - 2, P) % P
    y3 = (y1 * y2 - A * x1 * x2) * pow(1 - t, P - 2, P) % P
    return (x3, y3)


def neg(pt):
    return ((-pt[0]) % P, pt[1])


# Extended coordinates (X, Y, Z, T) with x = X/Z, y = Y/Z, T = XY/Z.


def _ext(pt):
    x, y = gmpy2.mpz(pt[0]), gmpy2.mpz(pt[1])
    return (x, y, gmpy2.mpz(1), x * y % _P)


_EXT_ID = (gmpy2.mpz(0), gmpy2.mpz(1), gmpy2.mpz(1), gmpy2.mpz(0))


def _ext_add(p, q):
    X1, Y1, Z1, T1 = p
    X2, Y2, Z2, T2 = q
    a = X1 * X2 % _P
    b = Y1 * Y2 % _P
    c = _D * T1 % _P * T2 % _P
    d = Z1 * Z2 % _P
    e = ((X1 + Y1) * (X2 + Y2) - a - b) % _P
    f = (d - c) % _P
    g = (d + c) % _P
    h = (b - _A * a) % _P
    return (e * f % _P, g * h % _P, f * g % _P, e * h % _P)


def _affine(p):
    X, Y, Z, _ = p
    zi = gmpy2.invert(Z, _P)
    return (int(X * zi % _P), int(Y * zi % _P))


_WINDOW = 4
_WINDOWS = 64  # covers 256-bit scalars


@lru_cache(maxsize=64)
def _fixed_table(pt):
    """table[i][j] = j * 16**i * pt, in extended coordinates."""
    table = []
    base = _ext(pt)
    for _ in range(_WINDOWS):
        row = [_EXT_ID]
        for _ in range((1 << _WINDOW) - 1):
            row.append(_ext_add(row[-1], base))
        table.append(row)
        for _ in range(_WINDOW):
            base = _ext_add(base, base)
    return table


def mul_fixed(k: int, pt=BASE):
    """Scalar multiplication through a cached comb table; for repeated bases."""
    if k < 0 or k.bit_length() > _WINDOW * _WINDOWS:
        k %= ORDER
    table = _fixed_table(tuple(pt))
    acc = _EXT_ID
    i = 0
    while k:
        digit = k & 0xF
        if digit:
            acc = _ext_add(acc, table[i][digit])
        k >>= _WINDOW
        i += 1
    return _affine(acc)


def mul(k: int, pt):
    """Plain double-and-add for one-off bases."""
    if k < 0:
        k %= ORDER
    acc = _EXT_ID
    base = _ext(pt)
    while k:
        if k & 1:
            acc = _ext_add(acc, base)
        base = _ext_add(base, base)
        k >>= 1
    return _affine(acc)


def eq(p1, p2) -> bool:
    return tuple(p1) == tuple(p2)
