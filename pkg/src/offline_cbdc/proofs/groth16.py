"""Groth16 over BN254 for the constraint systems in ``r1cs``.

Curve arithmetic, multi-scalar multiplication, FFTs and pairings come from the
``zksnake`` extension module; the QAP reduction, key generation, prover and
verifier are implemented here. Proofs are (A in G1, B in G2, C in G1) in
compressed form: 32 + 64 + 32 = 128 bytes.
"""

from __future__ import annotations

import secrets
from dataclasses import dataclass

import gmpy2
from zksnake._algebra import ec_bn254 as ec
from zksnake._algebra import polynomial_bn254 as poly

from ..crypto.encoding import DecodeError, Reader, Writer
from ..crypto.field import P
from .r1cs import ConstraintSystem

G1_BYTES = 32
G2_BYTES = 64
PROOF_BYTES = 2 * G1_BYTES + G2_BYTES
COSET_SHIFT = 5  # multiplicative generator of the scalar field, outside every 2-adic subgroup

_P = gmpy2.mpz(P)


def _g1_bytes(pt) -> bytes:
    return bytes(pt.to_bytes())


def _g2_bytes(pt) -> bytes:
    return bytes(pt.to_bytes())


def _g1_from(data: bytes):
    try:
        return ec.PointG1.from_bytes(data)
    except (KeyboardInterrupt, SystemExit):
        raise
    except BaseException as exc:  # the extension raises pyo3 panics for some inputs
        raise DecodeError(f"invalid G1 point: {exc}", 0) from None


def _g2_from(data: bytes):
    try:
        return ec.PointG2.from_bytes(data)
    except (KeyboardInterrupt, SystemExit):
        raise
    except BaseException as exc:
        raise DecodeError(f"invalid G2 point: {exc}", 0) from None


def domain_size(cs: ConstraintSystem) -> int:
    rows = cs.num_constraints + cs.num_public + 1
    n = 1
    while n < rows:
        n *= 2
    return n


@dataclass
class VerifyingKey:
    alpha_g1: object
    beta_g2: object
    gamma_g2: object
    delta_g2: object
    ic: list  # G1 points for the constant one and each public input

    @property
    def num_public(self) -> int:
        return len(self.ic) - 1

    def to_bytes(self) -> bytes:
        w = Writer()
        w.raw(_g1_bytes(self.alpha_g1)).raw(_g2_bytes(self.beta_g2))
        w.raw(_g2_bytes(self.gamma_g2)).raw(_g2_bytes(self.delta_g2))
        w.u32(len(self.ic))
        for pt in self.ic:
            w.raw(_g1_bytes(pt))
        return w.getvalue()

    @classmethod
    def read(cls, r: Reader) -> "VerifyingKey":
        alpha = _g1_from(r.raw(G1_BYTES))
        beta, gamma, delta = (_g2_from(r.raw(G2_BYTES)) for _ in range(3))
        ic = [_g1_from(r.raw(G1_BYTES)) for _ in range(r.u32())]
        return cls(alpha, beta, gamma, delta, ic)


@dataclass
class ProvingKey:
    domain: int
    num_public: int
    num_vars: int
    alpha_g1: object
    beta_g1: object
    beta_g2: object
    delta_g1: object
    delta_g2: object
    a_query: list
    b_g1_query: list
    b_g2_query: list
    h_query: list
    l_query: list

    def to_bytes(self) -> bytes:
        w = Writer().u32(self.domain).u32(self.num_public).u32(self.num_vars)
        w.raw(_g1_bytes(self.alpha_g1)).raw(_g1_bytes(self.beta_g1)).raw(_g2_bytes(self.beta_g2))
        w.raw(_g1_bytes(self.delta_g1)).raw(_g2_bytes(self.delta_g2))
        for query, enc in (
            (self.a_query, _g1_bytes),
            (self.b_g1_query, _g1_bytes),
            (self.b_g2_query, _g2_bytes),
            (self.h_query, _g1_bytes),
            (self.l_query, _g1_bytes),
        ):
            w.u32(len(query))
            w.raw(b"".join(enc(pt) for pt in query))
        return w.getvalue()

    @classmethod
    def read(cls, r: Reader) -> "ProvingKey":
        domain, num_public, num_vars = r.u32(), r.u32(), r.u32()
        alpha = _g1_from(r.raw(G1_BYTES))
        beta1 = _g1_from(r.raw(G1_BYTES))
        beta2 = _g2_from(r.raw(G2_BYTES))
        delta1 = _g1_from(r.raw(G1_BYTES))
        delta2 = _g2_from(r.raw(G2_BYTES))
        queries = []
        for size, dec in ((G1_BYTES, _g1_from), (G1_BYTES, _g1_from), (G2_BYTES, _g2_from),
                          (G1_BYTES, _g1_from), (G1_BYTES, _g1_from)):
            n = r.u32()
            blob = r.raw(n * size)
            queries.append([dec(blob[i * size:(i + 1) * size]) for i in range(n)])
        return cls(domain, num_public, num_vars, alpha, beta1, beta2, delta1, delta2, *queries)


@dataclass
class Proof:
    a: object
    b: object
    c: object

    def to_bytes(self) -> bytes:
        return _g1_bytes(self.a) + _g2_bytes(self.b) + _g1_bytes(self.c)

    @classmethod
    def from_bytes(cls, data: bytes) -> "Proof":
        if len(data) != PROOF_BYTES:
            raise DecodeError(f"proof must be {PROOF_BYTES} bytes, got {len(data)}", 0)
        return cls(
            _g1_from(data[:G1_BYTES]),
            _g2_from(data[G1_BYTES:G1_BYTES + G2_BYTES]),
            _g1_from(data[G1_BYTES + G2_BYTES:]),
        )


def _batch_inverse(xs: list) -> list:
    prefix = []
    acc = gmpy2.mpz(1)
    for x in xs:
        prefix.append(acc)
        acc = acc * x % _P
    inv = gmpy2.invert(acc, _P)
    out = [None] * len(xs)
    for i in range(len(xs) - 1, -1, -1):
        out[i] = prefix[i] * inv % _P
        inv = inv * xs[i] % _P
    return out


def _lagrange_at(tau: int, n: int) -> list:
    """Every Lagrange basis polynomial of the size-n domain evaluated at tau."""
    omega = gmpy2.mpz(poly.get_nth_root_of_unity(n, 1))
    tau = gmpy2.mpz(tau)
    z = (gmpy2.powmod(tau, n, _P) - 1) % _P
    points = []
    w = gmpy2.mpz(1)
    for _ in range(n):
        points.append(w)
        w = w * omega % _P
    dens = _batch_inverse([(tau - wi) % _P for wi in points])
    scale = z * gmpy2.invert(n, _P) % _P
    return [scale * wi % _P * di % _P for wi, di in zip(points, dens)]


def _qap_at(cs: ConstraintSystem, lag: list):
    nv = cs.num_vars
    u = [gmpy2.mpz(0)] * nv
    v = [gmpy2.mpz(0)] * nv
    w = [gmpy2.mpz(0)] * nv
    for row, (a, b, c) in enumerate(zip(cs.a, cs.b, cs.c)):
        li = lag[row]
        for k, coeff in a.items():
            u[k] += coeff * li
        for k, coeff in b.items():
            v[k] += coeff * li
        for k, coeff in c.items():
            w[k] += coeff * li
    m = cs.num_constraints
    for j in range(cs.num_public + 1):
        u[j] += lag[m + j]
    return [x % _P for x in u], [x % _P for x in v], [x % _P for x in w]


def _ints(xs) -> list[int]:
    return [int(x) for x in xs]


def setup(cs: ConstraintSystem, rng=None) -> tuple[ProvingKey, VerifyingKey]:
    """Generate keys for the shape of ``cs``. ``rng`` (random.Random) makes it reproducible."""
    draw = (lambda: rng.randrange(1, P)) if rng is not None else (lambda: 1 + secrets.randbelow(P - 1))
    tau, alpha, beta, gamma, delta = (gmpy2.mpz(draw()) for _ in range(5))
    n = domain_size(cs)
    lag = _lagrange_at(int(tau), n)
    u, v, w = _qap_at(cs, lag)
    g1, g2 = ec.g1(), ec.g2()
    gamma_inv = gmpy2.invert(gamma, _P)
    delta_inv = gmpy2.invert(delta, _P)
    npub = cs.num_public
    mixed = [(beta * u[j] + alpha * v[j] + w[j]) % _P for j in range(cs.num_vars)]
    ic = [x * gamma_inv % _P for x in mixed[: npub + 1]]
    lq = [x * delta_inv % _P for x in mixed[npub + 1:]]
    z = (gmpy2.powmod(tau, n, _P) - 1) % _P
    hs = []
    t = z * delta_inv % _P
    for _ in range(n - 1):
        hs.append(t)
        t = t * tau % _P

    pk = ProvingKey(
        domain=n,
        num_public=npub,
        num_vars=cs.num_vars,
        alpha_g1=g1 * int(alpha),
        beta_g1=g1 * int(beta),
        beta_g2=g2 * int(beta),
        delta_g1=g1 * int(delta),
        delta_g2=g2 * int(delta),
        a_query=ec.batch_multi_scalar_g1([g1] * len(u), _ints(u)),
        b_g1_query=ec.batch_multi_scalar_g1([g1] * len(v), _ints(v)),
        b_g2_query=ec.batch_multi_scalar_g2([g2] * len(v), _ints(v)),
        h_query=ec.batch_multi_scalar_g1([g1] * len(hs), _ints(hs)),
        l_query=ec.batch_multi_scalar_g1([g1] * len(lq), _ints(lq)),
    )
    vk = VerifyingKey(
        alpha_g1=pk.alpha_g1,
        beta_g2=pk.beta_g2,
        gamma_g2=g2 * int(gamma),
        delta_g2=pk.delta_g2,
        ic=ec.batch_multi_scalar_g1([g1] * len(ic), _ints(ic)),
    )
    return pk, vk


def _quotient(cs: ConstraintSystem, n: int) -> list[int]:
    """Coefficients of h = (A*B - C) / Z for the current assignment."""
    vals = cs.values
    m = cs.num_constraints

    def evals(rows):
        out = [sum(c * vals[k] for k, c in terms.items()) % P for terms in rows]
        return out

    a = evals(cs.a) + [vals[j] for j in range(cs.num_public + 1)]
    b = evals(cs.b)
    c = evals(cs.c)
    a += [0] * (n - len(a))
    b += [0] * (n - m)
    c += [0] * (n - m)

    shift = gmpy2.mpz(COSET_SHIFT)
    powers = []
    g = gmpy2.mpz(1)
    for _ in range(n):
        powers.append(g)
        g = g * shift % _P

    def to_coset(ev):
        coeffs = poly.ifft(ev, n)
        return poly.fft([int(x * p % _P) for x, p in zip(coeffs, powers)], n)

    ac, bc, cc = to_coset(a), to_coset(b), to_coset(c)
    z_inv = gmpy2.invert((gmpy2.powmod(shift, n, _P) - 1) % _P, _P)
    h_coset = [int((gmpy2.mpz(x) * y - z) * z_inv % _P) for x, y, z in zip(ac, bc, cc)]
    h = poly.ifft(h_coset, n)
    shift_inv = gmpy2.invert(shift, _P)
    out = []
    g = gmpy2.mpz(1)
    for x in h:
        out.append(int(x * g % _P))
        g = g * shift_inv % _P
    return out


def prove(pk: ProvingKey, cs: ConstraintSystem, rng=None) -> Proof:
    if cs.num_vars != pk.num_vars or cs.num_public != pk.num_public:
        raise ValueError("constraint system does not match the proving key")
    r = rng.randrange(P) if rng is not None else secrets.randbelow(P)
    s = rng.randrange(P) if rng is not None else secrets.randbelow(P)
    vals = [int(x) for x in cs.values]
    h = _quotient(cs, pk.domain)
    if h[-1] != 0:
        raise ValueError("assignment does not satisfy the constraint system")

    a = pk.alpha_g1 + ec.multiscalar_mul_g1(pk.a_query, vals) + pk.delta_g1 * r
    b2 = pk.beta_g2 + ec.multiscalar_mul_g2(pk.b_g2_query, vals) + pk.delta_g2 * s
    b1 = pk.beta_g1 + ec.multiscalar_mul_g1(pk.b_g1_query, vals) + pk.delta_g1 * s
    private = vals[pk.num_public + 1:]
    c = (
        ec.multiscalar_mul_g1(pk.l_query, private)
        + ec.multiscalar_mul_g1(pk.h_query, h[: len(pk.h_query)])
        + a * s
        + b1 * r
        - pk.delta_g1 * (r * s % P)
    )
    return Proof(a, b2, c)


_GT_ONE = None


def _gt_one():
    global _GT_ONE
    if _GT_ONE is None:
        _GT_ONE = ec.pairing(ec.PointG1.identity(), ec.g2())
    return _GT_ONE


def verify(vk: VerifyingKey, public: list[int], proof: Proof) -> bool:
    if len(public) != vk.num_public or any(not 0 <= x < P for x in public):
        return False
    acc = vk.ic[0] + ec.multiscalar_mul_g1(vk.ic[1:], [int(x) for x in public]) if public else vk.ic[0]
    try:
        result = ec.multi_pairing(
            [proof.a, -vk.alpha_g1, -acc, -proof.c],
            [proof.b, vk.beta_g2, vk.gamma_g2, vk.delta_g2],
        )
    except (KeyboardInterrupt, SystemExit):
        raise
    except BaseException:
        return False
    return result == _gt_one()
