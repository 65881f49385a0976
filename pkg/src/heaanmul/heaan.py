"""Scheme layer: encoding, keys, encryption and HE Add / HE Mul.

Every modulus is a power of two (q = 2^logq, Q = 2^logQ), as in HEAAN.
Decryption follows the HEAAN sign convention: t ~= bx + ax*sk, with keys
pk0 = -pk1*sk + e and evk.bx = -evk.ax*sk + e + Q*sk^2.

Big products go through :class:`PolyMultiplier`. A :class:`Context` keeps
one multiplier per (purpose, level) and the NTT forms of the keys, so a
chain of HE Muls pays for table construction once.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .arith import WordSize
from .bigpoly import BigPoly
from .counters import OpCounter
from .limbops import add_mod, add_signed, neg_mod, nlimbs_for, reduce_pow2, shift_right_round
from .params import Params, build_ntt_tables, generate_primes, prime_set_for_bits
from .polymul import KernelConfig, PolyMultiplier, Timers
from .rns import RnsMatrix

__all__ = [
    "HeaanError",
    "ModulusMismatch",
    "DepthExhausted",
    "Plaintext",
    "Ciphertext",
    "SecretKey",
    "PublicKey",
    "EvalKey",
    "Context",
    "get_context",
    "encode",
    "decode",
    "keygen",
    "encrypt",
    "decrypt",
    "he_add",
    "he_mul",
    "rescale",
    "mod_down",
    "shift_right",
    "sample_hwt",
    "sample_zo",
    "sample_gauss",
]

HAMMING_WEIGHT = 64
SIGMA = 3.2


class HeaanError(ValueError):
    """Invalid scheme state (maps to CLI exit code 2)."""


class ModulusMismatch(HeaanError):
    pass


class DepthExhausted(HeaanError):
    pass


# ---------------------------------------------------------------------------
# containers


@dataclass
class Plaintext:
    poly: BigPoly
    log_delta: int
    n: int

    @property
    def logq(self) -> int:
        return self.poly.modulus.bit_length() - 1


@dataclass
class Ciphertext:
    ax: BigPoly
    bx: BigPoly
    logq: int
    n: int
    log_delta: int

    def copy(self) -> "Ciphertext":
        return Ciphertext(self.ax.copy(), self.bx.copy(), self.logq, self.n, self.log_delta)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Ciphertext):
            return NotImplemented
        return (self.logq, self.n, self.log_delta) == (other.logq, other.n, other.log_delta) and \
            np.array_equal(self.ax.limbs, other.ax.limbs) and np.array_equal(self.bx.limbs, other.bx.limbs)


@dataclass
class SecretKey:
    coeffs: np.ndarray          # int64, entries in {-1, 0, 1}

    @property
    def N(self) -> int:
        return len(self.coeffs)

    def __eq__(self, other) -> bool:
        return isinstance(other, SecretKey) and np.array_equal(self.coeffs, other.coeffs)


@dataclass
class PublicKey:
    pk0: BigPoly                # "bx" part
    pk1: BigPoly                # "ax" part, uniform

    def __eq__(self, other) -> bool:
        return isinstance(other, PublicKey) and self.pk0 == other.pk0 and self.pk1 == other.pk1


@dataclass
class EvalKey:
    ax: BigPoly                 # uniform mod Q^2
    bx: BigPoly

    def __eq__(self, other) -> bool:
        return isinstance(other, EvalKey) and self.ax == other.ax and self.bx == other.bx


# ---------------------------------------------------------------------------
# sampling


def _rng(seed) -> np.random.Generator:
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)


def sample_hwt(N: int, h: int, rng) -> np.ndarray:
    """Ternary vector with exactly h nonzero entries."""
    rng = _rng(rng)
    h = min(h, N)
    out = np.zeros(N, dtype=np.int64)
    pos = rng.choice(N, size=h, replace=False)
    out[pos] = rng.choice(np.array([-1, 1], dtype=np.int64), size=h)
    return out


def sample_zo(N: int, rng, rho: float = 0.5) -> np.ndarray:
    """0 with probability 1 - rho, otherwise +-1 with equal odds."""
    rng = _rng(rng)
    r = rng.random(N)
    out = np.zeros(N, dtype=np.int64)
    out[r < rho / 2] = -1
    out[(r >= rho / 2) & (r < rho)] = 1
    return out


def sample_gauss(N: int, rng, sigma: float = SIGMA, tail: float = 6.0) -> np.ndarray:
    """Rounded Gaussian, resampled outside |x| <= tail*sigma."""
    rng = _rng(rng)
    x = np.rint(rng.normal(0.0, sigma, N))
    bound = tail * sigma
    bad = np.abs(x) > bound
    while bad.any():
        x[bad] = np.rint(rng.normal(0.0, sigma, int(bad.sum())))
        bad = np.abs(x) > bound
    return x.astype(np.int64)


def _negacyclic_small(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """a*b mod X^N + 1 for small int64 vectors, iterating over a's nonzeros."""
    N = len(a)
    out = np.zeros(N, dtype=np.int64)
    for i in np.flatnonzero(a):
        rolled = np.roll(b, i)
        rolled[:i] = -rolled[:i]
        out += a[i] * rolled
    return out


# ---------------------------------------------------------------------------
# encoding


def _slot_exponents(n: int) -> np.ndarray:
    m = 4 * n
    e = np.empty(n, dtype=np.int64)
    x = 1
    for j in range(n):
        e[j] = x
        x = x * 5 % m
    return e


def _check_slots(n: int, N: int):
    if n < 1 or n & (n - 1):
        raise ValueError(f"slot count must be a power of two, got {n}")
    if 2 * n > N:
        raise ValueError(f"slot count {n} exceeds N/2 = {N // 2}")


def _word(params) -> WordSize:
    return params.word


def encode(m, params: Params, *, log_delta: int | None = None, logq: int | None = None) -> Plaintext:
    """Scale by 2^log_delta and round the inverse slot embedding.

    Slots sit at the roots zeta^(5^j) of X^(2n) + 1, spread over X^N + 1
    with a stride of N/(2n).
    """
    z = np.atleast_1d(np.asarray(m, dtype=np.complex128))
    n = len(z)
    N = params.N
    _check_slots(n, N)
    log_delta = params.log_delta if log_delta is None else int(log_delta)
    logq = params.log_Q if logq is None else int(logq)
    M = 4 * n
    e = _slot_exponents(n)
    V = np.zeros(2 * n, dtype=np.complex128)
    scale = float(2 ** log_delta)
    V[(e - 1) // 2] = z * scale
    V[(M - e - 1) // 2] = np.conj(z) * scale
    y = np.fft.fft(V) / (2 * n)
    k = np.arange(2 * n)
    c = np.rint((y * np.exp(-2j * np.pi * k / M)).real)
    if np.abs(c).max(initial=0) >= 2.0 ** 62:
        raise ValueError("scaled message does not fit in 62 bits")
    coeffs = np.zeros(N, dtype=np.int64)
    coeffs[:: N // (2 * n)] = c.astype(np.int64)
    if 2 * np.abs(coeffs).max(initial=0) >= (1 << logq):
        raise ValueError(f"scaled message does not fit below q/2 = 2^{logq - 1}")
    word = _word(params)
    zero = BigPoly(np.zeros((N, nlimbs_for(logq, word.log_beta)), dtype=np.uint64), 1 << logq, word)
    return Plaintext(add_signed(zero, coeffs), log_delta, n)


def decode(t: Plaintext, params: Params | None = None) -> np.ndarray:
    """Slots of a plaintext whose coefficients are read in (-q/2, q/2]."""
    n = t.n
    N = t.poly.N
    _check_slots(n, N)
    gap = N // (2 * n)
    sub = BigPoly(np.ascontiguousarray(t.poly.limbs[::gap]), t.poly.modulus, t.poly.word)
    scale = 2 ** t.log_delta
    c = np.array([v / scale for v in sub.to_signed()], dtype=np.float64)
    M = 4 * n
    k = np.arange(2 * n)
    Y = 2 * n * np.fft.ifft(c * np.exp(2j * np.pi * k / M))
    return Y[(_slot_exponents(n) - 1) // 2]


# ---------------------------------------------------------------------------
# context


class Context:
    """Multipliers, NTT tables and cached key transforms for one parameter set."""

    def __init__(self, params: Params, config: KernelConfig | None = None, *,
                 counter: OpCounter | None = None, timers: Timers | None = None):
        self.params = params
        self.config = config or KernelConfig()
        self.counter = counter
        self.timers = timers or Timers()
        self._ntt_master = None
        self._mults: dict = {}
        self._cache: dict = {}

    @property
    def word(self) -> WordSize:
        return self.params.word

    def _master(self):
        # every prime set is a prefix of the largest one (region 2 at log Q)
        if self._ntt_master is None:
            p = self.params
            ps = generate_primes(p, p.log_Q, 2)
            self._ntt_master = build_ntt_tables(ps, p.N)
        return self._ntt_master

    def _make(self, ps, qlimbs: int, target: int) -> PolyMultiplier:
        master = self._master()
        if ps.np > master.np:
            raise AssertionError("prime set is not a prefix of the master list")
        return PolyMultiplier(ps, self.params.N, qlimbs, target, self.config, counter=self.counter,
                              timers=self.timers, ntt_tables=master.prefix(ps.np))

    def multiplier(self, kind: str, logq: int) -> PolyMultiplier:
        """kind: 'r1' / 'r2' for HE Mul, 'small' for big x ternary mod 2^logq."""
        key = (kind, logq)
        if key not in self._mults:
            p = self.params
            wb = p.word_bits
            if kind == "r1":
                ps = generate_primes(p, logq, 1)
                if ps.P.bit_length() <= 2 * logq:
                    raise AssertionError("region-1 prime product below q^2")
                m = self._make(ps, nlimbs_for(logq, wb), 1 << logq)
            elif kind == "r2":
                ps = generate_primes(p, logq, 2)
                if ps.P.bit_length() <= logq + 2 * p.log_Q:
                    raise AssertionError("region-2 prime product below q*Q^2")
                m = self._make(ps, nlimbs_for(logq, wb), 1 << (logq + p.log_Q))
            elif kind == "small":
                ps = prime_set_for_bits(logq + p.log_N + 2, p.N, p.word, credit=p.credit)
                m = self._make(ps, nlimbs_for(logq, wb), 1 << logq)
            else:
                raise ValueError(f"unknown multiplier kind {kind!r}")
            self._mults[key] = m
        return self._mults[key]

    def cached(self, obj, tag, build):
        key = (id(obj), tag)
        hit = self._cache.get(key)
        if hit is None or hit[0] is not obj:
            hit = (obj, build())
            self._cache[key] = hit
        return hit[1]

    def sk_forward(self, sk: SecretKey, logq: int) -> RnsMatrix:
        return self.cached(sk, ("sk", logq),
                           lambda: self.multiplier("small", logq).forward_small(sk.coeffs))

    def pk_forward(self, pk: PublicKey) -> tuple[RnsMatrix, RnsMatrix]:
        m = self.multiplier("small", self.params.log_Q)
        return self.cached(pk, "pk", lambda: (m.forward(pk.pk0), m.forward(pk.pk1)))

    def evk_forward(self, evk: EvalKey) -> tuple[np.ndarray, np.ndarray]:
        """NTT form of evk over the largest region-2 prime set; rows are sliced per level."""
        def build():
            p = self.params
            ps = generate_primes(p, p.log_Q, 2)
            m = self._make(ps, nlimbs_for(2 * p.log_Q, p.word_bits), 1 << (2 * p.log_Q))
            return m.forward(evk.ax).data, m.forward(evk.bx).data
        return self.cached(evk, "evk", build)


_CONTEXTS: dict = {}


def get_context(params) -> Context:
    """Context for a Params (shared per parameter set) or the Context itself."""
    if isinstance(params, Context):
        return params
    ctx = _CONTEXTS.get(params)
    if ctx is None:
        ctx = _CONTEXTS[params] = Context(params)
    return ctx


# ---------------------------------------------------------------------------
# keys and encryption


def _uniform(N: int, bits: int, rng, word) -> BigPoly:
    return BigPoly.random(N, 1 << bits, rng, word)


def keygen(params, seed=None, *, h: int = HAMMING_WEIGHT, sigma: float = SIGMA
           ) -> tuple[SecretKey, PublicKey, EvalKey]:
    ctx = get_context(params)
    p = ctx.params
    rng = _rng(seed)
    N, logQ = p.N, p.log_Q
    s = sample_hwt(N, h, rng)
    sk = SecretKey(s)

    pk1 = _uniform(N, logQ, rng, p.word)
    t = ctx.multiplier("small", logQ).multiply(pk1, ctx.sk_forward(sk, logQ))
    pk0 = add_signed(neg_mod(t), sample_gauss(N, rng, sigma))

    ax = _uniform(N, 2 * logQ, rng, p.word)
    t = ctx.multiplier("small", 2 * logQ).multiply(ax, ctx.sk_forward(sk, 2 * logQ))
    bx = add_signed(neg_mod(t), sample_gauss(N, rng, sigma))
    Q = 1 << logQ
    s2 = _negacyclic_small(s, s)
    qs2 = BigPoly.from_ints([(int(v) % Q) << logQ for v in s2], Q * Q, p.word,
                            nlimbs=bx.nlimbs)
    bx = add_mod(bx, qs2)
    return sk, PublicKey(pk0, pk1), EvalKey(ax, bx)


def encrypt(t: Plaintext, pk: PublicKey, params, seed=None, *, h: int = HAMMING_WEIGHT,
            sigma: float = SIGMA) -> Ciphertext:
    """c.ax = u*pk1 + e1, c.bx = u*pk0 + e0 + t, at the top level; u is sparse ternary."""
    ctx = get_context(params)
    p = ctx.params
    if t.logq != p.log_Q:
        raise ModulusMismatch(f"plaintext lives mod 2^{t.logq}, encryption needs 2^{p.log_Q}")
    rng = _rng(seed)
    N = p.N
    m = ctx.multiplier("small", p.log_Q)
    f0, f1 = ctx.pk_forward(pk)
    fu = m.forward_small(sample_hwt(N, h, rng))
    ax = add_signed(m.backward(m.pointwise(fu, f1)), sample_gauss(N, rng, sigma))
    bx = add_signed(m.backward(m.pointwise(fu, f0)), sample_gauss(N, rng, sigma))
    bx = add_mod(bx, t.poly)
    return Ciphertext(ax, bx, p.log_Q, t.n, t.log_delta)


def decrypt(c: Ciphertext, sk: SecretKey, params) -> Plaintext:
    """t = bx + ax*sk mod q."""
    ctx = get_context(params)
    if c.logq < ctx.params.log_p:
        raise DepthExhausted(f"logq = {c.logq} is below log p = {ctx.params.log_p}")
    m = ctx.multiplier("small", c.logq)
    t = m.multiply(c.ax, ctx.sk_forward(sk, c.logq))
    return Plaintext(add_mod(c.bx, t), c.log_delta, c.n)


# ---------------------------------------------------------------------------
# homomorphic operations


def _same_level(c1: Ciphertext, c2: Ciphertext):
    if c1.logq != c2.logq:
        raise ModulusMismatch(f"ciphertexts at logq {c1.logq} and {c2.logq}")
    if c1.n != c2.n:
        raise ModulusMismatch(f"ciphertexts carry {c1.n} and {c2.n} slots")


def he_add(c1: Ciphertext, c2: Ciphertext) -> Ciphertext:
    _same_level(c1, c2)
    if c1.log_delta != c2.log_delta:
        raise ModulusMismatch(f"scales 2^{c1.log_delta} and 2^{c2.log_delta} differ")
    return Ciphertext(add_mod(c1.ax, c2.ax), add_mod(c1.bx, c2.bx), c1.logq, c1.n, c1.log_delta)


def shift_right(poly: BigPoly, bits: int) -> BigPoly:
    """Centred rounding division by 2^bits; the modulus shrinks by the same factor."""
    return shift_right_round(poly, bits)


def rescale(c: Ciphertext, params, bits: int | None = None) -> Ciphertext:
    ctx = get_context(params)
    bits = ctx.params.log_p if bits is None else bits
    if c.logq < bits:
        raise DepthExhausted(f"logq = {c.logq} cannot be rescaled by {bits} bits")
    return Ciphertext(shift_right(c.ax, bits), shift_right(c.bx, bits), c.logq - bits, c.n,
                      c.log_delta - bits)


def mod_down(c: Ciphertext, logq: int) -> Ciphertext:
    """Reduce to a lower level without touching the scale (q' divides q)."""
    if logq > c.logq:
        raise ModulusMismatch(f"cannot raise logq from {c.logq} to {logq}")
    return Ciphertext(reduce_pow2(c.ax, logq), reduce_pow2(c.bx, logq), logq, c.n, c.log_delta)


def he_mul(c1: Ciphertext, c2: Ciphertext, evk: EvalKey, params, *, four_products: bool = False,
           do_rescale: bool = True) -> Ciphertext:
    """Tensor, key-switch with evk, rescale by p.

    Region 1 forms d0 = bx1*bx2, d2 = ax1*ax2 and the cross term over the
    2 logq-bit prime set (three products, or four with ``four_products``).
    Region 2 multiplies d2 by evk over the (logq + 2 logQ)-bit set, keeps
    the result modulo q*Q and shifts right by logQ.
    """
    ctx = get_context(params)
    p = ctx.params
    _same_level(c1, c2)
    logq = c1.logq
    if logq < 2 * p.log_p:
        raise DepthExhausted(f"logq = {logq} leaves no room for another rescale by {p.log_p} bits")
    if logq > p.log_Q:
        raise ModulusMismatch(f"logq = {logq} exceeds log Q = {p.log_Q}")
    r1 = ctx.multiplier("r1", logq)
    r2 = ctx.multiplier("r2", logq)

    fa1, fb1 = r1.forward(c1.ax), r1.forward(c1.bx)
    if c2 is c1:
        fa2, fb2 = fa1, fb1
    else:
        fa2, fb2 = r1.forward(c2.ax), r1.forward(c2.bx)
    aa = r1.pointwise(fa1, fa2)
    bb = r1.pointwise(fb1, fb2)
    if four_products:
        cross = r1.add(r1.pointwise(fa1, fb2), r1.pointwise(fb1, fa2))
    else:
        cross = r1.sub(r1.sub(r1.pointwise(r1.add(fa1, fb1), r1.add(fa2, fb2)), aa), bb)
    d0 = r1.backward(bb)
    d1 = r1.backward(cross)
    d2 = r1.backward(aa)

    eax, ebx = ctx.evk_forward(evk)
    k = r2.np
    fd2 = r2.forward(d2)
    ta = r2.backward(r2.pointwise(fd2, RnsMatrix(eax[:k], r2.primes)))
    tb = r2.backward(r2.pointwise(fd2, RnsMatrix(ebx[:k], r2.primes)))
    with ctx.timers("Extra"):
        ax = add_mod(d1, shift_right(ta, p.log_Q))
        bx = add_mod(d0, shift_right(tb, p.log_Q))
    out = Ciphertext(ax, bx, logq, c1.n, c1.log_delta + c2.log_delta)
    if do_rescale:
        with ctx.timers("Extra"):
            out = rescale(out, ctx)
    return out

