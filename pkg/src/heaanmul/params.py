"""Scheme constants, prime sets and precomputed tables."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numba as nb
import numpy as np

from .arith import BigInt, WordSize, shoup_mm

__all__ = [
    "SECURITY_TABLE",
    "PRIME_BOUNDS",
    "PRIME_CREDIT_BITS",
    "Params",
    "PrimeSet",
    "CrtTables",
    "NttTables",
    "IcrtTables",
    "SecurityError",
    "PrimeGenerationError",
    "AccumulatorWidthError",
    "make_params",
    "generate_primes",
    "prime_set_for_bits",
    "build_crt_tables",
    "build_ntt_tables",
    "build_icrt_tables",
    "region_bound_bits",
    "is_prime",
]

# log Q -> smallest ring degree N reaching 80-bit security
SECURITY_TABLE = {300: 1 << 14, 600: 1 << 15, 1200: 1 << 16, 2400: 1 << 17}

# exclusive (low, high) exponent bounds on the primes, per word size
PRIME_BOUNDS = {64: (57, 60), 32: (27, 30)}

# guaranteed bits each prime contributes when sizing np (ceil(2400/58) = 42 at 64 bits)
PRIME_CREDIT_BITS = {64: 58, 32: 27}


class SecurityError(ValueError):
    pass


class PrimeGenerationError(RuntimeError):
    pass


class AccumulatorWidthError(ValueError):
    pass


def required_degree(log_Q: int) -> int:
    for bound in sorted(SECURITY_TABLE):
        if log_Q <= bound:
            return SECURITY_TABLE[bound]
    raise SecurityError(f"log Q = {log_Q} exceeds the security table (max {max(SECURITY_TABLE)})")


@dataclass(frozen=True)
class Params:
    N: int
    log_delta: int
    log_p: int
    L: int
    word: WordSize = field(default_factory=WordSize)
    prime_credit: int | None = None

    def __post_init__(self):
        if self.N < 2 or self.N & (self.N - 1):
            raise ValueError(f"N must be a power of two >= 2, got {self.N}")
        if self.log_p <= 0 or self.L <= 0:
            raise ValueError("log_p and L must be positive")

    @property
    def log_Q(self) -> int:
        return self.L * self.log_p

    @property
    def log_N(self) -> int:
        return self.N.bit_length() - 1

    @property
    def word_bits(self) -> int:
        return self.word.log_beta

    @property
    def credit(self) -> int:
        return self.prime_credit or PRIME_CREDIT_BITS[self.word_bits]

    @property
    def q_ladder(self) -> list[int]:
        return [self.log_Q - k * self.log_p for k in range(self.L + 1)]

    @property
    def security_table(self) -> dict[int, int]:
        return dict(SECURITY_TABLE)

    def qlimbs(self, logq: int) -> int:
        return -(-logq // self.word_bits)

    def to_json(self) -> str:
        r1 = generate_primes(self, self.log_Q, 1)
        r2 = generate_primes(self, self.log_Q, 2)
        doc = {
            "n": self.N,
            "log_delta": self.log_delta,
            "log_p": self.log_p,
            "depth": self.L,
            "log_q_max": self.log_Q,
            "word_bits": self.word_bits,
            "primes_region1": [str(p) for p in r1.primes],
            "primes_region2": [str(p) for p in r2.primes],
        }
        return json.dumps(doc, indent=2)

    @classmethod
    def from_json(cls, text: str) -> "Params":
        doc = json.loads(text)
        missing = {"n", "log_delta", "log_p", "depth", "log_q_max", "word_bits"} - set(doc)
        if missing:
            raise ValueError(f"params document lacks {sorted(missing)}")
        params = cls(int(doc["n"]), int(doc["log_delta"]), int(doc["log_p"]), int(doc["depth"]),
                     WordSize(int(doc["word_bits"])))
        if params.log_Q != int(doc["log_q_max"]):
            raise ValueError("log_q_max does not equal depth * log_p")
        for region in (1, 2):
            key = f"primes_region{region}"
            if key in doc:
                got = [int(p) for p in doc[key]]
                if got != list(generate_primes(params, params.log_Q, region).primes):
                    raise ValueError(f"{key} does not match this build's deterministic prime list")
        return params


def make_params(log_p: int = 30, L: int = 40, word=64, *, N: int | None = None,
                log_delta: int | None = None, check_security: bool = True,
                prime_credit: int | None = None) -> Params:
    """Build scheme constants; N defaults to the security-table entry for log Q."""
    word = word if isinstance(word, WordSize) else WordSize(int(word))
    log_Q = log_p * L
    if N is None:
        N = required_degree(log_Q)
    elif check_security and log_Q in SECURITY_TABLE and N < SECURITY_TABLE[log_Q]:
        raise SecurityError(f"log Q = {log_Q} needs N >= {SECURITY_TABLE[log_Q]}, got {N}")
    return Params(N, log_p if log_delta is None else log_delta, log_p, L, word, prime_credit)


# ---------------------------------------------------------------------------
# primes

_MR_BASES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37)


def is_prime(n: int) -> bool:
    """Deterministic Miller-Rabin, exact below 3.3e24."""
    if n < 2:
        return False
    for p in _MR_BASES:
        if n % p == 0:
            return n == p
    d, s = n - 1, 0
    while d % 2 == 0:
        d //= 2
        s += 1
    for a in _MR_BASES:
        x = pow(a, d, n)
        if x in (1, n - 1):
            continue
        for _ in range(s - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


def _pollard_brent(n: int) -> int:
    if n % 2 == 0:
        return 2
    c = 1
    while True:
        y, m, g, r, q = 2, 128, 1, 1, 1
        f = lambda v: (v * v + c) % n  # noqa: E731
        x = ys = y
        while g == 1:
            x = y
            for _ in range(r):
                y = f(y)
            k = 0
            while k < r and g == 1:
                ys = y
                for _ in range(min(m, r - k)):
                    y = f(y)
                    q = q * abs(x - y) % n
                g = math.gcd(q, n)
                k += m
            r *= 2
        if g == n:
            g = 1
            while g == 1:
                ys = f(ys)
                g = math.gcd(abs(x - ys), n)
        if g != n:
            return g
        c += 1


def _prime_factors(n: int) -> set[int]:
    out: set[int] = set()
    for p in (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47):
        while n % p == 0:
            out.add(p)
            n //= p
    stack = [n] if n > 1 else []
    while stack:
        m = stack.pop()
        if is_prime(m):
            out.add(m)
            continue
        d = _pollard_brent(m)
        stack += [d, m // d]
    return out


def smallest_generator(p: int) -> int:
    factors = _prime_factors(p - 1)
    g = 2
    while any(pow(g, (p - 1) // f, p) == 1 for f in factors):
        g += 1
    return g


def negacyclic_root(p: int, N: int) -> int:
    """psi = g^((p-1)/2N) for the smallest generator g; psi^N = -1 mod p."""
    if (p - 1) % (2 * N):
        raise PrimeGenerationError(f"p = {p} is not 1 mod 2N = {2 * N}")
    psi = pow(smallest_generator(p), (p - 1) // (2 * N), p)
    if pow(psi, N, p) != p - 1:
        raise PrimeGenerationError(f"root search failed for p = {p}")
    return psi


_prime_cache: dict[tuple[int, int], list[int]] = {}


def _prime_list(N: int, word_bits: int, count: int) -> list[int]:
    """First ``count`` primes p = 1 mod 2N, descending from the upper bound."""
    lo_e, hi_e = PRIME_BOUNDS[word_bits]
    cached = _prime_cache.setdefault((N, word_bits), [])
    step = 2 * N
    p = (cached[-1] - step) if cached else ((1 << hi_e) - 2) // step * step + 1
    while len(cached) < count:
        if p <= (1 << lo_e):
            raise PrimeGenerationError(
                f"only {len(cached)} primes = 1 mod {step} lie in (2^{lo_e}, 2^{hi_e}); {count} needed")
        if is_prime(p):
            cached.append(p)
        p -= step
    return cached[:count]


@dataclass(frozen=True)
class PrimeSet:
    primes: tuple[int, ...]
    roots: tuple[int, ...] = ()
    region: int = 1
    word: WordSize = field(default_factory=WordSize)

    def __post_init__(self):
        # roots may be omitted for sets only used by CRT/iCRT
        if self.roots and len(self.primes) != len(self.roots):
            raise ValueError("one root per prime required")
        if len(set(self.primes)) != len(self.primes):
            raise ValueError("primes must be distinct")

    @property
    def np(self) -> int:
        return len(self.primes)

    @property
    def P(self) -> int:
        return math.prod(self.primes)

    @property
    def P_bigint(self) -> BigInt:
        return BigInt.from_int(self.P, self.word)

    def array(self) -> np.ndarray:
        return np.array(self.primes, dtype=np.uint64)

    def prefix(self, k: int) -> "PrimeSet":
        return PrimeSet(self.primes[:k], self.roots[:k], self.region, self.word)

    def with_roots(self, N: int) -> "PrimeSet":
        return PrimeSet(self.primes, _roots_for(self.primes, N), self.region, self.word)


@lru_cache(maxsize=None)
def _roots_for(primes: tuple[int, ...], N: int) -> tuple[int, ...]:
    return tuple(negacyclic_root(p, N) for p in primes)


def region_bound_bits(logq: int, log_Q: int, log_N: int, region: int) -> int:
    """Bits P must exceed so centred iCRT recovers the signed negacyclic sums.

    Region 1 multiplies two (sums of two) log q-bit operands; region 2
    multiplies a log q-bit operand by a log Q^2-bit key.
    """
    if region == 1:
        return 2 * logq + log_N + 4
    if region == 2:
        return logq + 2 * log_Q + log_N + 2
    raise ValueError(f"region must be 1 or 2, got {region}")


def prime_set_for_bits(bound_bits: int, N: int, word=64, *, credit: int | None = None,
                       region: int = 1) -> PrimeSet:
    """Smallest prefix of the deterministic prime list with np = ceil(bound/credit), P > 2^bound."""
    word = word if isinstance(word, WordSize) else WordSize(int(word))
    credit = credit or PRIME_CREDIT_BITS[word.log_beta]
    count = max(1, -(-bound_bits // credit))
    while True:
        primes = _prime_list(N, word.log_beta, count)
        if math.prod(primes).bit_length() > bound_bits:
            break
        count += 1
    primes = tuple(primes)
    return PrimeSet(primes, _roots_for(primes, N), region, word)


def generate_primes(params: Params, logq: int, region: int) -> PrimeSet:
    if not 0 < logq <= params.log_Q:
        raise ValueError(f"logq must lie in (0, {params.log_Q}], got {logq}")
    bits = region_bound_bits(logq, params.log_Q, params.log_N, region)
    return prime_set_for_bits(bits, params.N, params.word, credit=params.credit, region=region)


# ---------------------------------------------------------------------------
# tables


def _shoup_factor(y: int, p: int, lb: int) -> int:
    return (y << lb) // p


@dataclass
class CrtTables:
    primes: np.ndarray          # (np,)
    tb_crt: np.ndarray          # (np, qLimbs), beta^k mod p_j
    red: np.ndarray             # (np, 3): 1, beta, beta^2 mod p_j
    red_shoup: np.ndarray       # (np, 3)
    word_bits: int

    @property
    def shape(self) -> tuple[int, int]:
        return self.tb_crt.shape


def build_crt_tables(ps: PrimeSet, qlimbs: int) -> CrtTables:
    lb = ps.word.log_beta
    tb = np.empty((ps.np, qlimbs), dtype=np.uint64)
    red = np.empty((ps.np, 3), dtype=np.uint64)
    red_s = np.empty((ps.np, 3), dtype=np.uint64)
    for j, p in enumerate(ps.primes):
        for k in range(qlimbs):
            tb[j, k] = pow(2, lb * k, p)
        for k in range(3):
            y = pow(2, lb * k, p)
            red[j, k] = y
            red_s[j, k] = _shoup_factor(y, p, lb)
    return CrtTables(ps.array(), tb, red, red_s, lb)


@nb.njit(cache=True)
def _bitrev(i, bits):
    r = 0
    for _ in range(bits):
        r = (r << 1) | (i & 1)
        i >>= 1
    return r


@nb.njit(cache=True)
def _shoup_factor_u64(y, p, wb):
    # floor(y * 2^wb / p) by restoring division; y < p < 2^62
    q = np.uint64(0)
    r = y
    for _ in range(wb):
        r = r << np.uint64(1)
        q = q << np.uint64(1)
        if r >= p:
            r -= p
            q |= np.uint64(1)
    return q


@nb.njit(cache=True)
def _fill_powers(root, root_s, p, N, logn, wb, out, out_s):
    cur = np.uint64(1)
    for e in range(N):
        idx = _bitrev(e, logn)
        out[idx] = cur
        out_s[idx] = _shoup_factor_u64(cur, p, wb)
        cur = shoup_mm(cur, root, root_s, p, wb, False)


@dataclass
class NttTables:
    primes: np.ndarray
    tb_w: np.ndarray            # (np, N), psi^bitrev(i)
    tb_w_shoup: np.ndarray
    tb_invw: np.ndarray         # (np, N), psi^-bitrev(i)
    tb_invw_shoup: np.ndarray
    n_inv: np.ndarray           # (np,)
    n_inv_shoup: np.ndarray
    word_bits: int

    @property
    def N(self) -> int:
        return self.tb_w.shape[1]

    @property
    def np(self) -> int:
        return self.tb_w.shape[0]

    def row(self, j: int) -> "NttTables":
        s = slice(j, j + 1)
        return NttTables(self.primes[s], self.tb_w[s], self.tb_w_shoup[s], self.tb_invw[s],
                         self.tb_invw_shoup[s], self.n_inv[s], self.n_inv_shoup[s], self.word_bits)

    def prefix(self, k: int) -> "NttTables":
        s = slice(0, k)
        return NttTables(self.primes[s], self.tb_w[s], self.tb_w_shoup[s], self.tb_invw[s],
                         self.tb_invw_shoup[s], self.n_inv[s], self.n_inv_shoup[s], self.word_bits)


def build_ntt_tables(ps: PrimeSet, N: int) -> NttTables:
    if N < 2 or N & (N - 1):
        raise ValueError("N must be a power of two")
    lb = ps.word.log_beta
    logn = N.bit_length() - 1
    shape = (ps.np, N)
    w, ws, iw, iws = (np.empty(shape, dtype=np.uint64) for _ in range(4))
    n_inv = np.empty(ps.np, dtype=np.uint64)
    n_inv_s = np.empty(ps.np, dtype=np.uint64)
    if not ps.roots:
        ps = ps.with_roots(N)
    for j, (p, psi) in enumerate(zip(ps.primes, ps.roots)):
        if (p - 1) % (2 * N) or pow(psi, N, p) != p - 1:
            raise PrimeGenerationError(f"{psi} is not a primitive 2N-th root of unity mod {p}")
        inv = pow(psi, -1, p)
        _fill_powers(np.uint64(psi), np.uint64(_shoup_factor(psi, p, lb)), np.uint64(p), N, logn,
                     lb, w[j], ws[j])
        _fill_powers(np.uint64(inv), np.uint64(_shoup_factor(inv, p, lb)), np.uint64(p), N, logn,
                     lb, iw[j], iws[j])
        ni = pow(N, -1, p)
        n_inv[j] = ni
        n_inv_s[j] = _shoup_factor(ni, p, lb)
    return NttTables(ps.array(), w, ws, iw, iws, n_inv, n_inv_s, lb)


def _to_limbs(value: int, nlimbs: int, lb: int) -> np.ndarray:
    mask = (1 << lb) - 1
    return np.array([(value >> (lb * k)) & mask for k in range(nlimbs)], dtype=np.uint64)


@dataclass
class IcrtTables:
    primes: np.ndarray
    tb_invP: np.ndarray         # (np,)
    tb_invP_shoup: np.ndarray
    tb_Pdivp: np.ndarray        # (np, PLimbs)
    P: int
    target: int
    plimbs: int
    acc_words: int              # width of the BigInt accumulator
    small_words: int            # 2 or 3, accumulator of the reordered loop
    P_multiples: np.ndarray     # (T+1, acc_words): P * 2^t
    half_P: np.ndarray          # (acc_words,)
    P_limbs: np.ndarray         # (acc_words,)
    word_bits: int

    @property
    def np(self) -> int:
        return len(self.primes)

    @property
    def target_bits(self) -> int | None:
        t = self.target
        return t.bit_length() - 1 if t & (t - 1) == 0 else None

    @property
    def tb_Pdivp_T(self) -> np.ndarray:
        return np.ascontiguousarray(self.tb_Pdivp.T)


def build_icrt_tables(ps: PrimeSet, target_modulus, *, max_small_words: int = 3) -> IcrtTables:
    """iCRT tables; ``target_modulus`` is q (region 1) or q*Q (region 2)."""
    target = int(target_modulus)
    if target <= 0:
        raise ValueError("target modulus must be positive")
    lb = ps.word.log_beta
    beta = 1 << lb
    P = ps.P
    plimbs = max(-(-(P // p).bit_length() // lb) for p in ps.primes)
    tb_invP = np.empty(ps.np, dtype=np.uint64)
    tb_invP_s = np.empty(ps.np, dtype=np.uint64)
    tb_Pdivp = np.empty((ps.np, plimbs), dtype=np.uint64)
    for j, p in enumerate(ps.primes):
        hat = P // p
        inv = pow(hat % p, -1, p) if p > 1 else 0
        tb_invP[j] = inv
        tb_invP_s[j] = _shoup_factor(inv, p, lb)
        tb_Pdivp[j] = _to_limbs(hat, plimbs, lb)

    pmax = max(ps.primes)
    bound = ps.np * (pmax - 1) * (beta - 1)
    small = 2 if bound < beta ** 2 else 3
    if small > max_small_words or bound >= beta ** 3:
        raise AccumulatorWidthError(
            f"np={ps.np} products of {pmax.bit_length()}-bit primes overflow a "
            f"{max_small_words}-word accumulator")
    t_max = max(0, (ps.np - 1).bit_length())
    acc_words = -(-(P << (t_max + 1)).bit_length() // lb) + 1
    acc_words = max(acc_words, plimbs + small + 1)
    mults = np.stack([_to_limbs(P << t, acc_words, lb) for t in range(t_max + 1)])
    return IcrtTables(ps.array(), tb_invP, tb_invP_s, tb_Pdivp, P, target, plimbs, acc_words, small,
                      mults, _to_limbs(P >> 1, acc_words, lb), _to_limbs(P, acc_words, lb), lb)


def crt_accumulator_ok(qlimbs: int, pmax: int, word_bits: int) -> bool:
    beta = 1 << word_bits
    return qlimbs * (beta - 1) * (pmax - 1) < beta ** 3


__all__ += ["crt_accumulator_ok", "negacyclic_root", "smallest_generator", "required_degree"]
