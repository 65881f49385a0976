"""Word-level and multi-word arithmetic.

Two families live here:

* scalar reference routines on Python ints (``word_mulhi``, ``shoup_*``,
  ``bigint_*``) used by table construction, oracles and tests;
* numba primitives (``mul_wide``, ``shoup_mm`` ...) inlined into the hot
  kernels of :mod:`rns` and :mod:`ntt`.

Words are always stored in ``uint64``. With a 32-bit word every value is
simply kept below 2**32, so a double-word product fits natively; with a
64-bit word the 128-bit product is emulated from 32-bit halves.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numba as nb
import numpy as np

__all__ = [
    "WordSize",
    "BigInt",
    "ShoupPair",
    "word_mulhi",
    "shoup_precompute",
    "shoup_modmul",
    "shoup_modmul_approx",
    "shoup_full_reduce",
    "bigint_add",
    "bigint_mul",
    "bigint_mod",
    "InvalidModulusError",
    "mulhi_array",
    "shoup_modmul_array",
]


class InvalidModulusError(ValueError):
    pass


@dataclass(frozen=True)
class WordSize:
    log_beta: int = 64

    def __post_init__(self):
        if self.log_beta not in (32, 64):
            raise ValueError(f"word size must be 32 or 64 bits, got {self.log_beta}")

    @property
    def beta(self) -> int:
        return 1 << self.log_beta

    @property
    def mask(self) -> int:
        return (1 << self.log_beta) - 1


def _as_word(word) -> WordSize:
    if isinstance(word, WordSize):
        return word
    return WordSize(int(word))


@dataclass(frozen=True)
class ShoupPair:
    y: int
    y_shoup: int


# ---------------------------------------------------------------------------
# scalar reference routines


def word_mulhi(x: int, y: int, word=64) -> int:
    """Upper ``log_beta`` bits of the double-width product ``x * y``."""
    return (x * y) >> _as_word(word).log_beta


def _mulhi_approx_int(x: int, y: int, log_beta: int) -> int:
    # mulhi from half-word partial products without the lo*lo term
    h = log_beta // 2
    hm = (1 << h) - 1
    xl, xh, yl, yh = x & hm, x >> h, y & hm, y >> h
    lh, hl = xl * yh, xh * yl
    mid = (lh & hm) + (hl & hm)
    return xh * yh + (lh >> h) + (hl >> h) + (mid >> h)


def shoup_precompute(y: int, p: int, word=64) -> ShoupPair:
    w = _as_word(word)
    if not 0 <= y < p < w.beta:
        raise ValueError(f"need 0 <= y < p < beta (y={y}, p={p})")
    return ShoupPair(y, (y << w.log_beta) // p)


def shoup_modmul(x: int, sp: ShoupPair, p: int, word=64) -> int:
    """``x * sp.y mod p`` with one mulhi, two mullo and one correction."""
    w = _as_word(word)
    qu = (x * sp.y_shoup) >> w.log_beta
    r = (x * sp.y - qu * p) & w.mask
    if r >= p:
        r -= p
    return r


def shoup_modmul_approx(x: int, sp: ShoupPair, p: int, word=64) -> int:
    """Shoup product with the approximate mulhi; result is congruent and in [0, 4p)."""
    w = _as_word(word)
    qu = _mulhi_approx_int(x, sp.y_shoup, w.log_beta)
    return (x * sp.y - qu * p) & w.mask


def shoup_full_reduce(r: int, p: int) -> int:
    """Map a value in [0, 4p) to [0, p) with two conditional subtractions."""
    if r >= 2 * p:
        r -= 2 * p
    if r >= p:
        r -= p
    return r


# ---------------------------------------------------------------------------
# multi-word integers


class BigInt:
    """Unsigned integer held as little-endian words of ``log_beta`` bits."""

    __slots__ = ("limbs", "word")

    def __init__(self, limbs: Sequence[int], word=64):
        self.word = _as_word(word)
        mask = self.word.mask
        limbs = tuple(int(v) for v in limbs)
        if any(v < 0 or v > mask for v in limbs):
            raise ValueError("limb out of word range")
        self.limbs = limbs if limbs else (0,)

    @classmethod
    def from_int(cls, value: int, word=64, nlimbs: int | None = None) -> "BigInt":
        w = _as_word(word)
        if value < 0:
            raise ValueError("BigInt is unsigned")
        out = []
        while value:
            out.append(value & w.mask)
            value >>= w.log_beta
        if nlimbs is not None:
            if len(out) > nlimbs:
                raise ValueError(f"value needs {len(out)} limbs, only {nlimbs} allowed")
            out += [0] * (nlimbs - len(out))
        return cls(out, w)

    def __int__(self) -> int:
        v = 0
        for limb in reversed(self.limbs):
            v = (v << self.word.log_beta) | limb
        return v

    def __eq__(self, other) -> bool:
        if isinstance(other, BigInt):
            return int(self) == int(other)
        if isinstance(other, int):
            return int(self) == other
        return NotImplemented

    def __hash__(self):
        return hash(int(self))

    def __repr__(self):
        return f"BigInt({int(self)}, word={self.word.log_beta})"

    @property
    def nlimbs(self) -> int:
        return len(self.limbs)


def _strip(limbs: list[int]) -> list[int]:
    while len(limbs) > 1 and limbs[-1] == 0:
        limbs.pop()
    return limbs


def _check_same_word(a: BigInt, b: BigInt) -> WordSize:
    if a.word != b.word:
        raise ValueError("operands use different word sizes")
    return a.word


def bigint_add(a: BigInt, b: BigInt) -> BigInt:
    w = _check_same_word(a, b)
    lb, mask = w.log_beta, w.mask
    n = max(a.nlimbs, b.nlimbs)
    x = list(a.limbs) + [0] * (n - a.nlimbs)
    y = list(b.limbs) + [0] * (n - b.nlimbs)
    out = []
    carry = 0
    for k in range(n):
        s = x[k] + y[k] + carry
        out.append(s & mask)
        carry = s >> lb
    if carry:
        out.append(carry)
    return BigInt(out, w)


def bigint_mul(a: BigInt, b: BigInt) -> BigInt:
    """Schoolbook product; oracle and table-construction use only."""
    w = _check_same_word(a, b)
    lb, mask = w.log_beta, w.mask
    out = [0] * (a.nlimbs + b.nlimbs)
    for i, ai in enumerate(a.limbs):
        if ai == 0:
            continue
        carry = 0
        for j, bj in enumerate(b.limbs):
            t = out[i + j] + ai * bj + carry
            out[i + j] = t & mask
            carry = t >> lb
        k = i + b.nlimbs
        while carry:
            t = out[k] + carry
            out[k] = t & mask
            carry = t >> lb
            k += 1
    return BigInt(_strip(out), w)


def _cmp_limbs(x: list[int], y: list[int]) -> int:
    if len(x) != len(y):
        return -1 if len(x) < len(y) else 1
    for u, v in zip(reversed(x), reversed(y)):
        if u != v:
            return -1 if u < v else 1
    return 0


def bigint_mod(a: BigInt, m: BigInt) -> BigInt:
    """Remainder of ``a`` by ``m`` using word-by-word long division (Knuth D)."""
    w = _check_same_word(a, m)
    lb, mask, base = w.log_beta, w.mask, w.beta
    u = _strip(list(a.limbs))
    v = _strip(list(m.limbs))
    if v == [0]:
        raise InvalidModulusError("modulus must be positive")
    if _cmp_limbs(u, v) < 0:
        return BigInt(u, w)
    if len(v) == 1:
        d = v[0]
        r = 0
        for limb in reversed(u):
            r = ((r << lb) | limb) % d
        return BigInt([r], w)

    n = len(v)
    s = lb - v[-1].bit_length()
    vn = _shl(v, s, lb, mask)[:n]
    un = _shl(u, s, lb, mask)
    if len(un) == len(u):
        un.append(0)
    for j in range(len(u) - n, -1, -1):
        num = (un[j + n] << lb) | un[j + n - 1]
        qhat, rhat = divmod(num, vn[n - 1])
        while qhat >= base or qhat * vn[n - 2] > ((rhat << lb) | un[j + n - 2]):
            qhat -= 1
            rhat += vn[n - 1]
            if rhat >= base:
                break
        borrow = 0
        carry = 0
        for i in range(n):
            p = qhat * vn[i] + carry
            carry = p >> lb
            t = un[i + j] - (p & mask) - borrow
            un[i + j] = t & mask
            borrow = 1 if t < 0 else 0
        t = un[j + n] - carry - borrow
        un[j + n] = t & mask
        if t < 0:
            c = 0
            for i in range(n):
                t = un[i + j] + vn[i] + c
                un[i + j] = t & mask
                c = t >> lb
            un[j + n] = (un[j + n] + c) & mask
    rem = _shr(un[:n], s, lb, mask)
    return BigInt(_strip(rem), w)


def _shl(x: list[int], s: int, lb: int, mask: int) -> list[int]:
    if s == 0:
        return list(x)
    out = []
    carry = 0
    for limb in x:
        out.append(((limb << s) & mask) | carry)
        carry = limb >> (lb - s)
    if carry:
        out.append(carry)
    return out


def _shr(x: list[int], s: int, lb: int, mask: int) -> list[int]:
    if s == 0:
        return list(x)
    out = []
    for k in range(len(x)):
        hi = x[k + 1] if k + 1 < len(x) else 0
        out.append((x[k] >> s) | ((hi << (lb - s)) & mask))
    return out


# ---------------------------------------------------------------------------
# numba primitives (inlined into the kernels)

_M32 = np.uint64(0xFFFFFFFF)
_M16 = np.uint64(0xFFFF)
_S32 = np.uint64(32)
_S16 = np.uint64(16)
_ONE = np.uint64(1)
_ZERO = np.uint64(0)


@nb.njit(inline="always", cache=True)
def mul_wide(x, y, wb):
    """(hi, lo) words of x*y in base 2**wb."""
    if wb == 32:
        t = x * y
        return t >> _S32, t & _M32
    xl = x & _M32
    xh = x >> _S32
    yl = y & _M32
    yh = y >> _S32
    ll = xl * yl
    lh = xl * yh
    hl = xh * yl
    mid = (ll >> _S32) + (lh & _M32) + (hl & _M32)
    hi = xh * yh + (lh >> _S32) + (hl >> _S32) + (mid >> _S32)
    lo = (mid << _S32) | (ll & _M32)
    return hi, lo


@nb.njit(inline="always", cache=True)
def mulhi_approx(x, y, wb):
    # drops the lo*lo partial product, so the result may be one short
    if wb == 32:
        xl = x & _M16
        xh = x >> _S16
        yl = y & _M16
        yh = y >> _S16
        lh = xl * yh
        hl = xh * yl
        mid = (lh & _M16) + (hl & _M16)
        return xh * yh + (lh >> _S16) + (hl >> _S16) + (mid >> _S16)
    xl = x & _M32
    xh = x >> _S32
    yl = y & _M32
    yh = y >> _S32
    lh = xl * yh
    hl = xh * yl
    mid = (lh & _M32) + (hl & _M32)
    return xh * yh + (lh >> _S32) + (hl >> _S32) + (mid >> _S32)


@nb.njit(inline="always", cache=True)
def adc(a, b, c, wb):
    """a + b + c in base 2**wb; returns (sum, carry)."""
    if wb == 32:
        s = a + b + c
        return s & _M32, s >> _S32
    s = a + b
    c1 = _ONE if s < b else _ZERO
    s2 = s + c
    c2 = _ONE if s2 < s else _ZERO
    return s2, c1 | c2


@nb.njit(inline="always", cache=True)
def shoup_lazy(x, y, ys, p, wb, approx):
    """Shoup product before the final correction: [0, 2p) exact, [0, 4p) approx."""
    if approx:
        q = mulhi_approx(x, ys, wb)
    else:
        q = mul_wide(x, ys, wb)[0]
    r = x * y - q * p
    if wb == 32:
        r &= _M32
    return r


@nb.njit(inline="always", cache=True)
def csub(x, p):
    """x - p if x >= p else x, written so LLVM emits a select, not a branch."""
    return x - (p if x >= p else _ZERO)


@nb.njit(inline="always", cache=True)
def shoup_mm(x, y, ys, p, wb, approx):
    r = shoup_lazy(x, y, ys, p, wb, approx)
    if approx:
        r = csub(r, p + p)
    return csub(r, p)


@nb.njit(inline="always", cache=True)
def mulmod_barrett(a, b, p, mu, k, wb):
    """a*b mod p for a, b < p without a precomputed Shoup factor.

    ``mu = floor(2**(2k) / p)`` with ``k = p.bit_length()``; needs k <= 62.
    """
    if wb == 32:
        return (a * b) % p
    hi, lo = mul_wide(a, b, wb)
    sh = np.uint64(k - 1)
    t = (hi << (np.uint64(64) - sh)) | (lo >> sh)
    qh, ql = mul_wide(t, mu, wb)
    s2 = np.uint64(k + 1)
    q = (qh << (np.uint64(64) - s2)) | (ql >> s2)
    r = lo - q * p
    while r >= p:
        r -= p
    return r


@nb.njit(parallel=True, cache=True)
def _mulhi_kernel(x, y, wb, approx, out):
    for i in nb.prange(x.shape[0]):
        if approx:
            out[i] = mulhi_approx(x[i], y[i], wb)
        else:
            out[i] = mul_wide(x[i], y[i], wb)[0]


@nb.njit(parallel=True, cache=True)
def _shoup_kernel(x, y, ys, p, wb, approx, reduce, out):
    for i in nb.prange(x.shape[0]):
        if reduce:
            out[i] = shoup_mm(x[i], y[i], ys[i], p[i], wb, approx)
        else:
            out[i] = shoup_lazy(x[i], y[i], ys[i], p[i], wb, approx)


def _u64(a) -> np.ndarray:
    return np.ascontiguousarray(np.asarray(a, dtype=np.uint64).ravel())


def mulhi_array(x, y, log_beta: int = 64, approx: bool = False) -> np.ndarray:
    """Vectorised mulhi through the limb-split emulation used by the kernels."""
    x, y = _u64(x), _u64(y)
    out = np.empty_like(x)
    _mulhi_kernel(x, y, log_beta, approx, out)
    return out


def shoup_modmul_array(x, y, y_shoup, p, log_beta: int = 64, approx: bool = False,
                       reduce: bool = True) -> np.ndarray:
    """Elementwise Shoup product; ``reduce=False`` returns the lazy remainder."""
    x = _u64(x)
    n = x.shape[0]
    y, ys, p = (np.broadcast_to(_u64(v), (n,)).copy() for v in (y, y_shoup, p))
    out = np.empty_like(x)
    _shoup_kernel(x, y, ys, p, log_beta, approx, reduce, out)
    return out
