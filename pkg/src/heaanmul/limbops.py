"""Coefficient-wise arithmetic on limb matrices modulo powers of two."""
from __future__ import annotations

import numba as nb
import numpy as np

from .arith import adc
from .bigpoly import BigPoly

__all__ = ["add_mod", "sub_mod", "neg_mod", "add_signed", "shift_right_round", "reduce_pow2",
           "nlimbs_for"]

_Z = np.uint64(0)
_ONE = np.uint64(1)


def nlimbs_for(bits: int, word_bits: int) -> int:
    return max(1, -(-bits // word_bits))


def _top_mask(bits: int, word_bits: int) -> np.uint64:
    top = bits - (nlimbs_for(bits, word_bits) - 1) * word_bits
    return np.uint64((1 << top) - 1) if top < 64 else np.uint64(0xFFFFFFFFFFFFFFFF)


@nb.njit(inline="always", cache=True)
def _wmask(wb):
    return np.uint64(0xFFFFFFFF) if wb == 32 else np.uint64(0xFFFFFFFFFFFFFFFF)


@nb.njit(parallel=True, cache=True)
def _add_k(a, b, wb, top, out):
    N, L = a.shape
    for i in nb.prange(N):
        c = _Z
        for k in range(L):
            out[i, k], c = adc(a[i, k], b[i, k], c, wb)
        out[i, L - 1] &= top


@nb.njit(parallel=True, cache=True)
def _sub_k(a, b, wb, top, out):
    # a + ~b + 1
    N, L = a.shape
    m = _wmask(wb)
    for i in nb.prange(N):
        c = _ONE
        for k in range(L):
            out[i, k], c = adc(a[i, k], (~b[i, k]) & m, c, wb)
        out[i, L - 1] &= top


@nb.njit(parallel=True, cache=True)
def _add_signed_k(a, v, wb, top, out):
    N, L = a.shape
    m = _wmask(wb)
    for i in nb.prange(N):
        x = v[i]
        ext = m if x < 0 else _Z
        lo = np.uint64(x) & m
        c = _Z
        for k in range(L):
            w = lo if k == 0 else ext
            if wb == 32 and k == 1:
                w = (np.uint64(x) >> np.uint64(32)) & m
            out[i, k], c = adc(a[i, k], w, c, wb)
        out[i, L - 1] &= top


@nb.njit(parallel=True, cache=True)
def _shift_round_k(a, s, wb, top, out):
    # out = floor((a + 2^(s-1)) / 2^s), truncated to out's width
    N, L = a.shape
    Lo = out.shape[1]
    m = _wmask(wb)
    q = s // wb
    r = s % wb
    half_k = (s - 1) // wb
    half_b = np.uint64(1) << np.uint64((s - 1) % wb)
    for i in nb.prange(N):
        tmp = np.empty(L + 1, dtype=np.uint64)
        c = _Z
        for k in range(L):
            add = half_b if (s > 0 and k == half_k) else _Z
            tmp[k], c = adc(a[i, k], add, c, wb)
        tmp[L] = c
        for k in range(Lo):
            src = k + q
            lo = tmp[src] if src <= L else _Z
            hi = tmp[src + 1] if src + 1 <= L else _Z
            if r == 0:
                out[i, k] = lo
            else:
                out[i, k] = ((lo >> np.uint64(r)) | (hi << np.uint64(wb - r))) & m
        out[i, Lo - 1] &= top


def _check_pow2(p: BigPoly) -> int:
    q = p.modulus
    if q & (q - 1):
        raise ValueError("limb kernels need a power-of-two modulus")
    return q.bit_length() - 1


def _like(p: BigPoly) -> np.ndarray:
    return np.empty_like(p.limbs)


def add_mod(a: BigPoly, b: BigPoly) -> BigPoly:
    bits = _check_pow2(a)
    if a.modulus != b.modulus or a.limbs.shape != b.limbs.shape:
        raise ValueError("operands live modulo different powers of two")
    out = _like(a)
    _add_k(a.limbs, b.limbs, a.word.log_beta, _top_mask(bits, a.word.log_beta), out)
    return BigPoly(out, a.modulus, a.word)


def sub_mod(a: BigPoly, b: BigPoly) -> BigPoly:
    bits = _check_pow2(a)
    if a.modulus != b.modulus or a.limbs.shape != b.limbs.shape:
        raise ValueError("operands live modulo different powers of two")
    out = _like(a)
    _sub_k(a.limbs, b.limbs, a.word.log_beta, _top_mask(bits, a.word.log_beta), out)
    return BigPoly(out, a.modulus, a.word)


def neg_mod(a: BigPoly) -> BigPoly:
    return sub_mod(BigPoly(np.zeros_like(a.limbs), a.modulus, a.word), a)


def add_signed(a: BigPoly, values) -> BigPoly:
    """a + v mod 2^k for small signed int64 coefficients v."""
    bits = _check_pow2(a)
    v = np.ascontiguousarray(values, dtype=np.int64)
    if v.shape != (a.N,):
        raise ValueError("need one value per coefficient")
    out = _like(a)
    _add_signed_k(a.limbs, v, a.word.log_beta, _top_mask(bits, a.word.log_beta), out)
    return BigPoly(out, a.modulus, a.word)


def reduce_pow2(a: BigPoly, bits: int) -> BigPoly:
    """a mod 2^bits for a smaller power of two."""
    src = _check_pow2(a)
    if bits > src:
        raise ValueError("can only reduce to a smaller power of two")
    wb = a.word.log_beta
    n = nlimbs_for(bits, wb)
    out = np.ascontiguousarray(a.limbs[:, :n]).copy()
    out[:, -1] &= _top_mask(bits, wb)
    return BigPoly(out, 1 << bits, a.word)


def shift_right_round(a: BigPoly, s: int) -> BigPoly:
    """round(a / 2^s), modulus 2^k -> 2^(k-s); rounding of the centred value."""
    bits = _check_pow2(a)
    if s < 0 or s > bits:
        raise ValueError(f"shift {s} outside [0, {bits}]")
    if s == 0:
        return a.copy()
    wb = a.word.log_beta
    nb_ = bits - s
    if nb_ == 0:
        return BigPoly(np.zeros((a.N, 1), dtype=np.uint64), 1, a.word)
    out = np.empty((a.N, nlimbs_for(nb_, wb)), dtype=np.uint64)
    _shift_round_k(a.limbs, s, wb, _top_mask(nb_, wb), out)
    return BigPoly(out, 1 << nb_, a.word)
