"""Conversion between multi-word coefficients and residue form.

``crt_forward`` turns each coefficient into its residues mod every prime,
``icrt_naive`` and ``icrt_reordered`` rebuild coefficients from residues.
The two inverse variants differ only in loop order and accumulator width;
their outputs are bit-identical.
"""
from __future__ import annotations

from dataclasses import dataclass

import numba as nb
import numpy as np

from .arith import adc, mul_wide, shoup_mm
from .bigpoly import BigPoly, ints_from_limbs
from .counters import OpCounter, _add
from .params import CrtTables, IcrtTables

__all__ = [
    "RnsMatrix",
    "AccumStrategy",
    "THREE_WORD_ADC",
    "crt_forward",
    "rns_from_signed",
    "icrt_naive",
    "icrt_reordered",
    "icrt_temp",
    "transpose",
]

ROW_MAJOR = "row-major"
TRANSPOSED = "transposed"


@dataclass
class RnsMatrix:
    """Residues of N coefficients modulo np primes.

    ``data`` is (np, N) when ``layout`` is row-major and (N, np) when transposed.
    """

    data: np.ndarray
    primes: np.ndarray
    layout: str = ROW_MAJOR

    def __post_init__(self):
        if self.layout not in (ROW_MAJOR, TRANSPOSED):
            raise ValueError(f"unknown layout {self.layout!r}")
        if self.data.ndim != 2 or self.data.shape[self.layout == TRANSPOSED] != len(self.primes):
            raise ValueError("data shape does not match the prime count")

    @property
    def rows(self) -> int:
        return len(self.primes)

    @property
    def cols(self) -> int:
        return self.data.shape[1] if self.layout == ROW_MAJOR else self.data.shape[0]

    @property
    def np(self) -> int:
        return self.rows

    @property
    def N(self) -> int:
        return self.cols

    def row_major(self) -> np.ndarray:
        return self.data if self.layout == ROW_MAJOR else np.ascontiguousarray(self.data.T)

    def copy(self) -> "RnsMatrix":
        return RnsMatrix(self.data.copy(), self.primes, self.layout)

    def in_range(self) -> bool:
        d = self.row_major()
        return bool(np.all(d < self.primes[:, None]))


@dataclass(frozen=True)
class AccumStrategy:
    """How CRT keeps its inner-product accumulator from overflowing.

    ``three_word_adc`` carries into a third word; ``periodic_mod`` keeps two
    words and reduces mod p after every ``period`` products.
    """

    kind: str = "three_word_adc"
    period: int = 0

    def __post_init__(self):
        if self.kind not in ("three_word_adc", "periodic_mod"):
            raise ValueError(f"unknown accumulation strategy {self.kind!r}")
        if self.kind == "periodic_mod" and self.period < 1:
            raise ValueError("periodic_mod needs a period >= 1")

    @classmethod
    def periodic_mod(cls, period: int) -> "AccumStrategy":
        return cls("periodic_mod", period)

    @classmethod
    def parse(cls, text: str) -> "AccumStrategy":
        """'three_word_adc', 'periodic_mod' (period 4) or 'periodic_mod:<x>'."""
        if text in ("three_word_adc", "adc", "3word"):
            return THREE_WORD_ADC
        if text.startswith("periodic_mod"):
            _, _, x = text.partition(":")
            return cls.periodic_mod(int(x) if x else 4)
        raise ValueError(f"unknown CRT strategy {text!r}")

    def check(self, pmax: int, word_bits: int):
        # two words hold r + x*(beta-1)*(pmax-1) as long as x <= beta / pmax
        if self.kind == "periodic_mod" and self.period > (1 << word_bits) // pmax:
            raise ValueError(f"period {self.period} overflows the two-word accumulator "
                             f"(max {(1 << word_bits) // pmax} for {pmax.bit_length()}-bit primes)")

    def __str__(self):
        return self.kind if self.kind == "three_word_adc" else f"periodic_mod:{self.period}"


THREE_WORD_ADC = AccumStrategy()

_ONE = np.uint64(1)
_ZERO = np.uint64(0)


# ---------------------------------------------------------------------------
# CRT


@nb.njit(parallel=True, cache=True)
def _crt_adc(coeffs, tb, red, red_s, primes, wb, approx, out):
    N, L = coeffs.shape
    npr = tb.shape[0]
    for i in nb.prange(N):
        for j in range(npr):
            p = primes[j]
            a0 = _ZERO
            a1 = _ZERO
            a2 = _ZERO
            for k in range(L):
                hi, lo = mul_wide(coeffs[i, k], tb[j, k], wb)
                a0, c = adc(a0, lo, _ZERO, wb)
                a1, c2 = adc(a1, hi, c, wb)
                a2 += c2
            r = shoup_mm(a0, red[j, 0], red_s[j, 0], p, wb, approx)
            r += shoup_mm(a1, red[j, 1], red_s[j, 1], p, wb, approx)
            r += shoup_mm(a2, red[j, 2], red_s[j, 2], p, wb, approx)
            while r >= p:
                r -= p
            out[j, i] = r


@nb.njit(parallel=True, cache=True)
def _crt_periodic(coeffs, tb, red, red_s, primes, wb, approx, period, out):
    N, L = coeffs.shape
    npr = tb.shape[0]
    for i in nb.prange(N):
        for j in range(npr):
            p = primes[j]
            a0 = _ZERO
            a1 = _ZERO
            cnt = 0
            for k in range(L):
                hi, lo = mul_wide(coeffs[i, k], tb[j, k], wb)
                a0, c = adc(a0, lo, _ZERO, wb)
                a1 = a1 + hi + c
                cnt += 1
                if cnt == period:
                    r = shoup_mm(a0, red[j, 0], red_s[j, 0], p, wb, approx)
                    r += shoup_mm(a1, red[j, 1], red_s[j, 1], p, wb, approx)
                    if r >= p:
                        r -= p
                    a0 = r
                    a1 = _ZERO
                    cnt = 0
            r = shoup_mm(a0, red[j, 0], red_s[j, 0], p, wb, approx)
            r += shoup_mm(a1, red[j, 1], red_s[j, 1], p, wb, approx)
            if r >= p:
                r -= p
            out[j, i] = r


def crt_forward(poly: BigPoly, tables: CrtTables, strategy: AccumStrategy = THREE_WORD_ADC, *,
                approx: bool = False, out: np.ndarray | None = None,
                counter: OpCounter | None = None) -> RnsMatrix:
    """Residues of every coefficient modulo every prime, as an (np, N) matrix."""
    npr, qlimbs = tables.shape
    if poly.nlimbs != qlimbs:
        raise ValueError(f"polynomial has {poly.nlimbs} limbs, tables expect {qlimbs}")
    if poly.word.log_beta != tables.word_bits:
        raise ValueError("word size mismatch between polynomial and tables")
    strategy.check(int(tables.primes.max()), tables.word_bits)
    if out is None:
        out = np.empty((npr, poly.N), dtype=np.uint64)
    coeffs = np.ascontiguousarray(poly.limbs)
    if strategy.kind == "three_word_adc":
        _crt_adc(coeffs, tables.tb_crt, tables.red, tables.red_shoup, tables.primes,
                 tables.word_bits, approx, out)
    else:
        _crt_periodic(coeffs, tables.tb_crt, tables.red, tables.red_shoup, tables.primes,
                      tables.word_bits, approx, strategy.period, out)
    n = poly.N * qlimbs * npr
    # modmul tallies the logical reduction of each accumulator mod p_j; the
    # Shoup calls that implement it are tallied separately
    if strategy.kind == "three_word_adc":
        shoups = 3 * poly.N * npr
    else:
        shoups = 2 * poly.N * npr * (qlimbs // strategy.period + 1)
    _add(counter, "CRT", mul=n, adc=n, modmul=poly.N * npr, shoup_calls=shoups)
    return RnsMatrix(out, tables.primes)


def rns_from_signed(values, primes: np.ndarray) -> RnsMatrix:
    """Residues of small signed coefficients (|v| < 2^63), skipping the multi-word path."""
    v = np.asarray(values, dtype=np.int64)
    mag = np.abs(v).astype(np.uint64)
    p = np.asarray(primes, dtype=np.uint64)[:, None]
    r = mag[None, :] % p
    neg = (v < 0)[None, :] & (r != 0)
    data = np.where(neg, p - r, r).astype(np.uint64)
    return RnsMatrix(np.ascontiguousarray(data), np.asarray(primes, dtype=np.uint64))


# ---------------------------------------------------------------------------
# iCRT


@nb.njit(parallel=True, cache=True)
def _temp_rows(data, inv, inv_s, primes, wb, approx, out):
    npr, N = data.shape
    for j in nb.prange(npr):
        for i in range(N):
            out[j, i] = shoup_mm(data[j, i], inv[j], inv_s[j], primes[j], wb, approx)


@nb.njit(parallel=True, cache=True)
def _temp_cols(data, inv, inv_s, primes, wb, approx, out):
    # row-major residues in, (N, np) temp out: the transposition rides along
    npr, N = data.shape
    for i in nb.prange(N):
        for j in range(npr):
            out[i, j] = shoup_mm(data[j, i], inv[j], inv_s[j], primes[j], wb, approx)


@nb.njit(parallel=True, cache=True)
def _transpose(a, out):
    R, C = a.shape
    B = 64
    for bi in nb.prange((R + B - 1) // B):
        r0 = bi * B
        r1 = min(R, r0 + B)
        for c0 in range(0, C, B):
            c1 = min(C, c0 + B)
            for r in range(r0, r1):
                for c in range(c0, c1):
                    out[c, r] = a[r, c]


@nb.njit(inline="always", cache=True)
def _ripple(acc, pos, v, wb):
    # acc += v * beta^pos
    W = acc.shape[0]
    c = v
    while c != _ZERO and pos < W:
        acc[pos], c = adc(acc[pos], c, _ZERO, wb)
        pos += 1


@nb.njit(inline="always", cache=True)
def _geq(acc, m):
    for k in range(acc.shape[0] - 1, -1, -1):
        if acc[k] != m[k]:
            return acc[k] > m[k]
    return True


@nb.njit(inline="always", cache=True)
def _sub(acc, m, wb):
    # acc -= m modulo beta^W
    borrow = _ZERO
    for k in range(acc.shape[0]):
        a = acc[k]
        s = m[k]
        if wb == 32:
            b = _ONE if a < s + borrow else _ZERO
            acc[k] = (a - s - borrow) & np.uint64(0xFFFFFFFF)
        else:
            d = a - s
            b = _ONE if a < s else _ZERO
            if d < borrow:
                b = _ONE
            acc[k] = d - borrow
        borrow = b


@nb.njit(inline="always", cache=True)
def _finish(acc, mults, half_p, p_limbs, center, wb, out_row, top_mask, full):
    # acc < np * P  ->  acc mod P, optionally centred, written to out_row
    for t in range(mults.shape[0] - 1, -1, -1):
        if _geq(acc, mults[t]):
            _sub(acc, mults[t], wb)
    if center and not _geq(half_p, acc):
        _sub(acc, p_limbs, wb)
    n_out = out_row.shape[0]
    for k in range(n_out):
        out_row[k] = acc[k]
    if not full:
        out_row[n_out - 1] &= top_mask


@nb.njit(parallel=True, cache=True)
def _icrt_naive_kernel(temp, pdivp, mults, half_p, p_limbs, center, wb, top_mask, full,
                       scratch, out):
    npr, N = temp.shape
    PL = pdivp.shape[1]
    for i in nb.prange(N):
        acc = scratch[i]
        acc[:] = 0
        for j in range(npr):
            t = temp[j, i]
            for k in range(PL):
                hi, lo = mul_wide(t, pdivp[j, k], wb)
                _ripple(acc, k, lo, wb)
                _ripple(acc, k + 1, hi, wb)
        _finish(acc, mults, half_p, p_limbs, center, wb, out[i], top_mask, full)


@nb.njit(parallel=True, cache=True)
def _icrt_reordered_kernel(tempT, pdivpT, three, mults, half_p, p_limbs, center, wb, top_mask,
                           full, scratch, out):
    N, npr = tempT.shape
    PL = pdivpT.shape[0]
    for i in nb.prange(N):
        acc = scratch[i]
        acc[:] = 0
        for k in range(PL):
            s0 = _ZERO
            s1 = _ZERO
            s2 = _ZERO
            for j in range(npr):
                hi, lo = mul_wide(tempT[i, j], pdivpT[k, j], wb)
                s0, c = adc(s0, lo, _ZERO, wb)
                if three:
                    s1, c2 = adc(s1, hi, c, wb)
                    s2 += c2
                else:
                    s1 += hi + c
            _ripple(acc, k, s0, wb)
            _ripple(acc, k + 1, s1, wb)
            if three:
                _ripple(acc, k + 2, s2, wb)
        _finish(acc, mults, half_p, p_limbs, center, wb, out[i], top_mask, full)


def icrt_temp(m: RnsMatrix, tables: IcrtTables, *, transposed: bool = False,
              approx: bool = False, out: np.ndarray | None = None) -> RnsMatrix:
    """temp[j][i] = in[j][i] * (P/p_j)^-1 mod p_j, row-major or transposed."""
    _check_primes(m, tables)
    data = m.row_major()
    if transposed:
        if out is None:
            out = np.empty((m.N, m.np), dtype=np.uint64)
        _temp_cols(data, tables.tb_invP, tables.tb_invP_shoup, tables.primes, tables.word_bits,
                   approx, out)
        return RnsMatrix(out, tables.primes, TRANSPOSED)
    if out is None:
        out = np.empty_like(data)
    _temp_rows(data, tables.tb_invP, tables.tb_invP_shoup, tables.primes, tables.word_bits,
               approx, out)
    return RnsMatrix(out, tables.primes, ROW_MAJOR)


def _check_primes(m: RnsMatrix, tables: IcrtTables):
    if m.np != tables.np or not np.array_equal(m.primes, tables.primes):
        raise ValueError(f"matrix has {m.np} rows, tables expect {tables.np} matching primes")


def _output_spec(tables: IcrtTables):
    bits = tables.target_bits
    lb = tables.word_bits
    if bits is None or bits == 0:
        return tables.acc_words, np.uint64(0), True
    n_out = max(1, -(-bits // lb))
    top = bits - (n_out - 1) * lb
    mask = np.uint64((1 << top) - 1) if top < 64 else np.uint64(0xFFFFFFFFFFFFFFFF)
    return n_out, mask, False


def _to_poly(out: np.ndarray, tables: IcrtTables, full: bool, center: bool) -> BigPoly:
    if not full:
        return BigPoly(out, tables.target, tables.word_bits)
    # general target: finish the reduction on Python ints
    lb = tables.word_bits
    raw = ints_from_limbs(out, lb)
    W = tables.acc_words * lb
    vals = [(v - (1 << W)) if (center and v >> (W - 1)) else v for v in raw]
    return BigPoly.from_ints([v % tables.target for v in vals], tables.target, lb)


def _buffers(N: int, tables: IcrtTables, scratch, out):
    n_out, mask, full = _output_spec(tables)
    if scratch is None or scratch.shape != (N, tables.acc_words):
        scratch = np.empty((N, tables.acc_words), dtype=np.uint64)
    if out is None or out.shape != (N, n_out):
        out = np.empty((N, n_out), dtype=np.uint64)
    return scratch, out, mask, full


def icrt_naive(m: RnsMatrix, tables: IcrtTables, *, center: bool = False, approx: bool = False,
               scratch=None, out=None, counter: OpCounter | None = None) -> BigPoly:
    """Coefficient i = (sum_j temp[j][i] * P/p_j mod P) mod target.

    With ``center`` the value mod P is first lifted to (-P/2, P/2], which is
    what a signed negacyclic product needs.
    """
    temp = icrt_temp(m, tables, approx=approx)
    scratch, out, mask, full = _buffers(m.N, tables, scratch, out)
    _icrt_naive_kernel(temp.data, tables.tb_Pdivp, tables.P_multiples, tables.half_P,
                       tables.P_limbs, center, tables.word_bits, mask, full, scratch, out)
    n = m.N * m.np * tables.plimbs
    # the temp step is a product by TB_invP and a reduction mod p_j, fused in one
    # Shoup modmul but tallied as two, like the CRT/iCRT operation table
    _add(counter, "iCRT", mul=n, adc=2 * n, modmul=2 * m.N * m.np, shoup_calls=m.N * m.np)
    return _to_poly(out, tables, full, center)


def icrt_reordered(m: RnsMatrix, tables: IcrtTables, *, center: bool = False,
                   approx: bool = False, scratch=None, out=None, temp_buf=None,
                   counter: OpCounter | None = None) -> BigPoly:
    """Loop-reordered iCRT: per output limb, a short inner product over primes."""
    _check_primes(m, tables)
    if m.layout == TRANSPOSED:
        temp = icrt_temp(transpose(m), tables, transposed=True, approx=approx, out=temp_buf)
    else:
        temp = icrt_temp(m, tables, transposed=True, approx=approx, out=temp_buf)
    scratch, out, mask, full = _buffers(m.N, tables, scratch, out)
    _icrt_reordered_kernel(temp.data, tables.tb_Pdivp_T, tables.small_words == 3,
                           tables.P_multiples, tables.half_P, tables.P_limbs, center,
                           tables.word_bits, mask, full, scratch, out)
    n = m.N * m.np * tables.plimbs
    _add(counter, "iCRT", mul=n, adc=n + m.N * tables.plimbs, modmul=2 * m.N * m.np,
         shoup_calls=m.N * m.np)
    return _to_poly(out, tables, full, center)


def transpose(m: RnsMatrix) -> RnsMatrix:
    out = np.empty(m.data.shape[::-1], dtype=m.data.dtype)
    _transpose(m.data, out)
    layout = TRANSPOSED if m.layout == ROW_MAJOR else ROW_MAJOR
    return RnsMatrix(out, m.primes, layout)
