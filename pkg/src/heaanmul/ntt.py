"""Negacyclic NTT over each prime row.

Forward is Cooley-Tukey on natural-order input with bit-reversed twiddles
and produces bit-reversed output; the inverse is Gentleman-Sande on
bit-reversed input followed by scaling with N^-1, so a
forward -> pointwise -> inverse chain needs no permutation.

``radix`` k > 2 fuses log2(k) stages into one memory pass: each pass walks
over groups of k strided elements, loads them into locals, runs the fused
butterflies there and writes them back (see ``_ntt_kernels``).
"""
from __future__ import annotations

import numba as nb
import numpy as np

from ._ntt_kernels import KERNELS
from .arith import mulmod_barrett
from .ntt_core import butt_eager, ibutt_eager
from .counters import OpCounter, _add
from .params import NttTables, PrimeSet

__all__ = [
    "RADICES",
    "butt",
    "ibutt",
    "ntt_forward",
    "ntt_inverse",
    "pointwise_modmul",
    "barrett_constants",
    "memory_passes",
]

RADICES = (2, 4, 8, 16, 32)


def memory_passes(N: int, radix: int) -> int:
    """Passes over the row: ceil(log_k N)."""
    _check_radix(radix)
    logn = int(N).bit_length() - 1
    return -(-logn // (radix.bit_length() - 1))


def _check_radix(radix: int):
    if radix not in RADICES:
        raise ValueError(f"radix must be one of {RADICES}, got {radix}")


# ---------------------------------------------------------------------------
# butterflies


def butt(a: int, b: int, p: int, w, word=64, approx: bool = False) -> tuple[int, int]:
    """Cooley-Tukey butterfly: (a + b*w, a - b*w) mod p; ``w`` is a ShoupPair."""
    wb = word if isinstance(word, int) else word.log_beta
    x, y = butt_eager(np.uint64(a), np.uint64(b), np.uint64(w.y), np.uint64(w.y_shoup),
                      np.uint64(p), wb, approx)
    return int(x), int(y)


def ibutt(a: int, b: int, p: int, invw, word=64, approx: bool = False) -> tuple[int, int]:
    """Gentleman-Sande butterfly: (a + b, (a - b)*invw) mod p."""
    wb = word if isinstance(word, int) else word.log_beta
    x, y = ibutt_eager(np.uint64(a), np.uint64(b), np.uint64(invw.y), np.uint64(invw.y_shoup),
                       np.uint64(p), wb, approx)
    return int(x), int(y)


# ---------------------------------------------------------------------------
# transforms (kernels generated into _ntt_kernels)


def _kernels(word_bits: int, lazy: bool, approx: bool):
    return KERNELS[(int(word_bits), bool(lazy), bool(approx))]


def _as_matrix(x, tables: NttTables) -> tuple[np.ndarray, bool]:
    arr = np.array(x, dtype=np.uint64, copy=True)
    single = arr.ndim == 1
    if single:
        arr = arr[None, :]
    if arr.ndim != 2:
        raise ValueError("expected a row or an (np, N) matrix")
    N = arr.shape[1]
    if N < 2 or N & (N - 1):
        raise ValueError(f"row length must be a power of two >= 2, got {N}")
    if N != tables.N or arr.shape[0] != tables.np:
        raise ValueError(f"shape {arr.shape} does not match tables ({tables.np}, {tables.N})")
    return arr, single


def _radix_bits(radix: int, N: int) -> int:
    _check_radix(radix)
    if radix > N:
        raise ValueError(f"radix {radix} exceeds N = {N}")
    return radix.bit_length() - 1


def ntt_forward(x, tables: NttTables, radix: int = 2, *, lazy: bool = False,
                approx: bool = False, inplace: bool = False,
                counter: OpCounter | None = None) -> np.ndarray:
    """Forward negacyclic NTT of one row or of every row of an (np, N) matrix.

    Output is in bit-reversed order. With ``inplace`` a contiguous uint64
    matrix is transformed without a copy.
    """
    if inplace:
        arr, single = x, False
        if arr.shape != (tables.np, tables.N):
            raise ValueError("in-place transform needs an (np, N) matrix matching the tables")
    else:
        arr, single = _as_matrix(x, tables)
    r = _radix_bits(radix, arr.shape[1])
    fwd, _ = _kernels(tables.word_bits, lazy, approx)
    fwd(arr, tables.tb_w, tables.tb_w_shoup, tables.primes, r)
    npr, N = arr.shape
    logn = N.bit_length() - 1
    _add(counter, "NTT", modmul=npr * N // 2 * logn, addsub=npr * N * logn)
    return arr[0] if single else arr


def ntt_inverse(x, tables: NttTables, radix: int = 2, *, lazy: bool = False,
                approx: bool = False, inplace: bool = False,
                counter: OpCounter | None = None) -> np.ndarray:
    """Inverse of :func:`ntt_forward`, including the final N^-1 scaling."""
    if inplace:
        arr, single = x, False
        if arr.shape != (tables.np, tables.N):
            raise ValueError("in-place transform needs an (np, N) matrix matching the tables")
    else:
        arr, single = _as_matrix(x, tables)
    r = _radix_bits(radix, arr.shape[1])
    _, inv = _kernels(tables.word_bits, lazy, approx)
    inv(arr, tables.tb_invw, tables.tb_invw_shoup, tables.n_inv, tables.n_inv_shoup,
        tables.primes, r)
    npr, N = arr.shape
    logn = N.bit_length() - 1
    _add(counter, "iNTT", modmul=npr * (N // 2 * logn + N), addsub=npr * N * logn)
    return arr[0] if single else arr


# ---------------------------------------------------------------------------
# pointwise


def barrett_constants(primes) -> tuple[np.ndarray, np.ndarray]:
    ps = [int(p) for p in np.asarray(primes).ravel()]
    k = np.array([p.bit_length() for p in ps], dtype=np.int64)
    mu = np.array([(1 << (2 * p.bit_length())) // p for p in ps], dtype=np.uint64)
    return mu, k


@nb.njit(parallel=True, cache=True)
def _pointwise(a, b, primes, mu, kb, wb, out):
    npr, N = a.shape
    for j in nb.prange(npr):
        p = primes[j]
        m = mu[j]
        k = kb[j]
        for i in range(N):
            out[j, i] = mulmod_barrett(a[j, i], b[j, i], p, m, k, wb)


def pointwise_modmul(a, b, ps, *, out: np.ndarray | None = None, word_bits: int | None = None,
                     barrett=None) -> np.ndarray:
    """out[j][i] = a[j][i] * b[j][i] mod p_j for (np, N) residue matrices."""
    primes = ps.array() if isinstance(ps, PrimeSet) else np.asarray(ps, dtype=np.uint64)
    a = np.asarray(a, dtype=np.uint64)
    b = np.asarray(b, dtype=np.uint64)
    if a.shape != b.shape or a.ndim != 2 or a.shape[0] != len(primes):
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape} over {len(primes)} primes")
    if word_bits is None:
        word_bits = ps.word.log_beta if isinstance(ps, PrimeSet) else 64
    mu, k = barrett if barrett is not None else barrett_constants(primes)
    if out is None:
        out = np.empty_like(a)
    _pointwise(a, b, primes, mu, k, word_bits, out)
    return out


def direct_ntt(row, p: int, psi: int) -> list[int]:
    """O(N^2) evaluation at psi^(2*bitrev(i)+1); reference for tests."""
    N = len(row)
    logn = N.bit_length() - 1
    out = []
    for i in range(N):
        e = 2 * int(format(i, f"0{logn}b")[::-1], 2) + 1 if logn else 1
        x = pow(psi, e, p)
        out.append(sum(int(c) * pow(x, k, p) for k, c in enumerate(row)) % p)
    return out


__all__ += ["direct_ntt"]
