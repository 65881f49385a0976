"""Big-integer negacyclic polynomial multiplication: CRT, NTT, pointwise, iNTT, iCRT."""
from __future__ import annotations

import time
from collections import defaultdict
from contextlib import contextmanager
from dataclasses import dataclass, field, replace

import numba as nb
import numpy as np

from .bigpoly import BigPoly
from .counters import OpCounter, _add
from .ntt import RADICES, barrett_constants, ntt_forward, ntt_inverse, pointwise_modmul
from .params import (
    PrimeSet,
    build_crt_tables,
    build_icrt_tables,
    build_ntt_tables,
    prime_set_for_bits,
)
from .rns import AccumStrategy, RnsMatrix, crt_forward, icrt_naive, icrt_reordered, rns_from_signed

__all__ = [
    "BigPoly",
    "KernelConfig",
    "Timers",
    "PolyMultiplier",
    "poly_mul",
    "schoolbook_negacyclic",
    "SCHOOLBOOK_MAX_N",
    "CATEGORIES",
]

CATEGORIES = ("CRT", "NTT", "iNTT", "iCRT", "Extra")
SCHOOLBOOK_MAX_N = 256


@dataclass(frozen=True)
class KernelConfig:
    """Kernel choices; none of them changes any output bit."""

    radix: int = 2
    inv_radix: int | None = None
    lazy: bool = False
    approx: bool = False
    crt_strategy: AccumStrategy = field(default_factory=AccumStrategy)
    icrt: str = "reordered"

    def __post_init__(self):
        if self.radix not in RADICES or (self.inv_radix is not None and self.inv_radix not in RADICES):
            raise ValueError(f"radix must be one of {RADICES}")
        if self.icrt not in ("naive", "reordered"):
            raise ValueError(f"icrt must be 'naive' or 'reordered', got {self.icrt!r}")

    @property
    def iradix(self) -> int:
        return self.inv_radix or self.radix

    def with_(self, **kw) -> "KernelConfig":
        return replace(self, **kw)

    def describe(self) -> dict:
        return {"radix": self.radix, "inv_radix": self.iradix, "lazy": self.lazy,
                "shoup": "approx" if self.approx else "exact",
                "crt_strategy": str(self.crt_strategy), "icrt": self.icrt}


class Timers:
    """Wall-clock seconds accumulated per pipeline function."""

    def __init__(self):
        self.seconds = defaultdict(float)

    @contextmanager
    def __call__(self, category: str):
        t0 = time.perf_counter()
        try:
            yield
        finally:
            self.seconds[category] += time.perf_counter() - t0

    def reset(self):
        self.seconds.clear()

    def snapshot(self) -> dict[str, float]:
        return {c: self.seconds.get(c, 0.0) for c in CATEGORIES}


@nb.njit(parallel=True, cache=True)
def _addmod(a, b, primes, out):
    for j in nb.prange(a.shape[0]):
        p = primes[j]
        for i in range(a.shape[1]):
            s = a[j, i] + b[j, i]
            out[j, i] = s - (p if s >= p else np.uint64(0))


@nb.njit(parallel=True, cache=True)
def _submod(a, b, primes, out):
    for j in nb.prange(a.shape[0]):
        p = primes[j]
        for i in range(a.shape[1]):
            x = a[j, i]
            y = b[j, i]
            out[j, i] = x - y if x >= y else x + p - y


class PolyMultiplier:
    """Products of degree-N polynomials over one prime set.

    Inputs are BigPolys with ``qlimbs`` limbs; outputs are reduced modulo
    ``target``. Operands can be transformed once with :meth:`forward` and
    reused in several products. Signed negacyclic sums are recovered by a
    centred iCRT, so P must exceed twice the largest coefficient magnitude.
    """

    def __init__(self, ps: PrimeSet, N: int, qlimbs: int, target: int,
                 config: KernelConfig | None = None, *, counter: OpCounter | None = None,
                 timers: Timers | None = None, ntt_tables=None):
        self.ps = ps
        self.N = N
        self.qlimbs = qlimbs
        self.target = int(target)
        self.config = config or KernelConfig()
        self.word = ps.word
        self.counter = counter
        self.timers = timers or Timers()
        self.crt_tables = build_crt_tables(ps, qlimbs)
        self.ntt_tables = ntt_tables if ntt_tables is not None else build_ntt_tables(ps, N)
        self.icrt_tables = build_icrt_tables(ps, self.target)
        self.barrett = barrett_constants(ps.primes)
        self.primes = ps.array()
        if self.config.radix > N or self.config.iradix > N:
            raise ValueError(f"radix exceeds N = {N}")

    @property
    def np(self) -> int:
        return self.ps.np

    def _empty(self) -> np.ndarray:
        return np.empty((self.np, self.N), dtype=np.uint64)

    # stages -----------------------------------------------------------------

    def crt(self, poly: BigPoly) -> RnsMatrix:
        if poly.N != self.N:
            raise ValueError(f"polynomial degree {poly.N} != {self.N}")
        out = self._empty()
        with self.timers("CRT"):
            return crt_forward(poly, self.crt_tables, self.config.crt_strategy,
                               approx=self.config.approx, out=out, counter=self.counter)

    def ntt(self, m: RnsMatrix) -> RnsMatrix:
        with self.timers("NTT"):
            ntt_forward(m.data, self.ntt_tables, self.config.radix, lazy=self.config.lazy,
                        approx=self.config.approx, inplace=True, counter=self.counter)
        return m

    def forward(self, poly: BigPoly) -> RnsMatrix:
        """CRT then NTT."""
        return self.ntt(self.crt(poly))

    def forward_small(self, values) -> RnsMatrix:
        """NTT form of a polynomial with small signed integer coefficients."""
        with self.timers("Extra"):
            m = rns_from_signed(values, self.primes)
        return self.ntt(m)

    def pointwise(self, a: RnsMatrix, b: RnsMatrix) -> RnsMatrix:
        out = self._empty()
        with self.timers("Extra"):
            pointwise_modmul(a.data, b.data, self.primes, out=out, word_bits=self.word.log_beta,
                             barrett=self.barrett)
        _add(self.counter, "pointwise", modmul=self.np * self.N)
        return RnsMatrix(out, self.primes)

    def add(self, a: RnsMatrix, b: RnsMatrix) -> RnsMatrix:
        out = self._empty()
        with self.timers("Extra"):
            _addmod(a.data, b.data, self.primes, out)
        return RnsMatrix(out, self.primes)

    def sub(self, a: RnsMatrix, b: RnsMatrix) -> RnsMatrix:
        out = self._empty()
        with self.timers("Extra"):
            _submod(a.data, b.data, self.primes, out)
        return RnsMatrix(out, self.primes)

    def backward(self, m: RnsMatrix, *, center: bool = True) -> BigPoly:
        """iNTT then iCRT; the input matrix is left untouched."""
        work = m.data.copy()
        with self.timers("iNTT"):
            ntt_inverse(work, self.ntt_tables, self.config.iradix, lazy=self.config.lazy,
                        approx=self.config.approx, inplace=True, counter=self.counter)
        res = RnsMatrix(work, self.primes)
        with self.timers("iCRT"):
            if self.config.icrt == "naive":
                return icrt_naive(res, self.icrt_tables, center=center, approx=self.config.approx,
                                  counter=self.counter)
            return icrt_reordered(res, self.icrt_tables, center=center,
                                  approx=self.config.approx, counter=self.counter)

    def multiply(self, a, b) -> BigPoly:
        """a*b mod (X^N + 1, target); operands may be BigPolys or forward() results."""
        fa = a if isinstance(a, RnsMatrix) else self.forward(a)
        fb = fa if b is a else (b if isinstance(b, RnsMatrix) else self.forward(b))
        return self.backward(self.pointwise(fa, fb))


def _bound_bits(a: BigPoly, b: BigPoly) -> int:
    # |sum of N products| < N * (a.mod - 1) * (b.mod - 1); one more bit for the sign
    N = a.N
    return ((a.modulus - 1) * (b.modulus - 1) * N).bit_length() + 1


def poly_mul(a: BigPoly, b: BigPoly, ps: PrimeSet | None = None, tables=None,
             config: KernelConfig | None = None, target: int | None = None) -> BigPoly:
    """c = a*b mod (X^N + 1, target), target defaulting to a's modulus.

    ``tables`` may be a ready PolyMultiplier to skip table construction.
    """
    if a.N != b.N:
        raise ValueError("operands have different degrees")
    if a.word != b.word:
        raise ValueError("operands use different word sizes")
    target = int(target or a.modulus)
    need = _bound_bits(a, b)
    if isinstance(tables, PolyMultiplier):
        mult = tables
    else:
        if ps is None:
            ps = prime_set_for_bits(need, a.N, a.word)
        mult = PolyMultiplier(ps, a.N, max(a.nlimbs, b.nlimbs), target, config)
    if mult.ps.P.bit_length() <= need:
        raise ValueError(f"prime product has {mult.ps.P.bit_length()} bits, product needs > {need}")
    nl = mult.qlimbs

    def fit(x: BigPoly) -> BigPoly:
        if x.nlimbs == nl:
            return x
        if x.nlimbs > nl:
            raise ValueError("operand has more limbs than the multiplier accepts")
        pad = np.zeros((x.N, nl - x.nlimbs), dtype=np.uint64)
        return BigPoly(np.hstack([x.limbs, pad]), x.modulus, x.word)

    return mult.multiply(fit(a), fit(b))


def schoolbook_negacyclic(a: BigPoly, b: BigPoly, modulus: int | None = None) -> BigPoly:
    """O(N^2) reference product in Z_modulus[X]/(X^N + 1)."""
    if a.N != b.N:
        raise ValueError("operands have different degrees")
    N = a.N
    if N > SCHOOLBOOK_MAX_N:
        raise ValueError(f"schoolbook oracle is limited to N <= {SCHOOLBOOK_MAX_N}")
    modulus = int(modulus or a.modulus)
    x, y = a.to_ints(), b.to_ints()
    c = [0] * N
    for i in range(N):
        if x[i] == 0:
            continue
        for j in range(N):
            k = i + j
            if k < N:
                c[k] += x[i] * y[j]
            else:
                c[k - N] -= x[i] * y[j]
    return BigPoly.from_ints([v % modulus for v in c], modulus, a.word)

