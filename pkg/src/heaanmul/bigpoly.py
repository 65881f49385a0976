"""Polynomials with multi-word integer coefficients."""
from __future__ import annotations

import numpy as np

from .arith import BigInt, WordSize, _as_word


def _limb_dtype(word: WordSize):
    return np.dtype("<u8") if word.log_beta == 64 else np.dtype("<u4")


def limbs_from_ints(values, nlimbs: int, word=64) -> np.ndarray:
    """(len(values), nlimbs) uint64 matrix of little-endian limbs of non-negative ints."""
    word = _as_word(word)
    nbytes = nlimbs * word.log_beta // 8
    try:
        buf = b"".join(int(v).to_bytes(nbytes, "little") for v in values)
    except OverflowError as exc:
        raise ValueError(f"coefficient does not fit in {nlimbs} limbs or is negative") from exc
    arr = np.frombuffer(buf, dtype=_limb_dtype(word)).reshape(-1, nlimbs)
    return arr.astype(np.uint64)


def ints_from_limbs(limbs: np.ndarray, word=64) -> list[int]:
    word = _as_word(word)
    arr = np.ascontiguousarray(limbs, dtype=_limb_dtype(word))
    return [int.from_bytes(row.tobytes(), "little") for row in arr]


class BigPoly:
    """N coefficients in [0, modulus), stored as an (N, nlimbs) limb matrix."""

    __slots__ = ("limbs", "modulus", "word")

    def __init__(self, limbs: np.ndarray, modulus: int, word=64):
        self.word = _as_word(word)
        self.modulus = int(modulus)
        limbs = np.asarray(limbs, dtype=np.uint64)
        if limbs.ndim != 2:
            raise ValueError("limb matrix must be 2-D (N, nlimbs)")
        if self.modulus <= 0:
            raise ValueError("modulus must be positive")
        need = max(1, -(-(self.modulus - 1).bit_length() // self.word.log_beta))
        if limbs.shape[1] < need:
            raise ValueError(f"{limbs.shape[1]} limbs cannot hold values below the modulus")
        self.limbs = limbs

    @classmethod
    def from_ints(cls, values, modulus: int, word=64, nlimbs: int | None = None) -> "BigPoly":
        word = _as_word(word)
        modulus = int(modulus)
        values = [int(v) for v in values]
        if any(v < 0 or v >= modulus for v in values):
            raise ValueError("coefficients must lie in [0, modulus)")
        nlimbs = nlimbs or max(1, -(-(modulus - 1).bit_length() // word.log_beta))
        return cls(limbs_from_ints(values, nlimbs, word), modulus, word)

    @classmethod
    def from_signed(cls, values, modulus: int, word=64) -> "BigPoly":
        modulus = int(modulus)
        return cls.from_ints([int(v) % modulus for v in values], modulus, word)

    @classmethod
    def zeros(cls, N: int, modulus: int, word=64) -> "BigPoly":
        word = _as_word(word)
        nlimbs = max(1, -(-(int(modulus) - 1).bit_length() // word.log_beta))
        return cls(np.zeros((N, nlimbs), dtype=np.uint64), modulus, word)

    @classmethod
    def random(cls, N: int, modulus: int, rng: np.random.Generator, word=64) -> "BigPoly":
        modulus = int(modulus)
        if modulus & (modulus - 1) == 0:
            word = _as_word(word)
            bits = modulus.bit_length() - 1
            nlimbs = max(1, -(-bits // word.log_beta))
            raw = rng.integers(0, 1 << 32, size=(N, nlimbs * word.log_beta // 32), dtype=np.uint64)
            if word.log_beta == 64:
                raw = raw[:, 0::2] | (raw[:, 1::2] << np.uint64(32))
            top = bits - (nlimbs - 1) * word.log_beta
            if top < word.log_beta:
                raw[:, -1] &= np.uint64((1 << top) - 1)
            return cls(raw, modulus, word)
        vals = [int.from_bytes(rng.bytes(modulus.bit_length() // 8 + 8), "little") % modulus
                for _ in range(N)]
        return cls.from_ints(vals, modulus, word)

    @property
    def N(self) -> int:
        return self.limbs.shape[0]

    @property
    def nlimbs(self) -> int:
        return self.limbs.shape[1]

    def to_ints(self) -> list[int]:
        return ints_from_limbs(self.limbs, self.word)

    def to_signed(self) -> list[int]:
        """Coefficients lifted to (-modulus/2, modulus/2]."""
        half = self.modulus // 2
        return [v - self.modulus if v > half else v for v in self.to_ints()]

    def coeff(self, i: int) -> BigInt:
        return BigInt([int(x) for x in self.limbs[i]], self.word)

    def copy(self) -> "BigPoly":
        return BigPoly(self.limbs.copy(), self.modulus, self.word)

    def __eq__(self, other) -> bool:
        if not isinstance(other, BigPoly):
            return NotImplemented
        return self.modulus == other.modulus and self.to_ints() == other.to_ints()

    def __repr__(self):
        return f"BigPoly(N={self.N}, modulus_bits={self.modulus.bit_length()}, limbs={self.nlimbs})"
