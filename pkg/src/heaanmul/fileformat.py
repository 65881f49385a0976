"""Binary files for ciphertexts and keys.

Layout, all little-endian::

    magic   4 bytes  b"HEA1"
    kind    u32      0 ciphertext, 1 secret key, 2 public key, 3 evaluation key
    word    u32      limb width in bits (32 or 64)
    N       u32
    logq    u32      polynomials live modulo 2^logq
    n       u32      slot count (0 for keys)
    delta   u32      log2 of the scale (0 for keys)
    ax      N * ceil(logq/word) limbs, coefficient-major
    bx      same size

A secret key stores its ternary coefficients modulo 2^logq in ``bx`` with
``ax`` zero. A public key stores (pk1, pk0) as (ax, bx).
"""
from __future__ import annotations

import struct

import numpy as np

from .arith import WordSize
from .bigpoly import BigPoly
from .heaan import Ciphertext, EvalKey, PublicKey, SecretKey
from .limbops import add_signed, nlimbs_for

__all__ = ["MAGIC", "FormatError", "KIND_CIPHERTEXT", "KIND_SECRET", "KIND_PUBLIC", "KIND_EVAL",
           "dumps", "loads", "save", "load"]

MAGIC = b"HEA1"
_HEADER = struct.Struct("<4s6I")
KIND_CIPHERTEXT, KIND_SECRET, KIND_PUBLIC, KIND_EVAL = range(4)
_NAMES = {KIND_CIPHERTEXT: "ciphertext", KIND_SECRET: "secret key", KIND_PUBLIC: "public key",
          KIND_EVAL: "evaluation key"}


class FormatError(ValueError):
    """Malformed file (maps to CLI exit code 3)."""


def _limbs_bytes(p: BigPoly, nl: int) -> bytes:
    arr = p.limbs
    if arr.shape[1] != nl:
        raise ValueError("limb count does not match the header")
    dt = "<u8" if p.word.log_beta == 64 else "<u4"
    return np.ascontiguousarray(arr).astype(dt).tobytes()


def _pair(obj):
    if isinstance(obj, Ciphertext):
        return KIND_CIPHERTEXT, obj.ax, obj.bx, obj.logq, obj.n, obj.log_delta
    if isinstance(obj, PublicKey):
        return KIND_PUBLIC, obj.pk1, obj.pk0, obj.pk0.modulus.bit_length() - 1, 0, 0
    if isinstance(obj, EvalKey):
        return KIND_EVAL, obj.ax, obj.bx, obj.ax.modulus.bit_length() - 1, 0, 0
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps(obj, word=64, logq: int | None = None) -> bytes:
    """Serialize a Ciphertext, PublicKey or EvalKey; SecretKey needs ``word`` and ``logq``."""
    if isinstance(obj, SecretKey):
        word = word if isinstance(word, WordSize) else WordSize(int(word))
        logq = logq or 64
        zero = BigPoly(np.zeros((obj.N, nlimbs_for(logq, word.log_beta)), dtype=np.uint64),
                       1 << logq, word)
        kind, ax, bx, n, delta = KIND_SECRET, zero, add_signed(zero, obj.coeffs), 0, 0
    else:
        kind, ax, bx, logq, n, delta = _pair(obj)
    wb = ax.word.log_beta
    nl = nlimbs_for(logq, wb)
    head = _HEADER.pack(MAGIC, kind, wb, ax.N, logq, n, delta)
    return head + _limbs_bytes(ax, nl) + _limbs_bytes(bx, nl)


def loads(data: bytes, expect: int | None = None):
    if len(data) < _HEADER.size:
        raise FormatError("file is shorter than the header")
    magic, kind, wb, N, logq, n, delta = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise FormatError(f"bad magic {magic!r}, expected {MAGIC!r}")
    if kind not in _NAMES:
        raise FormatError(f"unknown object kind {kind}")
    if expect is not None and kind != expect:
        raise FormatError(f"expected a {_NAMES[expect]}, found a {_NAMES[kind]}")
    if wb not in (32, 64):
        raise FormatError(f"word size {wb} is not 32 or 64")
    if N < 2 or N & (N - 1) or logq == 0:
        raise FormatError(f"bad dimensions N={N}, logq={logq}")
    nl = nlimbs_for(logq, wb)
    size = N * nl * wb // 8
    if len(data) != _HEADER.size + 2 * size:
        raise FormatError(f"payload has {len(data) - _HEADER.size} bytes, header implies {2 * size}")
    dt = "<u8" if wb == 64 else "<u4"
    off = _HEADER.size
    polys = []
    top = logq - (nl - 1) * wb
    for _ in range(2):
        arr = np.frombuffer(data, dtype=dt, count=N * nl, offset=off).reshape(N, nl).astype(np.uint64)
        if top < wb and (arr[:, -1] >> np.uint64(top)).any():
            raise FormatError("coefficient exceeds 2^logq")
        polys.append(BigPoly(arr, 1 << logq, wb))
        off += size
    ax, bx = polys
    if kind == KIND_CIPHERTEXT:
        return Ciphertext(ax, bx, logq, n, delta)
    if kind == KIND_PUBLIC:
        return PublicKey(bx, ax)
    if kind == KIND_EVAL:
        return EvalKey(ax, bx)
    coeffs = np.array(bx.to_signed(), dtype=np.int64)
    if np.abs(coeffs).max(initial=0) > 1:
        raise FormatError("secret key coefficients are not ternary")
    return SecretKey(coeffs)


def save(path, obj, **kw):
    with open(path, "wb") as fh:
        fh.write(dumps(obj, **kw))


def load(path, expect: int | None = None):
    with open(path, "rb") as fh:
        return loads(fh.read(), expect)
