"""Non-RNS CKKS (HEAAN) homomorphic multiplication kernels and benchmark harness.

The package implements the big-integer polynomial multiplication pipeline
(CRT -> NTT -> pointwise -> iNTT -> iCRT) used by HEAAN's HE Mul, the scheme
layer on top of it, an analytical cost model and a per-function benchmark.

This is a performance-analysis artifact. Nothing here is constant time and
the key material it produces must not be used to protect real data.
"""
import os

# TBB shipped with the base image is too old for numba; pick a layer that always works.
os.environ.setdefault("NUMBA_THREADING_LAYER", "workqueue")

from .arith import (  # noqa: E402
    BigInt,
    ShoupPair,
    WordSize,
    bigint_add,
    bigint_mod,
    bigint_mul,
    shoup_modmul,
    shoup_modmul_approx,
    shoup_precompute,
    word_mulhi,
)
from .params import Params, PrimeSet, generate_primes, make_params  # noqa: E402
from .polymul import BigPoly, KernelConfig, PolyMultiplier, poly_mul, schoolbook_negacyclic  # noqa: E402
from .heaan import (  # noqa: E402
    Ciphertext,
    Context,
    EvalKey,
    Plaintext,
    PublicKey,
    SecretKey,
    decode,
    decrypt,
    encode,
    encrypt,
    he_add,
    he_mul,
    keygen,
    rescale,
    shift_right,
)

__version__ = "0.1.0"

__all__ = [
    "BigInt",
    "BigPoly",
    "Ciphertext",
    "Context",
    "EvalKey",
    "KernelConfig",
    "Params",
    "Plaintext",
    "PolyMultiplier",
    "PrimeSet",
    "PublicKey",
    "SecretKey",
    "ShoupPair",
    "WordSize",
    "bigint_add",
    "bigint_mod",
    "bigint_mul",
    "decode",
    "decrypt",
    "encode",
    "encrypt",
    "generate_primes",
    "he_add",
    "he_mul",
    "keygen",
    "make_params",
    "poly_mul",
    "rescale",
    "schoolbook_negacyclic",
    "shift_right",
    "shoup_modmul",
    "shoup_modmul_approx",
    "shoup_precompute",
    "word_mulhi",
]
