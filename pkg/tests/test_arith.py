import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from heaanmul.arith import (
    BigInt,
    bigint_add,
    bigint_mod,
    bigint_mul,
    mulhi_array,
    shoup_full_reduce,
    shoup_modmul,
    shoup_modmul_approx,
    shoup_modmul_array,
    shoup_precompute,
    word_mulhi,
)
from heaanmul.params import is_prime

U64 = st.integers(0, 2**64 - 1)


def small_primes(limit):
    return [p for p in range(3, limit) if is_prime(p)]


@given(U64, U64)
def test_mulhi_emulation_matches_python(x, y):
    got = mulhi_array([x], [y], 64)[0]
    assert int(got) == (x * y) >> 64 == word_mulhi(x, y)


@given(U64, U64)
def test_approx_mulhi_undershoots_by_at_most_two(x, y):
    got = int(mulhi_array([x], [y], 64, approx=True)[0])
    assert 0 <= ((x * y) >> 64) - got <= 2


@given(st.integers(0, 2**32 - 1), st.integers(0, 2**32 - 1))
def test_mulhi_32bit_words(x, y):
    assert int(mulhi_array([x], [y], 32)[0]) == (x * y) >> 32


def test_shoup_precompute_rejects_bad_operands():
    with pytest.raises(ValueError):
        shoup_precompute(5, 5)
    with pytest.raises(ValueError):
        shoup_precompute(1, 2**64 + 1)


def test_shoup_small_example():
    sp = shoup_precompute(3, 17, 64)
    assert shoup_modmul(5, sp, 17) == 15
    assert shoup_modmul(16, sp, 17) == 48 % 17


@pytest.mark.parametrize("p", small_primes(200))
def test_shoup_exhaustive_scalar(p):
    for y in range(p):
        sp = shoup_precompute(y, p, 64)
        for x in range(p):
            assert shoup_modmul(x, sp, p) == x * y % p
            r = shoup_modmul_approx(x, sp, p)
            assert r < 4 * p and (r - x * y) % p == 0
            assert shoup_full_reduce(r, p) == x * y % p


@given(st.integers(2**57, 2**60), U64, st.data())
@settings(max_examples=300)
def test_shoup_kernel_full_width(p, x, data):
    p |= 1
    y = data.draw(st.integers(0, p - 1))
    ys = (y << 64) // p
    assert int(shoup_modmul_array([x], y, ys, p)[0]) == x * y % p
    lazy = int(shoup_modmul_array([x], y, ys, p, approx=True, reduce=False)[0])
    assert (lazy - x * y % p) in (0, p, 2 * p, 3 * p)


@given(st.integers(2**27, 2**30), st.integers(0, 2**32 - 1), st.data())
def test_shoup_kernel_32bit(p, x, data):
    p |= 1
    y = data.draw(st.integers(0, p - 1))
    ys = (y << 32) // p
    for approx in (False, True):
        assert int(shoup_modmul_array([x], y, ys, p, 32, approx=approx)[0]) == x * y % p


def _big(w):
    return st.integers(0, 2**(w * 5) - 1).map(lambda v: (v, w))


@given(st.integers(0, 2**300), st.integers(0, 2**300), st.sampled_from([32, 64]))
def test_bigint_add_mul(a, b, w):
    A, B = BigInt.from_int(a, w), BigInt.from_int(b, w)
    assert int(bigint_add(A, B)) == a + b
    assert int(bigint_mul(A, B)) == a * b


@given(st.integers(0, 2**400), st.integers(1, 2**200), st.sampled_from([32, 64]))
def test_bigint_mod(a, m, w):
    assert int(bigint_mod(BigInt.from_int(a, w), BigInt.from_int(m, w))) == a % m


def test_bigint_roundtrip_and_errors():
    v = 2**130 + 5
    assert int(BigInt.from_int(v, 32)) == v
    assert BigInt.from_int(v, 64).nlimbs == 3
    with pytest.raises(ValueError):
        BigInt.from_int(-1)
    with pytest.raises(ValueError):
        BigInt.from_int(v, 64, nlimbs=2)
    with pytest.raises(ValueError):
        bigint_mod(BigInt.from_int(5), BigInt.from_int(0))
    with pytest.raises(ValueError):
        bigint_add(BigInt.from_int(1, 32), BigInt.from_int(1, 64))


def test_shoup_array_vectorised_against_numpy_objects(rng):
    p = (1 << 59) + 21
    while not is_prime(p):
        p += 2
    x = rng.integers(0, 2**63, 5000, dtype=np.uint64)
    y = rng.integers(0, p, 5000, dtype=np.uint64)
    ys = np.array([(int(v) << 64) // p for v in y], dtype=np.uint64)
    got = shoup_modmul_array(x, y, ys, p)
    assert all(int(g) == int(a) * int(b) % p for g, a, b in zip(got, x, y))
