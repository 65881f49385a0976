import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from heaanmul.bigpoly import BigPoly
from heaanmul.counters import OpCounter
from heaanmul.params import PrimeSet, build_crt_tables, build_icrt_tables, prime_set_for_bits
from heaanmul.rns import THREE_WORD_ADC, AccumStrategy, crt_forward, icrt_naive, icrt_reordered, rns_from_signed

from oracles import crt_reconstruct, mod_residues


def test_toy_crt():
    ps = PrimeSet((17, 19, 23))
    m = crt_forward(BigPoly.from_ints([100], 1000), build_crt_tables(ps, 1))
    assert m.data.ravel().tolist() == [100 % 17, 100 % 19, 100 % 23]
    it = build_icrt_tables(ps, 1000)
    assert icrt_naive(m, it).to_ints() == icrt_reordered(m, it).to_ints() == [100]


@pytest.mark.parametrize("wb,bits", [(64, 64), (64, 300), (32, 96), (32, 250)])
def test_crt_matches_python_modulo(rng, wb, bits):
    ps = prime_set_for_bits(2 * bits + 10, 16, wb)
    q = 1 << bits
    x = BigPoly.random(16, q, rng, wb)
    m = crt_forward(x, build_crt_tables(ps, x.nlimbs))
    assert m.data.tolist() == mod_residues(x.to_ints(), ps.primes)


@pytest.mark.parametrize("strategy", ["periodic_mod:1", "periodic_mod:4", "periodic_mod:16"])
def test_strategies_agree(rng, strategy):
    ps = prime_set_for_bits(1300, 32)
    x = BigPoly.random(32, 1 << 1200, rng, 64)
    t = build_crt_tables(ps, x.nlimbs)
    a = crt_forward(x, t, THREE_WORD_ADC)
    b = crt_forward(x, t, AccumStrategy.parse(strategy))
    assert np.array_equal(a.data, b.data)


def test_periodic_bound_checked():
    with pytest.raises(ValueError):
        AccumStrategy.parse("periodic_mod:64").check((1 << 60) - 1, 64)
    AccumStrategy.parse("periodic_mod:16").check((1 << 60) - 1, 64)
    with pytest.raises(ValueError):
        AccumStrategy.parse("bogus")


@given(st.lists(st.integers(0, 2**180 - 1), min_size=8, max_size=8), st.sampled_from([64, 32]),
       st.booleans())
@settings(max_examples=40)
def test_icrt_inverts_crt(vals, wb, approx):
    ps = prime_set_for_bits(200, 8, wb)
    q = 1 << 180
    x = BigPoly.from_ints(vals, q, wb)
    m = crt_forward(x, build_crt_tables(ps, x.nlimbs), approx=approx)
    it = build_icrt_tables(ps, q)
    assert icrt_naive(m, it, approx=approx).to_ints() == vals
    assert icrt_reordered(m, it, approx=approx).to_ints() == vals


def test_icrt_against_python_crt_with_centering(rng):
    ps = prime_set_for_bits(200, 8, 64)
    P = ps.P
    data = np.stack([rng.integers(0, p, 8, dtype=np.uint64) for p in ps.primes])
    from heaanmul.rns import RnsMatrix
    m = RnsMatrix(data, ps.array())
    target = 1 << 128
    want = [v % target for v in crt_reconstruct(data.tolist(), ps.primes, center=True)]
    it = build_icrt_tables(ps, target)
    assert icrt_naive(m, it, center=True).to_ints() == want
    assert icrt_reordered(m, it, center=True).to_ints() == want
    # uncentred, non power-of-two target
    it = build_icrt_tables(ps, 10**30 + 7)
    want = [v % (10**30 + 7) for v in crt_reconstruct(data.tolist(), ps.primes)]
    assert icrt_reordered(m, it).to_ints() == want
    assert P > 0


def test_signed_residues():
    m = rns_from_signed([-1, 0, 5, -7], np.array([17, 19], dtype=np.uint64))
    assert m.data.tolist() == [[16, 0, 5, 10], [18, 0, 5, 12]]


def test_counters(rng):
    ps = prime_set_for_bits(400, 16, 64)
    x = BigPoly.random(16, 1 << 128, rng, 64)
    c = OpCounter()
    m = crt_forward(x, build_crt_tables(ps, 2), counter=c)
    it = build_icrt_tables(ps, 1 << 128)
    icrt_reordered(m, it, counter=c)
    assert c.get("CRT", "mul") == 16 * 2 * ps.np == c.get("CRT", "adc")
    assert c.get("CRT", "modmul") == 16 * ps.np
    assert c.get("iCRT", "mul") == 16 * ps.np * it.plimbs


def test_limb_count_mismatch(rng):
    ps = prime_set_for_bits(400, 16, 64)
    with pytest.raises(ValueError):
        crt_forward(BigPoly.random(16, 1 << 128, rng, 64), build_crt_tables(ps, 3))


def test_shoup_call_tallies(rng):
    ps = prime_set_for_bits(4 * 58, 16)
    x = BigPoly.random(16, 1 << 128, rng, 64)
    c = OpCounter()
    crt_forward(x, build_crt_tables(ps, 2), counter=c)
    assert c.get("CRT", "shoup_calls") == 3 * 16 * ps.np
    c.reset()
    crt_forward(x, build_crt_tables(ps, 2), AccumStrategy.periodic_mod(1), counter=c)
    assert c.get("CRT", "shoup_calls") == 2 * 16 * ps.np * 3
    m = crt_forward(x, build_crt_tables(ps, 2))
    c.reset()
    icrt_reordered(m, build_icrt_tables(ps, 1 << 128), counter=c)
    assert c.get("iCRT", "shoup_calls") == 16 * ps.np
    assert c.get("iCRT", "modmul") == 2 * 16 * ps.np
