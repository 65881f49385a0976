import struct

import numpy as np
import pytest

from heaanmul import decode, decrypt, encode, encrypt
from heaanmul.fileformat import (
    KIND_CIPHERTEXT,
    KIND_EVAL,
    KIND_PUBLIC,
    KIND_SECRET,
    MAGIC,
    FormatError,
    dumps,
    load,
    loads,
    save,
)


@pytest.fixture(scope="module")
def ct(small_params, small_keys):
    return encrypt(encode([0.5, -0.25j], small_params), small_keys[1], small_params, 3)


def test_ciphertext_roundtrip(ct):
    data = dumps(ct)
    assert data[:4] == MAGIC
    back = loads(data, KIND_CIPHERTEXT)
    assert back == ct and back.n == ct.n and back.log_delta == ct.log_delta
    assert dumps(back) == data


def test_key_roundtrips(small_params, small_keys):
    sk, pk, evk = small_keys
    sk2 = loads(dumps(sk, small_params.word_bits, small_params.log_Q), KIND_SECRET)
    assert sk2 == sk
    pk2 = loads(dumps(pk), KIND_PUBLIC)
    assert pk2 == pk
    evk2 = loads(dumps(evk), KIND_EVAL)
    assert evk2 == evk


def test_file_roundtrip_decrypts(tmp_path, small_params, small_keys, ct):
    save(tmp_path / "c.bin", ct)
    save(tmp_path / "sk.bin", small_keys[0], word=small_params.word_bits, logq=small_params.log_Q)
    c = load(tmp_path / "c.bin", KIND_CIPHERTEXT)
    sk = load(tmp_path / "sk.bin", KIND_SECRET)
    z = decode(decrypt(c, sk, small_params))
    assert np.abs(z - [0.5, -0.25j]).max() < 1e-4


def test_payload_size(ct, small_params):
    nl = -(-ct.logq // 64)
    assert len(dumps(ct)) == struct.calcsize("<4s6I") + 2 * small_params.N * nl * 8


def test_bad_magic(ct):
    data = bytearray(dumps(ct))
    data[:4] = b"XXXX"
    with pytest.raises(FormatError, match="magic"):
        loads(bytes(data))


def test_wrong_kind(ct):
    with pytest.raises(FormatError, match="expected"):
        loads(dumps(ct), KIND_PUBLIC)


@pytest.mark.parametrize("cut", [0, 10, 100, -1])
def test_truncated(ct, cut):
    data = dumps(ct)
    with pytest.raises(FormatError):
        loads(data[:cut])


def test_trailing_bytes(ct):
    with pytest.raises(FormatError):
        loads(dumps(ct) + b"\0")


def test_header_fields_checked(ct):
    data = bytearray(dumps(ct))
    for field, value in ((1, 7), (2, 48), (3, 3)):
        bad = bytearray(data)
        struct.pack_into("<I", bad, 4 * field, value)
        with pytest.raises(FormatError):
            loads(bytes(bad))


def test_coefficient_overflow(small_params, small_keys):
    from heaanmul.heaan import mod_down
    c = mod_down(encrypt(encode([0.1], small_params), small_keys[1], small_params, 1), 270)
    data = bytearray(dumps(c))
    # top limb of the first coefficient holds 270 - 256 = 14 bits
    off = struct.calcsize("<4s6I") + 8 * 4 + 7
    data[off] = 0xFF
    with pytest.raises(FormatError, match="exceeds"):
        loads(bytes(data))


def test_secret_key_must_be_ternary(small_params, small_keys):
    data = bytearray(dumps(small_keys[0], 64, 64))
    off = struct.calcsize("<4s6I") + small_params.N * 8
    data[off] = 5
    with pytest.raises(FormatError, match="ternary"):
        loads(bytes(data))


def test_unserializable():
    with pytest.raises(TypeError):
        dumps(object())
