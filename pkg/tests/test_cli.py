import json

import numpy as np
import pytest

from heaanmul.cli import main

SMALL = ["--depth", "10", "--N", "1024", "--no-security-check"]


def run(*argv):
    return main([str(a) for a in argv])


@pytest.fixture(scope="module")
def keys(tmp_path_factory):
    d = tmp_path_factory.mktemp("keys")
    assert run("keygen", *SMALL, "--out-dir", d, "--seed", 11) == 0
    return d


def test_keygen_byte_identical(tmp_path, keys):
    assert run("keygen", *SMALL, "--out-dir", tmp_path, "--seed", 11) == 0
    for f in ("sk.bin", "pk.bin", "evk.bin"):
        assert (tmp_path / f).read_bytes() == (keys / f).read_bytes()


def test_keygen_refuses_overwrite(keys, capsys):
    assert run("keygen", *SMALL, "--out-dir", keys, "--seed", 11) == 2
    assert "--force" in capsys.readouterr().err


def test_keygen_missing_dir(tmp_path):
    assert run("keygen", *SMALL, "--out-dir", tmp_path / "nope") == 2


def test_env_seed_overrides(tmp_path, keys, monkeypatch):
    monkeypatch.setenv("HEAAN_SEED", "11")
    assert run("keygen", *SMALL, "--out-dir", tmp_path, "--seed", 999) == 0
    assert (tmp_path / "sk.bin").read_bytes() == (keys / "sk.bin").read_bytes()
    monkeypatch.setenv("HEAAN_SEED", "x")
    assert run("keygen", *SMALL, "--out-dir", tmp_path, "--force") == 1


def _encrypt(tmp_path, keys, name, values):
    msg = tmp_path / f"{name}.json"
    msg.write_text(json.dumps([[v.real, v.imag] for v in values]))
    out = tmp_path / f"{name}.ct"
    assert run("encrypt", *SMALL, "--pk", keys / "pk.bin", "--message", msg, "--out", out) == 0
    return out


def _decrypt(keys, ct, capsys):
    capsys.readouterr()
    assert run("decrypt", *SMALL, "--sk", keys / "sk.bin", ct, "--format", "json") == 0
    return np.array([complex(a, b) for a, b in json.loads(capsys.readouterr().out)])


def test_encrypt_mul_add_decrypt(tmp_path, keys, capsys):
    m1 = np.array([0.5, -0.25 + 0.5j, 0.75j, -1.0])
    m2 = np.array([0.5, 1.0, -0.5, 0.3 - 0.3j])
    c1 = _encrypt(tmp_path, keys, "a", m1)
    c2 = _encrypt(tmp_path, keys, "b", m2)
    assert np.abs(_decrypt(keys, c1, capsys) - m1).max() < 1e-4
    assert run("add", c1, c2, "--out", tmp_path / "s.ct") == 0
    assert np.abs(_decrypt(keys, tmp_path / "s.ct", capsys) - (m1 + m2)).max() < 1e-4
    assert run("mul", *SMALL, c1, c2, "--evk", keys / "evk.bin", "--out", tmp_path / "p.ct") == 0
    assert np.abs(_decrypt(keys, tmp_path / "p.ct", capsys) - m1 * m2).max() < 1e-3
    # different levels cannot be combined
    assert run("mul", *SMALL, c1, tmp_path / "p.ct", "--evk", keys / "evk.bin",
               "--out", tmp_path / "q.ct") == 2


def test_csv_message(tmp_path, keys, capsys):
    msg = tmp_path / "m.csv"
    msg.write_text("re,im\n0.25,0\n-0.5,0.125\n")
    out = tmp_path / "m.ct"
    assert run("encrypt", *SMALL, "--pk", keys / "pk.bin", "--message", msg, "--out", out) == 0
    capsys.readouterr()
    assert run("decrypt", *SMALL, "--sk", keys / "sk.bin", out) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "re,im" and len(lines) == 3
    assert abs(float(lines[2].split(",")[1]) - 0.125) < 1e-4


def test_bad_files(tmp_path, keys):
    bad = tmp_path / "bad.ct"
    bad.write_bytes(b"JUNKJUNKJUNKJUNKJUNKJUNKJUNKJUNK")
    assert run("decrypt", *SMALL, "--sk", keys / "sk.bin", bad) == 3
    # a key where a ciphertext belongs
    assert run("decrypt", *SMALL, "--sk", keys / "sk.bin", keys / "pk.bin") == 3
    msg = tmp_path / "m.json"
    msg.write_text("[[1, 2], oops]")
    assert run("encrypt", *SMALL, "--pk", keys / "pk.bin", "--message", msg,
               "--out", tmp_path / "x.ct") == 3
    assert run("decrypt", *SMALL, "--sk", keys / "sk.bin", tmp_path / "absent.ct") == 2


def test_parameter_mismatch(tmp_path, keys):
    other = ["--depth", "10", "--N", "2048", "--no-security-check"]
    assert run("decrypt", *other, "--sk", keys / "sk.bin", keys / "sk.bin") in (2, 3)


def test_usage_errors():
    with pytest.raises(SystemExit) as e:
        main(["bogus"])
    assert e.value.code == 1
    with pytest.raises(SystemExit) as e:
        main(["bench", "--radix", "3"])
    assert e.value.code == 1
    assert main(["bench", *SMALL, "--reps", "0"]) == 1


def test_security_check():
    assert run("params", "--depth", "10", "--N", "1024") == 2


def test_params_json(capsys):
    assert run("params", "--depth", "10") == 0
    p = json.loads(capsys.readouterr().out)
    assert p["n"] == 1 << 14 and p["log_q_max"] == 300


def test_cost(capsys):
    assert run("cost", "--logQ-sweep", "150 300") == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0].startswith("logQ,logq,N") and len(lines) == 33
    assert run("cost", "--logq-sweep", "") == 0
    assert capsys.readouterr().out.count("\n") == 1
    assert run("cost", "--logq-sweep", "30 1200", "--format", "json") == 0
    json.loads(capsys.readouterr().out)
    assert run("cost", "--logq-sweep", "2000") == 1


def test_bench_csv(tmp_path, capsys):
    assert run("bench", *SMALL, "--reps", 2, "--threads", 1, "--format", "csv") == 0
    text = capsys.readouterr().out
    assert text.splitlines()[0] == "function,time_ms,speedup_vs_baseline"
    base = tmp_path / "base.csv"
    base.write_text(text)
    assert run("bench", *SMALL, "--reps", 1, "--threads", 1, "--format", "csv",
               "--baseline", base) == 0


def test_demo(capsys):
    assert run("demo", *SMALL, "--slots", 16) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["max_abs_error"] < 1e-3 and out["logq_after"] == 270
