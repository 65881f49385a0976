"""Command-line harness: ``heaan-mul <command>``.

Exit codes: 0 success, 1 usage, 2 state or modulus errors, 3 format errors.
HEAAN_SEED overrides every --seed.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import costmodel
from .bench import DEFAULT_REPS, REPORT_ROWS, BenchReport, run_bench
from .fileformat import (KIND_CIPHERTEXT, KIND_EVAL, KIND_PUBLIC, KIND_SECRET, FormatError, load,
                         save)
from .heaan import HeaanError, Context, decode, decrypt, encode, encrypt, he_add, he_mul, keygen
from .params import Params, SecurityError, make_params
from .parallel import default_threads
from .polymul import KernelConfig
from .rns import AccumStrategy

EXIT_OK, EXIT_USAGE, EXIT_STATE, EXIT_FORMAT = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        sys.exit(EXIT_USAGE)


# ---------------------------------------------------------------------------
# helpers


def _seed(args):
    env = os.environ.get("HEAAN_SEED")
    if env is not None:
        try:
            return int(env)
        except ValueError:
            raise UsageError(f"HEAAN_SEED must be an integer, got {env!r}")
    return args.seed


def _params(args) -> Params:
    if getattr(args, "params", None):
        try:
            return Params.from_json(Path(args.params).read_text())
        except (ValueError, KeyError, json.JSONDecodeError) as exc:
            raise FormatError(f"{args.params}: {exc}")
    return make_params(args.log_p, args.depth, args.word, N=args.N, log_delta=args.log_delta,
                       check_security=not args.no_security_check)


def _add_param_flags(p):
    g = p.add_argument_group("parameters")
    g.add_argument("--params", help="params JSON written by the 'params' command")
    g.add_argument("--log-p", type=int, default=30, help="rescaling bits (default 30)")
    g.add_argument("--depth", "-L", type=int, default=40, help="levels; log Q = depth * log p")
    g.add_argument("--word", type=int, choices=(32, 64), default=64, help="limb width")
    g.add_argument("--N", type=int, default=None, help="ring degree (default from log Q)")
    g.add_argument("--log-delta", type=int, default=None, help="scale bits (default log p)")
    g.add_argument("--no-security-check", action="store_true",
                   help="allow N below the security table entry")


def _add_kernel_flags(p):
    p.add_argument("--radix", type=int, default=2, choices=(2, 4, 8, 16, 32))
    p.add_argument("--crt-strategy", default="three_word_adc",
                   help="three_word_adc or periodic_mod[:x]")
    p.add_argument("--icrt", choices=("naive", "reordered"), default="reordered")
    p.add_argument("--shoup", choices=("exact", "approx"), default="exact")
    p.add_argument("--lazy", action="store_true", help="lazy NTT reduction")


def _config(args) -> KernelConfig:
    return KernelConfig(radix=args.radix, lazy=args.lazy, approx=args.shoup == "approx",
                        crt_strategy=AccumStrategy.parse(args.crt_strategy), icrt=args.icrt)


def _check_out(path: str, force: bool):
    p = Path(path)
    if not p.parent.exists():
        raise FileNotFoundError(f"output directory {p.parent} does not exist")
    if p.exists() and not force:
        raise FileExistsError(f"{p} exists; pass --force to overwrite")


def _match(params: Params, obj, what: str):
    N = obj.ax.N if hasattr(obj, "ax") else obj.pk0.N
    if N != params.N:
        raise HeaanError(f"{what} has N = {N}, parameters say {params.N}")


def read_message(path: str) -> np.ndarray:
    """JSON list of numbers or [re, im] pairs, or CSV with re,im columns."""
    text = Path(path).read_text()
    try:
        if path.endswith(".json") or text.lstrip().startswith("["):
            vals = json.loads(text)
            return np.array([complex(v[0], v[1]) if isinstance(v, list) else complex(v)
                             for v in vals])
        rows = [r for r in csv.reader(io.StringIO(text)) if r and not r[0].startswith("#")]
        if rows and rows[0][0].strip().lower() == "re":
            rows = rows[1:]
        return np.array([complex(float(r[0]), float(r[1]) if len(r) > 1 else 0.0) for r in rows])
    except (ValueError, IndexError, TypeError, json.JSONDecodeError) as exc:
        raise FormatError(f"{path}: cannot parse message ({exc})")


def write_message(z: np.ndarray, fmt: str) -> str:
    if fmt == "json":
        return json.dumps([[float(v.real), float(v.imag)] for v in z])
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(["re", "im"])
    for v in z:
        wr.writerow([repr(float(v.real)), repr(float(v.imag))])
    return buf.getvalue()


# ---------------------------------------------------------------------------
# commands


def cmd_params(args):
    print(_params(args).to_json())


def cmd_keygen(args):
    params = _params(args)
    out = Path(args.out_dir)
    if not out.is_dir():
        raise FileNotFoundError(f"output directory {out} does not exist")
    paths = {k: out / f"{k}.bin" for k in ("sk", "pk", "evk")}
    for p in paths.values():
        _check_out(str(p), args.force)
    sk, pk, evk = keygen(params, _seed(args))
    save(paths["sk"], sk, word=params.word, logq=params.log_Q)
    save(paths["pk"], pk)
    save(paths["evk"], evk)
    print(" ".join(str(p) for p in paths.values()))


def cmd_encrypt(args):
    params = _params(args)
    _check_out(args.out, args.force)
    pk = load(args.pk, KIND_PUBLIC)
    _match(params, pk, "public key")
    z = read_message(args.message)
    ct = encrypt(encode(z, params), pk, params, _seed(args))
    save(args.out, ct)


def cmd_decrypt(args):
    params = _params(args)
    sk = load(args.sk, KIND_SECRET)
    ct = load(args.ct, KIND_CIPHERTEXT)
    _match(params, ct, "ciphertext")
    z = decode(decrypt(ct, sk, params))
    sys.stdout.write(write_message(z, args.format))
    if args.format == "json":
        sys.stdout.write("\n")


def cmd_add(args):
    _check_out(args.out, args.force)
    c1, c2 = load(args.ct1, KIND_CIPHERTEXT), load(args.ct2, KIND_CIPHERTEXT)
    save(args.out, he_add(c1, c2))


def cmd_mul(args):
    params = _params(args)
    _check_out(args.out, args.force)
    c1, c2 = load(args.ct1, KIND_CIPHERTEXT), load(args.ct2, KIND_CIPHERTEXT)
    evk = load(args.evk, KIND_EVAL)
    for obj, what in ((c1, "ct1"), (c2, "ct2"), (evk, "evk")):
        _match(params, obj, what)
    if evk.ax.modulus != 1 << (2 * params.log_Q):
        raise HeaanError("evaluation key was made for a different log Q")
    save(args.out, he_mul(c1, c2, evk, Context(params, _config(args))))


def cmd_bench(args):
    params = _params(args)
    cfg = _config(args)
    base = None
    if args.baseline:
        try:
            base = BenchReport.from_csv(Path(args.baseline).read_text())
        except (ValueError, KeyError) as exc:
            raise FormatError(f"{args.baseline}: {exc}")
    rep = run_bench(params, cfg, threads=args.threads, reps=args.reps, seed=_seed(args),
                    baseline=base)
    out = {"table": rep.to_table, "csv": rep.to_csv, "json": rep.to_json}[args.format]()
    print(out.rstrip("\n"))


def _sweep(text: str) -> list[int]:
    if not text.strip():
        return []
    return [int(v) for v in text.replace(",", " ").split()]


def cmd_cost(args):
    if args.logq_sweep is not None:
        reports = []
        for logq in _sweep(args.logq_sweep):
            prof = costmodel.region_np_profile(logq, args.logQ, word_bits=args.word)
            reports += [prof.region1, prof.region2]
        if args.format == "json":
            rows = []
            for logq in _sweep(args.logq_sweep):
                prof = costmodel.region_np_profile(logq, args.logQ, word_bits=args.word)
                rows.append({"logq": logq, "np_region1": prof.np1, "np_region2": prof.np2,
                             "plimbs_region1": prof.plimbs1, "plimbs_region2": prof.plimbs2,
                             "he_mul_ops": prof.he_mul(), "he_mul_total": prof.he_mul_total()})
            print(json.dumps(rows, indent=2))
            return
    else:
        sweep = args.logQ_sweep if args.logQ_sweep is not None else "150 300 600 1200 2400"
        reports = costmodel.scaling_profile(_sweep(sweep), args.policy, args.word)
        if args.format == "json":
            print(json.dumps([r.to_dict() for r in reports], indent=2))
            return
    sys.stdout.write(costmodel.reports_to_csv(reports))


def cmd_demo(args):
    params = _params(args)
    seed = _seed(args)
    rng = np.random.default_rng(seed)
    n = args.slots or params.N // 2

    def disk():
        return np.sqrt(rng.uniform(0, 1, n)) * np.exp(2j * np.pi * rng.uniform(0, 1, n))

    sk, pk, evk = keygen(params, rng)
    m1, m2 = disk(), disk()
    c1 = encrypt(encode(m1, params), pk, params, rng)
    c2 = encrypt(encode(m2, params), pk, params, rng)
    c3 = he_mul(c1, c2, evk, params)
    got = decode(decrypt(c3, sk, params))
    err = float(np.abs(got - m1 * m2).max())
    print(json.dumps({"N": params.N, "log_Q": params.log_Q, "slots": n, "logq_after": c3.logq,
                      "max_abs_error": err}))


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="heaan-mul", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("params", help="print scheme constants and prime lists as JSON")
    _add_param_flags(p)
    p.set_defaults(func=cmd_params)

    p = sub.add_parser("keygen", help="write sk.bin, pk.bin, evk.bin")
    _add_param_flags(p)
    p.add_argument("--out-dir", default=".")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--force", action="store_true", help="overwrite existing files")
    p.set_defaults(func=cmd_keygen)

    p = sub.add_parser("encrypt", help="encode and encrypt a message file")
    _add_param_flags(p)
    p.add_argument("--pk", required=True)
    p.add_argument("--message", required=True, help="JSON or CSV (re,im) slots")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--force", action="store_true")
    p.set_defaults(func=cmd_encrypt)

    p = sub.add_parser("decrypt", help="decrypt and decode a ciphertext")
    _add_param_flags(p)
    p.add_argument("--sk", required=True)
    p.add_argument("ct")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.set_defaults(func=cmd_decrypt)

    p = sub.add_parser("add", help="HE Add of two ciphertext files")
    p.add_argument("ct1")
    p.add_argument("ct2")
    p.add_argument("--out", required=True)
    p.add_argument("--force", action="store_true")
    p.set_defaults(func=cmd_add)

    p = sub.add_parser("mul", help="HE Mul of two ciphertext files")
    _add_param_flags(p)
    _add_kernel_flags(p)
    p.add_argument("ct1")
    p.add_argument("ct2")
    p.add_argument("--evk", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--force", action="store_true")
    p.set_defaults(func=cmd_mul)

    p = sub.add_parser("bench", help="time HE Mul per function")
    _add_param_flags(p)
    _add_kernel_flags(p)
    p.add_argument("--threads", type=int, default=default_threads())
    p.add_argument("--reps", type=int, default=DEFAULT_REPS)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--format", choices=("table", "csv", "json"), default="table")
    p.add_argument("--baseline", help="earlier bench CSV for the speedup column")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("cost", help="operation-count model as CSV or JSON")
    g = p.add_mutually_exclusive_group()
    g.add_argument("--logq-sweep", help="levels, e.g. '30 600 1200' (uses --logQ)")
    g.add_argument("--logQ-sweep", dest="logQ_sweep", help="top moduli, e.g. '150 300 600'")
    p.add_argument("--logQ", type=int, default=1200)
    p.add_argument("--word", type=int, choices=(32, 64), default=64)
    p.add_argument("--policy", choices=("proportional", "table"), default="proportional")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.set_defaults(func=cmd_cost)

    p = sub.add_parser("demo", help="keygen, encrypt, mul, decrypt and report the error")
    _add_param_flags(p)
    p.add_argument("--slots", type=int, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_demo)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if getattr(args, "reps", 1) < 1:
            raise UsageError("--reps must be at least 1")
        if getattr(args, "threads", 1) < 1:
            raise UsageError("--threads must be at least 1")
        args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except FormatError as exc:
        print(f"format error: {exc}", file=sys.stderr)
        return EXIT_FORMAT
    except (HeaanError, SecurityError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_STATE
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
