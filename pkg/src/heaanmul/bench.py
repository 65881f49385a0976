"""Per-function timing of HE Mul."""
from __future__ import annotations

import csv
import io
import json
import statistics
import time
from dataclasses import dataclass, field

import numpy as np

from .bigpoly import BigPoly
from .heaan import Ciphertext, Context, EvalKey, he_mul
from .params import Params
from .parallel import get_threads, set_threads
from .polymul import CATEGORIES, KernelConfig

__all__ = ["REPORT_ROWS", "DEFAULT_REPS", "BenchReport", "random_inputs", "run_bench"]

REPORT_ROWS = CATEGORIES + ("Total",)
DEFAULT_REPS = 32


@dataclass
class BenchReport:
    """Mean seconds per HE Mul for each function, plus the spread of the totals."""

    times: dict                     # category -> mean seconds
    stddev: dict = field(default_factory=dict)
    median: dict = field(default_factory=dict)
    threads: int = 1
    reps: int = 1
    config: dict = field(default_factory=dict)
    params: dict = field(default_factory=dict)
    baseline: dict | None = None

    def __post_init__(self):
        if self.reps < 1:
            raise ValueError("repetitions must be at least 1")

    def kernel_share(self) -> float:
        """Fraction of the total spent in CRT, NTT, iNTT and iCRT."""
        return sum(self.times[c] for c in ("CRT", "NTT", "iNTT", "iCRT")) / self.times["Total"]

    def speedup(self, row: str) -> float:
        if not self.baseline or not self.times.get(row):
            return 1.0
        return self.baseline[row] / self.times[row]

    def to_csv(self) -> str:
        buf = io.StringIO()
        wr = csv.writer(buf, lineterminator="\n")
        wr.writerow(["function", "time_ms", "speedup_vs_baseline"])
        for row in REPORT_ROWS:
            wr.writerow([row, repr(self.times[row] * 1e3), repr(self.speedup(row))])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str, **kw) -> "BenchReport":
        rows = list(csv.DictReader(io.StringIO(text)))
        if [r["function"] for r in rows] != list(REPORT_ROWS):
            raise ValueError("csv rows must be " + ", ".join(REPORT_ROWS))
        times = {r["function"]: float(r["time_ms"]) / 1e3 for r in rows}
        speed = {r["function"]: float(r["speedup_vs_baseline"]) for r in rows}
        baseline = None
        if any(s != 1.0 for s in speed.values()):
            baseline = {k: times[k] * speed[k] for k in times}
        return cls(times, baseline=baseline, **kw)

    def to_dict(self) -> dict:
        return {"times_ms": {k: v * 1e3 for k, v in self.times.items()},
                "stddev_ms": {k: v * 1e3 for k, v in self.stddev.items()},
                "median_ms": {k: v * 1e3 for k, v in self.median.items()},
                "speedup_vs_baseline": {k: self.speedup(k) for k in REPORT_ROWS},
                "threads": self.threads, "reps": self.reps, "config": self.config,
                "params": self.params, "kernel_share": self.kernel_share()}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    def to_table(self) -> str:
        lines = [f"{'function':<8} {'mean ms':>12} {'stddev ms':>12} {'share':>7}"]
        for row in REPORT_ROWS:
            t = self.times[row]
            lines.append(f"{row:<8} {t * 1e3:12.2f} {self.stddev.get(row, 0.0) * 1e3:12.2f} "
                         f"{t / self.times['Total']:7.1%}")
        lines.append(f"threads={self.threads} reps={self.reps} "
                     + " ".join(f"{k}={v}" for k, v in self.config.items()))
        return "\n".join(lines)


def random_inputs(params: Params, seed=0) -> tuple[Ciphertext, Ciphertext, EvalKey]:
    """Uniform ciphertexts at the top level and a uniform evaluation key."""
    rng = np.random.default_rng(seed)
    N, logQ, w = params.N, params.log_Q, params.word
    q, QQ = 1 << logQ, 1 << (2 * logQ)
    c1 = Ciphertext(BigPoly.random(N, q, rng, w), BigPoly.random(N, q, rng, w), logQ, N // 2,
                    params.log_delta)
    c2 = Ciphertext(BigPoly.random(N, q, rng, w), BigPoly.random(N, q, rng, w), logQ, N // 2,
                    params.log_delta)
    evk = EvalKey(BigPoly.random(N, QQ, rng, w), BigPoly.random(N, QQ, rng, w))
    return c1, c2, evk


def run_bench(params: Params, config: KernelConfig | None = None, *, threads: int | None = None,
              reps: int = DEFAULT_REPS, seed=0, baseline: BenchReport | None = None,
              return_output: bool = False):
    """Time ``reps`` HE Muls after one untimed warm-up that builds tables and kernels."""
    if reps < 1:
        raise ValueError("repetitions must be at least 1")
    config = config or KernelConfig()
    if config.radix > params.N or config.iradix > params.N:
        raise ValueError(f"radix exceeds N = {params.N}")
    used = set_threads(threads) if threads else None
    ctx = Context(params, config)
    c1, c2, evk = random_inputs(params, seed)
    out = he_mul(c1, c2, evk, ctx)
    per = {row: [] for row in REPORT_ROWS}
    for _ in range(reps):
        ctx.timers.reset()
        t0 = time.perf_counter()
        out = he_mul(c1, c2, evk, ctx)
        total = time.perf_counter() - t0
        snap = ctx.timers.snapshot()
        for c in CATEGORIES:
            per[c].append(snap[c])
        per["Total"].append(total)
    mean = {k: statistics.fmean(v) for k, v in per.items()}
    std = {k: (statistics.stdev(v) if len(v) > 1 else 0.0) for k, v in per.items()}
    med = {k: statistics.median(v) for k, v in per.items()}
    rep = BenchReport(mean, std, med, used or get_threads(), reps, config.describe(),
                      {"N": params.N, "log_Q": params.log_Q, "log_p": params.log_p,
                       "word_bits": params.word_bits},
                      baseline.times if baseline else None)
    return (rep, out) if return_output else rep
