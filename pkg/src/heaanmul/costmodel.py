"""Analytical operation counts for HE Mul and an AVX-512 instruction estimate.

Counts evaluate the per-function formulas for one big-integer polynomial
product (CRT of one input, NTT, iNTT and iCRT of one output):

    function  mul            modmul              adc            addsub
    CRT       N*qLimbs*np    N*np                N*qLimbs*np    -
    NTT       -              np*N/2*logN         -              np*N*logN
    iNTT      -              np*(N/2*logN + N)   -              np*N*logN
    iCRT      N*np*PLimbs    2*N*np              N*np*PLimbs    -
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from importlib import resources

from .params import PRIME_BOUNDS, PRIME_CREDIT_BITS, SECURITY_TABLE, region_bound_bits, required_degree

__all__ = [
    "FUNCTIONS",
    "OP_KINDS",
    "CostReport",
    "RegionProfile",
    "op_counts",
    "plimbs_for",
    "np_for",
    "degree_for",
    "scaling_profile",
    "region_np_profile",
    "he_mul_counts",
    "load_weights",
    "instruction_estimate",
    "reports_to_csv",
]

FUNCTIONS = ("CRT", "NTT", "iNTT", "iCRT")
OP_KINDS = ("mul", "modmul", "adc", "addsub")

# products per HE Mul: (region-1 count, region-2 count) per function
HE_MUL_MULTIPLICITY = {"CRT": (4, 1), "NTT": (4, 1), "iNTT": (3, 2), "iCRT": (3, 2)}


@dataclass
class CostReport:
    N: int
    qlimbs: int
    np: int
    plimbs: int
    counts: dict = field(default_factory=dict)
    logq: int | None = None
    logQ: int | None = None

    def total(self, function: str | None = None) -> int:
        if function is not None:
            return sum(self.counts[function].values())
        return sum(sum(c.values()) for c in self.counts.values())

    def share(self, function: str) -> float:
        return self.total(function) / self.total()

    def rows(self) -> list[tuple[str, str, int]]:
        return [(f, k, self.counts[f][k]) for f in FUNCTIONS for k in OP_KINDS]

    def to_dict(self) -> dict:
        return {"N": self.N, "qlimbs": self.qlimbs, "np": self.np, "plimbs": self.plimbs,
                "logq": self.logq, "logQ": self.logQ, "counts": self.counts, "total": self.total()}

    def to_csv(self) -> str:
        return reports_to_csv([self])

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def op_counts(N: int, qLimbs: int, np: int, PLimbs: int, *, logq: int | None = None,
              logQ: int | None = None) -> CostReport:
    for name, v in (("N", N), ("qLimbs", qLimbs), ("np", np), ("PLimbs", PLimbs)):
        if v <= 0:
            raise ValueError(f"{name} must be positive, got {v}")
    logn = int(N).bit_length() - 1
    counts = {
        "CRT": {"mul": N * qLimbs * np, "modmul": N * np, "adc": N * qLimbs * np, "addsub": 0},
        "NTT": {"mul": 0, "modmul": np * (N // 2) * logn, "adc": 0, "addsub": np * N * logn},
        "iNTT": {"mul": 0, "modmul": np * ((N // 2) * logn + N), "adc": 0, "addsub": np * N * logn},
        "iCRT": {"mul": N * np * PLimbs, "modmul": 2 * N * np, "adc": N * np * PLimbs, "addsub": 0},
    }
    return CostReport(N, qLimbs, np, PLimbs, counts, logq, logQ)


def np_for(bound_bits: int, word_bits: int = 64) -> int:
    return max(1, -(-bound_bits // PRIME_CREDIT_BITS[word_bits]))


def plimbs_for(np: int, word_bits: int = 64) -> int:
    """Limbs of P/p_j when every prime sits just below the upper bit bound."""
    pbits = PRIME_BOUNDS[word_bits][1]
    return max(1, -(-((np - 1) * pbits) // word_bits))


def degree_for(logQ: int, policy: str = "proportional") -> int:
    """N for a log Q: 'table' looks it up, 'proportional' scales N with log Q."""
    if policy == "table":
        return required_degree(logQ)
    if policy == "proportional":
        if logQ <= 0:
            raise ValueError("logQ must be positive")
        ref_q, ref_n = min(SECURITY_TABLE.items())
        return 1 << max(1, math.ceil(math.log2(ref_n * logQ / ref_q)))
    raise ValueError(f"unknown degree policy {policy!r}")


def scaling_profile(logQ_list, policy: str = "proportional", word_bits: int = 64) -> list[CostReport]:
    """One product's counts at the top level for each log Q (region-1 prime set)."""
    out = []
    for logQ in logQ_list:
        N = degree_for(logQ, policy)
        logn = N.bit_length() - 1
        np_ = np_for(region_bound_bits(logQ, logQ, logn, 1), word_bits)
        out.append(op_counts(N, -(-logQ // word_bits), np_, plimbs_for(np_, word_bits),
                             logq=logQ, logQ=logQ))
    return out


@dataclass
class RegionProfile:
    logq: int
    logQ: int
    N: int
    np1: int
    np2: int
    plimbs1: int
    plimbs2: int
    region1: CostReport
    region2: CostReport

    def he_mul(self) -> dict[str, int]:
        """Per-function operation totals of one HE Mul at this level."""
        return {f: a * self.region1.total(f) + b * self.region2.total(f)
                for f, (a, b) in HE_MUL_MULTIPLICITY.items()}

    def he_mul_total(self) -> int:
        return sum(self.he_mul().values())


def region_np_profile(logq: int, logQ: int = 1200, N: int | None = None,
                      word_bits: int = 64) -> RegionProfile:
    if not 0 < logq <= logQ:
        raise ValueError(f"logq must lie in (0, {logQ}]")
    N = N or degree_for(logQ, "proportional")
    logn = N.bit_length() - 1
    ql = -(-logq // word_bits)
    np1 = np_for(region_bound_bits(logq, logQ, logn, 1), word_bits)
    np2 = np_for(region_bound_bits(logq, logQ, logn, 2), word_bits)
    pl1, pl2 = plimbs_for(np1, word_bits), plimbs_for(np2, word_bits)
    return RegionProfile(logq, logQ, N, np1, np2, pl1, pl2,
                         op_counts(N, ql, np1, pl1, logq=logq, logQ=logQ),
                         op_counts(N, ql, np2, pl2, logq=logq, logQ=logQ))


def he_mul_counts(logq: int, logQ: int = 1200, N: int | None = None, word_bits: int = 64) -> dict:
    return region_np_profile(logq, logQ, N, word_bits).he_mul()


def load_weights(path=None) -> dict:
    if path is None:
        text = resources.files("heaanmul").joinpath("data/avx512_weights.json").read_text()
    else:
        with open(path) as fh:
            text = fh.read()
    return json.loads(text)


def instruction_estimate(counts: CostReport, mode: str = "emulated", weights: dict | None = None
                         ) -> dict[str, float]:
    """Vector instructions per function when each lane handles one scalar operation."""
    if mode not in ("emulated", "native"):
        raise ValueError(f"mode must be 'emulated' or 'native', got {mode!r}")
    w = weights or load_weights()
    lanes = w["lanes"]
    table = w[mode]
    out = {}
    for f in FUNCTIONS:
        ops = sum(table[k] * counts.counts[f][k] for k in OP_KINDS)
        ops += w["residual_per_vector"][f] * counts.N * counts.np
        out[f] = ops / lanes
    return out


def reports_to_csv(reports) -> str:
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(["logQ", "logq", "N", "qlimbs", "np", "plimbs", "function", "op_kind", "count"])
    for r in reports:
        for f, k, c in r.rows():
            wr.writerow([r.logQ, r.logq, r.N, r.qlimbs, r.np, r.plimbs, f, k, c])
    return buf.getvalue()
