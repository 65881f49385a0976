"""Operation counters fed by the kernel wrappers."""
from __future__ import annotations

from collections import defaultdict

FUNCTIONS = ("CRT", "NTT", "iNTT", "iCRT")
OP_KINDS = ("mul", "modmul", "adc", "addsub")


class OpCounter:
    """Tally of word operations per pipeline function.

    Kernels report the trip counts of their inner loops after each call, so
    the tallies reflect what actually ran (cached transforms are not counted
    twice, early-outs are not counted at all). Besides the four operation
    kinds, CRT and iCRT report ``shoup_calls``, the number of Shoup products
    behind their modmul tallies.
    """

    def __init__(self):
        self._c = defaultdict(int)
        self.calls = defaultdict(int)

    def add(self, function: str, **ops: int):
        self.calls[function] += 1
        for kind, n in ops.items():
            self._c[(function, kind)] += int(n)

    def get(self, function: str, kind: str) -> int:
        return self._c.get((function, kind), 0)

    def as_dict(self) -> dict[str, dict[str, int]]:
        return {f: {k: self.get(f, k) for k in OP_KINDS} for f in FUNCTIONS}

    def reset(self):
        self._c.clear()
        self.calls.clear()


def _add(counter: OpCounter | None, function: str, **ops: int):
    if counter is not None:
        counter.add(function, **ops)
