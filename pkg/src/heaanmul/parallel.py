"""Thread-count control for the numba kernels."""
from __future__ import annotations

import os
from contextlib import contextmanager

import numba

__all__ = ["max_threads", "default_threads", "set_threads", "get_threads", "threads"]


def max_threads() -> int:
    """Upper bound fixed when numba starts (NUMBA_NUM_THREADS)."""
    return numba.config.NUMBA_NUM_THREADS


def default_threads() -> int:
    return min(os.cpu_count() or 1, max_threads())


def set_threads(n: int) -> int:
    """Use n worker threads (clamped to the pool size); returns the value applied."""
    if n < 1:
        raise ValueError("thread count must be at least 1")
    n = min(int(n), max_threads())
    numba.set_num_threads(n)
    return n


def get_threads() -> int:
    return numba.get_num_threads()


@contextmanager
def threads(n: int):
    old = get_threads()
    set_threads(n)
    try:
        yield
    finally:
        numba.set_num_threads(old)
