"""Scalar butterflies; the transform kernels carry their own unrolled copies."""
import numba as nb

from .arith import csub, shoup_lazy, shoup_mm


@nb.njit(inline="always", cache=True)
def butt_eager(a, b, w, ws, p, wb, approx):
    u = shoup_mm(b, w, ws, p, wb, approx)
    return csub(a + u, p), csub(a + p - u, p)


@nb.njit(inline="always", cache=True)
def butt_lazy(a, b, w, ws, p, wb, approx):
    # Harvey: inputs and outputs in [0, 4p)
    p2 = p + p
    a = csub(a, p2)
    u = csub(shoup_lazy(b, w, ws, p, wb, approx), p2)
    return a + u, a + p2 - u


@nb.njit(inline="always", cache=True)
def ibutt_eager(a, b, w, ws, p, wb, approx):
    return csub(a + b, p), shoup_mm(a + p - b, w, ws, p, wb, approx)


@nb.njit(inline="always", cache=True)
def ibutt_lazy(a, b, w, ws, p, wb, approx):
    # inputs and outputs in [0, 2p)
    p2 = p + p
    u = csub(shoup_lazy(a + p2 - b, w, ws, p, wb, approx), p2)
    return csub(a + b, p2), u
