"""Generate src/heaanmul/_ntt_kernels.py.

The NTT kernels are emitted as straight-line source, one set per
(word size, lazy, approx) variant. Radix-k blocks load k strided values
into locals, run log2(k) butterfly layers on them and store them back, so
LLVM can keep the block in registers. Writing the butterfly arithmetic out
textually (instead of inlining numba functions) keeps compile time sane.

Run from the repository root after editing: python3 tools/gen_ntt_blocks.py
"""
from pathlib import Path

RADIX_BITS = (2, 3, 4, 5)
VARIANTS = [(wb, lazy, approx) for wb in (64, 32) for lazy in (False, True)
            for approx in (False, True)]

HEADER = '''"""NTT kernels, one set per (word size, lazy, approx) variant.

Generated by tools/gen_ntt_blocks.py; do not edit by hand.
"""
import numba as nb
import numpy as np

M32 = np.uint64(0xFFFFFFFF)
M16 = np.uint64(0xFFFF)
S32 = np.uint64(32)
S16 = np.uint64(16)
Z = np.uint64(0)
'''


def vname(wb, lazy, approx):
    return f"{'l' if lazy else 'e'}{wb}{'a' if approx else ''}"


def split_twiddle(ws, wl, wh, wb, approx, ind):
    if wb == 32 and not approx:
        return []
    if wb == 32:
        return [f"{ind}{wl} = {ws} & M16", f"{ind}{wh} = {ws} >> S16"]
    return [f"{ind}{wl} = {ws} & M32", f"{ind}{wh} = {ws} >> S32"]


def mulhi(q, x, ws, wl, wh, wb, approx, ind):
    if wb == 32 and not approx:
        return [f"{ind}{q} = ({x} * {ws}) >> S32"]
    m, s = ("M16", "S16") if wb == 32 else ("M32", "S32")
    out = [f"{ind}xl_ = {x} & {m}", f"{ind}xh_ = {x} >> {s}",
           f"{ind}lh_ = xl_ * {wh}", f"{ind}hl_ = xh_ * {wl}"]
    if approx:
        out.append(f"{ind}mid_ = (lh_ & {m}) + (hl_ & {m})")
    else:
        out.append(f"{ind}mid_ = ((xl_ * {wl}) >> {s}) + (lh_ & {m}) + (hl_ & {m})")
    out.append(f"{ind}{q} = xh_ * {wh} + (lh_ >> {s}) + (hl_ >> {s}) + (mid_ >> {s})")
    return out


def shoup_lazy(u, x, w, ws, wl, wh, wb, approx, ind):
    """u = x*w mod p in [0, 2p) (exact) or [0, 4p) (approx)."""
    out = mulhi("q_", x, ws, wl, wh, wb, approx, ind)
    if wb == 32:
        out.append(f"{ind}{u} = ({x} * {w} - q_ * p) & M32")
    else:
        out.append(f"{ind}{u} = {x} * {w} - q_ * p")
    return out


def csub(v, m, ind):
    return [f"{ind}{v} = {v} - ({m} if {v} >= {m} else Z)"]


def fwd_butterfly(x, y, tw, wb, lazy, approx, ind):
    w, ws, wl, wh = tw
    out = shoup_lazy("u_", y, w, ws, wl, wh, wb, approx, ind)
    if lazy:
        out += csub(x, "p2", ind)
        if approx:
            out += csub("u_", "p2", ind)
        out += [f"{ind}{y} = {x} + p2 - u_", f"{ind}{x} = {x} + u_"]
    else:
        if approx:
            out += csub("u_", "p2", ind)
        out += csub("u_", "p", ind)
        out += [f"{ind}{y} = {x} + p - u_"] + csub(y, "p", ind)
        out += [f"{ind}{x} = {x} + u_"] + csub(x, "p", ind)
    return out


def inv_butterfly(x, y, tw, wb, lazy, approx, ind):
    w, ws, wl, wh = tw
    bound = "p2" if lazy else "p"
    out = [f"{ind}d_ = {x} + {bound} - {y}", f"{ind}{x} = {x} + {y}"] + csub(x, bound, ind)
    out += shoup_lazy(y, "d_", w, ws, wl, wh, wb, approx, ind)
    if approx:
        out += csub(y, "p2", ind)
    if not lazy:
        out += csub(y, "p", ind)
    return out


def load_twiddle(idx, wt, wst, wb, approx, ind, tag=""):
    names = (f"w{tag}", f"ws{tag}", f"wl{tag}", f"wh{tag}")
    out = [f"{ind}{names[0]} = {wt}[{idx}]", f"{ind}{names[1]} = {wst}[{idx}]"]
    out += split_twiddle(names[1], names[2], names[3], wb, approx, ind)
    return out, names


def gen_variant(wb, lazy, approx) -> list[str]:
    v = vname(wb, lazy, approx)
    L: list[str] = []
    I4, I8, I12, I16 = " " * 4, " " * 8, " " * 12, " " * 16

    # radix-2 stages
    L += ["", "", "@nb.njit(cache=True)", f"def fwd_stage_{v}(a, w_t, ws_t, p, done):",
          f"{I4}p2 = p + p", f"{I4}N = a.shape[0]", f"{I4}m0 = 1 << done",
          f"{I4}t0 = N >> (done + 1)", f"{I4}for j0 in range(m0):"]
    tl, tw = load_twiddle("m0 + j0", "w_t", "ws_t", wb, approx, I8)
    L += tl + [f"{I8}base = j0 * 2 * t0", f"{I8}for k in range(base, base + t0):",
               f"{I12}x = a[k]", f"{I12}y = a[k + t0]"]
    L += fwd_butterfly("x", "y", tw, wb, lazy, approx, I12)
    L += [f"{I12}a[k] = x", f"{I12}a[k + t0] = y"]

    L += ["", "", "@nb.njit(cache=True)", f"def inv_stage_{v}(a, w_t, ws_t, p, done):",
          f"{I4}p2 = p + p", f"{I4}N = a.shape[0]", f"{I4}t0 = 1 << done",
          f"{I4}m = N >> (done + 1)", f"{I4}for j in range(m):"]
    tl, tw = load_twiddle("m + j", "w_t", "ws_t", wb, approx, I8)
    L += tl + [f"{I8}base = j * 2 * t0", f"{I8}for k in range(base, base + t0):",
               f"{I12}x = a[k]", f"{I12}y = a[k + t0]"]
    L += inv_butterfly("x", "y", tw, wb, lazy, approx, I12)
    L += [f"{I12}a[k] = x", f"{I12}a[k + t0] = y"]

    # fused blocks
    for rr in RADIX_BITS:
        K = 1 << rr
        L += ["", "", "@nb.njit(cache=True)",
              f"def fwd_block{K}_{v}(a, off, d, j0, m0, w_t, ws_t, p):", f"{I4}p2 = p + p"]
        L += [f"{I4}x{s} = a[off + {s} * d]" for s in range(K)]
        for lvl in range(rr):
            h = K >> (lvl + 1)
            for g in range(1 << lvl):
                tl, tw = load_twiddle(f"(m0 << {lvl}) + (j0 << {lvl}) + {g}", "w_t", "ws_t",
                                      wb, approx, I4)
                L += tl
                for s in range(g * 2 * h, g * 2 * h + h):
                    L += fwd_butterfly(f"x{s}", f"x{s + h}", tw, wb, lazy, approx, I4)
        L += [f"{I4}a[off + {s} * d] = x{s}" for s in range(K)]

        L += ["", "", "@nb.njit(cache=True)",
              f"def inv_block{K}_{v}(a, off, t0, base, N, w_t, ws_t, p):", f"{I4}p2 = p + p"]
        L += [f"{I4}x{s} = a[off + {s} * t0]" for s in range(K)]
        for lvl in range(rr):
            h = 1 << lvl
            L += [f"{I4}t = t0 << {lvl}", f"{I4}jb = N // (2 * t) + base // (2 * t)"]
            for g in range(K // (2 * h)):
                tl, tw = load_twiddle(f"jb + {g}", "w_t", "ws_t", wb, approx, I4)
                L += tl
                for s in range(g * 2 * h, g * 2 * h + h):
                    L += inv_butterfly(f"x{s}", f"x{s + h}", tw, wb, lazy, approx, I4)
        L += [f"{I4}a[off + {s} * t0] = x{s}" for s in range(K)]

    # row drivers
    L += ["", "", "@nb.njit(cache=True)", f"def fwd_row_{v}(a, w_t, ws_t, p, r):",
          f"{I4}N = a.shape[0]", f"{I4}logn = 0", f"{I4}while (1 << logn) < N:",
          f"{I8}logn += 1", f"{I4}done = 0", f"{I4}while done < logn:",
          f"{I8}rr = min(r, logn - done)", f"{I8}if rr == 1:",
          f"{I12}fwd_stage_{v}(a, w_t, ws_t, p, done)", f"{I8}else:",
          f"{I12}m0 = 1 << done", f"{I12}t0 = N >> (done + 1)", f"{I12}d = (2 * t0) >> rr",
          f"{I12}for j0 in range(m0):", f"{I16}base = j0 * 2 * t0",
          f"{I16}for c in range(d):"]
    for i, rr in enumerate(RADIX_BITS):
        kw = "if" if i == 0 else "elif"
        L += [f"{I16}    {kw} rr == {rr}:",
              f"{I16}        fwd_block{1 << rr}_{v}(a, base + c, d, j0, m0, w_t, ws_t, p)"]
    L += [f"{I8}done += rr"]
    if lazy:
        L += [f"{I4}p2 = p + p", f"{I4}for k in range(N):", f"{I8}x = a[k]"]
        L += csub("x", "p2", I8) + csub("x", "p", I8) + [f"{I8}a[k] = x"]

    L += ["", "", "@nb.njit(cache=True)",
          f"def inv_row_{v}(a, w_t, ws_t, ninv, ninvs, p, r):",
          f"{I4}N = a.shape[0]", f"{I4}logn = 0", f"{I4}while (1 << logn) < N:",
          f"{I8}logn += 1", f"{I4}done = 0", f"{I4}while done < logn:",
          f"{I8}rr = min(r, logn - done)", f"{I8}if rr == 1:",
          f"{I12}inv_stage_{v}(a, w_t, ws_t, p, done)", f"{I8}else:",
          f"{I12}t0 = 1 << done", f"{I12}span = t0 << rr",
          f"{I12}for base in range(0, N, span):", f"{I16}for c in range(t0):"]
    for i, rr in enumerate(RADIX_BITS):
        kw = "if" if i == 0 else "elif"
        L += [f"{I16}    {kw} rr == {rr}:",
              f"{I16}        inv_block{1 << rr}_{v}(a, base + c, t0, base, N, w_t, ws_t, p)"]
    L += [f"{I8}done += rr", f"{I4}p2 = p + p"]
    tl, tw = ([f"{I4}w = ninv", f"{I4}ws = ninvs"] + split_twiddle("ws", "wl", "wh", wb, approx, I4),
              ("w", "ws", "wl", "wh"))
    L += tl + [f"{I4}for k in range(N):", f"{I8}x = a[k]"]
    if lazy:
        L += csub("x", "p", I8)
    L += shoup_lazy("y", "x", *tw, wb, approx, I8)
    if approx:
        L += csub("y", "p2", I8)
    L += csub("y", "p", I8) + [f"{I8}a[k] = y"]

    L += ["", "", "@nb.njit(parallel=True, cache=True)",
          f"def fwd_matrix_{v}(a, w_t, ws_t, primes, r):",
          f"{I4}for j in nb.prange(a.shape[0]):",
          f"{I8}fwd_row_{v}(a[j], w_t[j], ws_t[j], primes[j], r)"]
    L += ["", "", "@nb.njit(parallel=True, cache=True)",
          f"def inv_matrix_{v}(a, w_t, ws_t, ninv, ninvs, primes, r):",
          f"{I4}for j in nb.prange(a.shape[0]):",
          f"{I8}inv_row_{v}(a[j], w_t[j], ws_t[j], ninv[j], ninvs[j], primes[j], r)"]
    return L


def main():
    lines = [HEADER]
    for var in VARIANTS:
        lines += gen_variant(*var)
    lines += ["", "", "# (word_bits, lazy, approx) -> (forward, inverse)", "KERNELS = {"]
    for var in VARIANTS:
        v = vname(*var)
        lines.append(f"    {var!r}: (fwd_matrix_{v}, inv_matrix_{v}),")
    lines.append("}")
    path = Path(__file__).resolve().parents[1] / "src" / "heaanmul" / "_ntt_kernels.py"
    path.write_text("\n".join(lines) + "\n")
    print(f"wrote {path} ({len(lines)} lines)")


if __name__ == "__main__":
    main()
