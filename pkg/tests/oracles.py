"""Independent references built on Python integers and floats only."""
import cmath
import math


def mod_residues(values, primes):
    return [[v % p for v in values] for p in primes]


def crt_reconstruct(residues, primes, center=False):
    """Garner-free CRT via explicit inverses."""
    P = math.prod(primes)
    out = []
    for i in range(len(residues[0])):
        x = 0
        for j, p in enumerate(primes):
            hat = P // p
            x += residues[j][i] * hat * pow(hat, -1, p)
        x %= P
        if center and x > P // 2:
            x -= P
        out.append(x)
    return out


def negacyclic(a, b, modulus=None):
    N = len(a)
    c = [0] * N
    for i, x in enumerate(a):
        if not x:
            continue
        for j, y in enumerate(b):
            k = i + j
            if k < N:
                c[k] += x * y
            else:
                c[k - N] -= x * y
    return [v % modulus for v in c] if modulus else c


def bitrev(i, bits):
    return int(format(i, f"0{bits}b")[::-1], 2) if bits else 0


def ntt_direct(row, p, psi):
    """Evaluations at psi^(2*bitrev(i)+1), the order the fast transform emits."""
    N = len(row)
    lg = N.bit_length() - 1
    out = []
    for i in range(N):
        x = pow(psi, 2 * bitrev(i, lg) + 1, p)
        out.append(sum(c * pow(x, k, p) for k, c in enumerate(row)) % p)
    return out


def centered(v, q):
    v %= q
    return v - q if v > q // 2 else v


def round_shift(v, s, q):
    """round(centered(v) / 2^s) mod q / 2^s."""
    c = centered(v, q)
    r = (c + (1 << (s - 1))) >> s if s else c
    return r % (q >> s)


def slot_values(coeffs, n, scale):
    """Evaluate sum c_k X^(k*gap) at the slot roots directly, in floating point."""
    N = len(coeffs)
    gap = N // (2 * n)
    out = []
    e = 1
    for _ in range(n):
        zeta = cmath.exp(2j * math.pi * e / (4 * n))
        out.append(sum(coeffs[k * gap] * zeta ** k for k in range(2 * n)) / scale)
        e = e * 5 % (4 * n)
    return out
