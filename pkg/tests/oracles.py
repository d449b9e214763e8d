"""Independent reference computations used to freeze expected values.

These deliberately avoid the package's own recurrences and solvers: they use plain dict
polynomials and direct degree-by-degree elimination."""
from __future__ import annotations

from fractions import Fraction


def padd(a: dict, b: dict, s=1) -> dict:
    out = dict(a)
    for k, c in b.items():
        out[k] = out.get(k, 0) + s * c
    return {k: c for k, c in out.items() if c}


def pmul(a: dict, b: dict, N: int) -> dict:
    out = {}
    for i, x in a.items():
        for j, y in b.items():
            if i + j < N:
                out[i + j] = out.get(i + j, 0) + x * y
    return {k: c for k, c in out.items() if c}


def psub_pow(a: dict, e: int, N: int) -> dict:
    """a(u^e) mod u^N."""
    return {k * e: c for k, c in a.items() if k * e < N}


def phi_by_pairs(q: int, p: int, N: int, steps: int) -> tuple:
    """phi0, phi1 mod u^N from the pair recursion
    b' = u a(u^q) + b(u^{q^2}),  a' = u b'(u^q)/p + a(u^{q^2}), started at a = 1, b = u."""
    a, b = {0: Fraction(1)}, {1: Fraction(1)}
    for _ in range(steps):
        b2 = padd(pmul({1: Fraction(1)}, psub_pow(a, q, N), N), psub_pow(b, q * q, N))
        a2 = padd({k: c / p for k, c in pmul({1: Fraction(1)}, psub_pow(b2, q, N), N).items()},
                  psub_pow(a, q * q, N))
        a, b = a2, b2
    return a, b


def m_hand(q: int, p: int, N: int, K: int) -> list:
    """m_0..m_K mod u^N by direct substitution."""
    ms = [{0: Fraction(1)}]
    prev2 = {}
    for k in range(1, K + 1):
        t = pmul({1: Fraction(1)}, psub_pow(ms[k - 1], q, N), N)
        t = padd(t, psub_pow(prev2, q * q, N))
        ms.append({e: c / p for e, c in t.items()})
        prev2 = ms[k - 1]
    return ms


def pi_series_oracle_q2(N: int) -> list:
    """[pi]_u(x) mod x^5 for q = p = 2 as a list of u-polynomials (mod u^N).

    Solves g(P(x)) = 2 g(x) with g = x + m1 x^2 + m2 x^4 one x-degree at a time."""
    m = m_hand(2, 2, N, 2)
    m1, m2 = m[1], m[2]
    X = 5
    P = [dict() for _ in range(X)]

    def xmul(A, B):
        out = [dict() for _ in range(X)]
        for i in range(X):
            for j in range(X - i):
                if A[i] and B[j]:
                    out[i + j] = padd(out[i + j], pmul(A[i], B[j], N))
        return out

    def g_of(A):
        A2 = xmul(A, A)
        A4 = xmul(A2, A2)
        return [padd(padd(A[d], pmul(m1, A2[d], N)), pmul(m2, A4[d], N)) for d in range(X)]

    rhs = [{}, {0: Fraction(2)}, {k: 2 * c for k, c in m1.items()}, {},
           {k: 2 * c for k, c in m2.items()}]
    for d in range(1, X):
        cur = g_of(P)[d]
        P[d] = padd(rhs[d], cur, -1)
    return P


def newton_slopes(vals: dict) -> dict:
    """Slopes of the lower hull of {(k, v_k)} as {slope: multiplicity} (brute force)."""
    pts = sorted(vals.items())
    out = {}
    i = 0
    while i < len(pts) - 1:
        x1, y1 = pts[i]
        best = None
        for j in range(i + 1, len(pts)):
            x2, y2 = pts[j]
            s = Fraction(y2 - y1, x2 - x1)
            if best is None or s < best[0] or (s == best[0] and x2 > pts[best[1]][0]):
                best = (s, j)
        s, j = best
        out[-s] = out.get(-s, 0) + pts[j][0] - x1
        i = j
    return out
