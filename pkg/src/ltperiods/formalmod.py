"""Height-2 formal A-modules: universal deformation, torsion, isogenies, classification.

The logarithm of the universal deformation is g(u, x) = sum_k m_k(u) x^{q^k} with
m_0 = 1, m_{-1} = 0 and m_k(u) = (u m_{k-1}(u^q) + m_{k-2}(u^{q^2})) / pi, pi = p.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction

from .errors import (ConvergenceFailure, IntegralityViolation, NotADeformation, PrecisionLoss,
                     SolveFailure)
from .localfield import INF, FieldTower, PadicElem, teichmuller, vp
from .series import (TruncatedSeries1, TruncatedSeries2, c_is_zero, c_val, comp_inverse, compose,
                     compose2, polygon_of_coeffs, split_polynomial, substitute2,
                     weierstrass_polynomial)


def prime_of(q: int) -> tuple:
    """(p, f) with q = p^f."""
    for p in range(2, q + 1):
        if q % p == 0:
            f, r = 0, q
            while r % p == 0:
                r //= p
                f += 1
            if r != 1:
                raise ValueError(f"{q} is not a prime power")
            return p, f
    raise ValueError(f"{q} is not a prime power")


# ---------------------------------------------------------------------------
# quasi-logarithm


def m_dicts(q: int, u_trunc: int, k_max: int) -> list:
    """m_k(u) mod u^{u_trunc} for k = 0..k_max as sparse dicts degree -> Fraction."""
    p, _ = prime_of(q)
    inv = Fraction(1, p)
    out = [{0: Fraction(1)} if u_trunc > 0 else {}]
    for k in range(1, k_max + 1):
        d = {}
        for e, c in out[k - 1].items():
            deg = 1 + q * e
            if deg < u_trunc:
                d[deg] = d.get(deg, 0) + c * inv
        if k >= 2:
            for e, c in out[k - 2].items():
                deg = q * q * e
                if deg < u_trunc:
                    d[deg] = d.get(deg, 0) + c * inv
        out.append({e: c for e, c in d.items() if c})
    return out


@dataclass
class QuasiLog:
    q: int
    p: int
    u_trunc: int
    m: list                      # TruncatedSeries1 in u, index k

    @property
    def k_max(self) -> int:
        return len(self.m) - 1

    def recurrence_holds(self) -> bool:
        q, N = self.q, self.u_trunc
        for k in range(1, len(self.m)):
            a = self.m[k - 1].coeffs
            b = self.m[k - 2].coeffs if k >= 2 else [0] * N
            for deg in range(N):
                rhs = Fraction(0)
                if deg >= 1 and (deg - 1) % q == 0:
                    rhs += a[(deg - 1) // q]
                if deg % (q * q) == 0:
                    rhs += b[deg // (q * q)]
                if self.m[k].coeffs[deg] != rhs / self.p:
                    return False
        return True

    def denominator_bound_holds(self) -> bool:
        """v(coefficient of u^d in m_k) >= -(k + a)/2, a the largest admissible count of u-steps.

        A monomial of m_k arises from a steps u -> u m(u^q) and b steps u -> m(u^{q^2}) with
        a + 2b = k; it carries pi^{-(a+b)} and has degree >= 1 + q + ... + q^{a-1}."""
        for k, s in enumerate(self.m):
            for d, c in enumerate(s.coeffs):
                if c and 2 * vp(c, self.p) < -(k + max_u_steps(self.q, d, k)):
                    return False
        return True

    def u_derivatives(self) -> list:
        """The coefficient series of g_1 = dg/du."""
        return [s.derivative() for s in self.m]

    def log_series(self, x_trunc: int) -> TruncatedSeries1:
        """g(u, x) as a series in x with u-series coefficients."""
        z = _uzero(self.u_trunc, self.p)
        co = [z] * x_trunc
        k = 0
        while self.q ** k < x_trunc:
            if k > self.k_max:
                raise ValueError("k_max too small for the requested x truncation")
            co[self.q ** k] = self.m[k]
            k += 1
        return TruncatedSeries1(co, x_trunc, z, self.p)


def max_u_steps(q: int, d: int, k: int) -> int:
    """Largest a <= k with a = k mod 2 and 1 + q + ... + q^{a-1} <= d."""
    a = 0
    while (q ** (a + 1) - 1) // (q - 1) <= d:
        a += 1
    a = min(a, k)
    if (k - a) % 2:
        a -= 1
    return a


def _uzero(N, p):
    return TruncatedSeries1([Fraction(0)] * N, N, Fraction(0), p)


def build_quasilog(q: int, u_trunc: int, k_max: int) -> QuasiLog:
    if k_max < 2 or u_trunc < 1:
        raise ValueError("need k_max >= 2 and u_trunc >= 1")
    p, _ = prime_of(q)
    ms = [TruncatedSeries1.from_dict(d, u_trunc, Fraction(0), p) for d in m_dicts(q, u_trunc, k_max)]
    return QuasiLog(q, p, u_trunc, ms)


def m_values(u0, q: int, K: int) -> list:
    """[m_0(u0), ..., m_K(u0)] at a point (Fraction or PadicElem)."""
    vals = []
    for v in _m_diagonals(u0, q):
        vals.append(v)
        if len(vals) > K:
            return vals


def _qpow(x, q: int):
    """x^q; for a PadicElem ball the binomial expansion gives the sharp error radius."""
    if not isinstance(x, PadicElem) or type(x.prec) is float:
        return x ** q
    T = x.T
    r = x.prec
    vc = x.vbound()
    y = T._mk(x.c, x.s, T.cap) ** q
    err = min(vp(math.comb(q, i), T.p) + (q - i) * vc + i * r for i in range(1, q + 1))
    return y.with_prec(err)


def _m_diagonals(u, q):
    """Yield m_0(u), m_1(u), ... lazily.

    M[k][j] = m_k(u^{q^j}) satisfies M[k][j] = (u^{q^j} M[k-1][j+1] + M[k-2][j+2]) / pi;
    all three terms lie on the diagonal k + j = d, so m_d needs only that diagonal."""
    p, _ = prime_of(q)
    inv = Fraction(1, p)
    one = u.T.one() if isinstance(u, PadicElem) else Fraction(1)
    upow = [u]
    yield one
    d = 1
    while True:
        # diag[k] = M[k][d - k]
        diag = [one]
        for k in range(1, d + 1):
            a = upow[d - k] * diag[k - 1]
            if k >= 2:
                a = a + diag[k - 2]
            diag.append(a * inv)
        yield diag[d]
        upow.append(_qpow(upow[-1], q))
        d += 1


# ---------------------------------------------------------------------------
# module laws


@dataclass
class FormalModuleLaw:
    """F(x, y) and a -> [a](x); coefficients are u-series, Fractions or PadicElem."""

    F: TruncatedSeries2
    mult: dict
    q: int
    p: int
    x_trunc: int
    ring: str
    u0: object = None
    tower: FieldTower | None = None
    source: tuple | None = None          # (u_src, s0, height) of an isogeny F_{u_src} -> this law
    meta: dict = field(default_factory=dict)

    @property
    def pi_series(self) -> TruncatedSeries1:
        return self.mult["pi"]

    def zeta_mult(self, zeta) -> TruncatedSeries1:
        """[zeta](x) = zeta x for Teichmuller zeta (the logarithm only has degrees q^k)."""
        z = self.F.zero
        return TruncatedSeries1([z, z + zeta] + [z] * (self.x_trunc - 2), self.x_trunc, z, self.p)

    def identity_holds(self) -> bool:
        for (i, j), c in self.F.coeffs.items():
            if j == 0 and not c_is_zero(c - (1 if i == 1 else 0)):
                return False
        return (1, 0) in self.F.coeffs

    def is_commutative(self) -> bool:
        return self.F.diag_equal(self.F.swap())

    def height_certified(self) -> bool:
        """Degrees < q^2 of [pi] have positive valuation and degree q^2 is a unit."""
        P = self.pi_series
        q2 = self.q * self.q
        if P.N <= q2:
            raise PrecisionLoss("[pi] truncated below degree q^2")
        for k in range(1, q2):
            if c_val(P.coeffs[k], self.p) <= 0:
                return False
        return c_val(P.coeffs[q2], self.p) == 0

    def ms(self, K: int) -> list:
        """m_0..m_K at the specialisation point (cached)."""
        cached = self.meta.get("ms")
        if cached is None or len(cached) <= K:
            cached = m_values(self.u0, self.q, K)
            self.meta["ms"] = cached
        return cached[:K + 1]


def _rational_teichmuller(q):
    p, f = prime_of(q)
    if f != 1:
        return []
    return [Fraction(z) for z in (1, -1) if (z ** (q - 1)) == 1 and (z % p) != 0 and (q > 2 or z == 1)]


def _check_integral(series_list, what, tol=None):
    for s in series_list:
        cs = s.coeffs.values() if isinstance(s, TruncatedSeries2) else s.coeffs
        for c in cs:
            v = c_val(c, s.p)
            if v < 0 and (tol is None or not isinstance(c, PadicElem) or c.prec > tol):
                raise IntegralityViolation(f"{what} has a coefficient of valuation {v}")


def _law_from_log(g: TruncatedSeries1, q, p, X, ring, zero, extra_mult=()):
    ginv = comp_inverse(g)
    gd = {k: c for k, c in enumerate(g.coeffs) if not c_is_zero(c)}
    G2 = TruncatedSeries2({}, X, X, zero, p, X)
    d = {}
    for k, c in gd.items():
        d[(k, 0)] = c
        d[(0, k)] = c
    G2 = G2.like(d)
    F = compose2(ginv, G2)
    mult = {"pi": compose(ginv, g * Fraction(p))}
    for z in extra_mult:
        mult[z] = compose(ginv, g * z)
    return F, mult, ginv


def build_module_law(logsrc: QuasiLog, u_trunc: int | None = None,
                     x_trunc: int | None = None) -> FormalModuleLaw:
    """F_u = g^{-1}(g(x) + g(y)) and [a]_u = g^{-1}(a g(x)) over A[[u]] mod u^{u_trunc}."""
    q, p = logsrc.q, logsrc.p
    N = min(u_trunc or logsrc.u_trunc, logsrc.u_trunc)
    X = x_trunc or q * q + q + 1
    ql = logsrc if N == logsrc.u_trunc else QuasiLog(q, p, N, [s.truncate(N) for s in logsrc.m])
    g = ql.log_series(X)
    zero = _uzero(N, p)
    F, mult, _ = _law_from_log(g, q, p, X, "A[[u]]", zero, _rational_teichmuller(q))
    _check_integral([F] + list(mult.values()), "universal law")
    return FormalModuleLaw(F, mult, q, p, X, f"A[[u]]/u^{N}", meta={"quasilog": ql})


def _eval_useries(c: TruncatedSeries1, u0, upows):
    acc = None
    for d, a in enumerate(c.coeffs):
        if a:
            t = upows[d] * a
            acc = t if acc is None else acc + t
    return acc


def specialize(law: FormalModuleLaw, u0) -> FormalModuleLaw:
    """Substitute u := u0 in every coefficient (v(u0) > 0)."""
    if not law.ring.startswith("A[[u]]"):
        raise ValueError("specialize expects a law over A[[u]]")
    N = law.F.zero.N
    exact = not isinstance(u0, PadicElem)
    if exact and Fraction(u0) != 0:
        u0 = FieldTower.base(law.p, prime_of(law.q)[1]).from_rational(u0)
        exact = False
    if exact:
        zero = Fraction(0)

        def sub(c):
            return c.coeffs[0]
        T = None
    else:
        T = u0.T
        v = u0.valuation()
        if not v > 0:
            raise ValueError("specialisation point must have positive valuation")
        zero = T.zero()
        upows = [T.one()]
        for _ in range(1, N):
            upows.append(upows[-1] * u0)
        cut = N * v

        def sub(c):
            r = _eval_useries(c, u0, upows)
            return zero if r is None else r.with_prec(cut)
    F = TruncatedSeries2({k: sub(c) for k, c in law.F.coeffs.items()}, law.F.Nx, law.F.Ny,
                         zero, law.p, law.F.Nt)
    mult = {}
    for key, s in law.mult.items():
        mult[key] = TruncatedSeries1([sub(c) for c in s.coeffs], s.N, zero, law.p)
    return FormalModuleLaw(F, mult, law.q, law.p, law.x_trunc, "Q" if exact else T.name,
                           u0=Fraction(0) if exact else u0, tower=T,
                           source=(u0, 1, 0) if not exact else None)


def module_law_at(u0, q: int, x_trunc: int | None = None) -> FormalModuleLaw:
    """F_{u0} built directly from the values m_k(u0) (exact for rational u0)."""
    p, _ = prime_of(q)
    X = x_trunc or q * q + q + 1
    K = 0
    while q ** (K + 1) < X:
        K += 1
    if isinstance(u0, PadicElem):
        zero, T, ring = u0.T.zero(), u0.T, u0.T.name
    else:
        u0 = Fraction(u0)
        zero, T, ring = Fraction(0), None, "Q"
    ms = m_values(u0, q, max(K, 2))
    co = [zero] * X
    for k in range(K + 1):
        co[q ** k] = ms[k]
    g = TruncatedSeries1(co, X, zero, p)
    F, mult, _ = _law_from_log(g, q, p, X, ring, zero, _rational_teichmuller(q) if T is None else ())
    law = FormalModuleLaw(F, mult, q, p, X, ring, u0=u0, tower=T, source=(u0, 1, 0) if T else None)
    law.meta["ms"] = ms
    return law


def law_over(law: FormalModuleLaw, T: FieldTower, x_trunc: int | None = None) -> FormalModuleLaw:
    """The same specialised law with coefficients in an extension tower."""
    u0 = law.u0
    u0 = T.coerce(u0) if isinstance(u0, PadicElem) else T.from_rational(u0)
    return module_law_at(u0, law.q, x_trunc or law.x_trunc)


def padic_law(law: FormalModuleLaw) -> FormalModuleLaw:
    if law.tower is not None:
        return law
    return law_over(law, FieldTower.base(law.p, prime_of(law.q)[1]))


# ---------------------------------------------------------------------------
# Newton solves against the logarithm


def _log_and_deriv(ms, q, P: TruncatedSeries1):
    N = P.N
    one = P.like([P.zero + 1] + [P.zero] * (N - 1))
    acc = P * ms[0] if ms[0] != 1 else P
    dacc = one
    Pk, Qk = P, one
    for k in range(1, len(ms)):
        Pq1 = Pk ** (q - 1)
        Qk = Qk * Pq1
        Pk = Pq1 * Pk
        acc = acc + Pk * ms[k]
        dacc = dacc + Qk * (ms[k] * q ** k)
    return acc, dacc


def _first_nonzero(s: TruncatedSeries1) -> int:
    for k, c in enumerate(s.coeffs):
        if not c_is_zero(c):
            return k
    return s.N


def _newton_log(ms, q, rhs: TruncatedSeries1, P: TruncatedSeries1, max_iter=40) -> TruncatedSeries1:
    """Solve g(P) = rhs for P, starting from P correct in low degree."""
    last = -1
    for _ in range(max_iter):
        G, D = _log_and_deriv(ms, q, P)
        R = G - rhs
        k = _first_nonzero(R)
        if k >= R.N:
            return P
        if k <= last:
            raise ConvergenceFailure(f"logarithm Newton step stalled at degree {k}")
        last = k
        P = P - R * D.inverse()
    raise ConvergenceFailure("logarithm Newton solve did not converge")


def _k_for_degree(q, N):
    K = 0
    while q ** (K + 1) < N:
        K += 1
    return max(K, 1)


def pi_series(law: FormalModuleLaw, N: int) -> TruncatedSeries1:
    """[pi](x) mod x^N via Newton on g([pi](x)) = pi g(x)."""
    q, p = law.q, law.p
    cached = law.meta.get("pi", {}).get(N)
    if cached is not None:
        return cached
    ms = law.ms(_k_for_degree(q, N))
    zero = law.F.zero
    gco = [zero] * N
    for k, m in enumerate(ms):
        if q ** k < N:
            gco[q ** k] = m
    g = TruncatedSeries1(gco, N, zero, p)
    start = law.pi_series
    P = TruncatedSeries1(start.coeffs[:min(start.N, N)], N, zero, p)
    P = _newton_log(ms, q, g * Fraction(p), P)
    law.meta.setdefault("pi", {})[N] = P
    return P


def translate_series(law: FormalModuleLaw, c: PadicElem, N: int) -> TruncatedSeries1:
    """F(x, c) mod x^N for a point c of positive valuation, via g(F(x, c)) = g(x) + g(c)."""
    q, p = law.q, law.p
    T = c.T
    vc = c.valuation()
    if vc == INF:
        return TruncatedSeries1([T.zero(), T.one()] + [T.zero()] * (N - 2), N, T.zero(), p)
    if not vc > 0:
        raise ValueError("translation point must have positive valuation")
    cap = T.cap
    K = _k_for_degree(q, N)
    while q ** K * vc - K < cap + 2:
        K += 1
    ms = [T.coerce(m) if isinstance(m, PadicElem) else T.from_rational(m) for m in law.ms(K)]
    zero = T.zero()
    gco = [zero] * N
    for k, m in enumerate(ms):
        if q ** k < N:
            gco[q ** k] = m
    g = TruncatedSeries1(gco, N, zero, p)
    gc = zero
    ck = c
    for k, m in enumerate(ms):
        if k:
            ck = ck ** q
        gc = gc + m * ck
    rhs = g + gc
    P = TruncatedSeries1([c, T.one()] + [zero] * (N - 2), N, zero, p)
    return _newton_log(ms, q, rhs, P)


def _log_terms(q, v, cap):
    """Number of logarithm terms so that omitted ones have valuation >= cap at v(x) = v."""
    K = 1
    while q ** K * v - K < cap + 2:
        K += 1
    return K


def log_value(law: FormalModuleLaw, x: PadicElem):
    """(g(x), g'(x)) at a point of positive valuation."""
    q = law.q
    T = x.T
    K = _log_terms(q, x.vbound(), T.cap)
    ms = [T.coerce(m) if isinstance(m, PadicElem) else T.from_rational(m) for m in law.ms(K)]
    g, dg = x, T.one()
    xk, dk = x, T.one()                   # x^{q^k}, x^{q^k - 1}
    for k in range(1, K + 1):
        t = xk ** (q - 1)
        dk = dk * t
        xk = xk * t
        g = g + ms[k] * xk
        dg = dg + ms[k] * dk * (q ** k)
    return g, dg


def refine_torsion_point(law: FormalModuleLaw, x: PadicElem, max_iter: int = 30) -> PadicElem:
    """Newton on the logarithm: torsion points are its zeros and g' is a unit there."""
    T = x.T
    x = T._mk(x.c, x.s, T.cap)            # treat the approximation as exact
    for _ in range(max_iter):
        g, dg = log_value(law, x)
        if g.is_zero():
            return x.with_prec(g.prec - dg.valuation())
        x = x - g / dg
        x = T._mk(x.c, x.s, T.cap)
    raise ConvergenceFailure("torsion refinement did not converge")


def eval2(F: TruncatedSeries2, x: PadicElem, y: PadicElem):
    """F(x, y) from the known terms, with a lower bound on the valuation of the missing terms."""
    T = x.T
    acc = T.zero()
    xp, yp = {}, {}
    for (i, j), c in F.coeffs.items():
        if i not in xp:
            xp[i] = x ** i
        if j not in yp:
            yp[j] = y ** j
        acc = acc + xp[i] * yp[j] * c
    vx, vy = x.vbound(), y.vbound()
    if F.Nt is not None:
        err = F.Nt * min(vx, vy)
    else:
        err = min(F.Nx * vx, F.Ny * vy)
    return acc.with_prec(err), err


def eval1(s: TruncatedSeries1, x: PadicElem):
    """s(x) from the known terms with the integral-tail error bound N v(x)."""
    acc = s.eval(x)
    if not isinstance(acc, PadicElem):
        acc = x.T.coerce(acc)
    err = s.N * x.vbound()
    return acc.with_prec(err), err


# ---------------------------------------------------------------------------
# torsion


@dataclass
class TorsionBasis:
    carrier: FieldTower
    alpha: PadicElem
    beta: PadicElem
    points: dict                 # (a, b) residue pair -> [a]alpha +_F [b]beta
    law: FormalModuleLaw
    weierstrass: list
    roots: list
    scalars: object = None       # residue field F_q acting through Teichmuller lifts

    @property
    def nonzero_points(self) -> list:
        return [pt for lab, pt in self.points.items() if any(any(x) for x in lab)]

    def valuations(self) -> dict:
        out = {}
        for pt in self.nonzero_points:
            v = pt.valuation()
            out[v] = out.get(v, 0) + 1
        return out


def _snap(z: PadicElem, err, roots: list):
    """The unique root within valuation-distance err of z (err None: equal at precision)."""
    def close(r):
        d = z - r
        return d.is_zero() if err is None else d.vbound() >= err
    hits = [r for r in roots if close(r)]
    if len(hits) != 1:
        raise PrecisionLoss("approximate point does not isolate a unique torsion point")
    return hits[0]


def torsion_basis(law: FormalModuleLaw, N: int | None = None) -> TorsionBasis:
    """An A/pi-basis of F[pi] and all of its points, in a tower where they split."""
    q, p = law.q, law.p
    law = padic_law(law)
    T = law.tower
    d = q * q - 1
    P = pi_series(law, 4 * q * q + 4)
    poly = polygon_of_coeffs(P.coeffs[1:d + 2])
    r = min(sl for sl, _ in poly.slopes)
    # the Weierstrass precision is governed by the tail weight N r
    N = N or max(4 * q * q + 4, math.ceil(5 / r) + 1)
    P = pi_series(law, N)
    s = TruncatedSeries1(P.coeffs[1:], N - 1, T.zero(), p)
    W = weierstrass_polynomial(s, r)
    if len(W) - 1 != d:
        raise PrecisionLoss(f"torsion polynomial has degree {len(W) - 1}, expected {d}")
    T2, roots = split_polynomial(W, T)
    roots = [x for x in roots if not x.is_zero()]
    if len(roots) != d:
        raise PrecisionLoss("torsion polynomial did not split into distinct nonzero roots")
    law2 = law_over(law, T2, max(law.x_trunc, 2 * q * q + 2))
    approx = roots
    sep = max((a - b).vbound() for a, b in itertools.combinations(approx, 2)) if d > 1 else 0
    roots = [refine_torsion_point(law2, x) for x in approx]
    for a, r in zip(approx, roots):
        if not (a - r).vbound() > sep:
            raise PrecisionLoss("refined torsion point left its Weierstrass root")
    F = T.residue_field                      # scalars A/pi = F_q
    units = [a for a in F.elements() if any(a)]
    teich = {a: T2.coerce(teichmuller(T, a)) for a in F.elements()}
    alpha = roots[0]
    orbit = [teich[a] * alpha for a in units]
    beta = None
    for x in roots:
        if all(not (x - o).is_zero() for o in orbit):
            beta = x
            break
    if beta is None:
        raise PrecisionLoss("could not find a second torsion generator")
    points = {}
    for a in F.elements():
        for b in F.elements():
            if not any(a) and not any(b):
                points[(a, b)] = T2.zero()
            elif not any(b):
                points[(a, b)] = _snap(teich[a] * alpha, None, roots)
            elif not any(a):
                points[(a, b)] = _snap(teich[b] * beta, None, roots)
            else:
                z, err = eval2(law2.F, teich[a] * alpha, teich[b] * beta)
                points[(a, b)] = _snap(z, err, roots)
    tb = TorsionBasis(T2, alpha, beta, points, law2, W, roots, F)
    _check_torsion(tb)
    return tb


def _check_torsion(tb: TorsionBasis):
    F = tb.scalars
    pts = tb.nonzero_points
    for i, x in enumerate(pts):
        for y in pts[i + 1:]:
            if (x - y).is_zero():
                raise PrecisionLoss("torsion points are not distinct at certified precision")
    # closure under the group law: labels add
    labels = list(tb.points)
    for l1 in labels:
        for l2 in labels:
            if not any(any(c) for c in l1) or not any(any(c) for c in l2):
                continue
            s = (F.add(l1[0], l2[0]), F.add(l1[1], l2[1]))
            z, err = eval2(tb.law.F, tb.points[l1], tb.points[l2])
            if _snap(z, None, tb.roots + [tb.carrier.zero()]) is not tb.points[s] and \
                    not (tb.points[s].is_zero() and z.is_zero()):
                raise PrecisionLoss("torsion set failed the closure check")


def pi_kills(tb: TorsionBasis, N: int | None = None) -> bool:
    """[pi](x) = 0 at certified precision for every listed point."""
    P = pi_series(tb.law, N or 4 * tb.law.q ** 2 + 4)
    for pt in tb.nonzero_points:
        z, err = eval1(P, pt)
        if not z.is_zero():
            return False
    return True


def enumerate_pi_subgroups(basis: TorsionBasis) -> list:
    """The q + 1 lines of F[pi], each as a list of q points (0 first)."""
    F = basis.scalars
    zero, one = F.zero, F.one
    gens = [(one, zero), (zero, one)] + [(one, z) for z in F.elements() if any(z)]
    out = []
    for g in gens:
        pts = [basis.points[(F.mul(c, g[0]), F.mul(c, g[1]))] for c in F.elements()]
        pts.sort(key=lambda x: 0 if x.is_zero() else 1)
        out.append(pts)
    return out


# ---------------------------------------------------------------------------
# isogenies


def isogeny_from_subgroup(law: FormalModuleLaw, C: list, N: int | None = None):
    """f(x) = x prod_{c in C, c != 0} F(x, c) and the pushforward law F_C.

    F_C = f o F o (f^{-1}, f^{-1}) and [pi]_C = f o [pi] o f^{-1}; both must be integral.
    The dual g = [pi] o f^{-1} (so that g o f = [pi]) is stored in meta["dual"]."""
    q, p = law.q, law.p
    pts = [c for c in C if not c.is_zero()]
    if len(pts) != q - 1:
        raise ValueError("subgroup must have q elements")
    T = pts[0].T
    law = law if law.tower is T else law_over(law, T)
    X = law.x_trunc
    N = N or X
    f = TruncatedSeries1([T.zero(), T.one()] + [T.zero()] * (N - 2), N, T.zero(), p)
    for c in pts:
        f = f * translate_series(law, c, N)
    s0 = f.coeffs[1]
    if c_val(f.coeffs[q], p) != 0 or any(c_val(f.coeffs[k], p) <= 0 for k in range(1, q)):
        raise SolveFailure("isogeny is not distinguished of degree q with unit coefficient")
    fX = f.truncate(X)
    finv = comp_inverse(fX)
    inner = substitute2(law.F, finv, finv)
    FC = compose2(fX, inner)
    P = pi_series(law, X)
    dual = compose(P, finv)
    PC = compose(fX, dual)
    tol = T.cap / 2
    _check_integral([FC, PC, dual], "pushforward law", tol)
    u_src = law.u0 if isinstance(law.u0, PadicElem) else T.from_rational(law.u0)
    out = FormalModuleLaw(FC, {"pi": PC}, q, p, X, T.name, tower=T, source=(u_src, s0, 1))
    out.meta.update({"dual": dual, "isogeny": f, "kernel": list(C), "source_law": law})
    return f, out


# ---------------------------------------------------------------------------
# classification


def typical_coefficients(u, u_src, s0, q: int, n_max: int, msrc=None):
    """s_0..s_{n_max} with g_u(h(x)) = s0 g_{u_src}(x), h = sum^F s_n x^{q^n}."""
    out = []
    for x in _typical_iter(u, u_src, s0, q, msrc):
        out.append(x)
        if len(out) > n_max:
            return out


def _typical_iter(u, u_src, s0, q: int, msrc=None):
    """Yield s_0, s_1, ... lazily: s_n = s0 m_n(u_src) - sum_{i=1}^{n} m_i(u) s_{n-i}^{q^i}."""
    T = u.T
    src = iter(msrc) if msrc is not None else _m_diagonals(u_src, q)
    mu_it = _m_diagonals(u, q)
    next(src)
    next(mu_it)
    s0 = T.coerce(s0) if isinstance(s0, PadicElem) else T.from_rational(s0)
    mu = [None]
    pw = [[s0]]                            # pw[m][i] = s_m^(q^i)
    yield s0
    n = 1
    while True:
        mu.append(next(mu_it))
        for row in pw:
            row.append(_qpow(row[-1], q))
        acc = s0 * next(src)
        for i in range(1, n + 1):
            acc = acc - mu[i] * pw[n - i][i]
        pw.append([acc])
        yield acc
        n += 1


def _classify_center(u_src, s0, h, q):
    """Starting point of the digit search: the solution of the s_1 condition at t = 1.

    The s_1 condition pins u down to a disk whose centre moves with t = theta'(0), so every
    digit of u is still searched; the centre only orders the first candidates."""
    if h == 1:
        # s_1 = (s0 m_1(u_src) - m_1(u) s0^q) = (s0 u_src - u s0^q) / pi
        return (s0 * u_src - s0.T.p) / s0 ** q
    if h == 0:
        return u_src
    raise NotADeformation("only isogenies of height 0 and 1 are classified directly")


def _admissible(u, u_src, s0, q, h, n_max, msrc):
    """False when some typical coefficient is provably wrong on the current polydisk.

    u and s0 carry the polydisk radius as absolute precision, so each s_n is an enclosure
    of its values there.  Higher coefficients are built from lower ones, so checking stops
    at the first one whose residue is still undetermined."""
    it = _typical_iter(u, u_src, s0, q, msrc)
    next(it)
    for n in range(1, n_max + 1):
        x = next(it)
        if n == h:
            x = x - 1
        v = x.valuation()
        if type(v) is float:
            if x.prec > 0:
                continue
            return True
        if v <= 0:
            return False
    return True


def classify_deformation(G: FormalModuleLaw, n_max: int = 16, precision=None,
                         return_info: bool = False, max_candidates: int = 512):
    """The parameter u* with a *-isomorphism G ~ F_{u*}.

    G must carry isogeny data (u_src, s0, h): a homomorphism F_{u_src} -> G with derivative s0
    reducing to Frobenius^h.  A *-isomorphism theta: G -> F_{u*} has theta'(0) = t in 1 + m,
    and the homomorphism theta o f has typical coefficients with s_h = 1 and s_n = 0 (n != h)
    modulo the maximal ideal.  These conditions pin (u*, t) down digit by digit: every
    candidate polydisk is evaluated in ball arithmetic and kept unless provably wrong."""
    if G.source is None:
        raise NotADeformation("law carries no isogeny data linking it to the universal family")
    u_src, s0, h = G.source
    T = G.tower or u_src.T
    u_src = T.coerce(u_src)
    s0 = T.coerce(s0) if isinstance(s0, PadicElem) else T.from_rational(s0)
    q = G.q
    c0 = _classify_center(u_src, s0, h, q)
    msrc = m_values(u_src, q, n_max)
    target = Fraction(precision) if precision is not None else Fraction(T.cap) / 4
    e = T.e
    w = T.uniformizer()
    digits = [teichmuller(T, a) for a in T.residue_field.elements()]
    cands = [(c0, T.one())]
    j, wj, levels = 1, w, 0
    survivors = []
    while Fraction(j, e) < target:
        nxt = []
        width = Fraction(j + 1, e)
        for cu, ct in cands:
            tball = s0 * ct.with_prec(Fraction(j, e))
            for a in digits:
                u = cu + a * wj
                # cheap screen: t still ranges over the parent's disk
                if not _admissible(u.with_prec(width), u_src, tball, q, h, n_max, msrc):
                    continue
                for b in digits:
                    t = ct + b * wj
                    if _admissible(u.with_prec(width), u_src, s0 * t.with_prec(width),
                                   q, h, n_max, msrc):
                        nxt.append((u, t))
        if not nxt:
            raise NotADeformation("no parameter satisfies the typical-coefficient conditions")
        if len(nxt) > max_candidates:
            raise PrecisionLoss("typical-coefficient conditions do not separate candidates; "
                                "raise n_max")
        cands = nxt
        survivors.append(len(nxt))
        j += 1
        wj = wj * w
        levels += 1
    # every surviving candidate must agree to the reported precision
    u, t = cands[0]
    prec = min([(u - c).vbound() for c, _ in cands[1:]] + [Fraction(j, e)])
    u = u.with_prec(prec)
    if not u.vbound() > 0:
        raise NotADeformation("classified parameter is not in the open unit disk")
    s = typical_coefficients(u, u_src, s0 * t, q, n_max)
    info = {"precision": prec, "levels": levels, "s": s, "t": t, "survivors": survivors}
    return (u, info) if return_info else u


def strict_isomorphism(G: FormalModuleLaw, u: PadicElem, t=None, check: bool = True) -> TruncatedSeries1:
    """theta = g_u^{-1} o (t log_G); integral iff it is an isomorphism G -> F_u over the integers."""
    T = u.T
    q, p = G.q, G.p
    X = G.x_trunc
    Fy = [G.F.coeffs.get((i, 1), T.zero()) for i in range(X - 1)]
    dF = TruncatedSeries1(Fy, X - 1, T.zero(), p)
    dl = dF.inverse()
    log = TruncatedSeries1([T.zero()] + [dl.coeffs[k] / (k + 1) for k in range(X - 1)], X, T.zero(), p)
    base = module_law_at(u, q, X)
    ms = base.ms(_k_for_degree(q, X))
    gco = [T.zero()] * X
    for k, m in enumerate(ms):
        if q ** k < X:
            gco[q ** k] = m
    ginv = comp_inverse(TruncatedSeries1(gco, X, T.zero(), p))
    if t is not None:
        log = TruncatedSeries1([c * t for c in log.coeffs], X, T.zero(), p)
    theta = compose(ginv, log)
    if check:
        _check_integral([theta], "strict isomorphism", T.cap / 2)
    return theta


def conjugate(law: FormalModuleLaw, theta: TruncatedSeries1) -> FormalModuleLaw:
    """theta o F o (theta^{-1}, theta^{-1}) for a strict isomorphism theta(x) = x + ..."""
    X = law.x_trunc
    th = theta.truncate(X)
    ti = comp_inverse(th)
    F = compose2(th, substitute2(law.F, ti, ti))
    P = compose(th, compose(law.pi_series.truncate(X), ti))
    out = FormalModuleLaw(F, {"pi": P}, law.q, law.p, X, law.ring, u0=None, tower=law.tower,
                          source=law.source)
    return out


# ---------------------------------------------------------------------------
# product of translates


def twisted_product(law: FormalModuleLaw, y_count: int | None = None) -> TruncatedSeries2:
    """g(x, y) = prod_{i=1}^{q-1} F(x, zeta^i y) for a generator zeta of mu_{q-1}."""
    q = law.q
    n = q - 1 if y_count is None else y_count
    zeta = teichmuller_generator(law)
    acc = None
    z = zeta
    for _ in range(n):
        t = law.F.scale_vars(None, z)
        acc = t if acc is None else acc * t
        z = z * zeta
    return acc


def teichmuller_generator(law: FormalModuleLaw):
    q = law.q
    if law.tower is None:
        rs = _rational_teichmuller(q)
        if q - 1 > len(rs):
            raise ValueError("mu_{q-1} is not rational; specialise into a tower first")
        return Fraction(-1) if q == 3 else Fraction(1)
    F = law.tower.residue_field
    for a in F.elements():
        if not any(a):
            continue
        order = next(k for k in range(1, q) if F.pow(a, k) == F.one)
        if order == q - 1:
            return teichmuller(law.tower, a)
    raise ValueError("no generator of the residue field units")
