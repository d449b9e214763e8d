"""Truncated power series, Newton polygons, Weierstrass preparation and roots.

Coefficients may be Fractions (exact, valuations taken at the prime `p` carried
by the series), PadicElem, or univariate series (for laws over A[[u]]).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Sequence

from .errors import (CarrierTooSmall, ConvergenceFailure, NotDistinguished, NotIrreducible,
                     NotUnit, PrecisionLoss, TruncationUnderflow)
from .localfield import (INF, EtaleQuotient, FieldTower, PadicElem, hensel_root, poly_divmod,
                         poly_taylor_shift, teichmuller, vp)

# ---------------------------------------------------------------------------
# coefficient helpers


def c_is_zero(c) -> bool:
    if isinstance(c, PadicElem):
        return c.prec == INF and not any(c.c) or c.is_zero()
    if isinstance(c, TruncatedSeries1):
        return all(c_is_zero(x) for x in c.coeffs)
    return c == 0


def _exact_zero(c) -> bool:
    if isinstance(c, PadicElem):
        return c.prec == INF and not any(c.c)
    if isinstance(c, TruncatedSeries1):
        return all(_exact_zero(x) for x in c.coeffs)
    return c == 0


def c_val(c, p: int | None = None):
    """Valuation of a coefficient (INF for zero)."""
    if isinstance(c, PadicElem):
        return c.valuation()
    if isinstance(c, TruncatedSeries1):
        return min((c_val(x, c.p) for x in c.coeffs), default=INF)
    return vp(c, p)


def c_prec(c):
    if isinstance(c, PadicElem):
        return c.prec
    if isinstance(c, TruncatedSeries1):
        return min((c_prec(x) for x in c.coeffs), default=INF)
    return INF


# ---------------------------------------------------------------------------
# univariate series


class TruncatedSeries1:
    """sum_{k<N} coeffs[k] x^k; coefficients of degree >= N are unknown.

    `tail` optionally bounds v(a_k) from below for k >= N (callable k -> bound).
    """

    __slots__ = ("coeffs", "N", "zero", "p", "tail")

    def __init__(self, coeffs: Sequence, N: int | None = None, zero=None, p: int | None = None,
                 tail: Callable | None = None):
        coeffs = list(coeffs)
        if N is None:
            N = len(coeffs)
        if zero is None:
            zero = _zero_like(coeffs[0]) if coeffs else Fraction(0)
        coeffs = coeffs[:N] + [zero] * (N - len(coeffs))
        self.coeffs = coeffs
        self.N = N
        self.zero = zero
        self.p = p if p is not None else _prime_of(zero)
        self.tail = tail

    # construction -----------------------------------------------------------

    @classmethod
    def from_dict(cls, d: dict, N: int, zero=Fraction(0), p=None):
        c = [zero] * N
        for k, v in d.items():
            if k < N:
                c[k] = v
        return cls(c, N, zero, p)

    def like(self, coeffs, N=None):
        return TruncatedSeries1(coeffs, self.N if N is None else N, self.zero, self.p)

    def __repr__(self):
        terms = [f"{c}*x^{k}" for k, c in enumerate(self.coeffs) if not c_is_zero(c)]
        return "(" + " + ".join(terms[:8]) + (" + ..." if len(terms) > 8 else "") + f" + O(x^{self.N}))"

    # access -----------------------------------------------------------------

    def coeff(self, k: int):
        if k >= self.N:
            raise TruncationUnderflow(f"degree {k} is beyond truncation {self.N}")
        return self.coeffs[k]

    def __getitem__(self, k):
        return self.coeff(k)

    def truncate(self, N: int) -> "TruncatedSeries1":
        N = min(N, self.N)
        return TruncatedSeries1(self.coeffs[:N], N, self.zero, self.p, self.tail if N == self.N else None)

    def order(self) -> int:
        for k, c in enumerate(self.coeffs):
            if not c_is_zero(c):
                return k
        return self.N

    # arithmetic -------------------------------------------------------------

    def __add__(self, other):
        if not isinstance(other, TruncatedSeries1):
            c = list(self.coeffs)
            c[0] = c[0] + other
            return self.like(c)
        N = min(self.N, other.N)
        return self.like([a + b for a, b in zip(self.coeffs[:N], other.coeffs[:N])], N)

    __radd__ = __add__

    def __neg__(self):
        return self.like([-a for a in self.coeffs])

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if not isinstance(other, TruncatedSeries1):
            return self.like([a * other for a in self.coeffs])
        N = min(self.N, other.N)
        return self.like(_conv(self.coeffs, other.coeffs, N, self.zero), N)

    def __rmul__(self, other):
        return self.like([other * a for a in self.coeffs])

    def __pow__(self, n: int):
        r = self.like([self.zero + 1] + [self.zero] * (self.N - 1)) if self.N else self
        a = self
        while n:
            if n & 1:
                r = r * a
            n >>= 1
            if n:
                a = a * a
        return r

    def shift_up(self, k: int) -> "TruncatedSeries1":
        """Multiply by x^k (truncation grows by k)."""
        return TruncatedSeries1([self.zero] * k + self.coeffs, self.N + k, self.zero, self.p)

    def derivative(self) -> "TruncatedSeries1":
        return TruncatedSeries1([self.coeffs[k] * k for k in range(1, self.N)], self.N - 1,
                                self.zero, self.p)

    def inverse(self) -> "TruncatedSeries1":
        a0 = self.coeffs[0]
        if c_is_zero(a0):
            raise NotUnit("constant term is zero")
        inv0 = 1 / a0 if not isinstance(a0, PadicElem) else a0.inverse()
        b = [inv0]
        for n in range(1, self.N):
            acc = None
            for k in range(1, n + 1):
                a = self.coeffs[k]
                if _exact_zero(a):
                    continue
                t = a * b[n - k]
                acc = t if acc is None else acc + t
            b.append(self.zero if acc is None else -(acc * inv0))
        return self.like(b)

    def scale_var(self, c) -> "TruncatedSeries1":
        """s(c x)."""
        out = []
        pw = None
        for k, a in enumerate(self.coeffs):
            pw = (c ** 0 if not isinstance(c, PadicElem) else c.T.one()) if k == 0 else pw * c
            out.append(a * pw)
        return self.like(out)

    def eval(self, x):
        """Horner evaluation of the known part (no tail accounting)."""
        acc = None
        for a in reversed(self.coeffs):
            acc = a if acc is None else acc * x + a
        return acc

    def valuations(self) -> list:
        return [c_val(c, self.p) for c in self.coeffs]


def _zero_like(c):
    if isinstance(c, PadicElem):
        return c.T.zero()
    if isinstance(c, TruncatedSeries1):
        return TruncatedSeries1([c.zero] * c.N, c.N, c.zero, c.p)
    return Fraction(0)


def _prime_of(z):
    if isinstance(z, PadicElem):
        return z.T.p
    if isinstance(z, TruncatedSeries1):
        return z.p
    return None


def _conv(A, B, N, zero):
    out = [None] * N
    nzB = [(j, b) for j, b in enumerate(B[:N]) if not _exact_zero(b)]
    for i, a in enumerate(A[:N]):
        if _exact_zero(a):
            continue
        for j, b in nzB:
            k = i + j
            if k >= N:
                break
            t = a * b
            out[k] = t if out[k] is None else out[k] + t
    return [zero if x is None else x for x in out]


def compose(outer: TruncatedSeries1, inner: TruncatedSeries1) -> TruncatedSeries1:
    """outer(inner(x)); inner must have zero constant term."""
    if not c_is_zero(inner.coeffs[0]):
        raise ValueError("inner series must have zero constant term")
    o = inner.order()
    N = min(inner.N, outer.N * o) if o < inner.N else inner.N
    inner = inner.truncate(N)
    acc = None
    for a in reversed(outer.coeffs):
        if acc is None:
            acc = inner.like([a] + [inner.zero] * (N - 1), N)
        else:
            acc = acc * inner
            acc.coeffs[0] = acc.coeffs[0] + a
    if acc is None:
        return inner.like([], N)
    return acc


def comp_inverse(s: TruncatedSeries1) -> TruncatedSeries1:
    """Compositional inverse of c x + ... (c invertible in the coefficient ring)."""
    if not c_is_zero(s.coeffs[0]):
        raise ValueError("series must have zero constant term")
    c = s.coeffs[1] if s.N > 1 else None
    if c is None or c_is_zero(c):
        raise NotUnit("linear coefficient is not invertible")
    cinv = c.inverse() if isinstance(c, (PadicElem, TruncatedSeries1)) else 1 / c
    r = s.like([s.zero, cinv] + [s.zero] * (s.N - 2))
    for n in range(2, s.N):
        t = compose(s, r.truncate(n + 1)).coeffs[n]
        r.coeffs[n] = -(t * cinv)
    return r


def series_inverse_unit(c):
    if isinstance(c, PadicElem):
        return c.inverse()
    return c.inverse() if isinstance(c, TruncatedSeries1) else 1 / c


# ---------------------------------------------------------------------------
# bivariate series


class TruncatedSeries2:
    """sum coeffs[(i, j)] x^i y^j, known for i < Nx, j < Ny and (optionally) i + j < Nt."""

    __slots__ = ("coeffs", "Nx", "Ny", "Nt", "zero", "p")

    def __init__(self, coeffs: dict, Nx: int, Ny: int, zero=Fraction(0), p=None, Nt: int | None = None):
        self.Nx, self.Ny, self.Nt = Nx, Ny, Nt
        self.coeffs = {k: v for k, v in coeffs.items() if self.known(*k) and not _exact_zero(v)}
        self.zero = zero
        self.p = p if p is not None else _prime_of(zero)

    def known(self, i: int, j: int) -> bool:
        return i < self.Nx and j < self.Ny and (self.Nt is None or i + j < self.Nt)

    def __repr__(self):
        return f"TruncatedSeries2({len(self.coeffs)} terms, O(x^{self.Nx}, y^{self.Ny}, deg {self.Nt}))"

    def coeff(self, i: int, j: int):
        if not self.known(i, j):
            raise TruncationUnderflow(f"({i},{j}) beyond truncation")
        return self.coeffs.get((i, j), self.zero)

    def like(self, coeffs, Nx=None, Ny=None, Nt=-1):
        return TruncatedSeries2(coeffs, self.Nx if Nx is None else Nx,
                                self.Ny if Ny is None else Ny, self.zero, self.p,
                                self.Nt if Nt == -1 else Nt)

    def _meet(self, other):
        Nt = self.Nt if other.Nt is None else (other.Nt if self.Nt is None else min(self.Nt, other.Nt))
        return min(self.Nx, other.Nx), min(self.Ny, other.Ny), Nt

    def __add__(self, other):
        Nx, Ny, Nt = self._meet(other)
        d = dict(self.coeffs)
        for k, v in other.coeffs.items():
            d[k] = d[k] + v if k in d else v
        return self.like(d, Nx, Ny, Nt)

    def __neg__(self):
        return self.like({k: -v for k, v in self.coeffs.items()})

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, other):
        if not isinstance(other, TruncatedSeries2):
            return self.like({k: v * other for k, v in self.coeffs.items()})
        Nx, Ny, Nt = self._meet(other)
        lim = Nt if Nt is not None else Nx + Ny
        d = {}
        for (i, j), a in self.coeffs.items():
            for (k, l), b in other.coeffs.items():
                if i + k < Nx and j + l < Ny and i + j + k + l < lim:
                    key = (i + k, j + l)
                    t = a * b
                    d[key] = d[key] + t if key in d else t
        return self.like(d, Nx, Ny, Nt)

    def swap(self) -> "TruncatedSeries2":
        return TruncatedSeries2({(j, i): v for (i, j), v in self.coeffs.items()}, self.Ny, self.Nx,
                                self.zero, self.p, self.Nt)

    def scale_vars(self, a=None, b=None) -> "TruncatedSeries2":
        """F(a x, b y)."""
        d = {}
        for (i, j), v in self.coeffs.items():
            t = v
            if a is not None:
                t = t * a ** i if i else t
            if b is not None:
                t = t * b ** j if j else t
            d[(i, j)] = t
        return self.like(d)

    def eval_y(self, y0) -> TruncatedSeries1:
        """F(x, y0) from the known terms (caller accounts for the y-tail)."""
        cols = [None] * self.Nx
        pw = {}
        for (i, j), v in self.coeffs.items():
            if j not in pw:
                pw[j] = y0 ** j
            t = v * pw[j]
            cols[i] = t if cols[i] is None else cols[i] + t
        z = _zero_like(y0) if isinstance(y0, PadicElem) else self.zero
        N = self.Nx if self.Nt is None else min(self.Nx, self.Nt)
        return TruncatedSeries1([z if c is None else c for c in cols[:N]], N, z, self.p)

    def eval_xy(self, x0, y0):
        return self.eval_y(y0).eval(x0)

    def diag_equal(self, other, tol=None) -> bool:
        keys = set(self.coeffs) | set(other.coeffs)
        for k in keys:
            if self.known(*k) and other.known(*k):
                d = self.coeffs.get(k, self.zero) - other.coeffs.get(k, other.zero)
                if not c_is_zero(d) and (tol is None or c_val(d, self.p) < tol):
                    return False
        return True


def compose2(outer: TruncatedSeries1, inner: TruncatedSeries2) -> TruncatedSeries2:
    """outer(inner(x, y)) for inner without constant term."""
    if (0, 0) in inner.coeffs:
        raise ValueError("inner series must vanish at the origin")
    one = {(0, 0): outer.zero + 1}
    acc = inner.like({})
    pw = inner.like(one)
    for k, a in enumerate(outer.coeffs):
        if k:
            pw = pw * inner
            if not pw.coeffs:
                break
        if not c_is_zero(a):
            acc = acc + pw * a
    return acc


def substitute2(F: TruncatedSeries2, u: TruncatedSeries1, v: TruncatedSeries1) -> TruncatedSeries2:
    """F(u(x), v(y)) for u, v without constant term."""
    ux = [None] * F.Nx
    vy = [None] * F.Ny
    base_u = TruncatedSeries2({(i, 0): c for i, c in enumerate(u.coeffs)}, min(F.Nx, u.N), F.Ny,
                              F.zero, F.p, F.Nt)
    base_v = TruncatedSeries2({(0, j): c for j, c in enumerate(v.coeffs)}, F.Nx, min(F.Ny, v.N),
                              F.zero, F.p, F.Nt)
    one = TruncatedSeries2({(0, 0): F.zero + 1}, F.Nx, F.Ny, F.zero, F.p, F.Nt)
    ux[0], vy[0] = one, one
    for i in range(1, F.Nx):
        ux[i] = ux[i - 1] * base_u
    for j in range(1, F.Ny):
        vy[j] = vy[j - 1] * base_v
    acc = F.like({})
    for (i, j), c in F.coeffs.items():
        acc = acc + (ux[i] * vy[j]) * c
    return acc


# ---------------------------------------------------------------------------
# Newton polygons


@dataclass(frozen=True)
class NewtonPolygon:
    """Lower hull; slopes are root valuations (left to right, decreasing)."""

    vertices: tuple
    slopes: tuple
    zero_order: int = 0
    zero_bound: object = INF

    def slope_dict(self) -> dict:
        return {s: m for s, m in self.slopes}

    def to_json(self):
        from .localfield import fmt_exp
        return {"vertices": [[d, fmt_exp(v)] for d, v in self.vertices],
                "slopes": [[fmt_exp(s), m] for s, m in self.slopes],
                "zero_order": self.zero_order}


@dataclass(frozen=True)
class RootProfile:
    entries: tuple          # ((distance_exp, count), ...) sorted by exponent, decreasing
    disk_exp: Fraction
    center_roots: int = 0
    center_bound: object = INF

    @property
    def total(self) -> int:
        return sum(c for _, c in self.entries)

    def as_dict(self) -> dict:
        return dict(self.entries)

    def to_json(self):
        from .localfield import fmt_exp
        return {"entries": [[fmt_exp(e), c] for e, c in self.entries],
                "disk_exp": fmt_exp(self.disk_exp), "center_roots": self.center_roots}


def _points(coeffs, p):
    """Certified points and uncertified lower bounds for a coefficient list."""
    cert, unc = [], []
    for k, c in enumerate(coeffs):
        if isinstance(c, PadicElem):
            v = c.valuation()
            if v == INF:
                if c.prec != INF:
                    unc.append((k, c.prec))
            else:
                cert.append((k, v))
        else:
            v = c_val(c, p)
            if v != INF:
                cert.append((k, Fraction(v)))
    return cert, unc


def _lower_hull(pts):
    hull = []
    for pt in pts:
        while len(hull) >= 2:
            (x1, y1), (x2, y2) = hull[-2], hull[-1]
            # keep hull[-1] only if it lies strictly below the chord hull[-2] -> pt
            if (y2 - y1) * (pt[0] - x1) >= (pt[1] - y1) * (x2 - x1):
                hull.pop()
            else:
                break
        hull.append(pt)
    return hull


def _hull_value(hull, k):
    for (x1, y1), (x2, y2) in zip(hull, hull[1:]):
        if x1 <= k <= x2:
            return y1 + (y2 - y1) * Fraction(k - x1, x2 - x1)
    return None


def polygon_of_coeffs(coeffs, p=None) -> NewtonPolygon:
    """Newton polygon of a finite coefficient list (leading coefficient certified)."""
    cert, unc = _points(coeffs, p)
    if not cert:
        raise PrecisionLoss("no certified coefficient")
    k0 = cert[0][0]
    hull = _lower_hull(cert)
    for k, b in unc:
        if k < k0:
            continue
        hv = _hull_value(hull, k)
        if hv is not None and b < hv:
            raise PrecisionLoss(f"coefficient {k} is uncertified below the hull")
    slopes = []
    for (x1, y1), (x2, y2) in zip(hull, hull[1:]):
        s = Fraction(y1 - y2, x2 - x1)
        if slopes and slopes[-1][0] == s:
            slopes[-1] = (s, slopes[-1][1] + x2 - x1)
        else:
            slopes.append((s, x2 - x1))
    zb = INF
    for k, b in unc:
        if k < k0:
            zb = min(zb, Fraction(b - cert[0][1], k0 - k))
    return NewtonPolygon(tuple(hull), tuple(slopes), k0, zb)


def _tail_weight(s: TruncatedSeries1, r):
    """Lower bound for min_{k >= N} v(a_k) + k r (integral tail when no bound is attached)."""
    N = s.N
    tail = s.tail
    if tail is None:
        return N * r
    best = INF
    # bounds in scope grow at least linearly in k; scan a generous window
    for k in range(N, 8 * N + 64):
        w = tail(k) + k * r
        if w < best:
            best = w
    return best


def distinguished_degree(s: TruncatedSeries1, disk_exp) -> tuple:
    """(N, dominating coefficient valuation) on the closed disk v(x) >= disk_exp."""
    r = Fraction(disk_exp)
    cert, unc = _points(s.coeffs, s.p)
    if not cert:
        raise NotDistinguished("no certified coefficient")
    sup = min(v + k * r for k, v in cert)
    N = max(k for k, v in cert if v + k * r == sup)
    for k, b in unc:
        w = b + k * r
        if (k <= N and w < sup) or (k > N and w <= sup):
            raise PrecisionLoss(f"coefficient {k} is too imprecise to certify domination")
    if 2 * N >= s.N:
        raise NotDistinguished(f"dominating degree {N} too close to truncation {s.N}")
    if _tail_weight(s, r) <= sup:
        raise NotDistinguished("tail bound does not exclude later domination")
    return N, sup - N * r


def newton_polygon(s: TruncatedSeries1, disk_exp) -> NewtonPolygon:
    N, _ = distinguished_degree(s, disk_exp)
    return polygon_of_coeffs(s.coeffs[:N + 1], s.p)


# ---------------------------------------------------------------------------
# Weierstrass preparation


def _wval(c, k, r):
    v = c.vbound() if isinstance(c, PadicElem) else c_val(c)
    return v + k * r


def weierstrass_polynomial(s: TruncatedSeries1, disk_exp, max_iter: int = 60) -> list:
    """Monic polynomial (list of PadicElem) with the same roots as s on the disk.

    Quadratic Hensel lifting of s = W * U measured in the weighted norm of the disk."""
    r = Fraction(disk_exp)
    N, dom = distinguished_degree(s, r)
    sup = dom + N * r
    T = s.coeffs[N].T
    if N == 0:
        return [T.one()]
    D = s.N
    rho = _tail_weight(s, r) - sup
    for k, c in enumerate(s.coeffs):
        if c.prec != INF:
            rho = min(rho, c.prec + k * r - sup)
    inv = s.coeffs[N].inverse()
    a = [c * inv for c in s.coeffs]
    W = a[:N] + [T.one()]
    U = TruncatedSeries1(a[N:], D - N, T.zero())
    S = TruncatedSeries1(a, D, T.zero())
    target = rho + N * r       # weighted precision after normalisation (a_N = 1)
    last = None
    for _ in range(max_iter):
        Wser = TruncatedSeries1(W, D, T.zero())
        Ufull = TruncatedSeries1(U.coeffs, D, T.zero())
        E = S - Wser * Ufull
        err = min((_wval(c, k, r) for k, c in enumerate(E.coeffs) if not c.is_zero()), default=INF)
        if err >= target:
            break
        if last is not None and err <= last:
            raise ConvergenceFailure("Weierstrass iteration stalled")
        last = err
        G = E * Ufull.inverse()
        Q, R = poly_divmod(list(G.coeffs), W)
        W = [w + rr for w, rr in zip(W[:N], R)] + [T.one()]
        UQ = Ufull * TruncatedSeries1(Q, D, T.zero())
        U = TruncatedSeries1([x + y for x, y in zip(U.coeffs, UQ.coeffs)], D - N, T.zero())
    else:
        raise ConvergenceFailure("Weierstrass iteration did not converge")
    out = []
    for i, w in enumerate(W[:N]):
        out.append(w.with_prec(target - i * r) if target != INF else w)
    out.append(T.one())
    return out


def root_distance_profile(s: TruncatedSeries1, center: PadicElem, disk_exp) -> RootProfile:
    W = weierstrass_polynomial(s, disk_exp)
    shifted = poly_taylor_shift(W, W[0].T.coerce(center))
    poly = polygon_of_coeffs(shifted)
    entries = tuple(poly.slopes)
    return RootProfile(entries, Fraction(disk_exp), poly.zero_order, poly.zero_bound)


def profile_of_roots(roots, center) -> RootProfile:
    counts = {}
    zero = 0
    for x in roots:
        v = (x - center).valuation()
        if v == INF:
            zero += 1
        else:
            counts[v] = counts.get(v, 0) + 1
    entries = tuple(sorted(counts.items(), key=lambda t: -t[0]))
    return RootProfile(entries, min(counts) if counts else Fraction(0), zero)


# ---------------------------------------------------------------------------
# roots in towers


def _scaled(P, T: FieldTower, h: int):
    """Q(y) = P(w^h y) / w^m normalised to minimal valuation 0; returns (Q, w^h)."""
    w = T.uniformizer()
    wh = w ** h if h >= 0 else w.inverse() ** (-h)
    Q = []
    pw = T.one()
    for a in P:
        Q.append(a * pw)
        pw = pw * wh
    m = min(q.vbound() for q in Q)
    k = int(m * T.e)
    if k:
        sc = w.inverse() ** k if k > 0 else w ** (-k)
        Q = [q * sc for q in Q]
    return Q, wh


def _residual(Q, T):
    F = T.residue_field
    return F.ptrim([q.residue() if q.vbound() >= 0 else F.zero for q in Q])


def _roots_rec(P, T: FieldTower, min_val, depth=0):
    if depth > 60:
        raise PrecisionLoss("root clustering exceeds working precision")
    poly = polygon_of_coeffs(P)
    roots = [T.zero()] * poly.zero_order
    F = T.residue_field
    for lam, mult in poly.slopes:
        if lam <= min_val:
            continue
        if (lam * T.e).denominator != 1:
            continue
        h = int(lam * T.e)
        Q, wh = _scaled(P, T, h)
        R = _residual(Q, T)
        rts = F.proots(R)
        for rr, mu in rts.items():
            if not any(rr):
                continue
            lift = teichmuller(T, rr)
            if mu == 1:
                y = hensel_root(Q, lift)
                roots.append(wh * y)
            else:
                S = poly_taylor_shift(Q, lift)
                for z in _roots_rec(S, T, Fraction(0), depth + 1):
                    roots.append(wh * (lift + z))
    return roots


def find_roots(P, T: FieldTower) -> list:
    """All roots of P found in T (possibly fewer than deg P)."""
    P = [T.coerce(a) for a in P]
    return _roots_rec(P, T, -INF)


def polynomial_roots(w, field) -> list:
    """Roots of a monic polynomial in a tower or etale quotient carrier."""
    if isinstance(field, EtaleQuotient):
        return _etale_roots(w, field)
    roots = find_roots(w, field)
    if len(roots) < len(w) - 1:
        err = CarrierTooSmall(f"found {len(roots)} of {len(w) - 1} roots")
        err.found = roots
        raise err
    return roots


def _etale_roots(w, E: EtaleQuotient):
    """Roots of w in L[x]/(W) reachable by Newton iteration from the generator class."""
    L = E.base
    w = [L.coerce(a) for a in w]
    dw = [w[k].scale(k) for k in range(1, len(w))]

    def ev(P, x):
        acc = E.reduce([L.zero()])
        for a in reversed(P):
            acc = E.add(E.mul(acc, x), E.reduce([a]))
        return acc

    roots = []
    x = E.gen()
    for _ in range(200):
        val = ev(w, x)
        if all(c.is_zero() for c in val):
            break
        d = ev(dw, x)
        x = [a - b for a, b in zip(x, E.mul(val, E.inverse(d)))]
    roots.append(x)
    if len(roots) < len(w) - 1:
        err = CarrierTooSmall(f"etale carrier yields {len(roots)} of {len(w) - 1} roots")
        err.found = roots
        raise err
    return roots


def _segment_factor(P, T, lam, slopes):
    """Monic factor of P whose roots have valuation exactly lam."""
    bigger = [s for s, _ in slopes if s > lam]
    ser = TruncatedSeries1(list(P) + [T.zero()] * (len(P) + 2), 2 * len(P) + 2, T.zero(),
                           tail=lambda k: INF)
    W1 = weierstrass_polynomial(ser, lam)
    if bigger:
        lam2 = (lam + min(bigger)) / 2
        W2 = weierstrass_polynomial(ser, lam2)
        g, rem = poly_divmod(W1, W2)
        return g
    zero_order = polygon_of_coeffs(P).zero_order
    if zero_order:
        return W1[zero_order:]
    return W1


def _charpoly(elem_coeffs, g, T):
    """Characteristic polynomial over T of multiplication by an element of T[x]/(g)."""
    d = len(g) - 1

    def mulx(v):
        out = [T.zero()] + v[:-1]
        top = v[-1]
        return [o - top * gi for o, gi in zip(out, g[:d])]

    basis_img = []
    v = [T.zero()] * d
    for k, c in enumerate(elem_coeffs[:d]):
        v[k] = v[k] + c
    cur = v
    for _ in range(d):
        basis_img.append(cur)
        cur = mulx(cur)
    # column j = element * x^j ; matrix rows i
    M = [[basis_img[j][i] for j in range(d)] for i in range(d)]
    return _berkowitz_elem(M, T)


def _berkowitz_elem(M, T):
    n = len(M)
    one, zero = T.one(), T.zero()
    vect = [one, -M[0][0]]
    for r in range(1, n):
        R = [M[r][c] for c in range(r)]
        C = [M[c][r] for c in range(r)]
        A = [[M[i][j] for j in range(r)] for i in range(r)]
        col = [one, -M[r][r]]
        vecC = C
        for _ in range(r):
            s = zero
            for x, y in zip(R, vecC):
                s = s + x * y
            col.append(-s)
            vecC = [sum((A[i][j] * vecC[j] for j in range(r)), zero) for i in range(r)]
        new = []
        for i in range(r + 2):
            t = zero
            for j in range(len(vect)):
                k = i - j
                if 0 <= k < len(col):
                    t = t + col[k] * vect[j]
            new.append(t)
        vect = new
    return list(reversed(vect))


def _needed_extension(P, T: FieldTower, min_val, depth=0):
    poly = polygon_of_coeffs(P)
    F = T.residue_field
    for lam, mult in poly.slopes:
        if lam <= min_val:
            continue
        le = lam * T.e
        if le.denominator != 1:
            a, d = le.numerator, le.denominator
            if T.p % d != 0 and d % T.p != 0:
                # tame: residual polynomial in Y = z^d / w^a
                hull = poly.vertices
                i = next(x for x, _ in hull if _on_segment(hull, x, lam))
                vi = P[i].valuation()
                w = T.uniformizer()
                base_pow = int(vi * T.e)
                winv = w.inverse()
                R = []
                l = 0
                while i + d * l < len(P):
                    c = P[i + d * l] * (w ** (a * l)) * (winv ** base_pow if base_pow > 0 else w ** (-base_pow))
                    R.append(c.residue() if c.vbound() >= 0 else F.zero)
                    l += 1
                R = F.ptrim(R)
                rts = [x for x in F.proots(R) if any(x)]
                if rts:
                    c = teichmuller(T, rts[0])
                    al = pow(a, -1, d)
                    be = (al * a - 1) // d
                    # uniformizer Y' = z^al / w^be satisfies Y'^d = w * c^al
                    const = -(w * c ** al)
                    E = [const] + [T.zero()] * (d - 1) + [T.one()]
                    return ("eis", E)
                return ("unram", F.min_root_degree(R))
            g = _segment_factor(P, T, lam, poly.slopes)
            if len(g) - 1 != d:
                raise NotIrreducible("wild segment whose factor is not irreducible by degree")
            al = pow(a, -1, d) if math.gcd(a, d) == 1 else 1
            be = (al * a - 1) // d
            if al == 1 and be == 0:
                return ("eis", g)
            w = T.uniformizer()
            xpow = [T.one()]
            for _ in range(al):
                xpow = _polymulmod(xpow, [T.zero(), T.one()], g, T)
            elem = [c * (w.inverse() ** be) for c in xpow]
            cp = _charpoly(elem, g, T)
            return ("eis", cp)
        h = int(le)
        Q, _ = _scaled(P, T, h)
        R = _residual(Q, T)
        rts = F.proots(R)
        rest = R
        for rr, mu in rts.items():
            for _ in range(mu):
                rest = F.pdivmod(rest, [F.neg(rr), F.one])[0]
        while len(rest) > 1 and not any(rest[0]):
            rest = rest[1:]
        if len(rest) > 1:
            return ("unram", F.min_root_degree(rest))
        for rr, mu in rts.items():
            if any(rr) and mu > 1:
                S = poly_taylor_shift(Q, teichmuller(T, rr))
                ext = _needed_extension(S, T, Fraction(0), depth + 1)
                if ext is not None:
                    return ext
    return None


def _on_segment(hull, x, lam):
    for (x1, y1), (x2, y2) in zip(hull, hull[1:]):
        if Fraction(y1 - y2, x2 - x1) == lam and x == x1:
            return True
    return False


def _polymulmod(A, B, g, T):
    prod = [T.zero()] * (len(A) + len(B) - 1)
    for i, a in enumerate(A):
        for j, b in enumerate(B):
            prod[i + j] = prod[i + j] + a * b
    if len(prod) >= len(g):
        prod = poly_divmod(prod, g)[1]
    return prod


def split_polynomial(P, T: FieldTower, max_steps: int = 8):
    """Extend T until P splits; returns (tower, roots)."""
    for _ in range(max_steps):
        P = [T.coerce(a) for a in P]
        roots = find_roots(P, T)
        if len(roots) >= len(P) - 1:
            return T, roots
        ext = _needed_extension(P, T, -INF)
        if ext is None:
            raise PrecisionLoss("roots missing but no extension identified")
        kind, data = ext
        if kind == "unram":
            T = T.extend_unramified(data)
        else:
            T = T.adjoin_eisenstein(data)
    raise CarrierTooSmall("splitting did not finish")
