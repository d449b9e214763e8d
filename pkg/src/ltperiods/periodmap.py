"""The period map u -> [phi0(u) : phi1(u)] and the radius formulas built on it.

phi0 = lim pi^k m_{2k} and phi1 = lim pi^k m_{2k-1}.  Writing a_k = pi^k m_{2k} and
b_k = pi^k m_{2k-1}, the quasi-log recurrence gives

    b_{k+1}(u) = u a_k(u^q) + b_k(u^{q^2}),    a_{k+1}(u) = u b_{k+1}(u^q) / pi + a_k(u^{q^2}),

so ord(b_{k+1} - b_k) >= q^{2k} and ord(a_{k+1} - a_k) >= 1 + q^{2k+1} by induction
(base cases b_2 - b_1 = u^{q^2} + ..., a_1 - a_0 = u^{q+1}/pi).  These orders certify the
truncations; agreement of successive iterates is checked on top.
"""
from __future__ import annotations

import functools
from dataclasses import dataclass
from fractions import Fraction

from .errors import OutOfRange, PrecisionLoss, StabilizationFailure
from .formalmod import m_dicts, max_u_steps, prime_of
from .localfield import INF, PadicElem, fmt_exp
from .series import TruncatedSeries1


# ---------------------------------------------------------------------------
# coefficient bounds


def phi_tail_bound(q: int, index: int, d: int) -> Fraction:
    """Lower bound for v(coefficient of u^d) in phi_index.

    A monomial of m_k built from a steps u -> u m(u^q) and b steps u -> m(u^{q^2}) carries
    pi^{-(a+b)} with a + 2b = k and has degree >= 1 + q + ... + q^{a-1}; multiplying by pi^k
    leaves -a/2 (phi0, a even) or (1 - a)/2 (phi1, a odd)."""
    if index == 0:
        return Fraction(-max_u_steps(q, d, 2 * d + 2), 2)
    return Fraction(1 - max_u_steps(q, d, 2 * d + 1), 2)


def _jump_degrees(q: int, start: int):
    """Degrees >= start where the tail bound can drop: start and 1 + q + ... + q^{a-1}."""
    yield start
    d, a = 1, 1
    while a < 200:
        if d > start:
            yield d
        d += q ** a
        a += 1


def tail_min(q: int, index: int, N: int, r) -> Fraction:
    """min over d >= N of phi_tail_bound(d) + d r, for r > 0."""
    if r <= 0:
        raise OutOfRange("tail bound needs a point of positive valuation")
    best = None
    for d in _jump_degrees(q, N):
        w = phi_tail_bound(q, index, d) + d * r
        if best is None or w < best:
            best = w
        elif d * r > best + 200:
            break
    return best


# ---------------------------------------------------------------------------
# the coordinate series


@dataclass(frozen=True)
class PeriodPair:
    phi0: TruncatedSeries1
    phi1: TruncatedSeries1
    stabilization_degree: int
    q: int

    @property
    def p(self) -> int:
        return prime_of(self.q)[0]

    @property
    def u_trunc(self) -> int:
        return self.phi0.N

    def series(self, index: int) -> TruncatedSeries1:
        return self.phi0 if index == 0 else self.phi1

    def tail(self, index: int, d: int) -> Fraction:
        return phi_tail_bound(self.q, index, d)


def _iterates(q: int, N: int, k: int, ms: list) -> tuple:
    p = prime_of(q)[0]
    a = {d: c * p ** k for d, c in ms[2 * k].items()}
    b = {d: c * p ** k for d, c in ms[2 * k - 1].items()}
    return a, b


@functools.lru_cache(maxsize=16)
def compute_phi(q: int, u_trunc: int) -> PeriodPair:
    """phi0, phi1 modulo u^{u_trunc} as exact rational series with tail bounds."""
    if u_trunc < 1:
        raise ValueError("u_trunc must be >= 1")
    p = prime_of(q)[0]
    k = 1
    while q ** (2 * k) < u_trunc or 1 + q ** (2 * k + 1) < u_trunc:
        k += 1
    ms = m_dicts(q, u_trunc, 2 * k + 2)
    a, b = _iterates(q, u_trunc, k, ms)
    a2, b2 = _iterates(q, u_trunc, k + 1, ms)
    if a != a2 or b != b2:
        raise StabilizationFailure(f"iterates {k} and {k + 1} disagree below degree {u_trunc}")
    zero = Fraction(0)
    phi0 = TruncatedSeries1.from_dict(a, u_trunc, zero, p)
    phi1 = TruncatedSeries1.from_dict(b, u_trunc, zero, p)
    phi0.tail = functools.partial(phi_tail_bound, q, 0)
    phi1.tail = functools.partial(phi_tail_bound, q, 1)
    return PeriodPair(phi0, phi1, u_trunc - 1, q)


def _eval(pp: PeriodPair, index: int, x: PadicElem, deriv: bool = False) -> PadicElem:
    """phi_index(x) (or its derivative) with the tail folded into the precision."""
    T = x.T
    s = pp.series(index)
    co = s.coeffs
    if deriv:
        co = [c * k for k, c in enumerate(co)][1:]
    r = x.vbound()
    acc = T.zero()
    for c in reversed(co):
        acc = acc * x
        if c:
            acc = acc + T.from_rational(c)
    N = len(co)
    # derivative tail: d a_d with d >= N + 1 has valuation >= tail(d), times x^{d-1}
    err = tail_min(pp.q, index, N + (1 if deriv else 0), r) - (r if deriv else 0)
    return acc.with_prec(err)


def phi_values(pp: PeriodPair, u0: PadicElem) -> tuple:
    return _eval(pp, 0, u0), _eval(pp, 1, u0)


# ---------------------------------------------------------------------------
# projective points


@dataclass(frozen=True)
class ProjPoint:
    z: PadicElem
    w: PadicElem

    @classmethod
    def normalized(cls, z: PadicElem, w: PadicElem) -> "ProjPoint":
        vz, vw = z.valuation(), w.valuation()
        if vz == INF and vw == INF:
            raise PrecisionLoss("both homogeneous coordinates vanish to precision")
        if vz <= vw:
            return cls(z.T.one(), w / z)
        return cls(z / w, w.T.one())

    @property
    def prec(self):
        return min(self.z.prec, self.w.prec)

    def cross(self, other: "ProjPoint") -> PadicElem:
        a, b = self.z * other.w, self.w * other.z
        return a - b

    def agrees(self, other: "ProjPoint", guard: int = 2) -> bool:
        c = self.cross(other)
        if c.is_zero():
            return True
        return c.valuation() > min(self.prec, other.prec) - guard

    def compare(self, other: "ProjPoint", guard: int = 2):
        """agrees(), or None when the precision does not exceed the guard digits."""
        if min(self.prec, other.prec) <= guard:
            return None
        return self.agrees(other, guard)

    def ratio(self) -> PadicElem:
        """w/z (affine chart)."""
        return self.w / self.z

    def to_json(self):
        return {"z_val": fmt_exp(self.z.valuation()), "w_val": fmt_exp(self.w.valuation()),
                "precision": fmt_exp(self.prec)}


def eval_period(pp: PeriodPair, u0: PadicElem) -> ProjPoint:
    if not u0.is_zero() and u0.valuation() <= 0:
        raise OutOfRange("the period map is defined on the open unit disk")
    if u0.is_zero() and u0.prec == INF:
        T = u0.T
        return ProjPoint(T.one(), T.zero())
    z, w = phi_values(pp, u0)
    return ProjPoint.normalized(z, w)


def hecke_image(pt: ProjPoint) -> ProjPoint:
    """[z : w] -> [pi w : z]."""
    pi = pt.w.T.from_rational(pt.w.T.p)
    return ProjPoint.normalized(pi * pt.w, pt.z)


def hecke_image_consistent(pt: ProjPoint) -> ProjPoint:
    """[z : w] -> [w : pi z].

    With phi1 = lim pi^k m_{2k-1} and phi0(0) = 1, composing a quasi-logarithm with x^q
    sends the pair (c0, c1) of limit coefficients to (c1, pi c0); this is the relation the
    classified height-1 neighbours satisfy."""
    pi = pt.z.T.from_rational(pt.z.T.p)
    return ProjPoint.normalized(pt.w, pi * pt.z)


def fiber_series(pp: PeriodPair, u1: PadicElem, N: int | None = None) -> TruncatedSeries1:
    """psi(x) = phi0(u1) phi1(x) - phi1(u1) phi0(x), with a tail bound beyond N."""
    if u1.valuation() <= 0:
        raise OutOfRange("u1 must lie in the open unit disk")
    A, B = phi_values(pp, u1)
    T = u1.T
    N = pp.u_trunc if N is None else min(N, pp.u_trunc)
    co = []
    for d in range(N):
        c1, c0 = pp.phi1.coeffs[d], pp.phi0.coeffs[d]
        t = T.zero()
        if c1:
            t = t + A.scale(c1)
        if c0:
            t = t - B.scale(c0)
        co.append(t)
    va, vb = A.vbound(), B.vbound()
    q = pp.q

    def tail(d, va=va, vb=vb, q=q):
        return min(va + phi_tail_bound(q, 1, d), vb + phi_tail_bound(q, 0, d))

    return TruncatedSeries1(co, N, T.zero(), T.p, tail)


def ratio_derivative(pp: PeriodPair, u0: PadicElem) -> PadicElem:
    """(phi1/phi0)'(u0)."""
    a, b = phi_values(pp, u0)
    da, db = _eval(pp, 0, u0, True), _eval(pp, 1, u0, True)
    return (db * a - b * da) / (a * a)


# ---------------------------------------------------------------------------
# radius formulas (valuation exponents: a radius |pi|^e is recorded as e)


@dataclass(frozen=True)
class WholeDisk:
    """Sentinel: injective on the whole disk v(u) > radius_exp."""
    radius_exp: Fraction


def injectivity_radius_exp(gamma_exp, q: int):
    g = Fraction(gamma_exp)
    if g > Fraction(1, q + 1):
        return WholeDisk(Fraction(1, q + 1))
    return (1 - 2 * g) / (q - 1)


def _odd_chart_range(q: int, s: int) -> tuple:
    lo = Fraction(1, q ** (s + 2) + q ** (s + 1))
    hi = Fraction(1, q ** s + q ** (s - 1)) if s >= 1 else Fraction(q, q + 1)
    return lo, hi


def _check_chart(g, q, s, odd_only):
    if s < 0:
        raise OutOfRange("s must be non-negative")
    if s % 2 == 1:
        lo, hi = _odd_chart_range(q, s)
        if not lo < g < hi:
            raise OutOfRange(f"gamma exponent {g} is not strictly between {lo} and {hi}")
        return
    if odd_only:
        raise OutOfRange("the phi1/phi0 chart needs odd s")
    if g != Fraction(1, q ** (s + 1) + q ** s):
        raise OutOfRange("the phi0/phi1 chart is only available at 1/(q^{s+1}+q^s) for even s")


def derivative_norm_exp(gamma_exp, q: int, s: int) -> Fraction:
    """v((phi1/phi0)'(u0)) for v(u0) = gamma_exp in the odd-s range."""
    g = Fraction(gamma_exp)
    _check_chart(g, q, s, True)
    return (s + 1) - 2 * g * sum(q ** i for i in range(s + 1))


def image_radius_exp(gamma_exp, q: int, s: int) -> Fraction:
    """Exponent of the image disk radius of the injectivity domain in the chart for s."""
    g = Fraction(gamma_exp)
    _check_chart(g, q, s, False)
    base = s + 1 if s % 2 == 1 else s
    return base + Fraction(1, q - 1) - 2 * g * Fraction(q ** (s + 1), q - 1)
