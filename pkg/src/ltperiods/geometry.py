"""Closed-form radius, distance and count predictions, and the experiments that measure them.

Exponents are valuations: a radius |pi|^e is recorded as e (so larger means smaller)."""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from fractions import Fraction

from .errors import OutOfRange
from .formalmod import (classify_deformation, enumerate_pi_subgroups, isogeny_from_subgroup,
                        module_law_at, pi_series, prime_of, torsion_basis)
from .localfield import INF, FieldTower, PadicElem, fmt_exp, teichmuller
from .periodmap import (PeriodPair, compute_phi, eval_period, fiber_series, hecke_image,
                        hecke_image_consistent)
from .series import (RootProfile, distinguished_degree, polygon_of_coeffs, root_distance_profile,
                     weierstrass_polynomial)


def _merge(pairs) -> tuple:
    out = {}
    for e, c in pairs:
        if c:
            out[e] = out.get(e, 0) + c
    return tuple(sorted(out.items(), key=lambda t: -t[0]))


# ---------------------------------------------------------------------------
# fibers of the period map


@dataclass(frozen=True)
class FiberPattern:
    gamma_exp: Fraction
    q: int
    case: str                  # "generic" | "special" | "injective"
    entries: tuple             # ((distance_exp, count), ...), largest exponent first
    interior_count: int
    level: int                 # n (generic) or s (special)

    def total(self) -> int:
        return sum(c for _, c in self.entries)


def _special_level(g: Fraction, q: int):
    """s with g = 1/(q^s + q^{s+1}), or None."""
    s = 0
    while Fraction(1, q ** s + q ** (s + 1)) >= g:
        if Fraction(1, q ** s + q ** (s + 1)) == g:
            return s
        s += 1
    return None


def _dominating_terms(q: int, index: int, g: Fraction, v_scale) -> list:
    """(weight, degree) for the terms of phi_index that can dominate on |u| = |pi|^g.

    The candidates are u^{(q^a-1)/(q-1)} with coefficient valuation -a/2 (phi0, a even) or
    (1-a)/2 (phi1, a odd); these are the leading terms of the coefficient bound."""
    out = []
    a = 0 if index == 0 else 1
    while True:
        d = (q ** a - 1) // (q - 1)
        v = Fraction(-a, 2) if index == 0 else Fraction(1 - a, 2)
        out.append((v + d * g + v_scale, d))
        if d * g > a + 8:
            break
        a += 2
    return out


def predicted_distinguished_degree(gamma_exp, q: int) -> int:
    """Degree of the dominating term of psi on the closed disk v(x) >= gamma_exp.

    psi = phi0(u1) phi1 - phi1(u1) phi0; with |phi_i(u1)| = ||phi_i|| on the boundary the two
    products have the same sup norm, and the dominating degree is the largest degree reaching it."""
    g = Fraction(gamma_exp)
    n0 = min(w for w, _ in _dominating_terms(q, 0, g, 0))
    n1 = min(w for w, _ in _dominating_terms(q, 1, g, 0))
    terms = _dominating_terms(q, 1, g, n0) + _dominating_terms(q, 0, g, n1)
    sup = min(w for w, _ in terms)
    return max(d for w, d in terms if w == sup)


def predict_fiber_pattern(gamma_exp, q: int) -> FiberPattern:
    """Distances |u_i - u_1| of the other fiber points on the circle |u| = |pi|^gamma_exp."""
    g = Fraction(gamma_exp)
    if g <= 0:
        raise OutOfRange("gamma exponent must be positive")
    if g > Fraction(1, q + 1):
        return FiberPattern(g, q, "injective", (), 0, 0)
    s = _special_level(g, q)
    if s is not None:
        pairs = [((1 - 2 * g * q ** (j - 1)) / (q ** j - q ** (j - 1)), q ** j - q ** (j - 1))
                 for j in range(1, s + 1)]
        pairs.append((g, q ** (s + 1)))
        case, level = "special", s
    else:
        n = 0
        while not g * q ** n > Fraction(1, q + 1):
            n += 1
        pairs = [((1 - 2 * g * q ** (j - 1)) / (q ** j - q ** (j - 1)), q ** j - q ** (j - 1))
                 for j in range(1, n + 1)]
        case, level = "generic", n
    entries = _merge(pairs)
    interior = predicted_distinguished_degree(g, q) - 1 - sum(c for _, c in entries)
    return FiberPattern(g, q, case, entries, interior, level)


@dataclass
class FiberReport:
    gamma_exp: Fraction
    measured: RootProfile
    predicted: FiberPattern
    interior_count: int
    distinguished_degree: int
    dominating_valuation: Fraction
    verdict: str

    def strict_entries(self) -> tuple:
        return tuple((e, c) for e, c in self.measured.entries if e > self.gamma_exp)

    def boundary_count(self) -> int:
        return sum(c for e, c in self.measured.entries if e == self.gamma_exp)

    def to_json(self):
        return {"gamma": fmt_exp(self.gamma_exp),
                "measured": [[fmt_exp(e), c] for e, c in self.measured.entries],
                "predicted": [[fmt_exp(e), c] for e, c in self.predicted.entries],
                "predicted_case": self.predicted.case,
                "interior_count": self.interior_count,
                "predicted_interior_count": self.predicted.interior_count,
                "distinguished_degree": self.distinguished_degree,
                "dominating_valuation": fmt_exp(self.dominating_valuation),
                "verdict": self.verdict}


def interior_root_count(psi, gamma_exp) -> int:
    """Roots of psi with v(x) > gamma_exp, from the polygon of its Weierstrass polynomial."""
    W = weierstrass_polynomial(psi, gamma_exp)
    poly = polygon_of_coeffs(W)
    return poly.zero_order + sum(m for s, m in poly.slopes if s > gamma_exp)


def measure_fiber_pattern(pp: PeriodPair, u1: PadicElem) -> FiberReport:
    g = u1.valuation(strict=True)
    pred = predict_fiber_pattern(g, pp.q)
    psi = fiber_series(pp, u1)
    N, dom = distinguished_degree(psi, g)
    prof = root_distance_profile(psi, u1, g)
    interior = interior_root_count(psi, g)
    strict = tuple((e, c) for e, c in prof.entries if e > g)
    pstrict = tuple((e, c) for e, c in pred.entries if e > g)
    at_g = sum(c for e, c in prof.entries if e == g)
    p_at_g = sum(c for e, c in pred.entries if e == g)
    ok = (prof.center_roots == 1 and strict == pstrict and at_g == p_at_g + interior
          and all(e >= g for e, _ in prof.entries))
    return FiberReport(g, prof, pred, interior, N, dom, "match" if ok else "mismatch")


def sample_point(q: int, a: int, b: int, perturbed: bool = False, zeta: int = 0,
                 f_ext: int = 1) -> PadicElem:
    """zeta * pi^{a/b} (times 1 + pi when perturbed) in Q_q(pi^{1/b}).

    zeta is the Teichmuller lift of the zeta-th element of the residue field of degree f * f_ext."""
    if math.gcd(a, b) != 1 or b < 1:
        raise ValueError("need gcd(a, b) = 1")
    p, f = prime_of(q)
    T = FieldTower.base(p, f * f_ext)
    if b > 1:
        T = T.adjoin_eisenstein([T.from_rational(-p)] + [T.zero()] * (b - 1) + [T.one()])
    x = T.uniformizer() ** a if b > 1 else T.from_rational(p) ** a
    if zeta:
        elems = list(T.residue_field.elements())
        x = x * teichmuller(T, elems[zeta % len(elems)])
    if perturbed:
        x = x * T.from_rational(1 + p)
    return x


def fiber_truncation(gamma_exp, q: int, target: int = 12) -> int:
    """u-truncation so that the omitted tail of psi sits well below the dominating term."""
    g = Fraction(gamma_exp)
    N = predicted_distinguished_degree(g, q)
    d = max(4 * N, 16)
    while d * g - math.log(d, q) / 2 < target:
        d *= 2
    return d


# ---------------------------------------------------------------------------
# torsion norms and Hecke neighbours


def torsion_norm_profile(u0, q: int) -> tuple:
    """Valuations of the nonzero pi-torsion of F_{u0}: slopes of [pi](x)/x."""
    law = module_law_at(u0, q, q * q + 1)
    P = pi_series(law, q * q + 1)
    poly = polygon_of_coeffs(P.coeffs[1:], law.p)
    return _merge(poly.slopes)


def lubin_prediction(gamma_exp, q: int) -> tuple:
    """Neighbour norm exponents for v(u0) = gamma_exp (INF for u0 = 0).

    Below q/(q+1) the q quotients by non-canonical subgroups sit at gamma/q.  The quotient by
    the canonical subgroup sits at 1 - gamma when gamma >= 1/(q+1) (its own canonical subgroup
    is then the image of F[pi]) and at q gamma below that; the two agree at 1/(q+1)."""
    g = gamma_exp
    if g == INF or g >= Fraction(q, q + 1):
        return ((Fraction(1, q + 1), q + 1),)
    g = Fraction(g)
    canonical = 1 - g if g >= Fraction(1, q + 1) else q * g
    return _merge([(g / q, q), (canonical, 1)])


def torsion_prediction(gamma_exp, q: int) -> tuple:
    """Valuations of the nonzero pi-torsion: 1/(q^2-1) in Case 1, otherwise
    q^2-q points at gamma/(q^2-q) and q-1 at (1-gamma)/(q-1)."""
    g = gamma_exp
    if g == INF or g >= Fraction(q, q + 1):
        return ((Fraction(1, q * q - 1), q * q - 1),)
    g = Fraction(g)
    return _merge([(g / (q * q - q), q * q - q), ((1 - g) / (q - 1), q - 1)])


@dataclass
class HeckeReport:
    q: int
    u0_exp: object
    neighbours: list = field(default_factory=list)   # dicts per neighbour
    norms: tuple = ()
    predicted_norms: tuple = ()
    wall_time: float = 0.0

    @property
    def norms_match(self) -> bool:
        return self.norms == self.predicted_norms

    @property
    def relation_holds(self) -> bool:
        return bool(self.neighbours) and all(n["relation"] is True for n in self.neighbours)

    @property
    def consistent_relation_holds(self) -> bool:
        return bool(self.neighbours) and all(n["consistent"] is True for n in self.neighbours)

    @property
    def relation_refuted(self) -> bool:
        """Some neighbour disagrees with [pi w : z] at certified precision."""
        return any(n["relation"] is False for n in self.neighbours)

    def to_json(self):
        return {"q": self.q, "u0_exp": fmt_exp(self.u0_exp),
                "norms": [[fmt_exp(e), c] for e, c in self.norms],
                "predicted_norms": [[fmt_exp(e), c] for e, c in self.predicted_norms],
                "neighbours": self.neighbours, "wall_time": round(self.wall_time, 3)}


def hecke_experiment(u0: PadicElem, q: int, n_max: int = 16, precision=4,
                     u_trunc: int = 64) -> HeckeReport:
    """Classify all q+1 height-1 neighbours of u0 and compare their periods with the Hecke map."""
    t0 = time.time()
    g = u0.valuation()
    pp = compute_phi(q, u_trunc)
    law = module_law_at(u0, q, q * q + q + 1)
    tb = torsion_basis(law)
    rep = HeckeReport(q, g, predicted_norms=lubin_prediction(g, q))
    norms = []
    for C in enumerate_pi_subgroups(tb):
        _, FC = isogeny_from_subgroup(tb.law, C)
        u, info = classify_deformation(FC, n_max=n_max, precision=precision, return_info=True)
        v = u.valuation(strict=True)
        norms.append((v, 1))
        base = eval_period(pp, u.T.coerce(u0))
        pt = eval_period(pp, u)
        expected = hecke_image(base)
        alt = hecke_image_consistent(base)
        c1, c2 = pt.cross(expected), pt.cross(alt)
        rep.neighbours.append({
            "valuation": fmt_exp(v), "precision": fmt_exp(info["precision"]),
            "period_precision": fmt_exp(min(pt.prec, expected.prec)),
            "cross_valuation": fmt_exp(c1.valuation()),
            "relation": pt.compare(expected),
            "consistent_cross_valuation": fmt_exp(c2.valuation()),
            "consistent": pt.compare(alt),
        })
    rep.norms = _merge(norms)
    rep.wall_time = time.time() - t0
    return rep


# ---------------------------------------------------------------------------
# quasi-canonical liftings


def qc_norm_exp(case: str, s: int, q: int) -> Fraction:
    if s < 1:
        raise OutOfRange("level s must be >= 1")
    if case.startswith("unram"):
        return Fraction(1, q ** s + q ** (s - 1))
    if case.startswith("ram"):
        return Fraction(1, 2 * q ** s)
    raise ValueError(f"unknown case {case!r}")


def qc_orbit_distribution(case: str, s: int, q: int) -> tuple:
    """Distances from one level-s quasi-canonical lifting to the other members of its orbit.

    Unramified orbit size q^{s-1}(q+1): q^s at 1/(q^{s-1}(q+1)) and, for 1 <= n <= s-1,
    q^{s-n} - q^{s-n-1} at (q^{n+1}+q^n-2)/(q^{s-1}(q^2-1)).  Ramified orbit size q^s:
    q^{s-n+1} - q^{s-n} at (q^n-1)/(q^s(q-1)) for 1 <= n <= s."""
    if s < 1:
        raise OutOfRange("level s must be >= 1")
    pairs = []
    if case.startswith("unram"):
        pairs.append((Fraction(1, q ** (s - 1) * (q + 1)), q ** s))
        for n in range(1, s):
            pairs.append((Fraction(q ** (n + 1) + q ** n - 2, q ** (s - 1) * (q * q - 1)),
                          q ** (s - n) - q ** (s - n - 1)))
    elif case.startswith("ram"):
        for n in range(1, s + 1):
            pairs.append((Fraction(q ** n - 1, q ** s * (q - 1)), q ** (s - n + 1) - q ** (s - n)))
    else:
        raise ValueError(f"unknown case {case!r}")
    return _merge(pairs)


# ---------------------------------------------------------------------------
# the automorphism group action (leading congruences only)


@dataclass(frozen=True)
class GroupElementApprox:
    kind: str                  # "unit": 1 + pi^n xi, "pi_D": 1 + pi_D pi^n xi
    n: int
    xi: PadicElem

    def __post_init__(self):
        if self.kind not in ("unit", "pi_D"):
            raise ValueError(f"unknown kind {self.kind!r}")
        if self.n < (1 if self.kind == "unit" else 0):
            raise OutOfRange("n too small for this kind")


@dataclass(frozen=True)
class ActionTerm:
    exponent: int
    coefficient: object        # xi - xi^q, or None for the pi_D triviality marker
    degenerate: bool
    marker: str = ""


def leading_exponent(n: int, q: int) -> int:
    """E(n) = q^n + 2(q^{n-1} + ... + q) + 2; the middle sum is empty at n = 1."""
    return q ** n + 2 * sum(q ** i for i in range(1, n)) + 2


def pi_d_exponent(n: int, q: int) -> int:
    """2q^n + 2q^{n-1} + ... + 2q + 2."""
    return 2 * sum(q ** i for i in range(n + 1))


def action_leading_term(g: GroupElementApprox, q: int) -> ActionTerm:
    if g.kind == "pi_D":
        return ActionTerm(pi_d_exponent(g.n, q), None, False, "trivial_mod")
    coef = g.xi - g.xi ** q
    return ActionTerm(leading_exponent(g.n, q), coef, coef.is_zero())


def analyticity_domain_exp(kind: str, n: int, q: int) -> Fraction:
    if kind == "unit":
        if n < 1:
            raise OutOfRange("unit-type needs n >= 1")
        return Fraction(1, q ** n + q ** (n + 1))
    if kind == "pi_D":
        if n < 0:
            raise OutOfRange("pi_D-type needs n >= 0")
        return Fraction(1, 2 * q ** n)
    raise ValueError(f"unknown kind {kind!r}")


def action_bound_check(g: GroupElementApprox, u0_exp, q: int) -> bool:
    """Displacement exponent min(1, E u0_exp) exceeds the injectivity exponent (1-2u0_exp)/(q-1)."""
    x = Fraction(u0_exp)
    E = leading_exponent(g.n, q) if g.kind == "unit" else pi_d_exponent(g.n, q)
    return min(Fraction(1), E * x) > (1 - 2 * x) / (q - 1)
