from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from ltperiods.errors import OutOfRange
from ltperiods.localfield import INF, FieldTower, vp
from ltperiods.periodmap import (WholeDisk, compute_phi, derivative_norm_exp, eval_period,
                                 hecke_image, hecke_image_consistent, image_radius_exp,
                                 injectivity_radius_exp, phi_tail_bound, ProjPoint,
                                 ratio_derivative)

from oracles import phi_by_pairs

F = Fraction
Q2 = FieldTower.base(2)


def nz(s):
    return {k: c for k, c in enumerate(s.coeffs) if c}


def root_of_pi(b):
    return Q2.adjoin_eisenstein([Q2.from_rational(-2)] + [Q2.zero()] * (b - 1) + [Q2.one()])


def test_phi_q2_mod_u16():
    pp = compute_phi(2, 16)
    assert nz(pp.phi0) == {0: 1, 3: F(1, 2), 9: F(1, 2), 12: F(1, 2), 15: F(1, 4)}
    assert nz(pp.phi1) == {1: 1, 4: 1, 7: F(1, 2)}


def test_phi_q3_leading_terms():
    assert nz(compute_phi(3, 27).phi0) == {0: 1, 4: F(1, 3)}


@pytest.mark.parametrize("q,N,steps", [(2, 64, 4), (3, 81, 3)])
def test_phi_matches_pair_recursion(q, N, steps):
    pp = compute_phi(q, N)
    a, b = phi_by_pairs(q, q, N, steps)
    assert nz(pp.phi0) == a and nz(pp.phi1) == b


@pytest.mark.parametrize("q", [2, 3])
def test_tail_bound_holds_on_computed_coefficients(q):
    pp = compute_phi(q, 200)
    for i in (0, 1):
        for d, c in nz(pp.series(i)).items():
            assert vp(c, q) >= phi_tail_bound(q, i, d)


def test_tail_bound_is_attained_q2():
    pp = compute_phi(2, 64)
    # phi0 at u^3 = u^{1+q} carries 1/2: a = 2 u-steps
    assert phi_tail_bound(2, 0, 3) == -1 and pp.phi0.coeffs[3] == F(1, 2)
    assert phi_tail_bound(2, 1, 1) == 0 and pp.phi1.coeffs[1] == 1


def test_eval_period_at_zero():
    pt = eval_period(compute_phi(2, 16), Q2.zero())
    assert pt.z.valuation() == 0 and pt.w.valuation() == INF


def test_eval_period_rejects_units():
    with pytest.raises(OutOfRange):
        eval_period(compute_phi(2, 16), Q2.one())


def test_eval_period_at_pi_is_affine():
    pt = eval_period(compute_phi(2, 32), Q2.from_rational(2))
    # phi0(pi) = 1 + 4 + ..., phi1(pi) = 2 + 16 + ...
    assert pt.z.valuation() == 0 and pt.ratio().valuation() == 1


def test_hecke_images_swap_charts():
    T = Q2
    pt = ProjPoint(T.one(), T.from_rational(2))
    a, b = hecke_image(pt), hecke_image_consistent(pt)
    assert a.ratio().valuation() == -2 and b.ratio().valuation() == 0


def test_derivative_of_ratio_at_quarter():
    pp = compute_phi(2, 64)
    u = root_of_pi(4).uniformizer()
    d = ratio_derivative(pp, u)
    assert d.valuation(strict=True) == derivative_norm_exp(F(1, 4), 2, 1) == F(1, 2)


def test_radius_formulas():
    assert injectivity_radius_exp(F(1, 4), 2) == F(1, 2)
    assert injectivity_radius_exp(F(1, 2), 2) == WholeDisk(F(1, 3))
    assert image_radius_exp(F(1, 4), 2, 1) == 1
    assert image_radius_exp(F(1, 6), 2, 1) == F(5, 3)


def test_chart_ranges_enforced():
    with pytest.raises(OutOfRange):
        derivative_norm_exp(F(1, 3), 2, 1)     # endpoint of the odd-s range
    with pytest.raises(OutOfRange):
        derivative_norm_exp(F(1, 12), 2, 2)    # even s
    assert image_radius_exp(F(1, 12), 2, 2) == 2 + 1 - F(2 * 8, 12)


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 11), st.integers(12, 100))
def test_injectivity_radius_exceeds_gamma(n, d):
    g = F(n, d)
    r = injectivity_radius_exp(g, 2)
    if isinstance(r, WholeDisk):
        assert g > F(1, 3)
    else:
        assert r > g or (r == g == F(1, 3))


def test_projpoint_compare_needs_precision_beyond_guard():
    a = ProjPoint(Q2.one(), Q2.from_rational(2, prec=F(3, 2)))
    b = ProjPoint(Q2.one(), Q2.from_rational(3))
    assert a.agrees(b) and a.compare(b) is None
    c = ProjPoint(Q2.one(), Q2.from_rational(2, prec=10))
    assert c.compare(b) is False and c.compare(ProjPoint(Q2.one(), Q2.from_rational(2))) is True
