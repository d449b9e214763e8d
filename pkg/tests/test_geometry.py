from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from ltperiods.errors import OutOfRange
from ltperiods.formalmod import (classify_deformation, enumerate_pi_subgroups,
                                 isogeny_from_subgroup, module_law_at, torsion_basis)
from ltperiods.geometry import (GroupElementApprox, action_bound_check, action_leading_term,
                                analyticity_domain_exp, fiber_truncation, leading_exponent,
                                lubin_prediction, measure_fiber_pattern, pi_d_exponent,
                                predict_fiber_pattern, predicted_distinguished_degree,
                                qc_norm_exp, qc_orbit_distribution, sample_point,
                                torsion_norm_profile, torsion_prediction)
from ltperiods.localfield import INF, FieldTower
from ltperiods.periodmap import compute_phi

F = Fraction
Q2 = FieldTower.base(2)


def test_predicted_patterns_q2():
    p = predict_fiber_pattern(F(1, 4), 2)
    assert p.entries == ((F(1, 2), 1),) and p.interior_count == 1
    assert predict_fiber_pattern(F(1, 3), 2).entries == ((F(1, 3), 2),)
    p = predict_fiber_pattern(F(1, 6), 2)
    assert p.entries[0] == (F(2, 3), 1) and p.interior_count == 1
    assert predict_fiber_pattern(F(1, 2), 2).case == "injective"


def test_predicted_distinguished_degrees():
    assert [predicted_distinguished_degree(F(1, b), 2) for b in (4, 3, 6)] == [3, 3, 7]


def test_fiber_truncations():
    assert [fiber_truncation(F(1, b), 2) for b in (4, 3, 6)] == [64, 64, 112]


@pytest.mark.parametrize("b", [4, 3])
def test_measured_fiber_matches_prediction(b):
    u = sample_point(2, 1, b)
    rep = measure_fiber_pattern(compute_phi(2, fiber_truncation(F(1, b), 2)), u)
    assert rep.verdict == "match"
    assert rep.distinguished_degree == 3


def test_torsion_profiles():
    assert torsion_norm_profile(Q2.from_rational(2), 2) == ((F(1, 3), 3),)
    assert torsion_norm_profile(Q2.zero(), 2) == ((F(1, 3), 3),)
    u = sample_point(2, 1, 4)
    assert set(torsion_norm_profile(u, 2)) == {(F(3, 4), 1), (F(1, 8), 2)}
    assert set(torsion_prediction(F(1, 4), 2)) == {(F(3, 4), 1), (F(1, 8), 2)}


def test_lubin_dichotomy():
    assert lubin_prediction(INF, 2) == ((F(1, 3), 3),)
    assert lubin_prediction(F(1), 2) == ((F(1, 3), 3),)
    # canonical quotient: q gamma below 1/(q+1), 1 - gamma above it
    assert set(lubin_prediction(F(1, 4), 2)) == {(F(1, 8), 2), (F(1, 2), 1)}
    assert set(lubin_prediction(F(1, 2), 2)) == {(F(1, 4), 2), (F(1, 2), 1)}
    assert set(lubin_prediction(F(1, 3), 2)) == {(F(1, 6), 2), (F(2, 3), 1)}


def test_case2_neighbour_norms_at_sqrt_pi():
    u0 = sample_point(2, 1, 2)
    tb = torsion_basis(module_law_at(u0, 2, 7))
    norms = []
    for C in enumerate_pi_subgroups(tb):
        _, FC = isogeny_from_subgroup(tb.law, C)
        norms.append(classify_deformation(FC, n_max=16, precision=F(3, 2)).valuation(strict=True))
    assert sorted(norms) == [F(1, 4), F(1, 4), F(1, 2)]
    assert dict(lubin_prediction(F(1, 2), 2)) == {F(1, 4): 2, F(1, 2): 1}


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 40), st.integers(1, 40), st.sampled_from([2, 3, 4, 5]))
def test_prediction_counts(a, b, q):
    g = F(a, a + b)
    assert sum(c for _, c in lubin_prediction(g, q)) == q + 1
    assert sum(c for _, c in torsion_prediction(g, q)) == q * q - 1


def test_qc_norms():
    assert qc_norm_exp("unram", 1, 2) == F(1, 3) and qc_norm_exp("ram", 2, 2) == F(1, 8)
    with pytest.raises(OutOfRange):
        qc_norm_exp("unram", 0, 2)


def test_qc_orbit_examples():
    assert qc_orbit_distribution("unram", 1, 2) == ((F(1, 3), 2),)
    assert set(qc_orbit_distribution("unram", 2, 2)) == {(F(2, 3), 1), (F(1, 6), 4)}
    assert qc_orbit_distribution("ram", 1, 2) == ((F(1, 2), 1),)
    assert set(qc_orbit_distribution("ram", 2, 2)) == {(F(3, 4), 1), (F(1, 4), 2)}


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 5), st.sampled_from([2, 3, 4, 5, 7]))
def test_qc_orbit_sizes(s, q):
    un = sum(c for _, c in qc_orbit_distribution("unram", s, q))
    ra = sum(c for _, c in qc_orbit_distribution("ram", s, q))
    assert un == q ** (s - 1) * (q + 1) - 1 and ra == q ** s - 1
    # distances never fall below the norm itself
    for case in ("unram", "ram"):
        assert min(d for d, _ in qc_orbit_distribution(case, s, q)) >= qc_norm_exp(case, s, q)


def test_action_exponents():
    assert leading_exponent(1, 2) == 4 and leading_exponent(2, 2) == 10
    assert pi_d_exponent(0, 2) == 2 and pi_d_exponent(1, 3) == 8


def test_action_leading_term_degenerate_for_rational_xi():
    g = GroupElementApprox("unit", 1, Q2.one())
    t = action_leading_term(g, 2)
    assert t.exponent == 4 and t.degenerate
    Q4 = FieldTower.base(2, 2)
    from ltperiods.localfield import teichmuller
    z = teichmuller(Q4, Q4.residue_field.generator())
    assert not action_leading_term(GroupElementApprox("unit", 1, z), 2).degenerate
    assert action_leading_term(GroupElementApprox("pi_D", 0, z), 2).marker == "trivial_mod"


def test_group_element_validation():
    with pytest.raises(OutOfRange):
        GroupElementApprox("unit", 0, Q2.one())
    with pytest.raises(ValueError):
        GroupElementApprox("other", 1, Q2.one())


def test_analyticity_domains():
    assert analyticity_domain_exp("unit", 1, 2) == F(1, 6)
    assert analyticity_domain_exp("pi_D", 0, 2) == F(1, 2)


@settings(max_examples=100, deadline=None)
@given(st.integers(1, 3), st.integers(1, 200), st.sampled_from([2, 3]))
def test_action_bound_inside_domain(n, k, q):
    lo = analyticity_domain_exp("unit", n, q)
    x = lo + (1 - lo) * F(k, 201)
    assert action_bound_check(GroupElementApprox("unit", n, Q2.one()), x, q)


@pytest.mark.parametrize("n,q", [(1, 2), (2, 2), (1, 3), (3, 3)])
def test_action_bound_sharp_at_boundary(n, q):
    lo = analyticity_domain_exp("unit", n, q)
    assert not action_bound_check(GroupElementApprox("unit", n, Q2.one()), lo, q)
