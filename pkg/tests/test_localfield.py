from fractions import Fraction

import pytest

from ltperiods.errors import NotIrreducible, PrecisionLoss, ZeroDivisor
from ltperiods.localfield import (INF, EtaleQuotient, FieldTower, adjoin_root, fmt_exp,
                                  parse_exp, poly_eval, teichmuller, vp)

Q2 = FieldTower.base(2)


def eis(T, b, a0=None):
    a0 = T.from_rational(-2) if a0 is None else a0
    return [a0] + [T.zero()] * (b - 1) + [T.one()]


def test_valuation_of_pi_is_one():
    assert Q2.from_rational(2).valuation() == 1


def test_cube_root_of_pi_has_valuation_one_third():
    T3 = adjoin_root(Q2, eis(Q2, 3))
    assert T3.e == 3 and T3.generator.valuation() == Fraction(1, 3)


def test_exact_zero_is_infinite():
    assert Q2.zero().valuation() == INF


def test_inexact_zero_strict_raises():
    z = Q2.from_rational(0, prec=5)
    assert z.valuation() == INF
    with pytest.raises(PrecisionLoss):
        z.valuation(strict=True)


def test_rational_valuations():
    assert vp(Fraction(12, 5), 2) == 2
    assert vp(Fraction(3, 8), 2) == -3
    assert Q2.from_rational(Fraction(3, 8)).valuation() == -3


def test_adjoin_unramified_quadratic():
    T = adjoin_root(Q2, [Q2.one(), Q2.one(), Q2.one()])
    assert (T.e, T.f) == (1, 2)
    assert len(list(T.residue_field.elements())) == 4


def test_non_eisenstein_step_rejected():
    T3 = adjoin_root(Q2, eis(Q2, 3))
    w = T3.uniformizer()
    with pytest.raises(NotIrreducible):
        adjoin_root(T3, [T3.from_rational(-2) * w, T3.zero(), T3.one()])


def test_two_eisenstein_steps_give_e6():
    T3 = adjoin_root(Q2, eis(Q2, 3))
    T6 = adjoin_root(T3, [-T3.uniformizer(), T3.zero(), T3.one()])
    assert T6.e == 6 and T6.uniformizer().valuation() == Fraction(1, 6)


def test_adjoined_root_satisfies_polynomial():
    T = adjoin_root(Q2, eis(Q2, 4))
    P = [T.coerce(a) for a in eis(Q2, 4)]
    assert poly_eval(P, T.generator).is_zero()


def test_teichmuller_q4_generator():
    Q4 = FieldTower.base(2, 2)
    z = teichmuller(Q4, Q4.residue_field.generator())
    assert (z ** 3 - 1).is_zero() and not (z - 1).is_zero()


def test_teichmuller_trivial_classes():
    assert (teichmuller(Q2, (1,)) - 1).is_zero()
    assert teichmuller(Q2, (0,)).is_zero()


def test_teichmuller_q3():
    Q3 = FieldTower.base(3)
    z = teichmuller(Q3, (2,))
    assert (z + 1).is_zero()


def test_precision_min_rule_for_add():
    a = Q2.from_rational(3, prec=5)
    b = Q2.from_rational(1, prec=9)
    assert (a + b).prec == 5


def test_precision_rule_for_mul():
    a = Q2.from_rational(2, prec=5)       # v = 1
    b = Q2.from_rational(4, prec=9)       # v = 2
    assert (a * b).prec == min(5 + 2, 9 + 1)


def test_inverse_roundtrip():
    T = adjoin_root(Q2, eis(Q2, 3))
    x = T.uniformizer() * T.from_rational(5) + T.from_rational(2)
    assert (x * x.inverse() - 1).is_zero()


def test_etale_quotient_zero_divisor():
    # x^2 - 1 = (x - 1)(x + 1) over Q_3
    Q3 = FieldTower.base(3)
    E = EtaleQuotient(Q3, [Q3.from_rational(-1), Q3.zero(), Q3.one()])
    with pytest.raises(ZeroDivisor) as exc:
        E.inverse([Q3.from_rational(-1), Q3.one()])
    assert exc.value.factor is not None and len(exc.value.factor) == 2


def test_etale_quotient_inverse():
    Q3 = FieldTower.base(3)
    E = EtaleQuotient(Q3, [Q3.from_rational(-1), Q3.zero(), Q3.one()])
    a = [Q3.from_rational(2), Q3.one()]
    prod = E.mul(a, E.inverse(a))
    assert (prod[0] - 1).is_zero() and prod[1].is_zero()


def test_exponent_serialization():
    assert fmt_exp(Fraction(-3, 4)) == "-3/4"
    assert parse_exp("5/3") == Fraction(5, 3)
    assert fmt_exp(INF) == "inf" and parse_exp("inf") == INF


def test_element_json_has_digits():
    d = Q2.from_rational(5, prec=6).to_json()
    assert d["precision"] == "6/1" and d["digits"][0] == "101"
