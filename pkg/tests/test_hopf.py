from fractions import Fraction

import pytest
from gmpy2 import mpq
from hypothesis import given
from hypothesis import strategies as st

from conftest import trees
from hopf_recenter.hopf import (
    IDENTITY_PREPARATION,
    PlusMonomial,
    PreparationMap,
    antipode_plus,
    check_preparation_map,
    coaction,
    coproduct_plus,
    counit,
    delta_hat,
    gamma_hat,
    plus_degree,
    plus_dot,
    plus_lc_mul,
    plus_planted,
    plus_poly,
    plus_to_string,
    plus_unit,
)
from hopf_recenter.lincomb import LinComb
from hopf_recenter.rules import preset
from hopf_recenter.trees import monomial, parse_tree, unit, xi, xidot

P = preset("gkpz").params
K = Fraction(1, 100)


def T(text):
    return parse_tree(text, 1)


def comodule_sides(i, t, p):
    lhs, rhs = LinComb(), LinComb()
    for (l, r), c in coaction(i, t, p).items():
        for (l2, m), c2 in coaction(i, l, p).items():
            lhs.add_term((l2, m, r), c * c2)
        for (m1, m2), c2 in coproduct_plus(i, r, p).items():
            rhs.add_term((l, m1, m2), c * c2)
    return lhs, rhs


def positive_generators(t, p, i):
    return {g for (_, r) in coaction(i, t, p) for g in r.generators()}


class TestPlusMonomial:
    def test_negative_degree_factor_vanishes(self):
        # deg_1(I(Xi)) = 1/2 - 1/100 > 0 but deg_1(I_(0,1)(Xi)) < 0
        assert plus_planted(1, (0, 0), xi(1), P) is not None
        assert plus_planted(1, (0, 1), xi(1), P) is None

    def test_factor_order_is_canonical(self):
        a = plus_planted(2, (0, 0), xi(1), P)
        b = plus_planted(2, (0, 0), xidot(1), P)
        assert a * b == b * a
        assert plus_to_string(a * b * plus_poly((0, 1))) == plus_to_string(plus_poly((0, 1)) * b * a)

    def test_degree(self):
        m = plus_poly((1, 0)) * plus_planted(1, (0, 0), xidot(1), P)
        assert plus_degree(m, 1, P) == 2 + 2 - K

    def test_counit(self):
        assert counit(plus_unit(1)) == 1 and counit(plus_poly((0, 1))) == 0


class TestCoaction:
    def test_monomial(self):
        out = coaction(1, monomial((0, 1)), P)
        assert out == LinComb({(monomial((0, 1)), plus_unit(1)): 1,
                               (unit(1), plus_poly((0, 1))): 1})

    def test_planted_noise(self):
        out = coaction(1, T("I(Xi)"), P)
        gen = plus_planted(1, (0, 0), xi(1), P)
        assert out == LinComb({(T("I(Xi)"), plus_unit(1)): 1, (unit(1), gen): 1})

    def test_dot_is_primitive_only_for_variant_two(self):
        assert coaction(1, xidot(1), P) == LinComb.single((xidot(1), plus_unit(1)), 1)
        assert coaction(2, xidot(1), P) == LinComb({(xidot(1), plus_unit(1)): 1,
                                                    (unit(1), plus_dot(1)): 1})

    @pytest.mark.parametrize("text", ["I(Xi)", "I(I(Xi)) * X^(0,1)", "I(dXi) * I(Xi)",
                                      "Xi * I[(0,1)](I(Xi))"])
    @pytest.mark.parametrize("i", [0, 1, 2])
    def test_comodule_examples(self, text, i):
        lhs, rhs = comodule_sides(i, T(text), P)
        assert lhs == rhs

    @given(trees(max_leaves=3, dot=True), st.sampled_from([0, 1, 2]))
    def test_comodule_property(self, t, i):
        lhs, rhs = comodule_sides(i, t, P)
        assert lhs == rhs


class TestCoproductAntipode:
    @given(trees(max_leaves=3, dot=True), st.sampled_from([0, 1, 2]))
    def test_coassociative(self, t, i):
        for g in positive_generators(t, P, i):
            lhs, rhs = LinComb(), LinComb()
            for (a, b), c in coproduct_plus(i, g, P).items():
                for (a1, a2), c1 in coproduct_plus(i, a, P).items():
                    lhs.add_term((a1, a2, b), c * c1)
                for (b1, b2), c1 in coproduct_plus(i, b, P).items():
                    rhs.add_term((a, b1, b2), c * c1)
            assert lhs == rhs

    @given(trees(max_leaves=3, dot=True), st.sampled_from([0, 1, 2]))
    def test_antipode_both_sides(self, t, i):
        for g in positive_generators(t, P, i):
            expected = LinComb.single(plus_unit(1), mpq(counit(g)))
            left, right = LinComb(), LinComb()
            for (a, b), c in coproduct_plus(i, g, P).items():
                left = left + plus_lc_mul(antipode_plus(i, a, P), LinComb.single(b, c))
                right = right + plus_lc_mul(LinComb.single(a, c), antipode_plus(i, b, P))
            assert left == expected and right == expected

    def test_antipode_of_polynomial(self):
        assert antipode_plus(1, plus_poly((0, 1)), P) == LinComb.single(plus_poly((0, 1)), -1)


class TestDeltaHat:
    def test_primitives(self):
        assert delta_hat(1, xidot(1), P) == LinComb.single((xidot(1), plus_unit(1)), 1)
        assert delta_hat(2, xidot(1), P) == LinComb({(xidot(1), plus_unit(1)): 1,
                                                     (unit(1), plus_dot(1)): -1})

    def test_variant_one_regression(self):
        out = delta_hat(1, T("I(dXi)"), P)
        assert out == LinComb({
            (T("I(dXi)"), plus_unit(1)): 1,
            (monomial((0, 1)), plus_planted(1, (0, 1), xidot(1), P)): -1,
        })

    def test_variant_two_regression(self):
        out = delta_hat(2, T("I(dXi)"), P)
        assert out == LinComb({
            (T("I(dXi)"), plus_unit(1)): 1,
            (monomial((0, 1)), plus_planted(2, (0, 1), xidot(1), P)): -1,
            (monomial((0, 2)), plus_planted(2, (0, 2), xidot(1), P)): Fraction(-1, 2),
            (monomial((1, 0)), plus_planted(2, (1, 0), xidot(1), P)): -1,
        })

    def test_rejects_variant_zero(self):
        with pytest.raises(ValueError):
            delta_hat(0, xi(1), P)

    @given(trees(max_leaves=3, dot=True), st.sampled_from([1, 2]))
    def test_equals_gamma_hat_after_coaction(self, t, i):
        rhs = LinComb()
        for (l, r), c in coaction(i, t, P).items():
            for m, cm in gamma_hat(i, r, P).items():
                rhs.add_term((l, m), c * cm)
        assert delta_hat(i, t, P) == rhs


class TestPreparation:
    def test_identity_conforms(self):
        family = [T(s) for s in ("Xi", "I(Xi)", "X^(0,1) * I(Xi) * I(Xi)", "Xi * I(I(Xi))")]
        assert check_preparation_map(IDENTITY_PREPARATION, family, P) == []

    def test_detects_bad_map(self):
        bad = PreparationMap("scale", lambda t: LinComb.single(t, mpq(2)))
        assert check_preparation_map(bad, [T("I(Xi)")], P)


def test_plus_monomial_equality_and_hash():
    a = PlusMonomial((0, 1), 0, (((0, 0), xi(1)),))
    b = plus_poly((0, 1)) * plus_planted(1, (0, 0), xi(1), P)
    assert a == b and hash(a) == hash(b)
