import itertools
import warnings
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from hopf_recenter.rules import (
    PRESET_NAMES,
    EnumerationCutoffs,
    RuleSet,
    check_assumption,
    compute_N,
    enumerate_T0,
    preset,
)
from hopf_recenter.trees import (
    DecoratedTree,
    Noise,
    Parameters,
    depth,
    indices_below,
    noise_count,
    parse_tree,
    poly_order,
    scaled_size,
    to_string,
)

K = Fraction(1, 100)


def brute_force(rs: RuleSet, cut: EnumerationCutoffs) -> set:
    """Every tree inside the cutoffs, built blindly and then filtered by the rules."""
    d = rs.params.d
    polys = indices_below(d, Fraction(cut.max_poly_order), strict=False)
    edges = indices_below(d, Fraction(cut.max_edge_order), strict=False)
    budget = cut.poly_budget

    def gen(level):
        out = set()
        # subtrees must conform on their own, which keeps the pool small
        sub = [c for c in gen(level - 1) if noise_count(c) > 0 and rs.conforms(c)] if level else []
        pool = [(a, c) for a in edges for c in sub]
        for size in range(cut.max_noises + 1):
            for kids in itertools.combinations_with_replacement(pool, size):
                if sum(noise_count(c) for _, c in kids) > cut.max_noises:
                    continue
                for k in polys:
                    for nz in (Noise.NONE, Noise.XI):
                        t = DecoratedTree(k, nz, kids)
                        if noise_count(t) <= cut.max_noises and poly_order(t) <= budget:
                            out.add(t)
        return out

    return {t for t in gen(cut.depth_bound) if rs.conforms(t) and depth(t) <= cut.depth_bound}


class TestN:
    @pytest.mark.parametrize("name, expected", [("phi4-4mk", 2), ("phi4-3", 1), ("gkpz", 1)])
    def test_presets(self, name, expected):
        assert compute_N(preset(name).params) == expected

    def test_boundary_is_strict(self):
        # deg_1(dXi) + 2 = 3 exactly, so N = 2 and not 3
        assert compute_N(Parameters(2, Fraction(-1))) == 2

    @given(st.fractions(min_value=-4, max_value=-1, max_denominator=50),
           st.fractions(min_value=0, max_value=2, max_denominator=50))
    def test_monotone_in_roughness(self, alpha, step):
        rough = Parameters(3, alpha - step)
        smooth = Parameters(3, alpha)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            assert compute_N(rough) <= compute_N(smooth)


class TestPresets:
    def test_parameters(self):
        assert preset("phi4-4mk").params == Parameters(4, -3 + K, K)
        assert preset("phi4-3").params == Parameters(3, Fraction(-5, 2) - K, K)
        assert preset("gkpz").params == Parameters(1, Fraction(-3, 2) - K, K)

    def test_unknown(self):
        with pytest.raises(KeyError):
            preset("kpz")

    def test_from_dict(self):
        rs = RuleSet.from_dict({
            "name": "toy", "d": 1, "alpha": "-3/2",
            "patterns": [{"noise": "XI"},
                         {"poly": True, "edges": [{"edge": [0, 0], "min": 1, "max": 2}]}],
        })
        assert rs.conforms(parse_tree("X^(0,1) * I(Xi)", 1))
        assert not rs.conforms(parse_tree("I(Xi) * I(Xi) * I(Xi)", 1))


class TestEnumeration:
    @pytest.mark.parametrize("name", PRESET_NAMES)
    def test_matches_brute_force(self, name):
        rs = preset(name)
        cut = EnumerationCutoffs(2, 1, 1, 2, 1)
        assert set(enumerate_T0(rs, cut)) == brute_force(rs, cut)

    @pytest.mark.parametrize("name", ["phi4-3", "gkpz"])
    def test_matches_brute_force_three_noises(self, name):
        rs = preset(name)
        cut = EnumerationCutoffs(3, 1, 1, 2, 1)
        assert set(enumerate_T0(rs, cut)) == brute_force(rs, cut)

    @pytest.mark.parametrize("name, count", [("phi4-4mk", 95), ("phi4-3", 75), ("gkpz", 867)])
    def test_default_family_sizes(self, name, count):
        assert len(enumerate_T0(preset(name), EnumerationCutoffs(3, 1, 1, 2, 1))) == count

    @pytest.mark.parametrize("name", PRESET_NAMES)
    def test_closed_under_subtrees(self, name):
        family = set(enumerate_T0(preset(name), EnumerationCutoffs(3, 1, 1, 2, 1)))
        for t in family:
            for _, c in t.children:
                assert c in family

    def test_deterministic_order(self):
        cut = EnumerationCutoffs(2, 1, 1)
        a = [to_string(t) for t in enumerate_T0(preset("gkpz"), cut)]
        b = [to_string(t) for t in enumerate_T0(preset("gkpz"), cut)]
        assert a == b

    def test_cutoff_validation(self):
        with pytest.raises(ValueError):
            EnumerationCutoffs(-1)


class TestAssumption:
    def test_phi4_holds(self):
        for name in ("phi4-4mk", "phi4-3"):
            rep = check_assumption(preset(name), EnumerationCutoffs(3, 1, 1, 2, 1))
            assert rep.holds

    def test_gkpz_edge_derivative_violates(self):
        # deg_1(I_(0,1) dXi) = 2 - 1/100 - 1, shifted once more it is negative
        rs = preset("gkpz")
        t = parse_tree("I[(0,1)](Xi)", 1)
        rep = check_assumption(rs, EnumerationCutoffs(1, 0, 1), [t])
        assert not rep.holds
        (tree, a, n, g), = rep.violations
        assert tree == t and a == (0, 1) and scaled_size(n) == 1 and g == -K

    def test_report_json(self):
        rep = check_assumption(preset("gkpz"), EnumerationCutoffs(1, 0, 1))
        data = rep.to_json()
        assert data["N"] == 1 and data["holds"] is False
        assert all(Fraction(v["degree"]) <= 0 for v in data["violations"])
