import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from hopf_recenter.smooth import (
    Multiplier,
    SmoothFunction,
    SymmetryError,
    apply_J,
    linear_combination,
    random_noise,
)

orders = st.tuples(st.integers(0, 2), st.integers(0, 2))
seeds = st.integers(0, 2 ** 31)


def poly_wave(seed: int) -> SmoothFunction:
    """A real function mixing polynomial and oscillating parts."""
    rng = np.random.default_rng(seed)
    f = random_noise(2, seed, bandwidth=2, modes=3)
    return f * SmoothFunction.monomial((int(rng.integers(0, 3)), int(rng.integers(0, 2)))) + f


def central_difference(f: SmoothFunction, y, j: int, h: float = 1e-5) -> float:
    up, down = list(y), list(y)
    up[j] += h
    down[j] -= h
    return (f.evaluate(up) - f.evaluate(down)) / (2 * h)


class TestAlgebra:
    def test_evaluate_cos(self):
        f = SmoothFunction.cos((1, 2))
        assert f.evaluate((0.3, 0.1)) == pytest.approx(math.cos(0.3 + 0.2), rel=1e-15)

    def test_shifted_monomial(self):
        f = SmoothFunction.shifted_monomial((2, 1), (0.5, -1.0))
        assert f.evaluate((1.5, 2.0)) == pytest.approx(1.0 ** 2 * 3.0, rel=1e-14)

    def test_cancellation_prunes(self):
        f = SmoothFunction.cos((1, 0))
        assert (f - f).is_zero()

    def test_linear_combination(self):
        a, b = SmoothFunction.monomial((1, 0)), SmoothFunction.constant(2, 1.0)
        f = linear_combination(2, [(a, 2.0), (b, -1.0)])
        assert f.evaluate((3.0, 0.0)) == pytest.approx(5.0)

    def test_imaginary_residue_is_an_error(self):
        with pytest.raises(SymmetryError):
            SmoothFunction.wave((1, 0)).evaluate((0.7, 0.0))

    def test_random_noise_is_real_and_seeded(self):
        a, b = random_noise(2, 7), random_noise(2, 7)
        assert a.is_hermitian() and a.allclose(b, rtol=0.0)
        assert not a.allclose(random_noise(2, 8))

    def test_bandwidth_validation(self):
        with pytest.raises(ValueError):
            random_noise(1, 0, bandwidth=0)

    @given(seeds, seeds)
    def test_product_commutes(self, s1, s2):
        f, g = poly_wave(s1), poly_wave(s2)
        assert (f * g).allclose(g * f)


class TestCalculus:
    @given(seeds, st.sampled_from([0, 1]))
    def test_first_derivative_against_differences(self, seed, j):
        f = poly_wave(seed)
        y = (0.4, 1.3)
        n = [0, 0]
        n[j] = 1
        exact = f.derive(n).evaluate(y)
        assert exact == pytest.approx(central_difference(f, y, j), rel=1e-6, abs=1e-6)

    @given(seeds, seeds, orders)
    def test_leibniz(self, s1, s2, n):
        f, g = poly_wave(s1), poly_wave(s2)
        lhs = (f * g).derive(n)
        rhs = SmoothFunction.zero(2)
        for a in range(n[0] + 1):
            for b in range(n[1] + 1):
                c = math.comb(n[0], a) * math.comb(n[1], b)
                rhs = rhs + (f.derive((a, b)) * g.derive((n[0] - a, n[1] - b))).scale(c)
        assert lhs.allclose(rhs, rtol=1e-12)

    def test_polynomial_derivative_exact(self):
        f = SmoothFunction.monomial((3, 0))
        assert f.derive((2, 0)).coefficient_map() == {(1, 0, 0, 0): 6 + 0j}


class TestMultiplier:
    def test_symbol(self):
        g = Multiplier()
        assert g(np.array([0, 0])) == 0.0
        assert g(np.array([1, 2])) == pytest.approx(1 / 6)
        assert Multiplier(zero_mode=1.0)(np.array([0, 0])) == 1.0

    def test_annihilates_polynomials(self):
        assert apply_J((0, 0), SmoothFunction.monomial((1, 1))).is_zero()

    @given(seeds, orders, orders)
    def test_commutes_with_derivatives(self, seed, a, n):
        f = random_noise(2, seed)
        lhs = apply_J(a, f).derive(n)
        rhs = apply_J((a[0] + n[0], a[1] + n[1]), f)
        assert lhs.allclose(rhs, rtol=1e-14)

    def test_wave_scaling(self):
        f = SmoothFunction.cos((1, 1))
        assert apply_J((0, 0), f).allclose(f.scale(1 / 3), rtol=1e-15)


class TestSerialization:
    @given(seeds)
    def test_json_round_trip(self, seed):
        f = poly_wave(seed)
        g = SmoothFunction.from_json(2, f.to_json())
        assert g.allclose(f, rtol=0.0)

    def test_empty(self):
        assert SmoothFunction.from_json(2, []).is_zero()
