"""
Tests for lambda_st, the stationary cumulants and the late-time moments.
"""

import numpy as np
import pytest

from current_counting.catalog import random_model, random_reversible_model, three_state
from current_counting.methods.oracle import distribution_inversion
from current_counting.spectral.charpoly import discriminant, extract_triple
from current_counting.spectral.cumulants import (
    kemeny_modified,
    lambda_st,
    late_time_variance,
    mean_and_diffusion,
    nu_star,
    polynomial_residual,
    stationary_derivatives,
)
from current_counting.core.exceptions import AssumptionError


class TestLambdaSt:

    def test_zero(self, dense_model):
        assert lambda_st(dense_model, 0.0) == 0.0
        assert abs(lambda_st(dense_model, 1e-9)) <= 1e-8

    def test_convex(self, dense_model):
        grid = np.linspace(-2.0, 2.0, 41)
        values = np.array([lambda_st(dense_model, nu) for nu in grid])
        assert np.all(values[:-2] - 2 * values[1:-1] + values[2:] >= -1e-10)

    def test_on_curve(self, dense_model):
        triple = extract_triple(dense_model)
        for nu in (-1.5, -0.3, 0.4, 1.2):
            assert polynomial_residual(triple, lambda_st(dense_model, nu), nu) <= 1e-10

    def test_asymptotics(self, walk_model):
        triple = extract_triple(walk_model)
        for nu, c, m in ((20.0, triple.c_plus, triple.m_plus), (-20.0, triple.c_minus, triple.m_minus)):
            expected = c ** (1.0 / m) * np.exp(abs(nu) / m)
            assert lambda_st(walk_model, nu) == pytest.approx(expected, rel=0.05)

    def test_reversible_even(self, three_state_model):
        for nu in (0.3, 0.9, 1.7):
            assert lambda_st(three_state_model, nu) == pytest.approx(lambda_st(three_state_model, -nu), abs=1e-10)

    def test_gallavotti_cohen(self, walk_model):
        center = nu_star(extract_triple(walk_model), discriminant(extract_triple(walk_model)))
        for nu in np.linspace(-1.0, 1.0, 11):
            assert lambda_st(walk_model, nu) == pytest.approx(lambda_st(walk_model, 2 * center - nu), abs=1e-9)


class TestCurrentAndDiffusion:

    def test_random_walk_current(self, walk_model):
        j, _ = mean_and_diffusion(extract_triple(walk_model))
        assert j == pytest.approx(2 * 0.3 / 16, abs=1e-12)

    def test_reversible_current_vanishes(self, three_state_model):
        j, d = mean_and_diffusion(extract_triple(three_state_model))
        assert j == pytest.approx(0.0, abs=1e-12)
        assert d > 0

    def test_finite_differences(self, dense_model):
        j, d = mean_and_diffusion(extract_triple(dense_model))
        h = 1e-3
        plus, minus = lambda_st(dense_model, h), lambda_st(dense_model, -h)
        assert j == pytest.approx((plus - minus) / (2 * h), abs=1e-6)
        assert d == pytest.approx((plus + minus) / (h * h), abs=1e-6)

    def test_derivatives_match(self, dense_model):
        triple = extract_triple(dense_model)
        derivs = stationary_derivatives(triple, 4)
        j, d = mean_and_diffusion(triple)
        assert derivs[0] == 0.0
        assert derivs[1] == pytest.approx(j, rel=1e-10)
        assert derivs[2] == pytest.approx(d, rel=1e-10)

    def test_reversible_odd_derivatives(self, rng):
        derivs = stationary_derivatives(extract_triple(random_reversible_model(4, rng)), 4)
        assert abs(derivs[1]) <= 1e-8 and abs(derivs[3]) <= 1e-8

    def test_reversible_nu_star(self, three_state_model):
        triple = extract_triple(three_state_model)
        assert nu_star(triple, discriminant(triple)) == 0.0


class TestKemeny:

    def test_three_state(self, three_state_model):
        assert kemeny_modified(three_state_model) == pytest.approx(1 / 0.25 + 1 / 1.25, rel=1e-12)

    def test_time_rescaling(self, rng):
        model = random_model(4, rng)
        assert kemeny_modified(model.scaled(3.0)) == pytest.approx(kemeny_modified(model) / 3.0, rel=1e-10)


class TestLateTime:

    def test_variance_requires_reversible(self, walk_model):
        with pytest.raises(AssumptionError):
            late_time_variance(walk_model, 10.0, extract_triple(walk_model), False)

    def test_second_moment_against_oracle(self, three_state_model):
        triple = extract_triple(three_state_model)
        t = 30.0 / 0.25
        oracle = distribution_inversion(three_state_model, t, np.arange(-60, 61))
        assert abs(oracle.mean()) <= 1e-8
        assert late_time_variance(three_state_model, t, triple, True) == pytest.approx(oracle.second_moment(), abs=1e-6)

    def test_diffusion_slope(self):
        model = three_state(0.8, 0.6)
        triple = extract_triple(model)
        _, d = mean_and_diffusion(triple)
        qs = np.arange(-70, 71)
        early = distribution_inversion(model, 80.0, qs).second_moment()
        late = distribution_inversion(model, 100.0, qs).second_moment()
        assert (late - early) / 20.0 == pytest.approx(d, abs=1e-6)
