"""
Tests for the non-trivial zeroes of the stationary overlap.
"""

from dataclasses import replace

import numpy as np
import pytest

from current_counting.catalog import random_model
from current_counting.core.model import deformed_generator, stationary_state
from current_counting.spectral.curve import SpectralCurve
from current_counting.spectral.zeros import (
    SOURCE_FORWARD,
    SOURCE_REVERSE,
    adjugate,
    overlap_at,
    overlap_values,
    zero_residual,
)


class TestZeroLocation:

    def test_counts_per_source(self, walk_curve):
        zeros = walk_curve.zeros
        omega = walk_curve.omega
        assert len(zeros.for_source(SOURCE_FORWARD)) == omega - 1
        assert len(zeros.for_source(SOURCE_REVERSE)) == omega - 1
        assert len(zeros.entries) == 2 * omega - 2

    def test_forward_eigenvectors_sum_to_zero(self, walk_curve):
        for entry in walk_curve.zeros.for_source(SOURCE_FORWARD):
            assert entry.sigma_overlap <= 1e-10

    def test_three_state_sources_agree(self, three_state_curve):
        zeros = three_state_curve.zeros
        forward = sorted(zeros.for_source(SOURCE_FORWARD), key=lambda e: e.lambda_star.real)
        reverse = sorted(zeros.for_source(SOURCE_REVERSE), key=lambda e: e.lambda_star.real)
        p, q = 0.5, 0.25
        np.testing.assert_allclose([e.lambda_star.real for e in forward], [-2 * p - q, -q], atol=1e-10)
        np.testing.assert_allclose([e.lambda_star for e in forward], [e.lambda_star for e in reverse], atol=1e-10)
        for a, b in zip(forward, reverse):
            assert a.g_star * b.g_star == pytest.approx(1.0, abs=1e-10)

    def test_three_state_g_values(self, three_state_curve):
        by_lambda = {round(e.lambda_star.real, 8): e for e in three_state_curve.zeros.for_source(SOURCE_FORWARD)}
        assert by_lambda[-0.25].g_star == pytest.approx(-1.0, abs=1e-10)
        assert by_lambda[-1.25].g_star == pytest.approx(1.0, abs=1e-10)
        assert 'A4: g_* = 1' in by_lambda[-1.25].flags


class TestOverlap:

    def test_residual_small(self, walk_model, walk_curve):
        for entry in walk_curve.zeros.entries:
            assert zero_residual(walk_model, entry) <= 1e-8

    def test_residual_at_exceptional_points(self, walk_model, walk_curve):
        noted = [e for e in walk_curve.zeros.entries if 'at exceptional point' in e.notes]
        assert noted
        for entry in noted:
            assert not entry.flags
            assert zero_residual(walk_model, entry) <= 1e-8

    def test_adjugate_of_singular_matrix(self):
        a = np.array([[1.0, 2.0], [2.0, 4.0]])
        np.testing.assert_allclose(adjugate(a), [[4.0, -2.0], [-2.0, 1.0]], atol=1e-12)
        b = np.array([[2.0, 1.0, 0.0], [0.5, 3.0, 1.0], [0.0, 1.0, 4.0]])
        np.testing.assert_allclose(adjugate(b) @ b, np.linalg.det(b) * np.eye(3), atol=1e-10)

    @pytest.mark.slow
    def test_random_model_census(self):
        # every model and every entry is checked; nothing is filtered out
        rng = np.random.default_rng(2024)
        for _ in range(50):
            model = random_model(4, rng)
            curve = SpectralCurve(model)
            zeros = curve.zeros
            assert len(zeros.entries) == 2 * model.omega - 2
            assert zeros.is_complete(model.omega), zeros.flag_reasons()
            for entry in zeros.entries:
                lam, g = entry.lambda_star, entry.g_star
                p0, pp, pm = (complex(v) for v in curve.triple.at(lam))
                scale = abs(p0) + abs(g * pp) + abs(pm / g)
                assert abs(p0 + g * pp + pm / g) <= 1e-9 * scale
                assert zero_residual(model, entry) <= 1e-8

    def test_perturbed_zero_is_not_a_zero(self, walk_model, walk_curve):
        entry = walk_curve.zeros.entries[0]
        moved = replace(entry, g_star=entry.g_star * 1.05)
        assert zero_residual(walk_model, moved) >= 1e-4

    def test_trivial_zeroes_are_double(self, dense_model):
        # N_st vanishes like eps^2 at the nonzero eigenvalues of M(1)
        eigenvalues = np.linalg.eigvals(deformed_generator(dense_model, 1.0).entries)
        eigenvalues = eigenvalues[np.abs(eigenvalues) > 1e-8]
        assert eigenvalues.size == dense_model.omega - 1
        eps = np.array([1e-3, 1e-4])
        for mu in eigenvalues:
            for sign in (1.0, -1.0):
                values = [abs(overlap_at(dense_model, complex(mu), 1.0 + sign * e)[0]) for e in eps]
                slope = np.log(values[0] / values[1]) / np.log(eps[0] / eps[1])
                assert slope == pytest.approx(2.0, abs=0.1)

    def test_stationary_overlap_at_one(self, dense_model):
        eigenvalues, values = overlap_values(dense_model, 1.0)
        value, gap = overlap_at(dense_model, 0.0, 1.0)
        assert value == pytest.approx(1.0, abs=1e-10)
        assert gap > 0
        others = np.delete(values, np.argmin(np.abs(eigenvalues)))
        assert np.abs(others).max() <= 1e-10

    def test_overlaps_sum_to_one_for_any_start(self, dense_model, rng):
        init = rng.dirichlet(np.ones(dense_model.omega))
        _, values = overlap_values(dense_model, 1.0, init)
        assert values.sum() == pytest.approx(1.0, abs=1e-10)
        _, stationary = overlap_values(dense_model, 1.0, stationary_state(dense_model).probs)
        assert stationary.sum() == pytest.approx(1.0, abs=1e-10)
