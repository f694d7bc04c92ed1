"""
Tests for the period-constrained reconstruction and the contour method.

The period solve and the contour sums take a few seconds per model; the
heavier cases carry the `slow` marker.
"""

import numpy as np
import pytest

from current_counting.catalog import (
    random_model,
    random_walk,
    random_walk_c_polynomial,
    random_walk_mst,
    zero_current_chain,
)
from current_counting.core.exceptions import AssumptionError, BasePointError
from current_counting.core.results import MethodTag
from current_counting.methods.general import (
    ContourLoop,
    GeneralContourMethod,
    LogDifferential,
    StationaryReconstruction,
    contour_loops,
    dlog_mst,
    mst_general,
    probability_general,
    solve_c_constants,
)
from current_counting.methods.oracle import distribution_inversion
from current_counting.methods.reversible import probability_reversible
from current_counting.spectral.curve import SpectralCurve
from current_counting.spectral.surface import SurfacePoint, dlog_g
from current_counting.spectral.zeros import overlap_at
from current_counting.utils.geometry import polygon_contains


def _surface_points(rng, n):
    lam = rng.uniform(-3.5, 0.5, n) + 1j * rng.uniform(0.3, 1.5, n) * rng.choice([-1, 1], n)
    sheets = rng.choice([-1, 1], n)
    return [SurfacePoint(complex(z), int(s)) for z, s in zip(lam, sheets)]


@pytest.fixture(scope="module")
def walk_reconstruction():
    return StationaryReconstruction(SpectralCurve(random_walk(4, 0.3)))


class TestCConstants:

    @pytest.mark.slow
    def test_random_walk_closed_form(self, walk_reconstruction):
        constants = walk_reconstruction.constants
        np.testing.assert_allclose(constants.c.real, random_walk_c_polynomial(4, 0.3), atol=1e-6)
        assert constants.realness_defect <= 1e-7
        assert constants.c1_residual <= 1e-8

    @pytest.mark.slow
    def test_periods_in_two_pi_i_z(self, walk_reconstruction):
        constants = walk_reconstruction.constants
        assert np.abs(constants.periods.real).max() <= 1e-8
        assert constants.residual_im_periods <= 1e-6

    @pytest.mark.slow
    def test_sign_follows_current(self, walk_reconstruction):
        assert walk_reconstruction.constants.sign_conjecture is True

    @pytest.mark.slow
    def test_five_state_ring(self):
        constants = solve_c_constants(SpectralCurve(random_walk(5, 0.1)))
        np.testing.assert_allclose(constants.c.real, random_walk_c_polynomial(5, 0.1), atol=1e-6)

    def test_differential_without_constants(self, walk_curve):
        eta = LogDifferential(walk_curve)
        assert eta.genus == 3
        assert np.all(eta.c == 0)
        assert eta.lambdas.size == 6

    def test_zeroes_at_exceptional_points_accepted(self, walk_curve):
        # the forward zeroes of the biased ring sit on ramification points of g
        zeros = walk_curve.zeros
        assert zeros.is_complete(walk_curve.model.omega)
        assert any('at exceptional point' in e.notes for e in zeros.entries)
        assert LogDifferential(walk_curve).lambdas.size == 6

    def test_flagged_zero_set_rejected(self, three_state_curve):
        zeros = three_state_curve.zeros
        with pytest.raises(AssumptionError) as info:
            LogDifferential(three_state_curve)
        message = str(info.value)
        assert f"{zeros.usable} usable non-trivial zeroes of {len(zeros.entries)} found, expected 4" in message
        assert 'A4: g_* = 1' in message
        assert zeros.usable < len(zeros.entries)


class TestReconstruction:

    @pytest.mark.slow
    def test_random_walk_mst(self, walk_reconstruction, rng):
        curve = walk_reconstruction.curve
        for point in _surface_points(rng, 10):
            expected = complex(random_walk_mst(4, 0.3, point.lam, curve.y(point)))
            assert walk_reconstruction(point) == pytest.approx(expected, rel=1e-6)

    @pytest.mark.slow
    def test_matches_eigen_overlap(self, walk_reconstruction, rng):
        curve = walk_reconstruction.curve
        for point in _surface_points(rng, 5):
            g = curve.g(point)
            overlap, _ = overlap_at(curve.model, complex(point.lam), g)
            expected = complex(dlog_g(curve.triple, point.lam, g)) * overlap
            assert walk_reconstruction(point) == pytest.approx(expected, rel=1e-6)

    @pytest.mark.slow
    def test_function_form(self, walk_reconstruction):
        curve = walk_reconstruction.curve
        point = SurfacePoint(-1.2 + 0.7j, -1)
        value = mst_general(curve, point, walk_reconstruction.constants)
        assert value == pytest.approx(walk_reconstruction(point), rel=1e-10)

    def test_value_at_stationary_point(self, walk_reconstruction):
        curve = walk_reconstruction.curve
        assert walk_reconstruction(curve.special.o) == pytest.approx(1.0 / curve.current)

    @pytest.mark.slow
    def test_log_derivative(self, walk_reconstruction):
        curve = walk_reconstruction.curve
        point = SurfacePoint(-0.7 + 0.4j, 1)
        h = 1e-5
        values = []
        for s in (-h, h):
            shifted = SurfacePoint(point.lam + s, 1)
            values.append(np.log(complex(random_walk_mst(4, 0.3, shifted.lam, curve.y(shifted)))))
        numeric = (values[1] - values[0]) / (2 * h)
        constants = walk_reconstruction.constants
        assert dlog_mst(curve, point, constants=constants) == pytest.approx(numeric, rel=1e-5)


class TestContourLoop:

    def test_ellipse_nodes_and_slope(self):
        loop = ContourLoop.ellipse(1.0 - 0.5j, 2.0, 0.5)
        lam, slope = loop.nodes(8)
        assert lam[0] == pytest.approx(3.0 - 0.5j)
        assert lam[2] == pytest.approx(1.0 + 0.0j)
        assert slope[0] == pytest.approx(0.5j)
        n = 4096
        fine, fine_slope = loop.nodes(n)
        numeric = (fine[2] - fine[0]) / (2 * 2 * np.pi / n)
        assert fine_slope[1] == pytest.approx(numeric, rel=1e-5)

    def test_from_polygon_recovers_circle(self):
        theta = 2 * np.pi * np.arange(400) / 400
        vertices = 1.0 + 1.0j + 2.0 * np.exp(1j * theta)
        loop = ContourLoop.from_polygon(vertices, max_mode=8, start=3.0 + 1.0j)
        coefs = dict(zip(loop.modes, loop.coefs))
        assert abs(coefs[1]) == pytest.approx(2.0, rel=1e-3)
        assert coefs[0] == pytest.approx(1.0 + 1.0j, abs=1e-3)
        assert np.abs(np.abs(loop.polygon(256) - (1.0 + 1.0j)) - 2.0).max() <= 1e-3

    def test_too_few_nodes(self):
        loop = ContourLoop.from_polygon([0, 1, 1 + 1j, 1j], max_mode=4)
        assert loop.max_mode == 4
        with pytest.raises(ValueError):
            loop.nodes(8)


class TestContour:

    def test_loop_encloses_cuts(self, walk_curve):
        loops = contour_loops(walk_curve)
        assert len(loops) == 1
        cuts = np.concatenate([np.asarray(p) for p in walk_curve.layout.paths])
        assert np.all(polygon_contains(loops[0].polygon(), cuts))

    def test_loops_avoid_infinity(self, rng):
        curve = SpectralCurve(random_model(4, rng, s_in=(2,), s_out=(2, 3)))
        forbidden = [p.lam for p in curve.special.g_infinity]
        assert forbidden
        for loop in contour_loops(curve):
            assert not np.any(polygon_contains(loop.polygon(), forbidden))

    @pytest.mark.slow
    @pytest.mark.parametrize("t", [0.5, 2.0])
    def test_random_walk_against_oracle(self, walk_model, walk_curve, t):
        qs = np.arange(-8, 13)
        result = probability_general(walk_curve, t, qs)
        oracle = distribution_inversion(walk_model, t, qs)
        assert result.max_abs_diff(oracle) <= 1e-6
        assert result.method == MethodTag.GENERAL

    @pytest.mark.slow
    def test_normalization_and_mean(self, walk_curve):
        t = 2.0
        qs = np.arange(-25, 30)
        result = probability_general(walk_curve, t, qs)
        assert result.total() == pytest.approx(1.0, abs=1e-6)
        assert result.mean() == pytest.approx(walk_curve.current * t, abs=1e-6)

    @pytest.mark.slow
    def test_agrees_with_reversible_method(self, three_state_curve):
        qs = np.arange(-10, 11)
        general = probability_general(three_state_curve, 1.0, qs)
        reversible = probability_reversible(three_state_curve, 1.0, qs)
        assert general.max_abs_diff(reversible) <= 1e-8

    @pytest.mark.slow
    @pytest.mark.parametrize("seed", range(12))
    def test_random_models_against_oracle(self, seed):
        # every seed counts: no model is skipped
        model = random_model(4, np.random.default_rng(seed))
        curve = SpectralCurve(model)
        qs = np.arange(-4, 5)
        result = probability_general(curve, 1.0, qs)
        assert result.max_abs_diff(distribution_inversion(model, 1.0, qs)) <= 1e-6


class TestBasePoint:

    @pytest.fixture
    def zero_current_model(self):
        return zero_current_chain()

    def test_zero_current_requires_base_point(self, zero_current_model):
        curve = SpectralCurve(zero_current_model)
        assert not curve.reversible
        assert curve.current == pytest.approx(0.0, abs=1e-12)
        assert curve.special.o_ambiguous
        with pytest.raises(BasePointError):
            probability_general(curve, 1.0, np.arange(-3, 4))
        with pytest.raises(BasePointError):
            GeneralContourMethod(curve.settings).compute(curve, 1.0, np.arange(-3, 4))

    def test_base_point_on_zero_is_rejected(self, walk_curve):
        reconstruction = StationaryReconstruction(walk_curve, base_point=SurfacePoint(0.0, 1))
        with pytest.raises(BasePointError):
            reconstruction.base

    @pytest.mark.slow
    def test_explicit_base_point(self, zero_current_model):
        curve = SpectralCurve(zero_current_model)
        qs = np.arange(-6, 7)
        method = GeneralContourMethod(curve.settings, base_point=SurfacePoint(-0.4 + 0.6j, 1))
        result = method.compute(curve, 1.0, qs)
        assert result.max_abs_diff(distribution_inversion(zero_current_model, 1.0, qs)) <= 1e-6
