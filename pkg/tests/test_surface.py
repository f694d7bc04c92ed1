"""
Tests for branch points, cuts, sheets and special points.
"""

import numpy as np
import pytest

from current_counting.catalog import random_model, three_state_branch_points
from current_counting.core.exceptions import AssumptionError
from current_counting.core.model import deformed_generator, generator
from current_counting.spectral.charpoly import PolyTriple, discriminant, extract_triple
from current_counting.spectral.curve import SpectralCurve
from current_counting.spectral.surface import (
    CutLayout,
    SurfacePoint,
    branch_points,
    convention_violations,
    exceptional_points,
    g_from_y,
    involution,
    pair_cuts,
    sample_unit_circle_curves,
)
from current_counting.utils.geometry import polylines_disjoint
from current_counting.utils.polynomials import degree


def _random_points(rng, n, scale=2.0):
    return rng.uniform(-scale, scale, n) + 1j * rng.uniform(0.05, scale, n) * rng.choice([-1, 1], n)


class TestBranchPoints:

    def test_three_state_values(self, three_state_curve):
        lambdas = three_state_curve.branch.lambdas
        np.testing.assert_allclose(lambdas.real, three_state_branch_points(0.5, 0.25), atol=1e-10)
        assert three_state_curve.branch.is_real
        assert three_state_curve.branch.genus == 2

    def test_reversible_are_spectra_at_plus_minus_one(self, three_state_model, three_state_curve):
        spectra = np.concatenate([
            np.linalg.eigvals(deformed_generator(three_state_model, 1.0).entries),
            np.linalg.eigvals(deformed_generator(three_state_model, -1.0).entries),
        ])
        np.testing.assert_allclose(np.sort(spectra.real), three_state_curve.branch.lambdas.real, atol=1e-9)

    def test_random_walk_real(self, walk_curve):
        assert walk_curve.branch.is_real
        assert np.all(walk_curve.branch.lambdas.real >= -4.0 - 1e-12)
        assert np.all(walk_curve.branch.lambdas.real <= 1e-12)

    def test_clustered_roots_rejected(self):
        from current_counting.catalog import three_state
        delta = discriminant(extract_triple(three_state(1.0, 0.5)))
        with pytest.raises(AssumptionError) as info:
            branch_points(delta)
        assert info.value.assumption == 'A2'


class TestCutLayout:

    def test_three_state_pairs(self, three_state_curve):
        layout = three_state_curve.layout
        assert layout.pairs == ((0, 1), (2, 3), (4, 5))
        assert layout.real

    def test_reversible_cuts_on_unit_circle(self, three_state_curve):
        frame = sample_unit_circle_curves(three_state_curve.layout, three_state_curve.triple)
        modulus = np.hypot(frame['g_re'], frame['g_im'])
        np.testing.assert_allclose(modulus, 1.0, atol=1e-10)
        assert set(frame['cut']) == {0, 1, 2}

    def test_random_walk_disjoint_cuts(self, walk_curve):
        layout = walk_curve.layout
        assert layout.n_cuts == 4
        ends = [sorted((path[0].real, path[-1].real)) for path in layout.paths]
        for (a, b), (c, _) in zip(ends, ends[1:]):
            assert b < c

    def test_crossing_through_vertex_counted_once(self):
        triple = PolyTriple(np.array([0.0, 1.0]), np.array([-0.82, 1.0]), np.array([0.5]), 1)
        bps = branch_points(discriminant(triple))
        bent = np.array([bps.lambdas[0], 1.0 + 0.0j, bps.lambdas[1]])
        layout = CutLayout(bps, ((0, 1),), (bent,), False)
        assert layout.crossings(0.0, 2.0) == [(pytest.approx(0.5), 0)]
        assert layout.crossings(0.0, 0.5j) == []
        assert layout.distance_to_cut(0, 0.5) == pytest.approx(0.5)

    def test_finger_moves_root_across(self, rng):
        # Delta = (l - 1)^2 + 0.64; the straight cut leaves the P+ root 0.82 on the wrong sheet
        triple = PolyTriple(np.array([0.0, 1.0]), np.array([-0.82, 1.0]), np.array([0.5]), 1)
        bps = branch_points(discriminant(triple))
        straight = CutLayout(bps, ((0, 1),), (bps.lambdas.copy(),), False)
        assert convention_violations(straight, triple) == [pytest.approx(0.82)]

        layout = pair_cuts(bps, triple)
        assert layout.repairs == 1
        assert not layout.real
        assert convention_violations(layout, triple) == []
        path = layout.paths[0]
        assert path[0] == bps.lambdas[0] and path[-1] == bps.lambdas[1]
        assert layout.y_plus(0.82)[0] == pytest.approx(0.82)
        lam = _random_points(rng, 50, scale=3.0)
        lam = lam[[layout.distance_to_cuts(z) > 1e-3 for z in lam]]
        np.testing.assert_allclose(layout.y_plus(lam) ** 2, discriminant(triple)(lam), atol=1e-10)

    @pytest.mark.slow
    def test_random_model_census(self):
        # every model counts: a layout failure fails the test
        rng = np.random.default_rng(99)
        for k in range(100):
            s_out = (2,) if k % 2 else (2, 3)
            model = random_model(4, rng, s_out=s_out)
            curve = SpectralCurve(model)
            layout = curve.layout
            triple = curve.triple
            assert convention_violations(layout, triple) == []
            assert polylines_disjoint(layout.paths)
            points = curve.exceptional
            assert points.count == 4 * 4 - triple.m_plus - triple.m_minus - 2
            assert points.genus_rh == 3
            special = curve.special
            assert len(special.g_infinity) == degree(triple.pplus)
            assert len(special.g_zero) == degree(triple.pminus)
            assert len(special.g_one) == 4


class TestSheets:

    def test_y_squared_is_delta(self, dense_model, rng):
        curve = SpectralCurve(dense_model)
        lam = _random_points(rng, 100)
        y = curve.layout.y_plus(lam)
        delta = curve.delta(lam)
        assert np.max(np.abs(y ** 2 - delta) / np.maximum(1.0, np.abs(delta))) <= 1e-10

    def test_branch_points_are_zeros(self, walk_curve):
        for lam in walk_curve.branch.lambdas:
            assert walk_curve.y(SurfacePoint(complex(lam), 1, 'left')) == pytest.approx(0.0, abs=1e-8)

    def test_involution(self, dense_model, rng):
        curve = SpectralCurve(dense_model)
        triple = curve.triple
        for lam in _random_points(rng, 10):
            point = SurfacePoint(complex(lam), 1)
            other = involution(point)
            assert involution(other) == point
            assert curve.y(other) == pytest.approx(-curve.y(point))
            _, pp, pm = triple.at(lam)
            assert curve.g(point) * curve.g(other) == pytest.approx(complex(pm / pp), rel=1e-10)

    def test_reversible_involution_inverts_g(self, three_state_curve, rng):
        for lam in _random_points(rng, 10):
            point = SurfacePoint(complex(lam), 1)
            assert three_state_curve.g(involution(point)) == pytest.approx(1.0 / three_state_curve.g(point), rel=1e-10)

    def test_g_forms_agree(self, dense_model, rng):
        curve = SpectralCurve(dense_model)
        lam = _random_points(rng, 20)
        y = curve.layout.y_plus(lam)
        p0, pp, pm = curve.triple.at(lam)
        first = (y - p0) / (2.0 * pp)
        second = -2.0 * pm / (y + p0)
        np.testing.assert_allclose(first, second, rtol=1e-10)
        g = g_from_y(curve.triple, lam, y)
        assert np.max(np.abs(curve.triple.curve(lam, g)) / curve.triple.scale) <= 1e-10


class TestSpecialPoints:

    def test_stationary_point(self, walk_curve):
        special = walk_curve.special
        assert special.sign_j == 1
        assert walk_curve.g(special.o) == pytest.approx(1.0, abs=1e-12)
        _, pp, pm = walk_curve.triple.at(0.0)
        assert walk_curve.g(special.o_bar) == pytest.approx(float(pm / pp), rel=1e-12)

    def test_random_walk_ramification(self, walk_curve):
        triple = walk_curve.triple
        target = np.sqrt(triple.pminus[0] / triple.pplus[0])
        lambdas = walk_curve.branch.lambdas
        g = g_from_y(triple, lambdas, np.zeros_like(lambdas))
        np.testing.assert_allclose(np.abs(g), target, rtol=1e-10)

    def test_random_walk_no_finite_poles(self, walk_curve):
        assert walk_curve.special.g_infinity == ()
        assert walk_curve.special.g_zero == ()

    def test_reversible_stationary_point(self, three_state_curve):
        special = three_state_curve.special
        assert special.sign_j == 0
        assert not special.o_ambiguous
        assert special.o == special.o_bar

    def test_counts(self, rng):
        curve = SpectralCurve(random_model(4, rng, s_in=(2,), s_out=(2, 3)))
        special = curve.special
        assert len(special.g_zero) == degree(curve.triple.pminus)
        assert len(special.g_infinity) == degree(curve.triple.pplus)

    def test_g_one_is_spectrum(self, dense_model):
        curve = SpectralCurve(dense_model)
        lams = np.sort_complex(np.array([p.lam for p in curve.special.g_one]))
        spectrum = np.sort_complex(np.linalg.eigvals(generator(dense_model).entries))
        np.testing.assert_allclose(lams, spectrum, atol=1e-9)


class TestExceptionalPoints:

    def test_count_and_genus(self, rng):
        for _ in range(3):
            triple = extract_triple(random_model(4, rng))
            points = exceptional_points(triple)
            assert points.count == 4 * 4 - triple.m_plus - triple.m_minus - 2
            assert points.genus_rh == 3

    def test_residuals(self, rng):
        model = random_model(4, rng)
        triple = extract_triple(model)
        points = exceptional_points(triple)
        for lam, g in zip(points.lambdas, points.gs):
            d0, dp, dm = triple.at(lam, order=1)
            assert abs(triple.curve(lam, g)) <= 1e-8 * triple.scale
            assert abs(d0 + g * dp + dm / g) <= 1e-8 * triple.scale

    def test_reversible_doubled(self, three_state_curve):
        points = three_state_curve.exceptional
        lams = np.sort_complex(points.lambdas)
        np.testing.assert_allclose(lams[0::2], lams[1::2], atol=1e-5)
