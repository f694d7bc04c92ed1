"""
Tests for the quadrature rules, the polynomial helpers and the plane geometry.
"""

import numpy as np
import pytest

from current_counting.core.exceptions import PathError
from current_counting.utils.geometry import (
    VisibilityRouter,
    buffer_ring,
    distance_to_polygon,
    distance_to_polylines,
    point_segment_distance,
    polygon_contains,
    polygons_disjoint,
    polyline_crossings,
    resample_closed,
    ring_arc,
    segment_intersection,
    segments_blocked,
)
from current_counting.utils.polynomials import (
    degree,
    find_roots,
    is_clustered,
    min_pairwise_gap,
    series_polyval,
    snap_real,
    sort_points,
    trim_small,
)
from current_counting.utils.quadrature import adaptive_gauss, periodic_antiderivative, tanh_sinh


class TestQuadrature:

    def test_tanh_sinh_endpoint_singularity(self):
        result = tanh_sinh(lambda left, right: 1.0 / np.sqrt(left * right), tol=1e-12)
        assert result.converged
        assert result.value == pytest.approx(np.pi, abs=1e-10)

    def test_tanh_sinh_vector_valued(self):
        def integrand(left, right):
            x = left
            return np.column_stack([np.ones_like(x), x, x * x])
        result = tanh_sinh(integrand, scale=2.0)
        np.testing.assert_allclose(result.value, [2.0, 1.0, 2.0 / 3.0], atol=1e-10)

    def test_tanh_sinh_reports_non_convergence(self):
        result = tanh_sinh(lambda left, right: np.sin(1e4 * left), tol=1e-14, max_nodes=64)
        assert not result.converged

    def test_adaptive_gauss_complex_segment(self):
        value = adaptive_gauss(np.exp, 0.0, 1.0 + 1.0j)
        assert value == pytest.approx(np.exp(1.0 + 1.0j) - 1.0, abs=1e-13)

    def test_adaptive_gauss_near_pole(self):
        value = adaptive_gauss(lambda z: 1.0 / (z - 0.5j * 1e-3 - 0.5), 0.0, 1.0, singularities=[0.5 + 0.5e-3j])
        expected = np.log((0.5 - 0.5e-3j) / (-0.5 - 0.5e-3j))
        assert value == pytest.approx(expected, abs=1e-10)

    def test_periodic_antiderivative(self):
        n = 64
        theta = 2.0 * np.pi * np.arange(n) / n
        anti, period = periodic_antiderivative(1.0 + np.cos(theta))
        np.testing.assert_allclose(anti, theta + np.sin(theta), atol=1e-12)
        assert period == pytest.approx(2.0 * np.pi)


class TestPolynomials:

    def test_trim_and_degree(self):
        coefs = trim_small([1.0, 1e-16, 2.0, 1e-18], 1e-12, 2.0)
        np.testing.assert_array_equal(coefs, [1.0, 0.0, 2.0])
        assert degree(coefs) == 2
        assert degree(trim_small([1e-20], 1e-12, 1.0)) == -1

    def test_find_roots(self):
        roots = sort_points(find_roots(np.polynomial.polynomial.polyfromroots([-3.0, -1.0, 2.0])))
        np.testing.assert_allclose(roots, [-3.0, -1.0, 2.0], atol=1e-12)

    def test_snap_real(self):
        z = snap_real([1.0 + 1e-14j, 2.0 + 0.5j], 1e-10)
        assert z[0].imag == 0.0
        assert z[1].imag == 0.5

    def test_clustering(self):
        assert min_pairwise_gap([0.0, 1.0, 1.0 + 1e-7]) == pytest.approx(1e-7)
        assert is_clustered(1e-7, 1e-9, 1.0)
        assert not is_clustered(1e-3, 1e-9, 1.0)

    def test_series_substitution(self):
        # (1 + x)^2 with x = t + t^2
        out = series_polyval([1.0, 2.0, 1.0], np.array([0.0, 1.0, 1.0, 0.0]), 3)
        np.testing.assert_allclose(out, [1.0, 2.0, 3.0, 2.0])


class TestGeometry:

    def test_segment_intersection(self):
        s, u = segment_intersection(0.0, 1.0, 0.5 - 0.5j, 0.5 + 0.5j)
        assert s == pytest.approx(0.5) and u == pytest.approx(0.5)
        assert segment_intersection(0.0, 1.0, 2.0 - 1j, 2.0 + 1j) is None

    def test_polyline_crossings(self):
        lines = [np.array([0.25 - 1j, 0.25 + 1j]), np.array([0.75 - 1j, 0.75 + 1j])]
        crossings = polyline_crossings(0.0, 1.0, lines)
        assert [c[1] for c in crossings] == [0, 1]
        assert crossings[0][0] == pytest.approx(0.25)

    def test_segments_blocked(self):
        wall_a, wall_b = np.array([-1j]), np.array([1j])
        blocked = segments_blocked(np.array([-1.0, -1.0, -1.0]), np.array([1.0, -0.5, -0.01]), wall_a, wall_b, 0.05)
        np.testing.assert_array_equal(blocked, [True, False, True])

    def test_router_goes_around_wall(self):
        wall = np.array([-1j, 1j])
        router = VisibilityRouter([wall], wall, [0.1, 0.1], 0.05, [0.3])
        path = router.route(-1.0, 1.0)
        assert path[0] == -1.0 and path[-1] == 1.0
        for a, b in zip(path, path[1:]):
            assert polyline_crossings(a, b, [wall]) == []
            assert point_segment_distance(1j, a, b) >= 0.1 - 1e-12
            assert point_segment_distance(-1j, a, b) >= 0.1 - 1e-12

    def test_router_direct_when_visible(self):
        router = VisibilityRouter([np.array([5.0, 6.0])], np.array([3.0]), [0.5], 0.05, [0.3])
        assert router.route(0.0, 1j) == [0.0, 1j]
        # the obstacle around an endpoint does not block it
        assert router.route(3.1, 0.0) == [3.1, 0.0]

    def test_router_gives_up_when_enclosed(self):
        square = np.array([1 + 1j, -1 + 1j, -1 - 1j, 1 - 1j, 1 + 1j])
        router = VisibilityRouter([square], np.zeros(0, complex), np.zeros(0), 0.05, [0.2])
        with pytest.raises(PathError):
            router.route(0.0, 3.0)

    def test_ring_arc(self):
        square = np.array([0, 1, 1 + 1j, 1j])
        np.testing.assert_allclose(ring_arc(square, 0.5, 1 + 0.5j), [0.5, 0, 1j, 1 + 1j, 1 + 0.5j])
        np.testing.assert_allclose(ring_arc(square, 0.5, 1 + 0.5j, longer=False), [0.5, 1, 1 + 0.5j])

    def test_resample_closed(self):
        points = resample_closed([0, 1, 1 + 1j, 1j], 8)
        np.testing.assert_allclose(points, [0, 0.5, 1, 1 + 0.5j, 1 + 1j, 0.5 + 1j, 1j, 0.5j], atol=1e-14)
        assert resample_closed([0, 1, 1 + 1j, 1j], 4, start=1 + 0.9j)[0] == pytest.approx(1 + 0.9j)

    def test_buffer_ring_counterclockwise(self):
        ring = buffer_ring(np.array([-1.0, 1.0]), 0.5)
        area = 0.5 * np.sum(ring.real * np.roll(ring.imag, -1) - np.roll(ring.real, -1) * ring.imag)
        assert area > 0
        assert distance_to_polylines([np.array([-1.0, 1.0])], ring).min() == pytest.approx(0.5, rel=1e-3)

    def test_polygon_queries(self):
        square = [0, 1, 1 + 1j, 1j]
        np.testing.assert_array_equal(polygon_contains(square, [0.5 + 0.5j, 2.0]), [True, False])
        assert distance_to_polygon(square, [0.5 + 0.5j])[0] == pytest.approx(0.5)
        shifted = [z + 3 for z in square]
        assert polygons_disjoint([square, shifted])
        assert not polygons_disjoint([square, [z + 0.5 for z in square]])
