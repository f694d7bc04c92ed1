"""
Plane geometry for cuts, integration paths and contours.

Points of the complex plane are plain Python/numpy complex numbers; shapely
is used where polygon containment, buffers and polyline intersection are
needed, scipy.sparse.csgraph for shortest paths between waypoints.
"""

from typing import List, Optional, Sequence, Tuple

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import dijkstra
from shapely.geometry import LineString, MultiLineString, Point, Polygon
from shapely.geometry.polygon import orient

from ..core.exceptions import PathError


def _cross(a: complex, b: complex) -> float:
    return a.real * b.imag - a.imag * b.real


def to_xy(points: ArrayLike) -> List[Tuple[float, float]]:
    return [(float(z.real), float(z.imag)) for z in np.asarray(points, dtype=complex).ravel()]


def point_segment_distance(z: complex, a: complex, b: complex) -> float:
    d = b - a
    if d == 0:
        return abs(z - a)
    tau = min(1.0, max(0.0, ((z - a) * np.conj(d)).real / abs(d) ** 2))
    return abs(z - (a + tau * d))


def segment_intersection(
    p: complex, q: complex, a: complex, b: complex
) -> Optional[Tuple[float, float]]:
    """Parameters (s, u) with p + s(q-p) = a + u(b-a), both in [0, 1], or None."""
    r = q - p
    d = b - a
    denom = _cross(r, d)
    if denom == 0:
        return None
    s = _cross(a - p, d) / denom
    u = _cross(a - p, r) / denom
    if 0.0 <= s <= 1.0 and 0.0 <= u <= 1.0:
        return s, u
    return None


def polyline_crossings(
    p: complex, q: complex, polylines: Sequence[NDArray[np.complex128]], skip_ends: float = 1e-12
) -> List[Tuple[float, int, int]]:
    """Crossings of segment pq with the polylines, sorted along pq.

    Each crossing is (s, polyline index, segment index). Crossings at
    s within `skip_ends` of 0 or 1 are ignored (paths start and stop on cuts).
    """
    hits: List[Tuple[float, int, int]] = []
    for k, vertices in enumerate(polylines):
        for j in range(len(vertices) - 1):
            hit = segment_intersection(p, q, complex(vertices[j]), complex(vertices[j + 1]))
            if hit is None:
                continue
            s, _ = hit
            if skip_ends < s < 1.0 - skip_ends:
                hits.append((s, k, j))
    hits.sort()
    return hits


def polylines_disjoint(polylines: Sequence[NDArray[np.complex128]]) -> bool:
    lines = [LineString(to_xy(v)) for v in polylines]
    for i in range(len(lines)):
        for j in range(i + 1, len(lines)):
            if lines[i].intersects(lines[j]):
                return False
    return True


def polygon_contains(vertices: ArrayLike, points: ArrayLike) -> NDArray[np.bool_]:
    polygon = Polygon(to_xy(vertices))
    return np.array([polygon.contains(Point(xy)) for xy in to_xy(points)], dtype=bool)


def polygons_disjoint(polygons: Sequence[ArrayLike]) -> bool:
    shapes = [Polygon(to_xy(v)) for v in polygons]
    for i in range(len(shapes)):
        for j in range(i + 1, len(shapes)):
            if shapes[i].intersects(shapes[j]):
                return False
    return True


def distance_to_polygon(vertices: ArrayLike, points: ArrayLike) -> NDArray[np.float64]:
    """Distance of each point to the boundary of the polygon."""
    ring = Polygon(to_xy(vertices)).exterior
    return np.array([ring.distance(Point(xy)) for xy in to_xy(points)], dtype=float)


def distance_to_polylines(polylines: Sequence[ArrayLike], points: ArrayLike) -> NDArray[np.float64]:
    """Distance of each point to the nearest of the polylines."""
    lines = MultiLineString([to_xy(v) for v in polylines])
    return np.array([lines.distance(Point(xy)) for xy in to_xy(points)], dtype=float)


def from_coords(coords: Sequence[Tuple[float, float]]) -> NDArray[np.complex128]:
    xy = np.asarray(coords, dtype=float)
    return xy[:, 0] + 1j * xy[:, 1]


def buffer_ring(polyline: ArrayLike, radius: float, quad_segs: int = 16) -> NDArray[np.complex128]:
    """Counterclockwise boundary of the `radius` neighbourhood of a polyline, without the closing vertex."""
    shape = orient(LineString(to_xy(polyline)).buffer(radius, quad_segs=quad_segs), sign=1.0)
    return from_coords(shape.exterior.coords)[:-1]


def ring_arc(ring: ArrayLike, start: complex, end: complex, longer: bool = True) -> NDArray[np.complex128]:
    """Vertices of a closed ring between two of its points, `start` to `end`.

    Of the two arcs joining them the longer one is returned unless `longer`
    is False.
    """
    closed = np.asarray(ring, dtype=complex)
    if closed[0] != closed[-1]:
        closed = np.append(closed, closed[0])
    line = LineString(to_xy(closed))
    total = line.length
    d_start = line.project(Point(start.real, start.imag))
    d_end = line.project(Point(end.real, end.imag))
    forward = (d_end - d_start) % total
    if (forward >= 0.5 * total) == longer:
        return _walk(closed, line, d_start, d_start + forward, start, end)
    return _walk(closed, line, d_end, d_end + total - forward, end, start)[::-1]


def _walk(
    closed: NDArray[np.complex128], line: LineString, d_from: float, d_to: float, first: complex, last: complex
) -> NDArray[np.complex128]:
    """Ring vertices strictly between arclengths d_from < d_to, wrapping once."""
    total = line.length
    cumulative = np.concatenate([[0.0], np.cumsum(np.abs(np.diff(closed)))])
    inner = []
    for lap in (0.0, total):
        for d, z in zip(cumulative[:-1] + lap, closed[:-1]):
            if d_from < d < d_to:
                inner.append(z)
    return np.array([first] + inner + [last], dtype=complex)


def resample_closed(vertices: ArrayLike, n: int, start: Optional[complex] = None) -> NDArray[np.complex128]:
    """n points equally spaced in arclength along a closed polygon.

    The first point is the polygon point nearest `start` (default: the first
    vertex).
    """
    closed = np.asarray(vertices, dtype=complex)
    if closed[0] != closed[-1]:
        closed = np.append(closed, closed[0])
    line = LineString(to_xy(closed))
    offset = 0.0 if start is None else line.project(Point(start.real, start.imag))
    distances = (offset + line.length * np.arange(n) / n) % line.length
    cumulative = np.concatenate([[0.0], np.cumsum(np.abs(np.diff(closed)))])
    x = np.interp(distances, cumulative, closed.real)
    y = np.interp(distances, cumulative, closed.imag)
    return x + 1j * y


def _point_segment_distances(z: NDArray, a: NDArray, b: NDArray) -> NDArray[np.float64]:
    """Broadcast distance from points z to segments ab."""
    d = b - a
    length2 = np.abs(d) ** 2
    with np.errstate(divide='ignore', invalid='ignore'):
        tau = np.where(length2 > 0, ((z - a) * np.conj(d)).real / length2, 0.0)
    tau = np.clip(tau, 0.0, 1.0)
    return np.abs(z - (a + tau * d))


def segments_blocked(
    p: NDArray, q: NDArray, a: NDArray, b: NDArray, margin: float
) -> NDArray[np.bool_]:
    """For each segment pq: does it cross or come within `margin` of some segment ab?"""
    p = np.asarray(p, dtype=complex)[:, None]
    q = np.asarray(q, dtype=complex)[:, None]
    a = np.asarray(a, dtype=complex)[None, :]
    b = np.asarray(b, dtype=complex)[None, :]

    def orientation(u, v, w):
        return ((v - u).real * (w - u).imag) - ((v - u).imag * (w - u).real)

    crossing = ((orientation(p, q, a) * orientation(p, q, b) < 0)
                & (orientation(a, b, p) * orientation(a, b, q) < 0))
    close = np.minimum.reduce([
        _point_segment_distances(a, p, q), _point_segment_distances(b, p, q),
        _point_segment_distances(p, a, b), _point_segment_distances(q, a, b),
    ]) < margin
    return np.any(crossing | close, axis=1)


def points_blocked(
    p: NDArray, q: NDArray, points: NDArray, radii: NDArray
) -> NDArray[np.bool_]:
    """For each segment pq: does it pass within radii[k] of points[k]?"""
    p = np.asarray(p, dtype=complex)[:, None]
    q = np.asarray(q, dtype=complex)[:, None]
    z = np.asarray(points, dtype=complex)[None, :]
    return np.any(_point_segment_distances(z, p, q) < np.asarray(radii, dtype=float)[None, :], axis=1)


class VisibilityRouter:
    """Shortest polylines that never cross the walls and keep clear of point obstacles.

    Waypoints sit on rings around each wall and on octagons around each
    point; edges join mutually visible waypoints and the shortest path is
    found with Dijkstra's algorithm.
    """

    CHUNK = 2048

    def __init__(
        self,
        walls: Sequence[ArrayLike],
        points: ArrayLike,
        radii: ArrayLike,
        wall_margin: float,
        ring_radii: Sequence[float],
        quad_segs: int = 4,
    ):
        self.walls = [np.asarray(w, dtype=complex) for w in walls]
        self.wall_a = np.concatenate([w[:-1] for w in self.walls]) if self.walls else np.zeros(0, complex)
        self.wall_b = np.concatenate([w[1:] for w in self.walls]) if self.walls else np.zeros(0, complex)
        self.points = np.asarray(points, dtype=complex)
        self.radii = np.asarray(radii, dtype=float)
        self.margin = float(wall_margin)

        candidates = []
        for wall, rho in zip(self.walls, ring_radii):
            for factor in (1.0, 2.0):
                candidates.append(buffer_ring(wall, factor * rho, quad_segs))
        octagon = np.exp(2j * np.pi * (np.arange(8) + 0.5) / 8)
        for z, r in zip(self.points, self.radii):
            candidates.append(z + 2.0 * r * octagon)
        nodes = np.concatenate(candidates) if candidates else np.zeros(0, complex)
        self.nodes = nodes[self._clear(nodes)]
        self._graph = self._visibility(self.nodes, self.nodes, np.ones(self.points.size, dtype=bool))

    def _clear(self, z: NDArray) -> NDArray[np.bool_]:
        keep = np.ones(z.size, dtype=bool)
        if self.wall_a.size:
            gaps = _point_segment_distances(z[:, None], self.wall_a[None, :], self.wall_b[None, :])
            keep &= gaps.min(axis=1) >= 1.5 * self.margin
        if self.points.size:
            keep &= np.all(np.abs(z[:, None] - self.points[None, :]) > 1.01 * self.radii[None, :], axis=1)
        return keep

    def _visibility(self, sources: NDArray, targets: NDArray, active: NDArray[np.bool_]) -> NDArray[np.float64]:
        """Edge lengths between visible pairs, 0 where blocked."""
        out = np.zeros((sources.size, targets.size))
        ii, jj = np.meshgrid(np.arange(sources.size), np.arange(targets.size), indexing='ij')
        ii, jj = ii.ravel(), jj.ravel()
        for lo in range(0, ii.size, self.CHUNK):
            i, j = ii[lo:lo + self.CHUNK], jj[lo:lo + self.CHUNK]
            p, q = sources[i], targets[j]
            blocked = p == q
            if self.wall_a.size:
                blocked |= segments_blocked(p, q, self.wall_a, self.wall_b, self.margin)
            if np.any(active):
                blocked |= points_blocked(p, q, self.points[active], self.radii[active])
            out[i, j] = np.where(blocked, 0.0, np.abs(q - p))
        return out

    def visible(self, start: complex, end: complex) -> bool:
        active = self._active(start, end)
        return bool(self._visibility(np.array([start]), np.array([end]), active)[0, 0] > 0)

    def _active(self, start: complex, end: complex) -> NDArray[np.bool_]:
        # obstacles around an endpoint do not apply to that query
        return (np.abs(self.points - start) > self.radii) & (np.abs(self.points - end) > self.radii)

    def route(self, start: complex, end: complex) -> List[complex]:
        start, end = complex(start), complex(end)
        if start == end:
            return [start]
        if self.visible(start, end):
            return [start, end]
        active = self._active(start, end)
        n = self.nodes.size
        ends = np.array([start, end])
        weights = np.zeros((n + 2, n + 2))
        weights[:n, :n] = self._graph
        links = self._visibility(ends, self.nodes, active)
        weights[n:, :n] = links
        weights[:n, n:] = links.T
        distances, predecessors = dijkstra(csr_matrix(weights), directed=False, indices=n,
                                           return_predecessors=True)
        if not np.isfinite(distances[n + 1]):
            raise PathError(f"cannot route from {start:.6g} to {end:.6g} around the cuts ({n} waypoints)")
        chain = [n + 1]
        while chain[-1] != n:
            chain.append(int(predecessors[chain[-1]]))
        everything = np.concatenate([self.nodes, ends])
        return [complex(everything[k]) for k in reversed(chain)]
