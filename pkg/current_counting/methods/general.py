"""
General counting: M_st rebuilt from its logarithmic differential.

Without counting reversibility M_st has no closed form. It is written as

    M_st = K (g - 1)^2 / (g y lambda^2) * exp(int eta dlambda)

with the meromorphic differential

    eta = [sum_l c_l lambda^(l-1) - y_o/lambda + sum_k y_k / (2(lambda - lambda_k))] / y
          + 1/lambda + sum_k 1 / (2(lambda - lambda_k))

whose poles sit at the non-trivial zeroes [lambda_k, y_k] and at o-bar. The
g constants c_l are fixed by requiring every period of eta to lie in
2 pi i Z; M_st is then single valued. P(Q_t = Q) follows from a trapezoid
sum over a closed curve on sheet - enclosing all the cuts.

Paths on the surface are polylines in the lambda plane, shortest paths on a
visibility graph around the cuts; a path changes sheet by stepping across
the middle of one cut. The sheet is tracked across every crossing by
continuity of y, and pieces that start or end at a branch point use
tanh-sinh with exact endpoint distances.
"""

import logging
from dataclasses import dataclass
from functools import cached_property
from typing import Any, Callable, Dict, Iterator, List, Optional, Sequence, Tuple

import numpy as np
from numpy.typing import ArrayLike, NDArray
from shapely.geometry import LineString, MultiLineString, Polygon

from ..core.config import Settings
from ..core.engine import BaseMethod
from ..core.exceptions import (
    AssumptionError,
    BasePointError,
    ContourError,
    IllConditionedError,
    PathError,
    QuadratureError,
)
from ..core.results import CConstants, CurrentDistribution, MethodTag
from ..spectral.curve import SpectralCurve
from ..spectral.surface import CutLayout, SurfacePoint, convention_roots, dlog_g, g_from_y
from ..spectral.zeros import overlap_at
from ..utils.geometry import (
    VisibilityRouter,
    buffer_ring,
    distance_to_polygon,
    distance_to_polylines,
    points_blocked,
    polygon_contains,
    polygons_disjoint,
    resample_closed,
    to_xy,
)
from ..utils.polynomials import derivative, evaluate
from ..utils.quadrature import adaptive_gauss, periodic_antiderivative, tanh_sinh
from .reversible import mst_reversible_values

logger = logging.getLogger(__name__)

MAX_CONDITION = 1e10
REALNESS_TOL = 1e-7
INTEGRALITY_TOL = 1e-6
WALL_MARGIN = 0.1

# f(lambda, y) -> values of shape (nodes,) or (nodes, k)
SurfaceIntegrand = Callable[[NDArray[np.complex128], NDArray[np.complex128]], NDArray]


class LogDifferential:
    """eta = odd(lambda) / y + even(lambda), vectorized over lambda."""

    def __init__(self, curve: SpectralCurve, c: Optional[ArrayLike] = None):
        zero_set = curve.zeros
        if not zero_set.is_complete(curve.omega):
            reasons = "; ".join(zero_set.flag_reasons()) or "count mismatch"
            raise AssumptionError(
                f"{zero_set.usable} usable non-trivial zeroes of {len(zero_set.entries)} found, "
                f"expected {2 * curve.omega - 2} ({reasons})",
                'A4', {'flagged': [e.to_dict() for e in zero_set.flagged]},
            )
        self.genus = curve.omega - 1
        self.lambdas = np.array([e.lambda_star for e in zero_set.entries], dtype=complex)
        gs = np.array([e.g_star for e in zero_set.entries], dtype=complex)
        _, pp, pm = curve.triple.at(self.lambdas)
        self.y_k = gs * pp - pm / gs
        self.y_o = complex(curve.special.y_o)
        self.c = np.zeros(self.genus, dtype=complex) if c is None else np.asarray(c, dtype=complex)

    def holomorphic(self, lam: NDArray, y: NDArray) -> NDArray[np.complex128]:
        """lambda^(l-1) / y for l = 1..g, shape (nodes, g)."""
        powers = lam[:, None] ** np.arange(self.genus)[None, :]
        return powers / y[:, None]

    def remainder(self, lam: NDArray, y: NDArray) -> NDArray[np.complex128]:
        poles = np.sum(0.5 * self.y_k[None, :] / (lam[:, None] - self.lambdas[None, :]), axis=1)
        return (poles - self.y_o / lam) / y

    def even(self, lam: NDArray) -> NDArray[np.complex128]:
        return 1.0 / lam + np.sum(0.5 / (lam[:, None] - self.lambdas[None, :]), axis=1)

    def odd(self, lam: NDArray, y: NDArray) -> NDArray[np.complex128]:
        return self.holomorphic(lam, y) @ self.c + self.remainder(lam, y)

    def __call__(self, lam: ArrayLike, y: ArrayLike) -> NDArray[np.complex128]:
        lam = np.atleast_1d(np.asarray(lam, dtype=complex))
        y = np.atleast_1d(np.asarray(y, dtype=complex))
        return self.odd(lam, y) + self.even(lam)

    def period_columns(self, lam: NDArray, y: NDArray) -> NDArray[np.complex128]:
        """Odd part split into the c coefficients and the fixed remainder, shape (nodes, g + 1)."""
        return np.column_stack([self.holomorphic(lam, y), self.remainder(lam, y)])


@dataclass(frozen=True)
class PathPiece:
    """Straight piece of a surface path lying on one sheet.

    `side` is set for pieces running along a cut; `start_branch` and
    `end_branch` hold branch point indices of endpoints sitting on one.
    """
    start: complex
    end: complex
    sheet: int
    side: Optional[str] = None
    start_branch: Optional[int] = None
    end_branch: Optional[int] = None


def _unique_points(points: NDArray[np.complex128], tol: float) -> NDArray[np.complex128]:
    kept: List[complex] = []
    for z in points:
        if all(abs(z - k) > tol for k in kept):
            kept.append(complex(z))
    return np.array(kept, dtype=complex)


def obstacles(curve: SpectralCurve) -> Tuple[NDArray[np.complex128], NDArray[np.float64]]:
    """Points every path keeps clear of (branch points, zeroes, 0) with their clearance radii."""
    lambdas = np.array([e.lambda_star for e in curve.zeros.entries], dtype=complex)
    points = np.concatenate([curve.branch.lambdas, lambdas, [0.0]])
    points = _unique_points(points, 1e-12 * curve.branch.scale)
    if points.size < 2:
        return points, np.full(points.size, curve.branch.scale)
    gaps = np.abs(points[:, None] - points[None, :]) + np.diag(np.full(points.size, np.inf))
    radii = curve.settings.contour.clearance_fraction * gaps.min(axis=1)
    # points off the cuts keep their disks off the cuts too
    off_cut = np.abs(points[:, None] - curve.branch.lambdas[None, :]).min(axis=1) > 0
    for k in np.flatnonzero(off_cut):
        radii[k] = min(radii[k], 0.5 * curve.layout.distance_to_cuts(complex(points[k])))
    return points, radii


def cut_clearances(curve: SpectralCurve, settings: Optional[Settings] = None) -> NDArray[np.float64]:
    """Room around each cut: a fraction of its distance to the other cuts, 0, the zeroes and the P+- roots."""
    settings = settings or curve.settings
    layout = curve.layout
    zeros = [e.lambda_star for e in curve.zeros.entries]
    points = np.array(zeros + [0.0] + list(convention_roots(curve.triple)), dtype=complex)
    floor = 1e-12 * curve.branch.scale
    rooms = []
    for c, path in enumerate(layout.paths):
        others = [p for k, p in enumerate(layout.paths) if k != c]
        distances = list(distance_to_polylines([path], points)) if points.size else []
        if others:
            distances.append(float(LineString(to_xy(path)).distance(MultiLineString([to_xy(p) for p in others]))))
        distances = [d for d in distances if d > floor]
        rooms.append(min(distances) if distances else curve.branch.scale)
    return settings.contour.clearance_fraction * np.array(rooms)


def _crossing_flip(layout: CutLayout, p: complex, q: complex, s: float, room: float) -> bool:
    """True when y on sheet + changes sign where segment pq crosses a cut at parameter s."""
    h = 1e-6 * room
    direction = (q - p) / abs(q - p)
    crossing = p + s * (q - p)
    before, after = layout.y_plus(np.array([crossing - h * direction, crossing + h * direction]))
    return bool((before / after).real < 0)


def sheet_pieces(
    layout: CutLayout,
    vertices: Sequence[complex],
    sheet: int,
    start_branch: Optional[int] = None,
    end_branch: Optional[int] = None,
) -> Tuple[List[PathPiece], int]:
    """Split a polyline at the cut crossings; return the pieces and the final sheet."""
    pieces: List[PathPiece] = []
    last = len(vertices) - 2
    for i in range(last + 1):
        p, q = complex(vertices[i]), complex(vertices[i + 1])
        if p == q:
            continue
        hits = layout.crossings(p, q)
        params = [0.0] + [s for s, _ in hits] + [1.0]
        for j in range(len(params) - 1):
            a, b = p + params[j] * (q - p), p + params[j + 1] * (q - p)
            pieces.append(PathPiece(
                a, b, sheet,
                start_branch=start_branch if (i == 0 and j == 0) else None,
                end_branch=end_branch if (i == last and j == len(params) - 2) else None,
            ))
            if j < len(hits):
                room = min(params[j + 1] - params[j], params[j + 2] - params[j + 1]) * abs(q - p)
                if _crossing_flip(layout, p, q, params[j + 1], room):
                    sheet = -sheet
    return pieces, sheet


class PathIntegrator:
    """Integrates surface functions along path pieces."""

    def __init__(self, curve: SpectralCurve, settings: Optional[Settings] = None):
        self.curve = curve
        self.layout = curve.layout
        self.settings = settings or curve.settings
        self.obstacles, self.clearance = obstacles(curve)
        self.logger = logging.getLogger(self.__class__.__name__)

    @cached_property
    def rooms(self) -> NDArray[np.float64]:
        return cut_clearances(self.curve, self.settings)

    @cached_property
    def router(self) -> VisibilityRouter:
        return VisibilityRouter(self.layout.paths, self.obstacles, self.clearance,
                                WALL_MARGIN * float(self.rooms.min()), self.rooms)

    def piece(self, piece: PathPiece, fn: SurfaceIntegrand) -> Any:
        if piece.start_branch is not None or piece.end_branch is not None:
            return self._endpoint_piece(piece, fn)

        def integrand(lam: NDArray[np.complex128]) -> NDArray:
            y = piece.sheet * self.layout.y_plus(lam, piece.side)
            return fn(lam, y)

        singular = [z for z in self.obstacles if z != piece.start and z != piece.end]
        return adaptive_gauss(integrand, piece.start, piece.end, singular,
                              order=self.settings.quadrature.gauss_order)

    def _endpoint_piece(self, piece: PathPiece, fn: SurfaceIntegrand) -> Any:
        length = abs(piece.end - piece.start)
        direction = (piece.end - piece.start) / length

        def integrand(left: NDArray[np.float64], right: NDArray[np.float64]) -> NDArray:
            dl = left * length
            dr = right * length
            lam = np.where(left <= right, piece.start + dl * direction, piece.end - dr * direction)
            anchors: Dict[int, NDArray] = {}
            if piece.start_branch is not None:
                anchors[piece.start_branch] = dl * direction
            if piece.end_branch is not None:
                anchors[piece.end_branch] = -dr * direction
            y = piece.sheet * self.layout.y_plus(lam, piece.side, anchors)
            return fn(lam, y)

        quad = self.settings.quadrature
        result = tanh_sinh(integrand, self.settings.tolerances.quad, quad.tanh_sinh_tmax,
                           quad.max_nodes, scale=length)
        if not result.converged:
            raise QuadratureError(
                f"endpoint piece {piece.start:.6g} -> {piece.end:.6g} did not converge",
                {'error': result.error, 'nodes': result.nodes},
            )
        return result.value * direction

    def pieces(self, pieces: Sequence[PathPiece], fn: SurfaceIntegrand) -> Any:
        total: Any = 0.0
        for p in pieces:
            total = total + self.piece(p, fn)
        return total

    def route(self, start: complex, end: complex) -> List[complex]:
        """Polyline from start to end that crosses no cut."""
        return self.router.route(start, end)

    def crossing_routes(self, start: complex, end: complex) -> Iterator[List[complex]]:
        """Polylines from start to end crossing one cut once, nearest crossing first.

        Each crosses at the middle of the longest segment of a cut, over a
        stride short enough to miss every other cut.
        """
        sites = []
        for c, path in enumerate(self.layout.paths):
            path = np.asarray(path, dtype=complex)
            s = int(np.argmax(np.abs(np.diff(path))))
            middle = 0.5 * (path[s] + path[s + 1])
            normal = 1j * (path[s + 1] - path[s]) / abs(path[s + 1] - path[s])
            stride = 0.5 * self.rooms[c] * normal
            for before, after in ((middle + stride, middle - stride), (middle - stride, middle + stride)):
                sites.append((abs(before - start) + abs(end - after), complex(before), complex(after)))
        for _, before, after in sorted(sites, key=lambda site: site[0]):
            if points_blocked(np.array([before]), np.array([after]), self.obstacles, self.clearance)[0]:
                continue
            try:
                yield self.route(start, before) + self.route(after, end)
            except PathError:
                continue

    def radius(self, z: complex) -> float:
        return float(self.clearance[np.argmin(np.abs(self.obstacles - z))])

    def cut_pieces(self, cut: int) -> List[PathPiece]:
        """The left side of a cut on sheet +, from its first to its last branch point."""
        path = [complex(v) for v in self.layout.paths[cut]]
        first, second = self.layout.pairs[cut]
        if len(path) == 2:
            return [PathPiece(path[0], path[1], 1, 'left', first, second)]
        head = 0.5 * (path[0] + path[1])
        tail = 0.5 * (path[-2] + path[-1])
        pieces = [PathPiece(path[0], head, 1, 'left', start_branch=first),
                  PathPiece(head, path[1], 1, 'left')]
        pieces += [PathPiece(path[s], path[s + 1], 1, 'left') for s in range(1, len(path) - 2)]
        pieces += [PathPiece(path[-2], tail, 1, 'left'),
                   PathPiece(tail, path[-1], 1, 'left', end_branch=second)]
        return pieces

    def threading_pieces(self, cut: int, reference: int) -> List[PathPiece]:
        """A path from the last branch point of `cut` to the first of `reference`,
        leaving and entering each away from its own cut."""
        start_path = self.layout.paths[cut]
        end_path = self.layout.paths[reference]
        start, end = complex(start_path[-1]), complex(end_path[0])
        out = (start - start_path[-2]) / abs(start - start_path[-2])
        into = (end - end_path[1]) / abs(end - end_path[1])
        margin = 2.0 * self.router.margin
        leave = start + max(1.5 * self.radius(start), margin) * out
        arrive = end + max(1.5 * self.radius(end), margin) * into
        vertices = [start] + self.route(leave, arrive) + [end]
        first = self.layout.pairs[cut][1]
        last = self.layout.pairs[reference][0]
        pieces, _ = sheet_pieces(self.layout, vertices, 1, first, last)
        return pieces


def _period_system(curve: SpectralCurve, eta: LogDifferential) -> NDArray[np.complex128]:
    """Rows [H | Pi] of the 2g basis periods: period_j = H_j . c + Pi_j."""
    integrator = PathIntegrator(curve)
    genus = eta.genus
    reference = curve.layout.n_cuts - 1
    rows = []
    for cut in range(genus):
        rows.append(2.0 * integrator.pieces(integrator.cut_pieces(cut), eta.period_columns))
    for cut in range(genus):
        rows.append(2.0 * integrator.pieces(integrator.threading_pieces(cut, reference), eta.period_columns))
    return np.array(rows, dtype=complex)


def solve_c_constants(curve: SpectralCurve) -> CConstants:
    """Choose c so that every a and b period of eta has zero real part."""
    eta = LogDifferential(curve)
    genus = eta.genus
    if genus == 0:
        return CConstants(np.zeros(0, dtype=complex), 0.0, 0.0, 1.0, 0.0, None)

    system = _period_system(curve, eta)
    h, pi = system[:, :genus], system[:, genus]
    matrix = np.block([h.real, -h.imag])
    condition = float(np.linalg.cond(matrix))
    if not np.isfinite(condition) or condition > MAX_CONDITION:
        raise IllConditionedError(f"period matrix condition number {condition:.3e}", system)
    solution = np.linalg.solve(matrix, -pi.real)
    c = solution[:genus] + 1j * solution[genus:]

    realness = float(np.abs(c.imag).max())
    if realness > REALNESS_TOL:
        logger.warning(f"c constants have imaginary parts up to {realness:.3e}")
    else:
        c = c.real.astype(complex)

    periods = h @ c + pi
    winding = np.rint(periods.imag / (2.0 * np.pi))
    residual_im = float(np.abs(periods.imag - 2.0 * np.pi * winding).max())
    residual_re = float(np.abs(periods.real).max())
    if residual_im > INTEGRALITY_TOL or residual_re > 1e-8:
        logger.warning(f"periods off 2 pi i Z: Re up to {residual_re:.3e}, Im defect {residual_im:.3e}")

    reference = np.sum((eta.y_o + eta.y_k) / (2.0 * eta.lambdas))
    c1_residual = float(abs(c[0] - reference) / max(1.0, abs(reference)))
    if c1_residual > 1e-6:
        logger.warning(f"c_1 differs from its trace formula by {c1_residual:.3e}")

    sign_j = curve.special.sign_j
    sign_conjecture = None if sign_j == 0 else bool(np.all(sign_j * c.real > 0))
    if sign_conjecture is False:
        logger.warning("c constants do not all share the sign of J")

    return CConstants(c, residual_im, realness, condition, c1_residual, sign_conjecture,
                      periods, [int(w) for w in winding])


@dataclass(frozen=True)
class ContourLoop:
    """Closed curve lambda(theta) = sum_k coefs[k] exp(i modes[k] theta) on sheet -."""
    modes: Tuple[int, ...]
    coefs: Tuple[complex, ...]

    @classmethod
    def ellipse(cls, center: complex, semi_x: float, semi_y: float, angle: float = 0.0) -> 'ContourLoop':
        turn = np.exp(1j * angle)
        return cls((0, 1, -1), (complex(center), complex(0.5 * turn * (semi_x + semi_y)),
                                complex(0.5 * turn * (semi_x - semi_y))))

    @classmethod
    def from_polygon(
        cls, vertices: ArrayLike, max_mode: int, start: Optional[complex] = None, samples: int = 2048
    ) -> 'ContourLoop':
        """Low-pass Fourier fit of a counterclockwise closed polygon, parametrized by arclength."""
        z = resample_closed(vertices, samples, start)
        coefs = np.fft.fft(z) / samples
        modes = np.rint(np.fft.fftfreq(samples, 1.0 / samples)).astype(int)
        keep = np.abs(modes) <= max_mode
        return cls(tuple(int(k) for k in modes[keep]), tuple(complex(c) for c in coefs[keep]))

    @property
    def max_mode(self) -> int:
        return int(np.abs(self.modes).max())

    def nodes(self, n: int) -> Tuple[NDArray[np.complex128], NDArray[np.complex128]]:
        """lambda and d(lambda)/d(theta) at theta = 2 pi j / n."""
        if n <= 2 * self.max_mode:
            raise ValueError(f"{n} nodes cannot resolve Fourier mode {self.max_mode}")
        modes = np.asarray(self.modes)
        coefs = np.asarray(self.coefs, dtype=complex)
        spectrum = np.zeros(n, dtype=complex)
        slope = np.zeros(n, dtype=complex)
        spectrum[modes % n] = coefs
        slope[modes % n] = 1j * modes * coefs
        return n * np.fft.ifft(spectrum), n * np.fft.ifft(slope)

    def polygon(self, n: int = 1024) -> NDArray[np.complex128]:
        return self.nodes(n)[0]

    def to_dict(self) -> Dict[str, Any]:
        return {'modes': list(self.modes), 'coefs': [[c.real, c.imag] for c in self.coefs]}


def _ellipse_around(points: NDArray[np.complex128], margin: float, angle: float = 0.0) -> ContourLoop:
    """Ellipse through the corners of the bounding box, pushed out by `margin`."""
    turn = np.exp(-1j * angle)
    local = points * turn
    lo = complex(local.real.min(), local.imag.min())
    hi = complex(local.real.max(), local.imag.max())
    half = 0.5 * (hi - lo)
    center = 0.5 * (lo + hi) / turn
    return ContourLoop.ellipse(complex(center), float(np.sqrt(2.0) * half.real + margin),
                               float(np.sqrt(2.0) * half.imag + margin), angle)


def _cut_points(layout: CutLayout) -> NDArray[np.complex128]:
    return np.concatenate([np.asarray(p, dtype=complex) for p in layout.paths])


def _contour_geometry(curve: SpectralCurve) -> Dict[str, Any]:
    return {
        'cuts': curve.layout.to_dict(),
        'g_infinity': [[p.lam.real, p.lam.imag] for p in curve.special.g_infinity],
    }


def _single_loop(curve: SpectralCurve, settings: Settings, forbidden: NDArray) -> Optional[ContourLoop]:
    """One ellipse around every cut, grown to take in 0 or a zero lying too close
    to it and shrunk towards the cuts when it swallows a point of g^-1(inf)."""
    contour = settings.contour
    cuts = _cut_points(curve.layout)
    sheet_minus = [e.lambda_star for e in curve.zeros.entries if e.sheet == -1]
    near = np.array([0.0] + sheet_minus, dtype=complex)
    extent = max(float(np.ptp(cuts.real)), float(np.ptp(cuts.imag)), 1e-3 * curve.branch.scale)

    enclosed = cuts
    margin = max(contour.min_margin, contour.margin_fraction * extent)
    for _ in range(8):
        loop = _ellipse_around(enclosed, margin)
        polygon = loop.polygon()
        clearance = 0.5 * margin
        if forbidden.size and np.any(polygon_contains(polygon, forbidden)
                                     | (distance_to_polygon(polygon, forbidden) < clearance)):
            margin *= 0.5
            if margin < 0.25 * contour.min_margin:
                return None
            continue
        close = distance_to_polygon(polygon, near) < clearance
        if np.any(close):
            enclosed = np.concatenate([enclosed, near[close]])
            continue
        return loop
    return None


def _cut_loop(
    curve: SpectralCurve, cut: int, room: float, forbidden: NDArray, max_mode: int
) -> Optional[ContourLoop]:
    """Smooth loop at distance `room` around one cut, starting beside the middle of its longest segment."""
    layout = curve.layout
    path = np.asarray(layout.paths[cut], dtype=complex)
    s = int(np.argmax(np.abs(np.diff(path))))
    start = 0.5 * (path[s] + path[s + 1]) + room * 1j * (path[s + 1] - path[s]) / abs(path[s + 1] - path[s])
    ring = buffer_ring(path, room, quad_segs=16)
    foreign = [z for k, p in enumerate(layout.paths) if k != cut for z in p]
    mode = 32
    while True:
        loop = ContourLoop.from_polygon(ring, min(mode, max_mode), start)
        polygon = loop.polygon()
        valid = (Polygon(to_xy(polygon)).is_valid
                 and distance_to_polylines(layout.paths, polygon).min() >= 0.5 * room
                 and np.all(polygon_contains(polygon, path))
                 and not (forbidden.size and np.any(polygon_contains(polygon, forbidden)))
                 and not (foreign and np.any(polygon_contains(polygon, foreign))))
        if valid:
            return loop
        if mode >= max_mode:
            return None
        mode *= 2


def contour_loops(curve: SpectralCurve, settings: Optional[Settings] = None) -> List[ContourLoop]:
    """Closed curves on sheet - around the cuts that leave g^-1(inf) outside.

    One ellipse around every cut is tried first; otherwise one smooth loop
    hugs each cut, closer than any other cut, 0, zero or point of g^-1(inf).
    """
    settings = settings or curve.settings
    forbidden = np.array([p.lam for p in curve.special.g_infinity], dtype=complex)
    loop = _single_loop(curve, settings, forbidden)
    if loop is not None:
        return [loop]

    logger.info("No single contour separates the cuts from g^-1(inf); using one loop per cut")
    max_mode = min(settings.contour.loop_modes, (settings.quadrature.min_contour_nodes - 1) // 2)
    rooms = cut_clearances(curve, settings)
    loops = [_cut_loop(curve, c, float(rooms[c]), forbidden, max_mode) for c in range(curve.layout.n_cuts)]
    if all(loop is not None for loop in loops) and polygons_disjoint([loop.polygon() for loop in loops]):
        return loops
    geometry = _contour_geometry(curve)
    geometry['loops'] = [None if loop is None else loop.to_dict() for loop in loops]
    raise ContourError("no closed contour separates the cuts from g^-1(inf)", geometry)


class StationaryReconstruction:
    """M_st of a general model from the differential eta and a base value.

    With the default base point o, M_st(o) = 1/J. A `base_point` p0 takes
    M_st(p0) from the eigen-decomposition of M(g(p0)) instead; it is
    required when J = 0.
    """

    def __init__(
        self,
        curve: SpectralCurve,
        constants: Optional[CConstants] = None,
        base_point: Optional[SurfacePoint] = None,
        settings: Optional[Settings] = None,
    ):
        self.curve = curve
        self.settings = settings or curve.settings
        self._constants = constants
        self.base_point = base_point
        self.integrator = PathIntegrator(curve, self.settings)
        self.logger = logging.getLogger(self.__class__.__name__)

    @cached_property
    def constants(self) -> CConstants:
        if self._constants is not None:
            return self._constants
        return solve_c_constants(self.curve)

    @cached_property
    def eta(self) -> LogDifferential:
        return LogDifferential(self.curve, self.constants.c)

    @cached_property
    def base(self) -> Tuple[SurfacePoint, complex]:
        """Base point and the constant K of M_st = K * prefactor * exp(int eta)."""
        special = self.curve.special
        if self.base_point is None:
            if special.o_ambiguous or special.sign_j == 0:
                raise BasePointError("J = 0 for a non-reversible model: supply a base point other than o")
            return special.o, self.curve.current * special.y_o
        point = self.base_point
        lam = complex(point.lam)
        if lam == 0:
            raise BasePointError("the base point must not lie over lambda = 0")
        if self.curve.layout.distance_to_cuts(lam) <= 1e-9 * self.curve.branch.scale:
            raise BasePointError("the base point must not lie on a cut")
        g = self.curve.g(point)
        overlap, gap = overlap_at(self.curve.model, lam, g)
        if gap <= 1e-6 * max(1.0, abs(lam)):
            self.logger.warning(f"eigenvalue gap {gap:.3e} at the base point; M_st there is ill-determined")
        value = complex(dlog_g(self.curve.triple, lam, g)) * overlap
        return point, value / self.prefactor(np.array([lam]), np.array([self.curve.y(point)]))[0]

    def prefactor(self, lam: NDArray, y: NDArray) -> NDArray[np.complex128]:
        g = g_from_y(self.curve.triple, lam, y)
        return (g - 1.0) ** 2 / (g * y * lam ** 2)

    def _path(self, start: SurfacePoint, end: SurfacePoint) -> List[PathPiece]:
        """Pieces from start to end: no cut crossed on one sheet, one crossed between sheets."""
        integrator = self.integrator
        target = self.curve.y(end)
        a, b = complex(start.lam), complex(end.lam)
        candidates = iter([integrator.route(a, b)]) if start.sheet == end.sheet else integrator.crossing_routes(a, b)
        for vertices in candidates:
            pieces, sheet = sheet_pieces(self.curve.layout, vertices, start.sheet)
            last = pieces[-1] if pieces else PathPiece(start.lam, end.lam, start.sheet)
            approach = last.end - 1e-6 * (last.end - last.start)
            arriving = sheet * complex(self.curve.layout.y_plus(approach)[0])
            if abs(target) == 0 or (arriving / target).real > 0:
                return pieces
            self.logger.debug(f"path {vertices} arrives on the wrong sheet")
        raise PathError(f"no path from {start} reaches the sheet of {end}")

    def integral(self, end: SurfacePoint, start: Optional[SurfacePoint] = None) -> complex:
        """int eta from `start` (default: the base point) to `end`, sheets tracked."""
        start = start or self.base[0]
        if complex(start.lam) == complex(end.lam) and start.sheet == end.sheet:
            return 0.0j
        return complex(self.integrator.pieces(self._path(start, end), self.eta))

    def __call__(self, point: SurfacePoint) -> complex:
        base, k = self.base
        special = self.curve.special
        if self.base_point is None and complex(point.lam) == 0 and point.sheet == special.o.sheet:
            return 1.0 / self.curve.current
        lam = np.array([complex(point.lam)])
        y = np.array([self.curve.y(point)])
        return complex(k * self.prefactor(lam, y)[0] * np.exp(self.integral(point, base)))

    def dlog(self, point: SurfacePoint, with_constants: bool = True) -> complex:
        """d log M_st / d lambda at a point."""
        lam = complex(point.lam)
        y = self.curve.y(point)
        eta = self.eta if with_constants else LogDifferential(self.curve)
        g = self.curve.g(point)
        dg = g * complex(dlog_g(self.curve.triple, lam, g))
        dy = complex(evaluate(derivative(self.curve.delta.delta), lam)) / (2.0 * y)
        exact = 2.0 * dg / (g - 1.0) - dg / g - dy / y - 2.0 / lam
        return complex(eta(lam, y)[0]) + exact

    def loop_period(self, vertices: Sequence[complex], sheet: int = 1) -> complex:
        """int eta around a closed polyline starting on `sheet`."""
        closed = [complex(v) for v in vertices]
        if closed[0] != closed[-1]:
            closed.append(closed[0])
        pieces, final = sheet_pieces(self.curve.layout, closed, sheet)
        if final != sheet:
            raise PathError("polyline does not close on the surface: it returns on the other sheet")
        return complex(self.integrator.pieces(pieces, self.eta))

    def loop_values(
        self, loop: ContourLoop, n: int, anchor: Optional[complex] = None
    ) -> Tuple[NDArray, NDArray, NDArray, NDArray, complex]:
        """lambda, dlambda/dtheta, g and M_st at n nodes of a loop on sheet -.

        Also returns int eta from the base point to the first node, so that
        later refinements of the same loop can reuse it.
        """
        lam, dlam = loop.nodes(n)
        y = -self.curve.layout.y_plus(lam)
        g = g_from_y(self.curve.triple, lam, y)
        if anchor is None:
            anchor = self.integral(SurfacePoint(complex(lam[0]), -1))
        anti, period = periodic_antiderivative(self.eta(lam, y) * dlam)
        turns = period.imag / (2.0 * np.pi)
        if abs(period.real) > INTEGRALITY_TOL or abs(turns - round(turns)) > INTEGRALITY_TOL:
            self.logger.warning(f"eta has period {period:.3e} around the contour")
        _, k = self.base
        mst = k * self.prefactor(lam, y) * np.exp(anchor + anti)
        return lam, dlam, g, mst, anchor


def mst_general(
    curve: SpectralCurve,
    point: SurfacePoint,
    constants: Optional[CConstants] = None,
    base_point: Optional[SurfacePoint] = None,
) -> complex:
    return StationaryReconstruction(curve, constants, base_point)(point)


def dlog_mst(curve: SpectralCurve, point: SurfacePoint, with_constants: bool = True,
             constants: Optional[CConstants] = None) -> complex:
    return StationaryReconstruction(curve, constants).dlog(point, with_constants)


def loop_period(curve: SpectralCurve, vertices: Sequence[complex], sheet: int = 1,
                constants: Optional[CConstants] = None) -> complex:
    return StationaryReconstruction(curve, constants).loop_period(vertices, sheet)


def _contour_sum(
    lam: NDArray, dlam: NDArray, g: NDArray, mst: NDArray, t: float, qs: NDArray[np.int64]
) -> NDArray[np.complex128]:
    """(1/2 pi i) * trapezoid sum of e^(t lambda) M_st g^-Q dlambda for each Q."""
    kernel = np.exp(t * lam) * mst * dlam
    powers = np.exp(-np.outer(np.log(g), qs.astype(float)))
    return kernel @ powers / (1j * lam.size)


def probability_general(
    curve: SpectralCurve,
    t: float,
    q_values: ArrayLike,
    settings: Optional[Settings] = None,
    base_point: Optional[SurfacePoint] = None,
    constants: Optional[CConstants] = None,
) -> CurrentDistribution:
    """Contour integral on sheet -, node count doubled until two sums agree."""
    if t < 0:
        raise ValueError(f"time must be non-negative, got {t}")
    settings = settings or curve.settings
    qs = np.asarray(q_values, dtype=np.int64)
    tol = settings.tolerances.quad

    reconstruction: Optional[StationaryReconstruction] = None
    if not curve.reversible:
        reconstruction = StationaryReconstruction(curve, constants, base_point, settings)
        # BasePointError before the contour is built
        reconstruction.base
    loops = contour_loops(curve, settings)
    anchors: List[Optional[complex]] = [None] * len(loops)

    def values(index: int, n: int) -> Tuple[NDArray, NDArray, NDArray, NDArray]:
        if reconstruction is None:
            lam, dlam = loops[index].nodes(n)
            y = -curve.layout.y_plus(lam)
            return lam, dlam, g_from_y(curve.triple, lam, y), mst_reversible_values(curve, lam, y)
        lam, dlam, g, mst, anchors[index] = reconstruction.loop_values(loops[index], n, anchors[index])
        return lam, dlam, g, mst

    n = settings.quadrature.min_contour_nodes
    previous: Optional[NDArray] = None
    history: List[Dict[str, float]] = []
    while True:
        total = np.zeros(qs.size, dtype=complex)
        for index in range(len(loops)):
            total += _contour_sum(*values(index, n), t, qs)
        if previous is not None:
            change = float(np.abs(total - previous).max())
            history.append({'nodes': n, 'change': change})
            if change <= tol * max(1.0, float(np.abs(total).max())):
                break
            if 2 * n > settings.quadrature.max_nodes:
                raise QuadratureError(f"contour sum did not converge with {n} nodes",
                                      {'history': history, 'loops': [loop.to_dict() for loop in loops]})
        previous = total
        n *= 2

    imaginary = float(np.abs(total.imag).max())
    error = max(history[-1]['change'], imaginary, tol)
    diagnostics: Dict[str, Any] = {
        'nodes': n,
        'loops': [loop.to_dict() for loop in loops],
        'imaginary_residual': imaginary,
    }
    if reconstruction is not None:
        constants = reconstruction.constants
        diagnostics['c_constants'] = constants.to_dict()
        diagnostics['residual_im_periods'] = constants.residual_im_periods
    return CurrentDistribution(t, qs, total.real, MethodTag.GENERAL, error, diagnostics=diagnostics)


class GeneralContourMethod(BaseMethod):
    """Contour integral of the reconstructed M_st; handles any model.

    Options:
        base_point: SurfacePoint to integrate from instead of o
        constants: precomputed CConstants
    """

    tag = MethodTag.GENERAL

    def can_handle(self, curve: SpectralCurve) -> bool:
        return True

    def compute(self, curve: SpectralCurve, t: float, q_values: np.ndarray) -> CurrentDistribution:
        if t == 0:
            return CurrentDistribution.point_mass(t, q_values, self.tag)
        base_point = self.options.get('base_point')
        if base_point is None and not curve.reversible and curve.special.o_ambiguous:
            raise BasePointError("J = 0 for a non-reversible model: the general method needs a base point")
        self.logger.debug(f"general contour at t={t}, base point {base_point or 'o'}")
        return probability_general(curve, t, q_values, self.settings, base_point, self.options.get('constants'))
