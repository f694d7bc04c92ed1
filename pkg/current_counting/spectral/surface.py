"""
Hyperelliptic surface y^2 = Delta(lambda) attached to a counting process.

A point of the surface is a value of lambda together with a sheet sign. On
sheet + the function y behaves as +lambda^Omega at infinity; y changes sign
across the cuts joining pairs of branch points. The cuts are polylines and y
on sheet + is evaluated as a product over cuts of

    (lambda - a) * prod_s sqrt((lambda - v[s+1]) / (lambda - v[s]))

with the principal square root, whose discontinuity lies exactly on the
polyline v[0] = a, ..., v[m] = b.
"""

import logging
from dataclasses import dataclass, field
from itertools import islice
from typing import Any, Dict, Iterator, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from numpy.typing import ArrayLike, NDArray
from shapely.geometry import LineString, Point
from shapely.geometry.polygon import orient
from shapely.ops import substring

from ..core.exceptions import AssumptionError, PathError, SheetConventionError
from ..utils.geometry import (
    VisibilityRouter,
    from_coords,
    point_segment_distance,
    polygon_contains,
    polyline_crossings,
    polylines_disjoint,
    ring_arc,
    segment_intersection,
    to_xy,
)
from ..utils.polynomials import (
    degree,
    derivative,
    evaluate,
    find_roots,
    is_clustered,
    min_pairwise_gap,
    snap_real,
    sort_points,
)
from .charpoly import DiscriminantPoly, PolyTriple

logger = logging.getLogger(__name__)

# relative imaginary part below which a segment ratio counts as negative real
ON_CUT_TOL = 1e-13
SIDES = ('left', 'right')


@dataclass(frozen=True)
class SurfacePoint:
    """[lambda, sheet]; `side` selects the one-sided limit on a cut."""
    lam: complex
    sheet: int = 1
    side: Optional[str] = None

    def __post_init__(self) -> None:
        if self.sheet not in (1, -1):
            raise ValueError(f"sheet must be +1 or -1, got {self.sheet}")
        if self.side is not None and self.side not in SIDES:
            raise ValueError(f"side must be one of {SIDES}")

    def to_dict(self) -> Dict[str, Any]:
        return {'lambda': [self.lam.real, self.lam.imag], 'sheet': self.sheet}


@dataclass(frozen=True)
class BranchPointSet:
    lambdas: NDArray[np.complex128]
    genus: int
    min_gap: float
    scale: float

    @property
    def is_real(self) -> bool:
        return bool(np.all(self.lambdas.imag == 0))

    def to_dict(self) -> Dict[str, Any]:
        return {
            'lambdas': [[z.real, z.imag] for z in self.lambdas],
            'genus': self.genus,
            'min_gap': self.min_gap,
        }


def branch_points(delta: DiscriminantPoly, tol_root: float = 1e-9, check_gap: bool = True) -> BranchPointSet:
    """Roots of Delta, polished, snapped and sorted by (Re, Im)."""
    coefs = delta.delta
    n = degree(coefs)
    if n < 2 or n % 2:
        raise AssumptionError(f"discriminant has degree {n}, expected an even degree >= 2", 'A2')

    roots = snap_real(find_roots(coefs), 1e-10)
    norm = float(np.abs(coefs).max())
    if abs(evaluate(coefs, 0.0)) <= tol_root * norm:
        roots[np.argmin(np.abs(roots))] = 0.0
    roots = sort_points(roots)

    scale = max(1.0, float(np.abs(roots).max()))
    gap = min_pairwise_gap(roots)
    if check_gap and is_clustered(gap, tol_root, scale):
        diff = np.abs(roots[:, None] - roots[None, :]) + np.eye(roots.size) * np.inf
        i, j = np.unravel_index(np.argmin(diff), diff.shape)
        raise AssumptionError(
            f"branch points {roots[i]:.6g} and {roots[j]:.6g} coincide (gap {gap:.3e})",
            'A2', {'gap': gap, 'roots': [[z.real, z.imag] for z in roots]},
        )
    if np.any(roots.real > tol_root * scale):
        logger.warning(f"Branch point with positive real part: {roots[roots.real > 0]}")

    return BranchPointSet(roots, n // 2 - 1, gap, scale)


@dataclass(frozen=True)
class CutLayout:
    """Pairs of branch points joined by polyline cuts.

    Cut i runs from ``paths[i][0]`` to ``paths[i][-1]``; the left side of a
    real cut oriented towards increasing lambda is its upper side.
    """
    branch: BranchPointSet
    pairs: Tuple[Tuple[int, int], ...]
    paths: Tuple[NDArray[np.complex128], ...]
    real: bool
    repairs: int = 0

    @property
    def n_cuts(self) -> int:
        return len(self.pairs)

    def y_plus(
        self,
        lam: ArrayLike,
        side: Optional[str] = None,
        anchors: Optional[Dict[int, ArrayLike]] = None,
    ) -> NDArray[np.complex128]:
        """y on sheet +.

        `side` picks the one-sided limit for points lying on a cut. `anchors`
        maps a branch point index k to the exact offsets lambda - lambda_k, for
        nodes closer to a branch point than floating point can resolve.
        """
        z = np.atleast_1d(np.asarray(lam, dtype=complex))
        out = np.ones(z.shape, dtype=complex)
        exact = {k: np.broadcast_to(np.asarray(v, dtype=complex), z.shape) for k, v in (anchors or {}).items()}

        with np.errstate(divide='ignore', invalid='ignore'):
            for (ia, ib), path in zip(self.pairs, self.paths):
                last = len(path) - 1
                diffs = [z - v for v in path]
                if ia in exact:
                    diffs[0] = exact[ia]
                if ib in exact:
                    diffs[last] = exact[ib]
                out = out * diffs[0]
                for s in range(last):
                    ratio = diffs[s + 1] / diffs[s]
                    root = np.sqrt(ratio)
                    on_cut = (np.abs(ratio.imag) <= ON_CUT_TOL * np.abs(ratio)) & (ratio.real < 0)
                    if np.any(on_cut):
                        if side is None:
                            raise ValueError("point lies on a cut; a side ('left' or 'right') is required")
                        sign = 1j if side == 'left' else -1j
                        root = np.where(on_cut, sign * np.sqrt(np.abs(ratio)), root)
                    out = out * root

        at_branch = ~np.isfinite(out)
        if np.any(at_branch):
            hit = np.abs(z[:, None] - self.branch.lambdas[None, :]).min(axis=1) == 0
            out[at_branch & hit] = 0.0
        return out

    def y(self, point: SurfacePoint) -> complex:
        return complex(point.sheet * self.y_plus(point.lam, point.side)[0])

    def sheet_of(self, lam: complex, y_target: complex) -> Tuple[int, float]:
        """Sheet on which y equals `y_target`, and the relative mismatch of the choice."""
        yp = complex(self.y_plus(lam, side='left')[0])
        plus = abs(yp - y_target)
        minus = abs(yp + y_target)
        norm = max(abs(yp), abs(y_target), 1e-300)
        return (1, plus / norm) if plus <= minus else (-1, minus / norm)

    def crossings(self, p: complex, q: complex) -> List[Tuple[float, int]]:
        """Parameters s in (0, 1) where segment pq crosses a cut, with the cut index."""
        hits: List[Tuple[float, int]] = []
        for s, c, _ in polyline_crossings(p, q, self.paths):
            # a crossing through a polyline vertex is reported once per adjacent segment
            if hits and hits[-1][1] == c and s - hits[-1][0] <= 1e-9:
                continue
            hits.append((s, c))
        return hits

    def distance_to_cut(self, cut: int, z: complex) -> float:
        path = self.paths[cut]
        return min(point_segment_distance(z, complex(path[s]), complex(path[s + 1])) for s in range(len(path) - 1))

    def distance_to_cuts(self, z: complex) -> float:
        return min(self.distance_to_cut(c, z) for c in range(self.n_cuts))

    def to_dict(self) -> Dict[str, Any]:
        return {
            'pairs': [list(p) for p in self.pairs],
            'paths': [[[z.real, z.imag] for z in path] for path in self.paths],
            'real': self.real,
            'repairs': self.repairs,
        }


def g_from_y(triple: PolyTriple, lam: ArrayLike, y: ArrayLike) -> NDArray[np.complex128]:
    """g = (y - P0)/(2P+) or, where that is less stable, -2P-/(y + P0)."""
    lam = np.asarray(lam, dtype=complex)
    y = np.asarray(y, dtype=complex)
    p0, pp, pm = triple.at(lam)
    with np.errstate(divide='ignore', invalid='ignore'):
        first = (y - p0) / (2.0 * pp)
        second = -2.0 * pm / (y + p0)
    return np.where(np.abs(y + p0) > np.abs(y - p0), second, first)


def g_at(point: SurfacePoint, triple: PolyTriple, layout: CutLayout) -> complex:
    return complex(g_from_y(triple, point.lam, layout.y(point)))


def involution(point: SurfacePoint) -> SurfacePoint:
    return SurfacePoint(point.lam, -point.sheet, point.side)


def convention_roots(triple: PolyTriple) -> NDArray[np.complex128]:
    roots = [find_roots(triple.pplus), find_roots(triple.pminus)]
    return sort_points(snap_real(np.concatenate(roots), 1e-10))


def convention_violations(layout: CutLayout, triple: PolyTriple, tol: float = 1e-8) -> List[complex]:
    """Roots of P+ or P- where y on sheet + is -P0 instead of +P0."""
    bad = []
    for r in convention_roots(triple):
        p0 = complex(evaluate(triple.p0, r))
        if abs(p0) <= tol * triple.scale:
            logger.warning(f"P0 vanishes at the P+- root {r:.6g}; sheet convention not testable there")
            continue
        try:
            yp = complex(layout.y_plus(r)[0])
        except ValueError:
            bad.append(complex(r))
            continue
        if abs(yp + p0) < abs(yp - p0):
            bad.append(complex(r))
    return bad


def _oriented(points: NDArray[np.complex128], pair: Tuple[int, int]) -> Tuple[int, int]:
    i, j = pair
    a, b = points[i], points[j]
    return (i, j) if (a.real, a.imag) <= (b.real, b.imag) else (j, i)


def _straight_factors(points: NDArray[np.complex128], roots: NDArray[np.complex128]) -> NDArray[np.complex128]:
    """y factor of the straight cut (i, j) at every root, shape (n, n, roots); nan on the cut."""
    a = points[:, None, None]
    b = points[None, :, None]
    r = roots[None, None, :]
    with np.errstate(divide='ignore', invalid='ignore'):
        ratio = (r - b) / (r - a)
        factors = (r - a) * np.sqrt(ratio)
    on_cut = (np.abs(ratio.imag) <= ON_CUT_TOL * np.abs(ratio)) & (ratio.real < 0)
    return np.where(on_cut, np.nan, factors)


def _matchings(points: NDArray[np.complex128], tol: float) -> Iterator[List[Tuple[int, int]]]:
    """Perfect matchings of the points whose straight segments neither cross nor touch other points."""
    n = points.size
    usable = np.zeros((n, n), dtype=bool)
    for i in range(n):
        for j in range(i + 1, n):
            usable[i, j] = all(point_segment_distance(points[k], points[i], points[j]) > tol
                               for k in range(n) if k not in (i, j))

    def extend(free: List[int], chosen: List[Tuple[int, int]]) -> Iterator[List[Tuple[int, int]]]:
        if not free:
            yield list(chosen)
            return
        i = free[0]
        for j in free[1:]:
            if not usable[i, j]:
                continue
            if any(segment_intersection(points[i], points[j], points[a], points[b]) is not None
                   for a, b in chosen):
                continue
            rest = [k for k in free if k not in (i, j)]
            yield from extend(rest, chosen + [(i, j)])

    yield from extend(list(range(n)), [])


def _best_matching(bps: BranchPointSet, triple: PolyTriple, limit: int) -> List[Tuple[int, int]]:
    """Non-crossing pairing with the fewest sheet convention violations, then the shortest.

    Segments passing close to lambda = 0 are avoided when 0 is not a branch point.
    """
    pts = bps.lambdas
    roots = convention_roots(triple)
    p0 = evaluate(triple.p0, roots)
    testable = np.abs(p0) > 1e-8 * triple.scale
    roots, p0 = roots[testable], p0[testable]
    factors = _straight_factors(pts, roots)
    nearest = float(np.abs(pts).min())
    avoid_zero = nearest > 0

    best: Optional[Tuple[Tuple[int, int, float], List[Tuple[int, int]]]] = None
    for matching in islice(_matchings(pts, 1e-9 * bps.scale), limit):
        y = np.ones(roots.size, dtype=complex)
        length = 0.0
        near_zero = 0
        for i, j in matching:
            y = y * factors[i, j]
            length += abs(pts[i] - pts[j])
            if avoid_zero and point_segment_distance(0.0, pts[i], pts[j]) < 0.1 * nearest:
                near_zero += 1
        wrong = ~np.isfinite(y) | (np.abs(y + p0) < np.abs(y - p0))
        score = (near_zero, int(np.count_nonzero(wrong)), length)
        if best is None or score < best[0]:
            best = (score, matching)
    if best is None:
        raise SheetConventionError("branch points admit no non-crossing straight pairing",
                                   {'branch_points': [[z.real, z.imag] for z in pts]})
    logger.debug(f"Pairing score (near 0, violations, length) = {best[0]}")
    return best[1]


def _finger(
    layout: CutLayout, cut: int, target: complex, keep_clear: NDArray[np.complex128], delta: float
) -> Optional[CutLayout]:
    """Push a thin finger of cut `cut` out around `target`, flipping its sheet.

    The finger is the `delta` neighbourhood of a route from the nearest point
    of the cut to the target; the new cut runs along its far boundary. None
    when the swept region would take in a point of `keep_clear` or the cuts
    would meet.
    """
    path = np.asarray(layout.paths[cut], dtype=complex)
    line = LineString(to_xy(path))
    length = line.length
    if length <= 8.0 * delta:
        return None
    d = min(max(line.project(Point(target.real, target.imag)), 4.0 * delta), length - 4.0 * delta)
    foot = line.interpolate(d)
    x = complex(foot.x, foot.y)
    ahead = line.interpolate(min(d + delta, length))
    tangent = complex(ahead.x, ahead.y) - x
    tangent /= abs(tangent)
    normal = 1j * tangent if (np.conj(tangent) * (target - x)).imag >= 0 else -1j * tangent

    others = [np.asarray(p, dtype=complex) for p in layout.paths]
    obstacle_points = np.concatenate([keep_clear, layout.branch.lambdas])
    router = VisibilityRouter(others, obstacle_points, np.full(obstacle_points.size, 1.5 * delta),
                              1.5 * delta, [2.0 * delta] * len(others))
    try:
        spine = [x] + router.route(x + 3.0 * delta * normal, target)
    except PathError:
        return None

    finger = orient(LineString(to_xy(spine)).buffer(delta, quad_segs=4), sign=1.0)
    hits = finger.exterior.intersection(line)
    points = list(getattr(hits, 'geoms', [hits]))
    if len(points) != 2 or any(p.geom_type != 'Point' for p in points):
        return None
    d1, d2 = sorted(line.project(p) for p in points)
    entry = complex(*line.interpolate(d1).coords[0])
    leave = complex(*line.interpolate(d2).coords[0])
    arc = ring_arc(from_coords(finger.exterior.coords), entry, leave, longer=True)

    head = from_coords(substring(line, 0.0, d1).coords)
    tail = from_coords(substring(line, d2, length).coords)
    base = from_coords(substring(line, d1, d2).coords)
    new_path = np.concatenate([head[:-1], arc, tail[1:]])
    if not LineString(to_xy(new_path)).is_simple:
        return None
    paths = list(layout.paths)
    paths[cut] = new_path
    if not polylines_disjoint(paths):
        return None
    swept = np.concatenate([arc, base[::-1][1:-1]])
    if not polygon_contains(swept, [target])[0]:
        return None
    if keep_clear.size and np.any(polygon_contains(swept, keep_clear)):
        return None
    return CutLayout(layout.branch, layout.pairs, tuple(paths), False, layout.repairs + 1)


def _repair(layout: CutLayout, triple: PolyTriple, violations: List[complex]) -> Optional[CutLayout]:
    """First finger, over the violations and the cuts nearest each, that removes exactly one violation."""
    roots = convention_roots(triple)
    zero = [] if np.abs(layout.branch.lambdas).min() == 0 else [0.0]
    for target in violations:
        keep_clear = np.array([z for z in roots if abs(z - target) > 0] + zero, dtype=complex)
        reach = [layout.distance_to_cut(c, target) for c in range(layout.n_cuts)]
        points = np.concatenate([keep_clear, layout.branch.lambdas])
        spacing = float(np.abs(points - target).min()) if points.size else layout.branch.scale
        for cut in np.argsort(reach):
            delta = min(reach[cut] / 5.0, spacing / 4.0)
            for _ in range(8):
                repaired = _finger(layout, int(cut), target, keep_clear, delta)
                if repaired is not None and len(convention_violations(repaired, triple)) < len(violations):
                    return repaired
                delta *= 0.5
    return None


def pair_cuts(
    bps: BranchPointSet, triple: PolyTriple, repair_attempts: int = 24, max_pairings: int = 20000
) -> CutLayout:
    """Join the branch points by non-crossing cuts obeying the sheet convention.

    Real branch points are first paired consecutively along the real axis.
    Otherwise the non-crossing straight pairings are searched for the one
    with the fewest roots of P+ or P- on the wrong sheet, and every
    remaining one is moved across by a finger pushed out of the nearest cut.
    """
    pts = bps.lambdas
    if bps.is_real:
        order = np.argsort(pts.real, kind='stable')
        pairs = [(int(order[2 * i]), int(order[2 * i + 1])) for i in range(pts.size // 2)]
        paths = tuple(np.array([pts[i], pts[j]], dtype=complex) for i, j in pairs)
        layout = CutLayout(bps, tuple(pairs), paths, True)
        if not convention_violations(layout, triple):
            return layout
        logger.info("Consecutive real cuts break the sheet convention; searching other pairings")

    pairs = [_oriented(pts, p) for p in _best_matching(bps, triple, max_pairings)]
    pairs.sort(key=lambda p: (pts[p[0]].real, pts[p[0]].imag))
    paths = tuple(np.array([pts[i], pts[j]], dtype=complex) for i, j in pairs)
    layout = CutLayout(bps, tuple(pairs), paths, False)

    for _ in range(repair_attempts):
        violations = convention_violations(layout, triple)
        if not violations:
            if layout.repairs:
                logger.info(f"Sheet convention satisfied after {layout.repairs} cut re-routings")
            return layout
        logger.debug(f"Sheet convention violated at {violations}")
        repaired = _repair(layout, triple, violations)
        if repaired is None:
            break
        layout = repaired

    violations = convention_violations(layout, triple)
    if not violations:
        return layout
    raise SheetConventionError(
        f"no cut layout puts g^-1(inf) on sheet - after {layout.repairs} re-routings",
        {'violations': [[z.real, z.imag] for z in violations], 'layout': layout.to_dict()},
    )


@dataclass(frozen=True)
class SpecialPoints:
    """Catalog of the points of interest on the surface."""
    o: SurfacePoint
    o_bar: SurfacePoint
    y_o: complex
    sign_j: int
    o_ambiguous: bool
    g_infinity: Tuple[SurfacePoint, ...]
    g_zero: Tuple[SurfacePoint, ...]
    g_one: Tuple[SurfacePoint, ...]
    g_minus_one: Tuple[SurfacePoint, ...]
    ramification_g: Tuple[complex, ...]
    m_plus: int
    m_minus: int
    a3_ok: bool
    notes: Tuple[str, ...] = field(default_factory=tuple)

    def to_dict(self) -> Dict[str, Any]:
        def pts(items: Sequence[SurfacePoint]) -> List[Dict[str, Any]]:
            return [p.to_dict() for p in items]
        return {
            'o': self.o.to_dict(),
            'o_bar': self.o_bar.to_dict(),
            'sign_J': self.sign_j,
            'o_ambiguous': self.o_ambiguous,
            'p_inf_plus': {'g_order': self.m_minus},
            'p_inf_minus': {'g_order': -self.m_plus},
            'g_infinity': pts(self.g_infinity),
            'g_zero': pts(self.g_zero),
            'g_one': pts(self.g_one),
            'g_minus_one': pts(self.g_minus_one),
            'ramification_g': [[g.real, g.imag] for g in self.ramification_g],
            'a3_ok': self.a3_ok,
            'notes': list(self.notes),
        }


def _lift(layout: CutLayout, lams: NDArray[np.complex128], y_target: NDArray) -> Tuple[SurfacePoint, ...]:
    points = []
    for lam, yt in zip(lams, y_target):
        if abs(yt) == 0 or np.min(np.abs(layout.branch.lambdas - lam)) <= 1e-9 * layout.branch.scale:
            points.append(SurfacePoint(complex(lam), 1))
            continue
        sheet, _ = layout.sheet_of(complex(lam), complex(yt))
        points.append(SurfacePoint(complex(lam), sheet))
    return tuple(points)


def special_points(
    triple: PolyTriple, layout: CutLayout, reversible: bool = False, tol: float = 1e-9
) -> SpecialPoints:
    notes: List[str] = []
    p0_0, pp_0, pm_0 = (complex(v) for v in triple.at(0.0))
    y_o = pp_0 - pm_0
    scale = max(abs(pp_0), abs(pm_0), 1e-300)
    sign_j = int(np.sign((pm_0 - pp_0).real)) if abs(y_o) > tol * scale else 0

    ambiguous = False
    if sign_j == 0:
        o = SurfacePoint(0.0, 1)
        o_bar = o
        if not reversible:
            ambiguous = True
            notes.append("J = 0 for a non-reversible process: o and its conjugate coincide; "
                         "a base point must be supplied")
            logger.warning(notes[-1])
    else:
        sheet, mismatch = layout.sheet_of(0.0, y_o)
        o = SurfacePoint(0.0, sheet)
        o_bar = SurfacePoint(0.0, -sheet)
        if mismatch > 1e-6:
            notes.append(f"y(o) mismatch {mismatch:.3e}")

    plus_roots = sort_points(snap_real(find_roots(triple.pplus), 1e-10))
    minus_roots = sort_points(snap_real(find_roots(triple.pminus), 1e-10))
    g_inf = tuple(SurfacePoint(complex(r), -1) for r in plus_roots)
    g_zero = tuple(SurfacePoint(complex(r), 1) for r in minus_roots)

    a3_ok = True
    deg_p, deg_m = degree(triple.pplus), degree(triple.pminus)
    expected = max(deg_p, deg_m)
    if min(triple.m_plus, triple.m_minus) < 2:
        a3_ok = False
    for roots in (plus_roots, minus_roots):
        if roots.size > 1 and min_pairwise_gap(roots) <= 1e-8 * max(1.0, float(np.abs(roots).max())):
            a3_ok = False
            notes.append("repeated zero of P+ or P-")
    if not a3_ok:
        logger.warning(f"A3 check failed (deg P+ = {deg_p}, deg P- = {deg_m}, max {expected})")

    p1 = triple.p0 + _pad(triple.pplus, triple.p0) + _pad(triple.pminus, triple.p0)
    one_roots = sort_points(snap_real(find_roots(p1), 1e-10))
    one_roots[np.argmin(np.abs(one_roots))] = 0.0
    p0v, ppv, pmv = triple.at(one_roots)
    g_one = _lift(layout, one_roots, p0v + 2.0 * ppv)

    g_minus: Tuple[SurfacePoint, ...] = ()
    if reversible:
        pm1 = triple.p0 - _pad(triple.pplus, triple.p0) - _pad(triple.pminus, triple.p0)
        minus_one_roots = sort_points(snap_real(find_roots(pm1), 1e-10))
        p0v, ppv, _ = triple.at(minus_one_roots)
        g_minus = _lift(layout, minus_one_roots, p0v - 2.0 * ppv)

    p0b, ppb, _ = triple.at(layout.branch.lambdas)
    with np.errstate(divide='ignore', invalid='ignore'):
        ram = tuple(complex(v) for v in -p0b / (2.0 * ppb))

    return SpecialPoints(o, o_bar, y_o, sign_j, ambiguous, g_inf, g_zero, g_one, g_minus,
                         ram, triple.m_plus, triple.m_minus, a3_ok, tuple(notes))


def _pad(coefs: NDArray, like: NDArray) -> NDArray:
    out = np.zeros_like(like, dtype=float)
    out[:coefs.size] = coefs
    return out


@dataclass(frozen=True)
class ExceptionalPoints:
    """Ramification points of g: finite (lambda, g) with F = dF/dlambda = 0."""
    lambdas: NDArray[np.complex128]
    gs: NDArray[np.complex128]
    expected: int
    genus_rh: float
    multiplicity_warnings: Tuple[str, ...] = ()

    @property
    def count(self) -> int:
        return int(self.lambdas.size)

    def to_dict(self) -> Dict[str, Any]:
        return {
            'points': [[l.real, l.imag, g.real, g.imag] for l, g in zip(self.lambdas, self.gs)],
            'count': self.count,
            'expected': self.expected,
            'genus_riemann_hurwitz': self.genus_rh,
            'warnings': list(self.multiplicity_warnings),
        }


def exceptional_polynomial(triple: PolyTriple) -> NDArray[np.float64]:
    """A D + B^2: the resultant in g of g F and g dF/dlambda."""
    from numpy.polynomial import polynomial as P

    p0, pp, pm = triple.p0, triple.pplus, triple.pminus
    d0, dp, dm = derivative(p0), derivative(pp), derivative(pm)
    a = P.polysub(P.polymul(p0, dm), P.polymul(d0, pm))
    b = P.polysub(P.polymul(pp, dm), P.polymul(dp, pm))
    d = P.polysub(P.polymul(p0, dp), P.polymul(d0, pp))
    return np.asarray(P.polyadd(P.polymul(a, d), P.polymul(b, b)), dtype=float)


def exceptional_points(triple: PolyTriple, tol: float = 1e-9) -> ExceptionalPoints:
    """Solve for the ramification points of g and re-derive the genus."""
    from ..utils.polynomials import trim_small

    omega = triple.omega
    expected = 4 * omega - triple.m_plus - triple.m_minus - 2
    poly = exceptional_polynomial(triple)
    poly = trim_small(poly, 1e-10, float(np.abs(poly).max()) or 1.0)
    lams = sort_points(snap_real(find_roots(poly), 1e-10))

    warnings: List[str] = []
    if lams.size != expected:
        warnings.append(f"found {lams.size} exceptional points, expected {expected}")
        logger.warning(warnings[-1])

    scale = max(1.0, float(np.abs(lams).max())) if lams.size else 1.0
    gs = np.empty(lams.size, dtype=complex)
    toggle: Dict[int, int] = {}
    for k, lam in enumerate(lams):
        p0, pp, pm = (complex(v) for v in triple.at(lam))
        d0, dp, dm = (complex(v) for v in triple.at(lam, order=1))
        if abs(pp) <= tol * triple.scale:
            gs[k] = -pm / p0
            continue
        disc = np.sqrt(p0 * p0 - 4.0 * pp * pm + 0j)
        candidates = np.array([(-p0 + disc) / (2.0 * pp), (-p0 - disc) / (2.0 * pp)])
        residual = np.abs(d0 + candidates * dp + dm / candidates)
        twins = [j for j in range(lams.size) if j != k and abs(lams[j] - lam) <= 1e-6 * scale]
        if twins:
            key = min([k] + twins)
            toggle[key] = toggle.get(key, -1) + 1
            if abs(residual[0] - residual[1]) <= 1e-6 * max(1.0, residual.max()):
                gs[k] = candidates[toggle[key] % 2]
                continue
            warnings.append(f"double exceptional point near {lam:.6g}")
        gs[k] = candidates[int(np.argmin(residual))]

    genus_rh = (lams.size + triple.m_plus + triple.m_minus - 2 * omega) / 2.0
    if genus_rh != omega - 1:
        logger.warning(f"Riemann-Hurwitz genus {genus_rh} differs from Omega-1 = {omega - 1}")
    return ExceptionalPoints(lams, gs, expected, genus_rh, tuple(warnings))


def sample_unit_circle_curves(layout: CutLayout, triple: PolyTriple, n: int = 64) -> pd.DataFrame:
    """Samples of g along every cut (upper/left side, sheet +)."""
    frames = []
    tau = 0.5 * (1.0 - np.cos(np.pi * (np.arange(n) + 0.5) / n))
    for c, path in enumerate(layout.paths):
        lengths = np.abs(np.diff(path))
        total = lengths.sum()
        cumulative = np.concatenate([[0.0], np.cumsum(lengths)])
        s = tau * total
        seg = np.clip(np.searchsorted(cumulative, s, side='right') - 1, 0, len(path) - 2)
        local = (s - cumulative[seg]) / lengths[seg]
        lam = path[seg] + local * (path[seg + 1] - path[seg])
        y = layout.y_plus(lam, side='left')
        g = g_from_y(triple, lam, y)
        frames.append(pd.DataFrame({
            'lambda_re': lam.real, 'lambda_im': lam.imag,
            'g_re': g.real, 'g_im': g.imag, 'cut': c,
        }))
    return pd.concat(frames, ignore_index=True)


def dlog_g(triple: PolyTriple, lam: ArrayLike, g: ArrayLike) -> NDArray[np.complex128]:
    """d log g / d lambda along the curve, -F_lambda / (g F_g)."""
    lam = np.asarray(lam, dtype=complex)
    g = np.asarray(g, dtype=complex)
    _, pp, pm = triple.at(lam)
    d0, dp, dm = triple.at(lam, order=1)
    f_lam = d0 + g * dp + dm / g
    f_g = pp - pm / (g * g)
    return -f_lam / (g * f_g)
