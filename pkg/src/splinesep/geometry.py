"""2D convex geometry: polytopes, point/hull distances, convex hulls.

All operations are pure functions on immutable inputs. Obstacles are static
convex polygons with counter-clockwise vertex order; non-convex maps must be
decomposed by the caller.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import ConvexHull as _ScipyHull
from scipy.spatial import QhullError as _QhullError

from .errors import InvalidPolytopeError

# Tolerance for geometric predicates (well below the planning safety margin).
GEOM_TOL = 1e-9


@dataclass(frozen=True)
class Circle:
    """Circular robot footprint: center (m) and radius (m)."""

    center: np.ndarray
    radius: float

    def __post_init__(self):
        c = np.asarray(self.center, dtype=float).reshape(2)
        object.__setattr__(self, "center", c)
        if not np.isfinite(self.radius) or self.radius < 0:
            raise ValueError(f"radius must be finite and >= 0, got {self.radius}")


@dataclass(frozen=True)
class ConvexPolytope:
    """Convex 2D obstacle given by its vertices in CCW order.

    Raises InvalidPolytopeError unless there are at least 3 strictly convex
    vertices with no duplicates within GEOM_TOL.
    """

    vertices: np.ndarray
    _edges: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        v = np.asarray(self.vertices, dtype=float)
        if v.ndim != 2 or v.shape[1] != 2:
            raise InvalidPolytopeError(f"expected (n, 2) vertex array, got shape {v.shape}")
        n = v.shape[0]
        if n < 3:
            raise InvalidPolytopeError(f"need at least 3 vertices, got {n}")
        if not np.all(np.isfinite(v)):
            raise InvalidPolytopeError("vertices must be finite")
        edges = np.roll(v, -1, axis=0) - v
        if np.any(np.linalg.norm(edges, axis=1) <= GEOM_TOL):
            raise InvalidPolytopeError("duplicate vertices within 1e-9 m")
        cross = edges[:, 0] * np.roll(edges, -1, axis=0)[:, 1] - edges[:, 1] * np.roll(edges, -1, axis=0)[:, 0]
        if np.any(cross <= 0):
            raise InvalidPolytopeError("vertices must be strictly convex in CCW order")
        object.__setattr__(self, "vertices", v)
        object.__setattr__(self, "_edges", edges)

    @property
    def n_vertices(self) -> int:
        return self.vertices.shape[0]

    def contains(self, p, tol: float = GEOM_TOL) -> bool:
        """Half-plane membership test (boundary counts as inside)."""
        p = np.asarray(p, dtype=float)
        d = p[None, :] - self.vertices
        cross = self._edges[:, 0] * d[:, 1] - self._edges[:, 1] * d[:, 0]
        return bool(np.all(cross >= -tol * np.linalg.norm(self._edges, axis=1)))

    def centroid(self) -> np.ndarray:
        return self.vertices.mean(axis=0)

    def support(self, direction) -> float:
        """Support function max_v <direction, v> over the vertices."""
        return float(np.max(self.vertices @ np.asarray(direction, dtype=float)))


def _point_segment_distance(p: np.ndarray, a: np.ndarray, b: np.ndarray) -> float:
    ab = b - a
    denom = float(ab @ ab)
    if denom <= GEOM_TOL**2:
        return float(np.linalg.norm(p - a))
    t = float((p - a) @ ab) / denom
    t = min(1.0, max(0.0, t))
    return float(np.linalg.norm(p - (a + t * ab)))


def _segments_intersect(a: np.ndarray, b: np.ndarray, c: np.ndarray, d: np.ndarray) -> bool:
    """Proper or touching intersection of segments ab and cd."""

    def orient(p, q, r):
        return (q[0] - p[0]) * (r[1] - p[1]) - (q[1] - p[1]) * (r[0] - p[0])

    o1, o2 = orient(a, b, c), orient(a, b, d)
    o3, o4 = orient(c, d, a), orient(c, d, b)
    if ((o1 > 0) != (o2 > 0)) and ((o3 > 0) != (o4 > 0)):
        return True
    # Collinear / touching cases.
    for p, q, r, o in ((a, b, c, o1), (a, b, d, o2), (c, d, a, o3), (c, d, b, o4)):
        if abs(o) <= GEOM_TOL and min(p[0], q[0]) - GEOM_TOL <= r[0] <= max(p[0], q[0]) + GEOM_TOL \
                and min(p[1], q[1]) - GEOM_TOL <= r[1] <= max(p[1], q[1]) + GEOM_TOL:
            return True
    return False


def point_polytope_distance(p, poly: ConvexPolytope) -> float:
    """Euclidean distance from a point to a convex polytope (0 if inside)."""
    p = np.asarray(p, dtype=float).reshape(2)
    if poly.contains(p):
        return 0.0
    verts = poly.vertices
    nxt = np.roll(verts, -1, axis=0)
    return min(_point_segment_distance(p, a, b) for a, b in zip(verts, nxt))


def _points_segments_distance(points: np.ndarray, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Pairwise distances (n_points, n_segments) from points to segments a->b."""
    P = np.asarray(points, dtype=float).reshape(-1, 2)
    ab = b - a  # (m, 2)
    denom = np.maximum(np.einsum("md,md->m", ab, ab), GEOM_TOL**2)
    ap = P[:, None, :] - a[None, :, :]  # (n, m, 2)
    t = np.clip(np.einsum("nmd,md->nm", ap, ab) / denom[None, :], 0.0, 1.0)
    closest = a[None, :, :] + t[:, :, None] * ab[None, :, :]
    return np.linalg.norm(P[:, None, :] - closest, axis=2)


def points_polytope_distance(points, poly: ConvexPolytope) -> np.ndarray:
    """Vectorized point_polytope_distance over an (n, 2) array of points."""
    P = np.asarray(points, dtype=float).reshape(-1, 2)
    V = poly.vertices
    E = poly._edges
    diff = P[:, None, :] - V[None, :, :]  # (n, m, 2)
    cross = E[None, :, 0] * diff[:, :, 1] - E[None, :, 1] * diff[:, :, 0]
    inside = np.all(cross >= -GEOM_TOL * np.linalg.norm(E, axis=1)[None, :], axis=1)
    dist = _points_segments_distance(P, V, np.roll(V, -1, axis=0)).min(axis=1)
    dist[inside] = 0.0
    return dist


def convex_hull(points) -> np.ndarray:
    """Convex hull in CCW order (Qhull, with explicit degeneracy handling).

    Returns an (m, 2) array; m may be 1 (single point) or 2 (collinear input,
    i.e. a segment) for degenerate inputs. Callers needing a ConvexPolytope
    should check the row count. A tolerance-based chain is not used here: it
    can discard a nearly-collinear extreme point, which would overestimate
    hull clearance.
    """
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    if pts.shape[0] == 0:
        raise ValueError("need at least one point")
    # Deduplicate within tolerance via lexicographic sort.
    order = np.lexsort((pts[:, 1], pts[:, 0]))
    pts = pts[order]
    keep = [pts[0]]
    for q in pts[1:]:
        if np.linalg.norm(q - keep[-1]) > GEOM_TOL:
            keep.append(q)
    pts = np.asarray(keep)
    n = pts.shape[0]
    if n <= 2:
        return pts

    centered = pts - pts.mean(axis=0)
    _, _s, vt = np.linalg.svd(centered, full_matrices=False)
    major = centered @ vt[0]
    if np.abs(centered @ vt[1]).max() <= GEOM_TOL:
        # Collinear (straight-line initial guesses produce exactly this):
        # the hull is the segment between the extreme projections.
        return np.asarray([pts[np.argmin(major)], pts[np.argmax(major)]])
    try:
        hull = _ScipyHull(pts)
    except _QhullError:
        # Near-degenerate beyond Qhull's precision: fall back to the
        # dominant-direction segment (off-axis extent is below Qhull's
        # failure threshold, so the clearance error is negligible).
        return np.asarray([pts[np.argmin(major)], pts[np.argmax(major)]])
    return pts[hull.vertices]


def hull_polytope_clearance(points, poly: ConvexPolytope) -> float:
    """Distance between conv(points) and a convex polytope (0 if overlapping).

    Works for degenerate hulls (point, segment): the straight-line initial
    guesses produce exactly collinear control points.
    """
    hull = convex_hull(points)
    m = hull.shape[0]
    if m == 1:
        return point_polytope_distance(hull[0], poly)

    # Overlap tests: vertex containment either way, then edge crossings.
    if any(poly.contains(h) for h in hull):
        return 0.0
    if m >= 3:
        hp = ConvexPolytope(hull)
        if any(hp.contains(v) for v in poly.vertices):
            return 0.0
    hull_edges = list(zip(hull, np.roll(hull, -1, axis=0))) if m >= 3 else [(hull[0], hull[1])]
    poly_edges = list(zip(poly.vertices, np.roll(poly.vertices, -1, axis=0)))
    for a, b in hull_edges:
        for c, d in poly_edges:
            if _segments_intersect(a, b, c, d):
                return 0.0

    # Disjoint convex sets: distance realized between a vertex of one and an
    # edge of the other.
    pv = poly.vertices
    best = _points_segments_distance(hull, pv, np.roll(pv, -1, axis=0)).min()
    ha = np.asarray([e[0] for e in hull_edges])
    hb = np.asarray([e[1] for e in hull_edges])
    best = min(best, _points_segments_distance(pv, ha, hb).min())
    return float(best)
