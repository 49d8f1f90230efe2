"""Trusted-interior identification: boundary trace, concave hull, erosion.

The hull construction folds the boundary points through a circle inversion
about their centroid (rho -> c**2 / rho with c slightly larger than the
point cloud radius), computes a concave hull in folded space, and maps the
hull vertices back. The inversion exchanges inside and outside, so
concavities of the original outline become convex excursions in folded
space where the edge-digging hull can follow them.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from matplotlib.path import Path
from scipy import ndimage
from scipy.spatial import ConvexHull, QhullError

from .errors import DegenerateGeometry, EmptySurface

_NEIGHBORHOOD = np.ones((3, 3), dtype=bool)


@dataclass
class BoundaryPolygon:
    """Simple closed polygon (pixel coordinates, x = column, y = row)."""

    vertices: np.ndarray          # (n, 2) floats
    fold_center: tuple = (0.0, 0.0)
    fold_radius: float = 0.0

    def __post_init__(self):
        self.vertices = np.asarray(self.vertices, dtype=np.float64)
        if self.vertices.ndim != 2 or self.vertices.shape[0] < 3 or self.vertices.shape[1] != 2:
            raise DegenerateGeometry("polygon needs >= 3 (x, y) vertices")

    def contains(self, points):
        """Vectorized point-in-polygon test (boundary counts as inside)."""
        # Path(closed=True) replaces the final vertex by the closing point,
        # so the first vertex must be repeated to keep every edge
        path = Path(np.vstack([self.vertices, self.vertices[:1]]), closed=True)
        return path.contains_points(np.asarray(points, dtype=float), radius=1e-9)

    def area(self):
        x, y = self.vertices[:, 0], self.vertices[:, 1]
        return 0.5 * abs(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))

    @classmethod
    def rectangle(cls, x0, y0, x1, y1):
        return cls(np.array([[x0, y0], [x1, y0], [x1, y1], [x0, y1]], dtype=float))


def trace_boundary(surface, fill_holes=False):
    """All non-missing cells with a missing or out-of-grid 8-neighbor.

    Returns an (n, 2) array of (x, y) = (column, row) coordinates. With
    ``fill_holes`` interior dropout regions are treated as observed, so only
    the outer rim of the scan is returned (used before hull construction so
    hole rims cannot pollute the outline).
    """
    observed = ~surface.missing
    if not observed.any():
        raise EmptySurface("surface has no observed cells")
    if fill_holes:
        observed = ndimage.binary_fill_holes(observed)
    interior = ndimage.binary_erosion(observed, structure=_NEIGHBORHOOD, border_value=0)
    rows, cols = np.nonzero(observed & ~interior)
    return np.column_stack([cols, rows]).astype(float)


def _point_segment_distance(points, a, b):
    """Distance from each point to segment a-b."""
    ab = b - a
    denom = float(ab @ ab)
    if denom == 0.0:
        return np.linalg.norm(points - a, axis=1)
    t = np.clip((points - a) @ ab / denom, 0.0, 1.0)
    proj = a + t[:, None] * ab
    return np.linalg.norm(points - proj, axis=1)


def _segments_cross(p, q, a, b):
    """True where segment p-q strictly crosses any segment a[i]-b[i]."""
    def orient(o, s, t):
        return (s[..., 0] - o[..., 0]) * (t[..., 1] - o[..., 1]) \
             - (s[..., 1] - o[..., 1]) * (t[..., 0] - o[..., 0])

    d1 = orient(a, b, p[None, :])
    d2 = orient(a, b, q[None, :])
    d3 = orient(p[None, :], q[None, :], a)
    d4 = orient(p[None, :], q[None, :], b)
    return bool(np.any((d1 * d2 < 0) & (d3 * d4 < 0)))


def _concave_hull_indices(pts, concavity, length_threshold):
    """Edge-digging concave hull; returns vertex indices in order.

    Starts from the convex hull and repeatedly replaces a long edge by two
    edges through the nearest interior point, when that point is close
    relative to the edge length (dist * concavity < length) and the new
    edges do not cross the current polygon.
    """
    try:
        hull = ConvexHull(pts)
    except QhullError as e:
        raise DegenerateGeometry(f"convex hull failed: {e}") from e
    poly = list(hull.vertices)
    in_poly = np.zeros(len(pts), dtype=bool)
    in_poly[poly] = True

    i = 0
    passes_without_dig = 0
    while passes_without_dig < len(poly):
        n = len(poly)
        a_idx, b_idx = poly[i], poly[(i + 1) % n]
        a, b = pts[a_idx], pts[b_idx]
        edge_len = np.linalg.norm(b - a)
        dug = False
        if edge_len > length_threshold and not in_poly.all():
            cand = np.nonzero(~in_poly)[0]
            d = _point_segment_distance(pts[cand], a, b)
            for j in np.argsort(d)[:8]:
                if d[j] * concavity >= edge_len or d[j] == 0.0:
                    break
                p = pts[cand[j]]
                # the two replacement edges must not cross the polygon
                edges_a = pts[np.array(poly)]
                edges_b = pts[np.array(poly[1:] + poly[:1])]
                keep = np.ones(n, dtype=bool)
                keep[i] = False   # the edge being replaced
                if _segments_cross(a, p, edges_a[keep], edges_b[keep]):
                    continue
                if _segments_cross(p, b, edges_a[keep], edges_b[keep]):
                    continue
                poly.insert(i + 1, cand[j])
                in_poly[cand[j]] = True
                dug = True
                break
        if dug:
            passes_without_dig = 0     # re-examine the first new edge
        else:
            i = (i + 1) % len(poly)
            passes_without_dig += 1
    return poly


def concave_hull(points, concavity=2.0, fold_radius_scale=1.05,
                 length_threshold=0.0):
    """Fold -> concave hull -> unfold construction of the boundary polygon."""
    pts = np.unique(np.asarray(points, dtype=np.float64), axis=0)
    if pts.shape[0] < 3:
        raise DegenerateGeometry("need at least 3 distinct points")
    centered = pts - pts.mean(axis=0)
    if np.linalg.matrix_rank(centered, tol=1e-9) < 2:
        raise DegenerateGeometry("points are collinear")

    center = pts.mean(axis=0)
    rho = np.linalg.norm(pts - center, axis=1)
    c = fold_radius_scale * rho.max()
    safe_rho = np.maximum(rho, 1e-9 * c)
    folded = center + (pts - center) * (c ** 2 / safe_rho ** 2)[:, None]

    order = _concave_hull_indices(folded, concavity, length_threshold)
    return BoundaryPolygon(pts[order], fold_center=tuple(center), fold_radius=c)


def _edge_proximity_mask(poly, shape, margin_px):
    """Cells whose center lies within margin_px (Chebyshev) of the polygon edge."""
    h, w = shape
    mask = np.zeros(shape, dtype=bool)
    if margin_px <= 0:
        return mask
    verts = poly.vertices
    m = margin_px
    step = 0.25
    for k in range(len(verts)):
        a, b = verts[k], verts[(k + 1) % len(verts)]
        length = np.hypot(*(b - a))
        n = max(2, int(np.ceil(length / step)) + 1)
        for t in np.linspace(0.0, 1.0, n):
            sx, sy = a + t * (b - a)
            j0 = max(0, int(np.ceil(sx - m)))
            j1 = min(w - 1, int(np.floor(sx + m)))
            i0 = max(0, int(np.ceil(sy - m)))
            i1 = min(h - 1, int(np.floor(sy + m)))
            if j0 <= j1 and i0 <= i1:
                mask[i0:i1 + 1, j0:j1 + 1] = True
    return mask


def interior_mask(poly, shape):
    """Boolean grid of cell centers inside the polygon."""
    h, w = shape
    jj, ii = np.meshgrid(np.arange(w), np.arange(h))
    pts = np.column_stack([jj.ravel(), ii.ravel()]).astype(float)
    return poly.contains(pts).reshape(shape)


def erode_to_interior(surface, poly, margin_px=16):
    """Mask every cell outside the polygon or within margin_px of its edge."""
    if margin_px < 0:
        raise ValueError("margin_px must be >= 0")
    inside = interior_mask(poly, surface.heights.shape)
    near_edge = _edge_proximity_mask(poly, surface.heights.shape, margin_px)
    out = surface.heights.copy()
    out[~inside | near_edge] = np.nan
    return surface.with_heights(out)
