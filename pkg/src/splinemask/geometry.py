"""Planar polygon predicates shared by the meshing, rasterization and line-search code."""
from __future__ import annotations

import numpy as np


class SelfIntersectionError(ValueError):
    """Raised when a closed boundary polyline crosses itself."""


def polygon_signed_area(points: np.ndarray) -> float:
    """Shoelace signed area of a closed polygon given as an (m, 2) vertex loop.

    Positive for counterclockwise orientation. The closing edge from the last
    vertex back to the first is implied.
    """
    pts = np.asarray(points, dtype=float)
    x, y = pts[:, 0], pts[:, 1]
    return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))


def points_in_polygon(px: np.ndarray, py: np.ndarray, polygon: np.ndarray) -> np.ndarray:
    """Even-odd (crossing number) point-in-polygon test, vectorized over query points.

    Points exactly on a horizontal edge follow the half-open crossing rule;
    results on the boundary are convention-dependent, as usual for rasterizers.
    """
    px = np.asarray(px, dtype=float)
    py = np.asarray(py, dtype=float)
    poly = np.asarray(polygon, dtype=float)
    inside = np.zeros(px.shape, dtype=bool)
    m = len(poly)
    for i in range(m):
        x1, y1 = poly[i]
        x2, y2 = poly[(i + 1) % m]
        crosses = ((y1 <= py) & (py < y2)) | ((y2 <= py) & (py < y1))
        if not crosses.any():
            continue
        t = (py - y1) / (y2 - y1)
        x_int = x1 + t * (x2 - x1)
        inside ^= crosses & (px < x_int)
    return inside


def _orient(ax, ay, bx, by, cx, cy):
    return (bx - ax) * (cy - ay) - (by - ay) * (cx - ax)


def polyline_self_intersects(points: np.ndarray) -> bool:
    """True if the closed polyline through `points` has any crossing edge pair.

    Adjacent segments (sharing an endpoint, including the wrap-around pair)
    are not counted. Repeated vertices count as an intersection.
    """
    pts = np.asarray(points, dtype=float)
    m = len(pts)
    if m < 3:
        return False
    if len(np.unique(pts, axis=0)) < m:
        return True
    a = pts
    b = np.roll(pts, -1, axis=0)
    for i in range(m - 2):
        # candidate partners: non-adjacent segments after i
        j0 = i + 2
        j1 = m if i > 0 else m - 1  # segment (m-1, 0) is adjacent to segment 0
        if j0 >= j1:
            continue
        ax, ay = a[i]
        bx, by = b[i]
        cx, cy = a[j0:j1, 0], a[j0:j1, 1]
        dx, dy = b[j0:j1, 0], b[j0:j1, 1]
        d1 = _orient(ax, ay, bx, by, cx, cy)
        d2 = _orient(ax, ay, bx, by, dx, dy)
        d3 = _orient(cx, cy, dx, dy, ax, ay)
        d4 = _orient(cx, cy, dx, dy, bx, by)
        proper = (d1 * d2 < 0) & (d3 * d4 < 0)
        if proper.any():
            return True
        # collinear overlap: any zero orientation with bounding-box overlap
        touch = (d1 == 0) | (d2 == 0) | (d3 == 0) | (d4 == 0)
        if touch.any():
            lo_x = np.maximum(min(ax, bx), np.minimum(cx, dx))
            hi_x = np.minimum(max(ax, bx), np.maximum(cx, dx))
            lo_y = np.maximum(min(ay, by), np.minimum(cy, dy))
            hi_y = np.minimum(max(ay, by), np.maximum(cy, dy))
            if (touch & (lo_x <= hi_x) & (lo_y <= hi_y)).any():
                return True
    return False


def polygon_perimeter_points(polygon: np.ndarray, count: int) -> np.ndarray:
    """Place `count` points at equal arc-length spacing along a closed polygon.

    The first point coincides with vertex 0; spacing is perimeter / count.
    """
    poly = np.asarray(polygon, dtype=float)
    if len(poly) < 3:
        raise ValueError("polygon needs at least 3 vertices")
    edges = np.roll(poly, -1, axis=0) - poly
    lengths = np.hypot(edges[:, 0], edges[:, 1])
    perimeter = float(lengths.sum())
    if perimeter <= 0.0:
        raise ValueError("degenerate polygon with zero perimeter")
    cumulative = np.concatenate([[0.0], np.cumsum(lengths)])
    targets = np.arange(count) * perimeter / count
    out = np.empty((count, 2))
    for k, s in enumerate(targets):
        i = int(np.searchsorted(cumulative, s, side="right") - 1)
        i = min(i, len(poly) - 1)
        frac = (s - cumulative[i]) / lengths[i] if lengths[i] > 0 else 0.0
        out[k] = poly[i] + frac * edges[i]
    return out
