"""View regions (closed silhouettes in world units) and their extrusions."""
from __future__ import annotations

import enum
import logging
from dataclasses import dataclass

import numpy as np

from . import _accel
from ._accel import njit
from .corners import ControlPointSet
from .errors import NoSilhouette, SelfIntersectingContour, TooFewVertices
from .imaging import GrayImage

log = logging.getLogger(__name__)

AXIS_NAMES = "xyz"
MIN_COMPONENT_PIXELS = 16
SIMPLIFY_TOLERANCE = 1.5
SNAP_RADIUS = 3.0


class ViewKind(enum.Enum):
    """First-angle views.

    ``plane_axes`` are the world axes fed by image column ``u`` and by image
    row ``v`` (negated, since rows grow downward); ``axis`` is the extrusion
    direction.
    """

    FRONT = ((0, 2), 1)
    TOP = ((0, 1), 2)
    LEFT_SIDE = ((1, 2), 0)

    @property
    def plane_axes(self) -> tuple[int, int]:
        return self.value[0]

    @property
    def axis(self) -> int:
        return self.value[1]

    @classmethod
    def parse(cls, name: str) -> "ViewKind":
        key = name.strip().upper().replace("-", "_")
        aliases = {"SIDE": "LEFT_SIDE", "LEFT": "LEFT_SIDE"}
        return cls[aliases.get(key, key)]


# ---------------------------------------------------------------------------
# polygon helpers

def signed_area(poly: np.ndarray) -> float:
    x, y = poly[:, 0], poly[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))


def _orient2d(a, b, c) -> float:
    return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])


def _on_segment(a, b, p) -> bool:
    return min(a[0], b[0]) <= p[0] <= max(a[0], b[0]) and min(a[1], b[1]) <= p[1] <= max(a[1], b[1])


def _segments_cross(a, b, c, d) -> bool:
    d1, d2 = _orient2d(c, d, a), _orient2d(c, d, b)
    d3, d4 = _orient2d(a, b, c), _orient2d(a, b, d)
    if ((d1 > 0) != (d2 > 0)) and d1 != 0 and d2 != 0 and ((d3 > 0) != (d4 > 0)) and d3 != 0 and d4 != 0:
        return True
    return ((d1 == 0 and _on_segment(c, d, a)) or (d2 == 0 and _on_segment(c, d, b))
            or (d3 == 0 and _on_segment(a, b, c)) or (d4 == 0 and _on_segment(a, b, d)))


def is_simple(poly: np.ndarray) -> bool:
    """True when no two non-adjacent edges touch and no vertex repeats."""
    n = len(poly)
    if n < 3:
        return False
    if len({(float(x), float(y)) for x, y in poly}) != n:
        return False
    for i in range(n):
        a, b = poly[i], poly[(i + 1) % n]
        for j in range(i + 1, n):
            if j == i or (j + 1) % n == i or j == (i + 1) % n:
                continue
            if _segments_cross(a, b, poly[j], poly[(j + 1) % n]):
                return False
    return True


@njit
def _points_in_polygon(poly, px, py, eps, out):
    n = poly.shape[0]
    for q in range(px.shape[0]):
        x = px[q]
        y = py[q]
        inside = False
        on_edge = False
        j = n - 1
        for i in range(n):
            xi = poly[i, 0]
            yi = poly[i, 1]
            xj = poly[j, 0]
            yj = poly[j, 1]
            # boundary counts as inside
            cross = (xj - xi) * (y - yi) - (yj - yi) * (x - xi)
            if abs(cross) <= eps and min(xi, xj) - eps <= x <= max(xi, xj) + eps \
                    and min(yi, yj) - eps <= y <= max(yi, yj) + eps:
                on_edge = True
                break
            if (yi > y) != (yj > y):
                xc = xi + (y - yi) * (xj - xi) / (yj - yi)
                if x < xc:
                    inside = not inside
            j = i
        out[q] = inside or on_edge


def _points_in_polygon_numpy(poly, px, py, eps):
    xi, yi = poly[:, 0][None, :], poly[:, 1][None, :]
    xj, yj = np.roll(poly[:, 0], 1)[None, :], np.roll(poly[:, 1], 1)[None, :]
    x, y = px[:, None], py[:, None]
    cross = (xj - xi) * (y - yi) - (yj - yi) * (x - xi)
    on_edge = ((np.abs(cross) <= eps)
               & (np.minimum(xi, xj) - eps <= x) & (x <= np.maximum(xi, xj) + eps)
               & (np.minimum(yi, yj) - eps <= y) & (y <= np.maximum(yi, yj) + eps)).any(axis=1)
    straddle = (yi > y) != (yj > y)
    with np.errstate(divide="ignore", invalid="ignore"):
        xc = xi + (y - yi) * (xj - xi) / (yj - yi)
    crossings = (straddle & (x < xc)).sum(axis=1)
    return on_edge | (crossings % 2 == 1)


def points_in_polygon(poly: np.ndarray, pts: np.ndarray, workers: int | None = 1) -> np.ndarray:
    """Even-odd membership for many 2D points; points on an edge are inside."""
    poly = np.ascontiguousarray(poly, dtype=np.float64)
    pts = np.asarray(pts, dtype=np.float64).reshape(-1, 2)
    px = np.ascontiguousarray(pts[:, 0])
    py = np.ascontiguousarray(pts[:, 1])
    scale = max(1.0, float(np.abs(poly).max()))
    eps = 1e-12 * scale * scale
    lo, hi = poly.min(axis=0), poly.max(axis=0)
    out = np.zeros(len(px), dtype=np.bool_)
    cand = np.nonzero((px >= lo[0] - 1e-12 * scale) & (px <= hi[0] + 1e-12 * scale)
                      & (py >= lo[1] - 1e-12 * scale) & (py <= hi[1] + 1e-12 * scale))[0]
    if len(cand) == 0:
        return out
    cx, cy = px[cand], py[cand]
    if not _accel.NUMBA_ENABLED:
        out[cand] = _points_in_polygon_numpy(poly, cx, cy, eps)
        return out
    res = np.zeros(len(cand), dtype=np.bool_)
    _accel.run_chunked(lambda a, b: _points_in_polygon(poly, cx[a:b], cy[a:b], eps, res[a:b]),
                       len(cand), workers)
    out[cand] = res
    return out


# ---------------------------------------------------------------------------
# regions

@dataclass(frozen=True)
class ViewRegion:
    """Closed counterclockwise polygon in the view's world plane.

    ``polygon[:, 0]`` runs along world axis ``kind.plane_axes[0]`` and
    ``polygon[:, 1]`` along ``kind.plane_axes[1]``.  Pixel ``(u, v)`` maps to
    ``(u * scale, -v * scale) - offset``.
    """

    kind: ViewKind
    polygon: np.ndarray
    scale: float = 1.0
    offset: tuple[float, float] = (0.0, 0.0)

    def __post_init__(self):
        poly = np.asarray(self.polygon, dtype=np.float64).reshape(-1, 2)
        if len(poly) < 3:
            raise TooFewVertices(f"{self.kind.name}: polygon has {len(poly)} vertices, need >= 3")
        if signed_area(poly) < 0:
            poly = poly[::-1]
        poly = np.ascontiguousarray(poly)
        poly.setflags(write=False)
        object.__setattr__(self, "polygon", poly)

    @property
    def bbox(self) -> tuple[np.ndarray, np.ndarray]:
        return self.polygon.min(axis=0), self.polygon.max(axis=0)

    @property
    def area(self) -> float:
        return signed_area(self.polygon)

    def to_world(self, uv) -> np.ndarray:
        uv = np.asarray(uv, dtype=np.float64)
        return np.stack([uv[..., 0] * self.scale, -uv[..., 1] * self.scale], axis=-1) - np.asarray(self.offset)

    def to_pixel(self, xy) -> np.ndarray:
        xy = np.asarray(xy, dtype=np.float64) + np.asarray(self.offset)
        return np.stack([xy[..., 0] / self.scale, -xy[..., 1] / self.scale], axis=-1)

    def contains(self, pts, workers: int | None = 1) -> np.ndarray:
        return points_in_polygon(self.polygon, pts, workers)

    def to_csv(self) -> str:
        return "".join(f"{x:.9g},{y:.9g}\n" for x, y in self.polygon)


def point_in_region(region: ViewRegion, p) -> bool:
    return bool(region.contains(np.asarray(p, dtype=np.float64).reshape(1, 2))[0])


@dataclass(frozen=True)
class Envelope:
    """Infinite prism: ``region`` swept along world axis ``axis``."""

    region: ViewRegion

    @property
    def axis(self) -> int:
        return self.region.kind.axis

    @property
    def plane_axes(self) -> tuple[int, int]:
        return self.region.kind.plane_axes

    def contains(self, points, workers: int | None = 1) -> np.ndarray:
        pts = np.asarray(points, dtype=np.float64).reshape(-1, 3)
        a, b = self.plane_axes
        return self.region.contains(pts[:, [a, b]], workers)


def extrude(region: ViewRegion) -> Envelope:
    return Envelope(region)


# ---------------------------------------------------------------------------
# silhouette tracing

def otsu_threshold(data: np.ndarray, bins: int = 256) -> float:
    """Threshold maximizing between-class variance over a ``bins``-level histogram."""
    hist, edges = np.histogram(data, bins=bins, range=(0.0, 1.0))
    centers = 0.5 * (edges[:-1] + edges[1:])
    w0 = np.cumsum(hist).astype(np.float64)
    w1 = w0[-1] - w0
    s0 = np.cumsum(hist * centers)
    mu0 = np.divide(s0, w0, out=np.zeros_like(s0), where=w0 > 0)
    mu1 = np.divide(s0[-1] - s0, w1, out=np.zeros_like(s0), where=w1 > 0)
    between = w0 * w1 * (mu0 - mu1) ** 2
    return float(edges[int(np.argmax(between)) + 1])


def foreground_mask(img: GrayImage, invert: bool = False) -> np.ndarray:
    """Largest 4-connected component of the Otsu foreground."""
    from scipy import ndimage

    data = img.data
    if data.max() == data.min():
        raise NoSilhouette("image is uniform; no foreground")
    t = otsu_threshold(data)
    mask = data < t if invert else data >= t
    labels, count = ndimage.label(mask)
    if count == 0:
        raise NoSilhouette("no foreground pixels above the Otsu threshold")
    sizes = np.bincount(labels.ravel())[1:]
    best = int(np.argmax(sizes))
    if sizes[best] < MIN_COMPONENT_PIXELS:
        raise NoSilhouette(f"largest foreground component has {sizes[best]} px (< {MIN_COMPONENT_PIXELS})")
    if count > 1:
        log.info("ignoring %d smaller foreground components", count - 1)
    return labels == best + 1


def trace_outline(mask: np.ndarray) -> np.ndarray:
    """Outer marching-squares contour of a binary mask, as ``(u, v)`` pixel coordinates."""
    from skimage import measure

    padded = np.pad(mask.astype(np.float64), 1)
    contours = measure.find_contours(padded, 0.5)
    best = max(contours, key=lambda c: abs(signed_area(c)))
    ring = best[:-1] if np.array_equal(best[0], best[-1]) else best
    return np.column_stack([ring[:, 1] - 1.0, ring[:, 0] - 1.0])


def _point_segment_distance(p, a, b) -> float:
    ab = b - a
    denom = float(ab @ ab)
    t = 0.0 if denom == 0 else float(np.clip((p - a) @ ab / denom, 0.0, 1.0))
    return float(np.linalg.norm(p - (a + t * ab)))


def simplify_ring(ring: np.ndarray, tolerance: float) -> np.ndarray:
    """Douglas-Peucker on a closed ring, then drop vertices that still sit on their chord."""
    from skimage.measure import approximate_polygon

    start = int(np.argmax(((ring - ring.mean(axis=0)) ** 2).sum(axis=1)))
    rolled = np.roll(ring, -start, axis=0)
    closed = np.vstack([rolled, rolled[:1]])
    simple = approximate_polygon(closed, tolerance)[:-1]
    changed = True
    while changed and len(simple) > 3:
        changed = False
        for i in range(len(simple)):
            prev, nxt = simple[i - 1], simple[(i + 1) % len(simple)]
            if _point_segment_distance(simple[i], prev, nxt) <= tolerance:
                simple = np.delete(simple, i, axis=0)
                changed = True
                break
    return simple


_FOOTPRINT = np.array([[-0.5, -0.5], [0.5, -0.5], [-0.5, 0.5], [0.5, 0.5]])


def _turning_corners(mask: np.ndarray, corners: np.ndarray) -> np.ndarray:
    """Which pixel-grid corners have 1 or 3 foreground pixels among their 4 neighbors."""
    padded = np.pad(mask, 1)
    cu = (corners[:, 0] + 0.5).astype(np.int64) + 1
    cv = (corners[:, 1] + 0.5).astype(np.int64) + 1
    ok = (cu >= 1) & (cv >= 1) & (cu < padded.shape[1]) & (cv < padded.shape[0])
    cu, cv = np.clip(cu, 1, padded.shape[1] - 1), np.clip(cv, 1, padded.shape[0] - 1)
    count = (padded[cv - 1, cu - 1].astype(int) + padded[cv - 1, cu] + padded[cv, cu - 1] + padded[cv, cu])
    return ok & ((count == 1) | (count == 3))


def snap_to_corners(poly: np.ndarray, cps: ControlPointSet, radius: float = SNAP_RADIUS,
                    mask: np.ndarray | None = None) -> np.ndarray:
    """Move each vertex onto the nearest control point within ``radius`` px.

    A control point names a pixel while the outline runs along pixel edges, so
    the vertex lands on a corner of that pixel's unit footprint: the nearest
    one where the silhouette turns (given ``mask``), else the nearest one.
    Snapping to the pixel center would shrink shapes by half a pixel per side.
    """
    if len(cps) == 0:
        return poly.copy()
    cp = cps.xy
    out = poly.copy()
    for i, v in enumerate(poly):
        d = np.hypot(cp[:, 0] - v[0], cp[:, 1] - v[1])
        j = int(np.argmin(d))
        if d[j] > radius:
            continue
        corners = cp[j] + _FOOTPRINT
        dist = np.hypot(corners[:, 0] - v[0], corners[:, 1] - v[1])
        if mask is not None:
            turning = _turning_corners(mask, corners)
            if turning.any():
                dist = np.where(turning, dist, np.inf)
        out[i] = corners[int(np.argmin(dist))]
    keep = [i for i in range(len(out)) if not np.array_equal(out[i], out[i - 1])]
    return out[keep]


def build_view_region(img: GrayImage, cps: ControlPointSet, kind: ViewKind, scale: float = 1.0,
                      invert: bool = False, align: bool = True) -> ViewRegion:
    """Silhouette outline of ``img`` snapped to its control points, in world units.

    With ``align`` the region is translated so its bounding box starts at the
    world origin on both plane axes; this is how separately drawn views are
    co-registered.
    """
    mask = foreground_mask(img, invert)
    ring = trace_outline(mask)
    poly = simplify_ring(ring, SIMPLIFY_TOLERANCE)
    poly = snap_to_corners(poly, cps, mask=mask)
    if len(poly) < 3:
        raise TooFewVertices(f"{kind.name}: outline collapsed to {len(poly)} vertices")
    if not is_simple(poly):
        raise SelfIntersectingContour(f"{kind.name}: outline self-intersects after corner snapping")
    world = np.column_stack([poly[:, 0] * scale, -poly[:, 1] * scale])
    offset = tuple(float(v) for v in world.min(axis=0)) if align else (0.0, 0.0)
    return ViewRegion(kind, world - np.asarray(offset), scale, offset)
