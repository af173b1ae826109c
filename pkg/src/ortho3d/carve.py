"""Visual-hull carving: intersect perpendicular envelopes on a regular grid."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .envelope import AXIS_NAMES, Envelope
from .errors import DuplicateAxis, EmptyGrid, EmptyIntersection, InconsistentViews, TooFewEnvelopes

log = logging.getLogger(__name__)

MISMATCH_LIMIT = 0.05


@dataclass
class ConsistencyReport:
    """Relative extent mismatch ``|a - b| / max(a, b)`` per shared world axis."""

    ratios: dict[str, float] = field(default_factory=dict)
    extents: dict[str, tuple[float, ...]] = field(default_factory=dict)

    @property
    def max_ratio(self) -> float:
        return max(self.ratios.values(), default=0.0)

    def ok(self, limit: float = MISMATCH_LIMIT) -> bool:
        return self.max_ratio <= limit


def _validate(envelopes) -> None:
    if len(envelopes) < 2:
        raise TooFewEnvelopes(f"need two or more mutually perpendicular envelopes, got {len(envelopes)}")
    axes = [e.axis for e in envelopes]
    if len(set(axes)) != len(axes):
        raise DuplicateAxis(f"envelopes share an extrusion axis: {[AXIS_NAMES[a] for a in axes]}")


def _axis_intervals(envelopes) -> dict[int, list[tuple[float, float]]]:
    spans: dict[int, list[tuple[float, float]]] = {0: [], 1: [], 2: []}
    for env in envelopes:
        lo, hi = env.region.bbox
        for slot, axis in enumerate(env.plane_axes):
            spans[axis].append((float(lo[slot]), float(hi[slot])))
    return spans


def check_consistency(envelopes: list[Envelope]) -> ConsistencyReport:
    _validate(envelopes)
    report = ConsistencyReport()
    for axis, spans in _axis_intervals(envelopes).items():
        if len(spans) < 2:
            continue
        widths = tuple(hi - lo for lo, hi in spans)
        a, b = max(widths), min(widths)
        report.extents[AXIS_NAMES[axis]] = widths
        report.ratios[AXIS_NAMES[axis]] = (a - b) / a if a > 0 else 0.0
    return report


@dataclass
class CarveGrid:
    """Boolean occupancy over cells ``[ix, iy, iz]``; cell centers at ``origin + (i + 0.5) * cell``."""

    resolution: int
    origin: np.ndarray
    cell: float
    occupancy: np.ndarray
    n_envelopes: int = 0

    @property
    def shape(self) -> tuple[int, int, int]:
        return self.occupancy.shape

    def axis_centers(self, axis: int) -> np.ndarray:
        return self.origin[axis] + (np.arange(self.occupancy.shape[axis]) + 0.5) * self.cell

    def centers(self, idx: np.ndarray) -> np.ndarray:
        return self.origin + (np.asarray(idx, dtype=np.float64) + 0.5) * self.cell

    @property
    def volume(self) -> float:
        return float(self.occupancy.sum()) * self.cell ** 3


def grid_layout(envelopes: list[Envelope], resolution: int) -> tuple[np.ndarray, float, tuple[int, int, int]]:
    """Origin, cell size and shape of the carving grid.

    Cell centers sit exactly on the lower bound of every axis and span the
    longest axis with ``resolution`` centers, so box faces fall on centers.
    One empty cell of padding surrounds the common bounding prism.
    """
    if resolution < 4:
        raise ValueError(f"resolution must be >= 4, got {resolution}")
    lo = np.empty(3)
    hi = np.empty(3)
    for axis, spans in _axis_intervals(envelopes).items():
        lo[axis] = max(s[0] for s in spans)
        hi[axis] = min(s[1] for s in spans)
    extent = hi - lo
    if np.any(extent < 0):
        bad = [AXIS_NAMES[a] for a in range(3) if extent[a] < 0]
        raise EmptyIntersection(f"envelope bounds do not overlap along {', '.join(bad)}")
    longest = float(extent.max())
    if longest == 0:
        raise EmptyIntersection("envelope intersection has zero extent")
    cell = longest / (resolution - 1)
    counts = tuple(int(math.floor(e / cell + 1e-9)) + 3 for e in extent)
    origin = lo - 1.5 * cell
    return origin, cell, counts


def carve(envelopes: list[Envelope], resolution: int = 64, allow_inconsistent: bool = False,
          workers: int | None = 1) -> CarveGrid:
    """Mark every cell whose center lies inside all envelopes."""
    report = check_consistency(envelopes)
    if not report.ok():
        msg = ", ".join(f"{k}={v:.3f}" for k, v in report.ratios.items())
        if not allow_inconsistent:
            raise InconsistentViews(f"view extents disagree beyond {MISMATCH_LIMIT:.0%}: {msg}")
        log.warning("carving inconsistent views anyway: %s", msg)
    if len(envelopes) == 2:
        log.warning("two envelopes only; a third perpendicular view refines complex objects")
    origin, cell, shape = grid_layout(envelopes, resolution)
    centers = [origin[a] + (np.arange(shape[a]) + 0.5) * cell for a in range(3)]
    occ = np.ones(shape, dtype=bool)
    for env in envelopes:
        a, b = env.plane_axes
        ca, cb = np.meshgrid(centers[a], centers[b], indexing="ij")
        inside = env.region.contains(np.column_stack([ca.ravel(), cb.ravel()]), workers)
        plane = inside.reshape(len(centers[a]), len(centers[b]))
        view = [slice(None)] * 3
        view[env.axis] = None
        # plane indices are (a, b) with a < b, matching the remaining 3D axis order
        occ &= plane[tuple(view)]
    grid = CarveGrid(resolution, origin, cell, occ, len(envelopes))
    if not occ.any():
        raise EmptyIntersection("no grid cell lies inside every envelope")
    return grid


@dataclass
class PointCloud3D:
    """Surface samples ``S``: boundary cell centers sorted by ``(x, y, z)``."""

    points: np.ndarray
    resolution: int = 0
    n_envelopes: int = 0
    cell: float = 0.0

    def __len__(self) -> int:
        return len(self.points)

    def to_xyz(self) -> str:
        return "".join(f"{x:.6g} {y:.6g} {z:.6g}\n" for x, y, z in self.points)

    def to_bytes(self) -> bytes:
        return np.ascontiguousarray(self.points, dtype="<f8").tobytes()


def boundary_mask(occ: np.ndarray) -> np.ndarray:
    """Occupied cells with at least one empty or out-of-grid face neighbor."""
    padded = np.pad(occ, 1, constant_values=False)
    core = (slice(1, -1),) * 3
    interior = occ.copy()
    for axis in range(3):
        for step in (-1, 1):
            sl = list(core)
            sl[axis] = slice(1 + step, padded.shape[axis] - 1 + step)
            interior &= padded[tuple(sl)]
    return occ & ~interior


def extract_boundary(grid: CarveGrid) -> PointCloud3D:
    if not grid.occupancy.any():
        raise EmptyGrid("grid has no occupied cells")
    idx = np.argwhere(boundary_mask(grid.occupancy))  # row-major, so already sorted by (ix, iy, iz)
    return PointCloud3D(grid.centers(idx), grid.resolution, grid.n_envelopes, grid.cell)
