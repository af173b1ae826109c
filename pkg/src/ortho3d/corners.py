"""Harris corner detection.

Two structure-tensor forms are available.  ``"literal"`` smooths the
gradients first and squares afterwards (``L_x = G * I_x``), which makes the
per-pixel tensor rank one, so ``det(M) = 0`` and the cornerness is never
positive.  ``"standard"`` smooths the gradient products, the usual Harris
construction, and is what :func:`detect_corners` uses unless told otherwise.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _accel
from ._accel import njit
from .errors import ConfigError, DimensionMismatch, ImageTooSmall
from .imaging import GrayImage, convolve, gaussian_kernel, gradients

TENSOR_FORMS = ("literal", "standard")


@dataclass(frozen=True)
class HarrisParams:
    sigma: float = 1.0
    k: float = 0.04
    rel_threshold: float = 0.01
    nms_radius: int = 2
    tensor_form: str = "standard"
    # Absolute R used as the threshold scale instead of this image's max R.
    reference_max: float | None = None

    def __post_init__(self):
        if not self.sigma > 0:
            raise ConfigError(f"sigma must be > 0, got {self.sigma}")
        if not self.k > 0:
            raise ConfigError(f"k must be > 0, got {self.k}")
        if not 0 < self.rel_threshold <= 1:
            raise ConfigError(f"rel_threshold must lie in (0, 1], got {self.rel_threshold}")
        if int(self.nms_radius) != self.nms_radius or self.nms_radius < 1:
            raise ConfigError(f"nms_radius must be an integer >= 1, got {self.nms_radius}")
        if self.tensor_form not in TENSOR_FORMS:
            raise ConfigError(f"tensor_form must be one of {TENSOR_FORMS}")


@dataclass
class ControlPointSet:
    """Detected corners as an ``(n, 3)`` array of ``x, y, score``, best first."""

    view_id: str
    points: np.ndarray = field(default_factory=lambda: np.empty((0, 3)))

    def __len__(self) -> int:
        return len(self.points)

    @property
    def xy(self) -> np.ndarray:
        return self.points[:, :2]

    def to_csv(self) -> str:
        return "".join(f"{int(x)},{int(y)},{s:.6g}\n" for x, y, s in self.points)


def _check_same(*fields: np.ndarray) -> None:
    shape = fields[0].shape
    for f in fields[1:]:
        if f.shape != shape:
            raise DimensionMismatch(f"field shapes differ: {shape} vs {f.shape}")


def structure_tensor(Ix, Iy, sigma: float, form: str = "literal", workers: int | None = 1):
    """Entries ``(A, B, C)`` of the 2x2 tensor ``M = [[A, B], [B, C]]`` per pixel."""
    Ix = np.asarray(Ix, dtype=np.float64)
    Iy = np.asarray(Iy, dtype=np.float64)
    _check_same(Ix, Iy)
    g = gaussian_kernel(sigma)
    if form == "literal":
        Lx = convolve(Ix, g, workers)
        Ly = convolve(Iy, g, workers)
        return Lx * Lx, Lx * Ly, Ly * Ly
    if form == "standard":
        return (convolve(Ix * Ix, g, workers), convolve(Ix * Iy, g, workers),
                convolve(Iy * Iy, g, workers))
    raise ConfigError(f"unknown tensor form {form!r}")


def cornerness(A, B, C, k: float = 0.04) -> np.ndarray:
    """``R = det(M) - k trace(M)^2``, positive at corners and negative along edges."""
    A, B, C = (np.asarray(a, dtype=np.float64) for a in (A, B, C))
    _check_same(A, B, C)
    return (A * C - B * B) - k * (A + C) ** 2


@njit
def _nms_kernel(R, threshold, radius, keep):
    h, w = R.shape
    for y in range(h):
        for x in range(w):
            r = R[y, x]
            if not r > threshold:
                continue
            ok = True
            for qy in range(max(0, y - radius), min(h, y + radius + 1)):
                for qx in range(max(0, x - radius), min(w, x + radius + 1)):
                    if qy == y and qx == x:
                        continue
                    q = R[qy, qx]
                    # ties go to the raster-earlier pixel (lower y, then lower x)
                    if q > r or (q == r and (qy < y or (qy == y and qx < x))):
                        ok = False
                        break
                if not ok:
                    break
            keep[y, x] = ok


def _nms_numpy(R: np.ndarray, threshold: float, radius: int) -> np.ndarray:
    h, w = R.shape
    padded = np.pad(R, radius, constant_values=-np.inf)
    keep = R > threshold
    for dy in range(-radius, radius + 1):
        for dx in range(-radius, radius + 1):
            if dy == 0 and dx == 0:
                continue
            q = padded[radius + dy:radius + dy + h, radius + dx:radius + dx + w]
            earlier = dy < 0 or (dy == 0 and dx < 0)
            keep &= (q < R) if earlier else (q <= R)
    return keep


def suppress_nonmax(R: np.ndarray, threshold: float, radius: int) -> np.ndarray:
    """Mask of pixels above ``threshold`` that beat their whole ``(2r+1)^2`` window."""
    R = np.ascontiguousarray(R, dtype=np.float64)
    if not _accel.NUMBA_ENABLED:
        return _nms_numpy(R, threshold, radius)
    keep = np.zeros(R.shape, dtype=np.bool_)
    _nms_kernel(R, float(threshold), int(radius), keep)
    return keep


def harris_response(img: GrayImage | np.ndarray, p: HarrisParams = HarrisParams(),
                    workers: int | None = 1) -> np.ndarray:
    data = img.data if isinstance(img, GrayImage) else np.asarray(img, dtype=np.float64)
    Ix, Iy = gradients(data)
    A, B, C = structure_tensor(Ix, Iy, p.sigma, p.tensor_form, workers)
    return cornerness(A, B, C, p.k)


def detect_corners(img: GrayImage, p: HarrisParams = HarrisParams(), view_id: str = "",
                   workers: int | None = 1) -> ControlPointSet:
    """Harris control points sorted by descending R (ties by row, then column)."""
    if img.width < 3 or img.height < 3:
        raise ImageTooSmall(f"corner detection needs at least 3x3 pixels, got {img.width}x{img.height}")
    R = harris_response(img, p, workers)
    scale = R.max() if p.reference_max is None else p.reference_max
    if not scale > 0:
        return ControlPointSet(view_id)
    keep = suppress_nonmax(R, p.rel_threshold * scale, p.nms_radius)
    ys, xs = np.nonzero(keep)
    scores = R[ys, xs]
    order = np.lexsort((xs, ys, -scores))
    pts = np.column_stack([xs[order], ys[order], scores[order]]).astype(np.float64)
    return ControlPointSet(view_id, pts)
