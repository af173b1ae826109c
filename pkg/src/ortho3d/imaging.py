"""Grayscale images, Gaussian kernels, clamp-to-edge convolution and gradients."""
from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import _accel
from ._accel import njit
from .errors import CorruptImage, ImageNotFound, ImageTooSmall, InvalidSigma, UnsupportedFormat

LUMA = (0.299, 0.587, 0.114)


@dataclass(frozen=True)
class GrayImage:
    """Intensities in [0, 1], shape ``(height, width)``, row-major."""

    data: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.data, dtype=np.float64)
        if arr.ndim != 2:
            raise ValueError(f"expected a 2D array, got shape {arr.shape}")
        if arr.size and (arr.min() < 0.0 or arr.max() > 1.0):
            raise ValueError("intensities must lie in [0, 1]")
        arr = np.ascontiguousarray(arr)
        arr.setflags(write=False)
        object.__setattr__(self, "data", arr)

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def height(self) -> int:
        return self.data.shape[0]


@dataclass(frozen=True)
class Kernel:
    """Square filter of side ``2*radius + 1``; ``weights[radius, radius]`` is the center."""

    radius: int
    weights: np.ndarray

    @classmethod
    def identity(cls) -> "Kernel":
        return cls(0, np.ones((1, 1)))

    def weight(self, dx: int, dy: int) -> float:
        return float(self.weights[dy + self.radius, dx + self.radius])


# ---------------------------------------------------------------------------
# loading

def load_image(path) -> GrayImage:
    """Read a PGM (P2/P5) or PNG file as a normalized grayscale image.

    Multi-channel PNGs are reduced with luma weights 0.299/0.587/0.114.
    """
    path = Path(path)
    if not path.is_file():
        raise ImageNotFound(f"image not found: {path}")
    raw = path.read_bytes()
    if raw[:2] in (b"P2", b"P5"):
        return GrayImage(_parse_pgm(raw, path))
    if raw[:8] == b"\x89PNG\r\n\x1a\n":
        return GrayImage(_read_png(path))
    raise UnsupportedFormat(f"{path}: not a PGM (P2/P5) or PNG file")


def _pgm_tokens(raw: bytes, count: int, pos: int):
    """Pull ``count`` whitespace-separated header tokens, skipping comments."""
    tokens = []
    n = len(raw)
    while len(tokens) < count:
        while pos < n and raw[pos:pos + 1].isspace():
            pos += 1
        if pos < n and raw[pos:pos + 1] == b"#":
            while pos < n and raw[pos:pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < n and not raw[pos:pos + 1].isspace() and raw[pos:pos + 1] != b"#":
            pos += 1
        if start == pos:
            raise CorruptImage("truncated PGM header")
        tokens.append(raw[start:pos])
    return tokens, pos


def _parse_pgm(raw: bytes, path: Path) -> np.ndarray:
    magic = raw[:2]
    try:
        (w, h, maxval), pos = _pgm_tokens(raw, 3, 2)
        width, height, maxval = int(w), int(h), int(maxval)
    except ValueError as exc:
        raise CorruptImage(f"{path}: bad PGM header") from exc
    if width <= 0 or height <= 0 or not 0 < maxval <= 65535:
        raise CorruptImage(f"{path}: bad PGM dimensions or maxval")
    count = width * height
    if magic == b"P5":
        pos += 1  # single whitespace byte after maxval
        dtype = np.dtype(">u2") if maxval > 255 else np.dtype("u1")
        payload = raw[pos:pos + count * dtype.itemsize]
        if len(payload) < count * dtype.itemsize:
            raise CorruptImage(f"{path}: payload shorter than {width}x{height}")
        values = np.frombuffer(payload, dtype=dtype).astype(np.float64)
    else:
        try:
            values = np.array(raw[pos:].split(), dtype=np.float64)
        except ValueError as exc:
            raise CorruptImage(f"{path}: non-numeric ASCII payload") from exc
        if values.size != count:
            raise CorruptImage(f"{path}: expected {count} samples, found {values.size}")
    if values.max(initial=0) > maxval:
        raise CorruptImage(f"{path}: sample exceeds maxval {maxval}")
    return (values / maxval).reshape(height, width)


def _read_png(path: Path) -> np.ndarray:
    from PIL import Image

    try:
        with Image.open(path) as im:
            im.load()
            mode = im.mode
            if mode == "P":
                im = im.convert("RGBA" if "transparency" in im.info else "RGB")
                mode = im.mode
            arr = np.asarray(im)
    except OSError as exc:
        raise CorruptImage(f"{path}: {exc}") from exc
    if mode in ("L", "LA"):
        gray = (arr[..., 0] if arr.ndim == 3 else arr).astype(np.float64) / 255.0
    elif mode in ("I;16", "I;16B", "I"):
        gray = arr.astype(np.float64) / 65535.0
    elif mode == "1":
        gray = arr.astype(np.float64)
    elif mode in ("RGB", "RGBA"):
        rgb = arr[..., :3].astype(np.float64) / 255.0
        gray = LUMA[0] * rgb[..., 0] + LUMA[1] * rgb[..., 1] + LUMA[2] * rgb[..., 2]
    else:
        raise UnsupportedFormat(f"{path}: unsupported PNG mode {mode}")
    return np.clip(gray, 0.0, 1.0)


def save_pgm(path, img: GrayImage | np.ndarray, binary: bool = True) -> None:
    """Write an 8-bit PGM; handy for fixtures and debugging."""
    data = img.data if isinstance(img, GrayImage) else np.asarray(img)
    h, w = data.shape
    q = np.clip(np.rint(data * 255.0), 0, 255).astype(np.uint8)
    with open(path, "wb") as fh:
        if binary:
            fh.write(f"P5\n{w} {h}\n255\n".encode())
            fh.write(q.tobytes())
        else:
            fh.write(f"P2\n{w} {h}\n255\n".encode())
            for row in q:
                fh.write((" ".join(str(v) for v in row) + "\n").encode())


# ---------------------------------------------------------------------------
# kernels

def gaussian_weight(x: float, y: float, sigma: float) -> float:
    """Unnormalized isotropic Gaussian ``exp(-(x^2+y^2)/2s^2) / (2 pi s^2)``."""
    return math.exp(-(x * x + y * y) / (2.0 * sigma * sigma)) / (2.0 * math.pi * sigma * sigma)


def gaussian_kernel(sigma: float) -> Kernel:
    """Sampled Gaussian truncated at ``ceil(3 sigma)`` and renormalized to sum 1."""
    if not (isinstance(sigma, (int, float)) and math.isfinite(sigma) and sigma > 0):
        raise InvalidSigma(f"sigma must be a positive finite number, got {sigma!r}")
    radius = int(math.ceil(3.0 * sigma))
    offs = np.arange(-radius, radius + 1, dtype=np.float64)
    xx, yy = np.meshgrid(offs, offs)
    weights = np.exp(-(xx * xx + yy * yy) / (2.0 * sigma * sigma)) / (2.0 * math.pi * sigma * sigma)
    weights /= weights.sum()
    return Kernel(radius, weights)


# ---------------------------------------------------------------------------
# convolution

@njit
def _convolve_rows(field, weights, radius, out, row_lo, row_hi):
    h, w = field.shape
    for y in range(row_lo, row_hi):
        for x in range(w):
            acc = 0.0
            for dy in range(-radius, radius + 1):
                sy = min(max(y - dy, 0), h - 1)
                for dx in range(-radius, radius + 1):
                    sx = min(max(x - dx, 0), w - 1)
                    acc += weights[dy + radius, dx + radius] * field[sy, sx]
            out[y, x] = acc


def _convolve_numpy(field: np.ndarray, weights: np.ndarray, radius: int) -> np.ndarray:
    # Same per-pixel accumulation order as the loop kernel, so results are bitwise equal.
    h, w = field.shape
    padded = np.pad(field, radius, mode="edge")
    out = np.zeros_like(field)
    for dy in range(-radius, radius + 1):
        for dx in range(-radius, radius + 1):
            shifted = padded[radius - dy:radius - dy + h, radius - dx:radius - dx + w]
            out += weights[dy + radius, dx + radius] * shifted
    return out


def convolve(field, k: Kernel, workers: int | None = 1) -> np.ndarray:
    """Discrete 2D convolution with clamp-to-edge borders; output keeps the input shape."""
    field = np.ascontiguousarray(field, dtype=np.float64)
    if k.radius == 0:
        return field * k.weights[0, 0]
    weights = np.ascontiguousarray(k.weights, dtype=np.float64)
    if not _accel.NUMBA_ENABLED:
        return _convolve_numpy(field, weights, k.radius)
    out = np.empty_like(field)
    _accel.run_chunked(lambda lo, hi: _convolve_rows(field, weights, k.radius, out, lo, hi),
                       field.shape[0], workers)
    return out


# ---------------------------------------------------------------------------
# gradients

def gradients(img: GrayImage | np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Central differences inside, one-sided differences on the border.

    Returns ``(Ix, Iy)``: derivatives along width (columns) and height (rows).
    """
    data = img.data if isinstance(img, GrayImage) else np.asarray(img, dtype=np.float64)
    if data.shape[0] < 3 or data.shape[1] < 3:
        raise ImageTooSmall(f"gradients need at least 3x3 pixels, got {data.shape[1]}x{data.shape[0]}")
    iy, ix = np.gradient(data)
    return ix, iy
