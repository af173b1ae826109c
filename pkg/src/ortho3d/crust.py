"""Crust surface reconstruction from boundary samples.

Steps: Delaunay of the samples, two poles per sample (the farthest Voronoi
vertex and the farthest one on the opposite side), Delaunay of samples plus
poles, and finally every triangle of that second triangulation whose three
corners are all samples.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from . import _accel
from ._accel import njit
from .carve import PointCloud3D
from .delaunay import FACES, JITTER_REL, Tetrahedralization, auto_jitter, triangulate
from .errors import EmptyCrust, TooFewPoints, VertexNotInTriangulation
from .meshio import TriangleMesh

log = logging.getLogger(__name__)

HULL_POLE_FACTOR = 10.0
POLE_CHOICES = ("both", "plus", "minus", "none")


@dataclass
class PoleSet:
    """Per-sample poles; rows of ``p_minus`` are NaN where no vertex qualified."""

    p_plus: np.ndarray
    p_minus: np.ndarray
    hull_flag: np.ndarray

    @property
    def has_plus(self) -> np.ndarray:
        return np.isfinite(self.p_plus).all(axis=1)

    @property
    def has_minus(self) -> np.ndarray:
        return np.isfinite(self.p_minus).all(axis=1)

    def points(self, which: str = "both") -> np.ndarray:
        parts = []
        if which in ("both", "plus"):
            parts.append(self.p_plus[self.has_plus])
        if which in ("both", "minus"):
            parts.append(self.p_minus[self.has_minus])
        if not parts:
            return np.empty((0, 3))
        return np.vstack(parts)

    def to_text(self) -> str:
        rows = []
        for i, (pp, pm, h) in enumerate(zip(self.p_plus, self.p_minus, self.hull_flag)):
            vals = " ".join(f"{v:.9g}" for v in (*pp, *pm))
            rows.append(f"{i} {vals} {int(h)}\n")
        return "".join(rows)


def voronoi_vertices(tri: Tetrahedralization, s: int) -> np.ndarray:
    """Vertices of the Voronoi cell of sample ``s``: circumcenters of its tets."""
    if not 0 <= s < len(tri.vertices):
        raise VertexNotInTriangulation(f"vertex {s} is out of range")
    ids = tri.incident_tets(s)
    if len(ids) == 0:
        raise VertexNotInTriangulation(f"vertex {s} has no incident tets")
    return tri.centers[ids]


def hull_normals(tri: Tetrahedralization) -> tuple[np.ndarray, np.ndarray]:
    """Per-vertex hull flag and normalized mean of the unit outward hull-facet normals."""
    n = len(tri.vertices)
    faces = tri.hull_faces()
    p = tri.work
    nrm = np.cross(p[faces[:, 1]] - p[faces[:, 0]], p[faces[:, 2]] - p[faces[:, 0]])
    nrm /= np.linalg.norm(nrm, axis=1, keepdims=True)
    acc = np.zeros((n, 3))
    for k in range(3):
        np.add.at(acc, faces[:, k], nrm)
    flag = np.zeros(n, dtype=bool)
    flag[faces.ravel()] = True
    length = np.linalg.norm(acc, axis=1, keepdims=True)
    acc = np.divide(acc, length, out=np.zeros_like(acc), where=length > 0)
    return flag, acc


@njit
def _poles_kernel(S, centers, offsets, ids, hull, normals, limit, lo, hi, p_plus, p_minus):
    for s in range(lo, hi):
        sx = S[s, 0]
        sy = S[s, 1]
        sz = S[s, 2]
        a = offsets[s]
        b = offsets[s + 1]
        if a == b:
            continue
        if hull[s]:
            px = sx + limit * normals[s, 0]
            py = sy + limit * normals[s, 1]
            pz = sz + limit * normals[s, 2]
        else:
            best = -1.0
            px = sx
            py = sy
            pz = sz
            for k in range(a, b):
                t = ids[k]
                dx = centers[t, 0] - sx
                dy = centers[t, 1] - sy
                dz = centers[t, 2] - sz
                d2 = dx * dx + dy * dy + dz * dz
                if d2 > best:
                    best = d2
                    px = centers[t, 0]
                    py = centers[t, 1]
                    pz = centers[t, 2]
        ux = px - sx
        uy = py - sy
        uz = pz - sz
        best = -1.0
        mx = np.nan
        my = np.nan
        mz = np.nan
        for k in range(a, b):
            t = ids[k]
            dx = centers[t, 0] - sx
            dy = centers[t, 1] - sy
            dz = centers[t, 2] - sz
            if dx * ux + dy * uy + dz * uz < 0.0:
                d2 = dx * dx + dy * dy + dz * dz
                if d2 > best:
                    best = d2
                    mx = centers[t, 0]
                    my = centers[t, 1]
                    mz = centers[t, 2]
        p_plus[s, 0] = px
        p_plus[s, 1] = py
        p_plus[s, 2] = pz
        p_minus[s, 0] = mx
        p_minus[s, 1] = my
        p_minus[s, 2] = mz


def _group_argmax(groups: np.ndarray, values: np.ndarray, n: int) -> np.ndarray:
    """Index of the first maximum of ``values`` within each group (-1 for empty groups)."""
    out = np.full(n, -1, dtype=np.int64)
    if len(values) == 0:
        return out
    order = np.lexsort((np.arange(len(values)), -values, groups))
    g = groups[order]
    first = np.ones(len(g), dtype=bool)
    first[1:] = g[1:] != g[:-1]
    out[g[first]] = order[first]
    return out


def _poles_numpy(S, centers, offsets, ids, hull, normals, limit):
    n = len(S)
    counts = np.diff(offsets)
    owner = np.repeat(np.arange(n), counts)
    diff = centers[ids] - S[owner]
    d2 = (diff * diff).sum(axis=1)
    p_plus = S + limit * normals
    far = _group_argmax(owner, d2, n)
    interior = ~hull & (far >= 0)
    p_plus[interior] = centers[ids[far[interior]]]
    p_plus[counts == 0] = S[counts == 0]
    u = p_plus[owner] - S[owner]
    opposite = (diff * u).sum(axis=1) < 0.0
    sel = np.nonzero(opposite)[0]
    best = _group_argmax(owner[sel], d2[sel], n)
    p_minus = np.full((n, 3), np.nan)
    ok = best >= 0
    p_minus[ok] = centers[ids[sel[best[ok]]]]
    return p_plus, p_minus


def _clamp(poles: np.ndarray, S: np.ndarray, limit: float) -> np.ndarray:
    """Pull poles farther than ``limit`` from their sample back onto that radius."""
    d = poles - S
    length = np.linalg.norm(d, axis=1)
    far = np.isfinite(length) & (length > limit)
    out = poles.copy()
    out[far] = S[far] + d[far] * (limit / length[far])[:, None]
    return out


def compute_poles(tri: Tetrahedralization, workers: int | None = 1) -> PoleSet:
    """Poles of every sample of a triangulation of the samples alone.

    Hull samples have unbounded Voronoi cells; their outer pole is placed ten
    cloud diameters out along the mean outward normal of their hull facets.
    Poles are clamped to that same distance.
    """
    S = tri.work
    n = len(S)
    hull, normals = hull_normals(tri)
    diam = float(np.linalg.norm(S.max(axis=0) - S.min(axis=0)))
    limit = HULL_POLE_FACTOR * diam
    offsets, ids = tri.incidence()
    centers = np.ascontiguousarray(tri.centers)
    if _accel.NUMBA_ENABLED:
        p_plus = np.full((n, 3), np.nan)
        p_minus = np.full((n, 3), np.nan)
        _accel.run_chunked(lambda lo, hi: _poles_kernel(S, centers, offsets, ids, hull, normals, limit,
                                                        lo, hi, p_plus, p_minus), n, workers)
        lonely = np.diff(offsets) == 0
        p_plus[lonely] = np.nan
    else:
        p_plus, p_minus = _poles_numpy(S, centers, offsets, ids, hull, normals, limit)
        p_plus[np.diff(offsets) == 0] = np.nan
    p_plus = _clamp(p_plus, S, limit)
    p_minus = _clamp(p_minus, S, limit)
    missing = int((~np.isfinite(p_minus).all(axis=1) & np.isfinite(p_plus).all(axis=1)).sum())
    if missing:
        log.info("%d samples have no opposite pole", missing)
    return PoleSet(p_plus, p_minus, hull)


@dataclass
class CrustResult:
    mesh: TriangleMesh
    poles: PoleSet
    sample_tri: Tetrahedralization
    union_tri: Tetrahedralization
    n_poles: int


def _sample_cloud(S) -> tuple[np.ndarray, float | None]:
    if isinstance(S, PointCloud3D):
        pts = np.asarray(S.points, dtype=np.float64)
        return pts, (JITTER_REL * S.cell if S.cell > 0 else None)
    return np.asarray(S, dtype=np.float64).reshape(-1, 3), None


def reconstruct(S, jitter: float | None = None, seed: int = 0, poles: str = "both",
                workers: int | None = 1) -> CrustResult:
    """Run the full crust and keep the intermediate structures.

    ``poles`` selects which pole sets join the second triangulation; anything
    other than ``"both"`` is an ablation.
    """
    if poles not in POLE_CHOICES:
        raise ValueError(f"poles must be one of {POLE_CHOICES}")
    pts, cell_jitter = _sample_cloud(S)
    if len(pts) < 4:
        raise TooFewPoints(f"crust needs at least 4 samples, got {len(pts)}")
    if jitter is None:
        jitter = cell_jitter if cell_jitter is not None else auto_jitter(pts)
    n = len(pts)
    tri1 = triangulate(pts, jitter=jitter, seed=seed)
    pole_set = compute_poles(tri1, workers)
    P = np.unique(pole_set.points(poles), axis=0)
    union = np.vstack([pts, P]) if len(P) else pts
    tri2 = triangulate(union, jitter=jitter, seed=seed)

    faces = tri2.tets[:, FACES].reshape(-1, 3)
    faces = faces[(faces < n).all(axis=1)]
    tris = np.unique(np.sort(faces, axis=1), axis=0) if len(faces) else np.empty((0, 3), dtype=np.int64)
    mesh = TriangleMesh(pts, tris)
    if len(tris) == 0:
        raise EmptyCrust(f"no triangle has all three corners among the {n} samples "
                         f"({len(P)} poles, {int(pole_set.hull_flag.sum())} hull samples, "
                         f"{int((~pole_set.has_minus).sum())} without an opposite pole)")
    return CrustResult(mesh, pole_set, tri1, tri2, len(P))


def crust_extract(S, jitter: float | None = None, seed: int = 0, poles: str = "both",
                  workers: int | None = 1) -> TriangleMesh:
    """Triangles of Delaunay(samples + poles) whose vertices are all samples."""
    return reconstruct(S, jitter, seed, poles, workers).mesh
