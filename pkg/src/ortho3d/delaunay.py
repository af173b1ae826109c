"""3D Delaunay tetrahedralization by Bowyer-Watson insertion.

Points are inserted one at a time.  The hull is closed by ghost tets that
join each hull facet to a single vertex at infinity, so the result covers the
exact convex hull with no enclosing super-tetrahedron.  Each insertion walks
to the containing tet, grows the cavity of tets in conflict with the new
point, and re-stars the cavity boundary from it.  Conflict and walk decisions use determinant
predicates; lattice-like input is made generic by a tiny seeded jitter.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from ._accel import njit
from .errors import AllCoplanar, DegenerateTetrahedron, NumericalFailure, TooFewPoints

EPS_ORIENT = 1e-12
EPS_SPHERE = 1e-10
JITTER_REL = 1e-6

# faces opposite each slot, ordered so their normal points away from that slot
FACES = np.array([[1, 2, 3], [0, 3, 2], [0, 1, 3], [0, 2, 1]], dtype=np.int64)

# kernel status codes
_OK, _OUTSIDE, _NOT_STAR, _LOST_VERTEX, _BAD_LINKS = 0, 1, 2, 3, 4
_STATUS_TEXT = {
    _OUTSIDE: "point location failed",
    _NOT_STAR: "cavity is not star-shaped after repair",
    _LOST_VERTEX: "cavity swallowed an existing vertex",
    _BAD_LINKS: "cavity boundary is not a closed surface",
}


class Orientation(enum.Enum):
    POSITIVE = 1
    NEGATIVE = -1
    DEGENERATE = 0


class SphereSide(enum.Enum):
    INSIDE = 1
    OUTSIDE = -1
    ON = 0


# ---------------------------------------------------------------------------
# public predicates (tolerance based)

def orient3d(a, b, c, d) -> Orientation:
    """Sign of ``det[b - a; c - a; d - a]``, DEGENERATE within a relative tolerance."""
    a, b, c, d = (np.asarray(p, dtype=np.float64) for p in (a, b, c, d))
    det = float(np.linalg.det(np.array([b - a, c - a, d - a])))
    scale = max(float(np.abs(np.array([a, b, c, d])).max()), 1e-300)
    if abs(det) <= EPS_ORIENT * scale ** 3:
        return Orientation.DEGENERATE
    return Orientation.POSITIVE if det > 0 else Orientation.NEGATIVE


def circumsphere(a, b, c, d) -> tuple[np.ndarray, float]:
    """Center and radius of the sphere through four points."""
    if orient3d(a, b, c, d) is Orientation.DEGENERATE:
        raise DegenerateTetrahedron("points are coplanar; no unique circumsphere")
    a, b, c, d = (np.asarray(p, dtype=np.float64) for p in (a, b, c, d))
    m = np.array([b - a, c - a, d - a])
    rhs = 0.5 * (m * m).sum(axis=1)
    offset = np.linalg.solve(m, rhs)
    return a + offset, float(np.linalg.norm(offset))


def in_sphere(tet, p) -> SphereSide:
    """Where ``p`` falls relative to the circumsphere of ``tet`` (four points)."""
    center, radius = circumsphere(*tet)
    dist = float(np.linalg.norm(np.asarray(p, dtype=np.float64) - center))
    if abs(dist - radius) <= EPS_SPHERE * radius:
        return SphereSide.ON
    return SphereSide.INSIDE if dist < radius else SphereSide.OUTSIDE


def circumcenters(pts: np.ndarray, tets: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized circumcenters and radii for many tets."""
    a = pts[tets[:, 0]]
    u = pts[tets[:, 1]] - a
    v = pts[tets[:, 2]] - a
    w = pts[tets[:, 3]] - a
    vw, wu, uv = np.cross(v, w), np.cross(w, u), np.cross(u, v)
    denom = 2.0 * np.einsum("ij,ij->i", u, vw)
    num = ((u * u).sum(1)[:, None] * vw + (v * v).sum(1)[:, None] * wu + (w * w).sum(1)[:, None] * uv)
    with np.errstate(divide="ignore", invalid="ignore"):
        off = num / denom[:, None]
    return a + off, np.sqrt((off * off).sum(1))


# ---------------------------------------------------------------------------
# kernel predicates (raw sign, no tolerance)

@njit
def _orient(P, i0, i1, i2, i3):
    ax = P[i0, 0]
    ay = P[i0, 1]
    az = P[i0, 2]
    bx = P[i1, 0] - ax
    by = P[i1, 1] - ay
    bz = P[i1, 2] - az
    cx = P[i2, 0] - ax
    cy = P[i2, 1] - ay
    cz = P[i2, 2] - az
    dx = P[i3, 0] - ax
    dy = P[i3, 1] - ay
    dz = P[i3, 2] - az
    return bx * (cy * dz - cz * dy) - by * (cx * dz - cz * dx) + bz * (cx * dy - cy * dx)


@njit
def _insphere(P, i0, i1, i2, i3, ie):
    """Positive when point ``ie`` is strictly inside the sphere of positive tet (i0..i3)."""
    ex = P[ie, 0]
    ey = P[ie, 1]
    ez = P[ie, 2]
    ax = P[i0, 0] - ex
    ay = P[i0, 1] - ey
    az = P[i0, 2] - ez
    bx = P[i1, 0] - ex
    by = P[i1, 1] - ey
    bz = P[i1, 2] - ez
    cx = P[i2, 0] - ex
    cy = P[i2, 1] - ey
    cz = P[i2, 2] - ez
    dx = P[i3, 0] - ex
    dy = P[i3, 1] - ey
    dz = P[i3, 2] - ez
    ab = ax * by - bx * ay
    bc = bx * cy - cx * by
    cd = cx * dy - dx * cy
    da = dx * ay - ax * dy
    ac = ax * cy - cx * ay
    bd = bx * dy - dx * by
    abc = az * bc - bz * ac + cz * ab
    bcd = bz * cd - cz * bd + dz * bc
    cda = cz * da + dz * ac + az * cd
    dab = dz * ab + az * bd + bz * da
    alift = ax * ax + ay * ay + az * az
    blift = bx * bx + by * by + bz * bz
    clift = cx * cx + cy * cy + cz * cz
    dlift = dx * dx + dy * dy + dz * dz
    return -((dlift * abc - clift * dab) + (blift * cda - alift * bcd))


@njit
def _orient_replaced(P, tets, t, slot, ip):
    v0 = tets[t, 0]
    v1 = tets[t, 1]
    v2 = tets[t, 2]
    v3 = tets[t, 3]
    if slot == 0:
        v0 = ip
    elif slot == 1:
        v1 = ip
    elif slot == 2:
        v2 = ip
    else:
        v3 = ip
    return _orient(P, v0, v1, v2, v3)


@njit
def _grow2(a, cap):
    out = np.full((cap, a.shape[1]), -1, dtype=a.dtype)
    out[:a.shape[0]] = a
    return out


@njit
def _grow1(a, cap, fill):
    out = np.full(cap, fill, dtype=a.dtype)
    out[:a.shape[0]] = a
    return out


@njit
def _inf_slot(tets, t, inf):
    for k in range(4):
        if tets[t, k] == inf:
            return k
    return -1


@njit
def _conflict(P, tets, nbr, t, ip, inf):
    """Whether tet ``t`` must be removed when ``ip`` is inserted.

    A ghost tet (finite facet + the infinite vertex) conflicts when the point
    lies strictly beyond its hull facet; on the facet plane it defers to the
    finite tet behind that facet.
    """
    s = _inf_slot(tets, t, inf)
    if s < 0:
        return _insphere(P, tets[t, 0], tets[t, 1], tets[t, 2], tets[t, 3], ip) > 0.0
    o = _orient_replaced(P, tets, t, s, ip)
    if o != 0.0:
        return o > 0.0
    nb = nbr[t, s]
    return _insphere(P, tets[nb, 0], tets[nb, 1], tets[nb, 2], tets[nb, 3], ip) > 0.0


@njit
def _locate(P, tets, nbr, alive, ntet, start, ip, rng, inf):
    """Finite tet containing ``ip``, or a ghost tet whose facet it lies beyond."""
    t = start
    max_steps = 64 + 4 * ntet
    for _ in range(max_steps):
        rng ^= (rng << 13) & 0xFFFFFFFF
        rng ^= rng >> 17
        rng ^= (rng << 5) & 0xFFFFFFFF
        r = rng & 3
        moved = False
        for k in range(4):
            f = (r + k) & 3
            if _orient_replaced(P, tets, t, f, ip) < 0.0:
                t = nbr[t, f]
                moved = True
                break
        if not moved:
            return t, rng
        if _inf_slot(tets, t, inf) >= 0:
            return t, rng
    # the walk cycled on a near-degenerate configuration: scan everything
    for t in range(ntet):
        if not alive[t]:
            continue
        s = _inf_slot(tets, t, inf)
        if s >= 0:
            continue
        if _orient_replaced(P, tets, t, 0, ip) >= 0.0 and _orient_replaced(P, tets, t, 1, ip) >= 0.0 \
                and _orient_replaced(P, tets, t, 2, ip) >= 0.0 and _orient_replaced(P, tets, t, 3, ip) >= 0.0:
            return t, rng
    for t in range(ntet):
        if alive[t]:
            s = _inf_slot(tets, t, inf)
            if s >= 0 and _orient_replaced(P, tets, t, s, ip) > 0.0:
                return t, rng
    return -1, rng


@njit
def _same_face(tets, a, ga, b, gb):
    """Do face ``ga`` of tet ``a`` and face ``gb`` of tet ``b`` hold the same vertices?"""
    for i in range(4):
        if i == ga:
            continue
        v = tets[a, i]
        hit = False
        for j in range(4):
            if j != gb and tets[b, j] == v:
                hit = True
                break
        if not hit:
            return False
    return True


@njit
def _bowyer_watson(P, seeds, order, inf):
    """Insert ``order`` into the tetrahedralization seeded by the four ``seeds``.

    ``P`` carries one unused trailing row standing in for the infinite vertex
    ``inf``.  Returns ``(tets, nbr, alive, ntet, dup, status, failed_at)``.
    """
    npts = P.shape[0]
    n_in = order.shape[0] + 4
    cap = 8 * n_in + 64
    tets = np.full((cap, 4), -1, dtype=np.int64)
    nbr = np.full((cap, 4), -1, dtype=np.int64)
    alive = np.zeros(cap, dtype=np.bool_)
    incav = np.full(cap, -1, dtype=np.int64)
    tested = np.full(cap, -1, dtype=np.int64)
    vmark = np.full(npts, -1, dtype=np.int64)
    dup = np.full(npts, -1, dtype=np.int64)
    free = np.empty(cap, dtype=np.int64)
    nfree = 0

    # seed tet plus one ghost tet per facet
    for k in range(4):
        tets[0, k] = seeds[k]
    alive[0] = True
    for i in range(4):
        g = 1 + i
        for k in range(4):
            tets[g, k] = tets[0, k]
        tets[g, i] = inf
        # swap the two lowest other slots so the ghost faces outward
        j0 = 1 if i == 0 else 0
        j1 = 2 if i <= 1 else 1
        tmp = tets[g, j0]
        tets[g, j0] = tets[g, j1]
        tets[g, j1] = tmp
        alive[g] = True
        nbr[0, i] = g
        nbr[g, i] = 0
    for a in range(1, 5):
        for ga in range(4):
            if nbr[a, ga] >= 0:
                continue
            for b in range(1, 5):
                if b == a:
                    continue
                for gb in range(4):
                    if _same_face(tets, a, ga, b, gb):
                        nbr[a, ga] = b
                        nbr[b, gb] = a
    ntet = 5

    cav = np.empty(256, dtype=np.int64)
    bt = np.empty(1024, dtype=np.int64)  # boundary: cavity tet
    bf = np.empty(1024, dtype=np.int64)  # boundary: face slot
    last = 0
    rng = 2463534242
    stamp = 0

    for step in range(order.shape[0]):
        stamp += 1
        ip = order[step]
        t, rng = _locate(P, tets, nbr, alive, ntet, last, ip, rng, inf)
        if t < 0:
            return tets, nbr, alive, ntet, dup, _OUTSIDE, step

        is_dup = False
        for k in range(4):
            v = tets[t, k]
            if v == inf:
                continue
            ddx = P[v, 0] - P[ip, 0]
            ddy = P[v, 1] - P[ip, 1]
            ddz = P[v, 2] - P[ip, 2]
            if ddx * ddx + ddy * ddy + ddz * ddz == 0.0:
                dup[ip] = v
                is_dup = True
                break
        if is_dup:
            continue

        # grow the conflict cavity breadth-first from the located tet
        ncav = 1
        cav[0] = t
        incav[t] = stamp
        head = 0
        while head < ncav:
            c = cav[head]
            head += 1
            for f in range(4):
                nb = nbr[c, f]
                if incav[nb] == stamp or tested[nb] == stamp:
                    continue
                tested[nb] = stamp
                if _conflict(P, tets, nbr, nb, ip, inf):
                    if ncav == cav.shape[0]:
                        cav = _grow1(cav, 2 * ncav, 0)
                    cav[ncav] = nb
                    ncav += 1
                    incav[nb] = stamp

        # every new finite tet must be positively oriented; absorb blockers until so
        status = _NOT_STAR
        nb_faces = 0
        for _repair in range(64):
            nb_faces = 0
            grew = False
            i = 0
            while i < ncav:
                c = cav[i]
                i += 1
                s = _inf_slot(tets, c, inf)
                for f in range(4):
                    nb = nbr[c, f]
                    if incav[nb] == stamp:
                        continue
                    if (s < 0 or s == f) and _orient_replaced(P, tets, c, f, ip) <= 0.0:
                        if ncav == cav.shape[0]:
                            cav = _grow1(cav, 2 * ncav, 0)
                        cav[ncav] = nb
                        ncav += 1
                        incav[nb] = stamp
                        grew = True
                        continue
                    if nb_faces == bt.shape[0]:
                        bt = _grow1(bt, 2 * nb_faces, 0)
                        bf = _grow1(bf, 2 * nb_faces, 0)
                    bt[nb_faces] = c
                    bf[nb_faces] = f
                    nb_faces += 1
            if not grew:
                status = _OK
                break
        if status != _OK:
            return tets, nbr, alive, ntet, dup, status, step

        # no vertex may vanish inside the cavity
        for k in range(nb_faces):
            c = bt[k]
            f = bf[k]
            for j in range(4):
                if j != f:
                    vmark[tets[c, j]] = stamp
        for i in range(ncav):
            for j in range(4):
                if vmark[tets[cav[i], j]] != stamp:
                    return tets, nbr, alive, ntet, dup, _LOST_VERTEX, step

        # make room for the new tets
        need = nb_faces - nfree
        if need > cap - ntet:
            newcap = cap
            while need > newcap - ntet:
                newcap *= 2
            tets = _grow2(tets, newcap)
            nbr = _grow2(nbr, newcap)
            alive = _grow1(alive, newcap, False)
            incav = _grow1(incav, newcap, -1)
            tested = _grow1(tested, newcap, -1)
            free = _grow1(free, newcap, 0)
            cap = newcap

        keys = np.empty(3 * nb_faces, dtype=np.int64)
        ktet = np.empty(3 * nb_faces, dtype=np.int64)
        kslot = np.empty(3 * nb_faces, dtype=np.int64)
        last = -1
        for k in range(nb_faces):
            c = bt[k]
            f = bf[k]
            if nfree > 0:
                nfree -= 1
                tn = free[nfree]
            else:
                tn = ntet
                ntet += 1
            for j in range(4):
                tets[tn, j] = tets[c, j]
                nbr[tn, j] = -1
            tets[tn, f] = ip
            alive[tn] = True
            incav[tn] = -1
            tested[tn] = -1
            if last < 0 and _inf_slot(tets, tn, inf) < 0:
                last = tn
            outer = nbr[c, f]
            nbr[tn, f] = outer
            for j in range(4):
                if nbr[outer, j] == c:
                    nbr[outer, j] = tn
                    break
            m = 0
            for g in range(4):
                if g == f:
                    continue
                # face opposite slot g: ip plus the two boundary-face vertices other than slot g
                va = -1
                vb = -1
                for h in range(4):
                    if h != f and h != g:
                        if va < 0:
                            va = tets[tn, h]
                        else:
                            vb = tets[tn, h]
                if va > vb:
                    tmp = va
                    va = vb
                    vb = tmp
                keys[3 * k + m] = va * npts + vb
                ktet[3 * k + m] = tn
                kslot[3 * k + m] = g
                m += 1

        srt = np.argsort(keys)
        i = 0
        while i < srt.shape[0]:
            if i + 1 >= srt.shape[0] or keys[srt[i]] != keys[srt[i + 1]]:
                return tets, nbr, alive, ntet, dup, _BAD_LINKS, step
            if i + 2 < srt.shape[0] and keys[srt[i + 2]] == keys[srt[i]]:
                return tets, nbr, alive, ntet, dup, _BAD_LINKS, step
            p0 = srt[i]
            p1 = srt[i + 1]
            nbr[ktet[p0], kslot[p0]] = ktet[p1]
            nbr[ktet[p1], kslot[p1]] = ktet[p0]
            i += 2

        for i in range(ncav):
            c = cav[i]
            alive[c] = False
            free[nfree] = c
            nfree += 1
        if last < 0:
            return tets, nbr, alive, ntet, dup, _BAD_LINKS, step

    return tets, nbr, alive, ntet, dup, _OK, -1


# ---------------------------------------------------------------------------
# driver

def auto_jitter(points: np.ndarray) -> float:
    """Default displacement bound: ``JITTER_REL`` times the mean sample spacing."""
    n = len(points)
    diag = float(np.linalg.norm(points.max(axis=0) - points.min(axis=0)))
    return JITTER_REL * diag / max(n, 1) ** (1.0 / 3.0)


def jitter_offsets(n: int, magnitude: float, seed: int = 0) -> np.ndarray:
    """Per-index offsets in ``[-magnitude, magnitude]^3``; offset ``i`` depends only on ``(seed, i)``."""
    if magnitude == 0 or n == 0:
        return np.zeros((n, 3))
    idx = np.arange(n, dtype=np.uint64)
    out = np.empty((n, 3))
    for axis in range(3):
        # splitmix64 of (seed, index, axis)
        with np.errstate(over="ignore"):
            z = idx * np.uint64(3) + np.uint64(axis) + np.uint64(seed) * np.uint64(0x9E3779B97F4A7C15)
            z = z + np.uint64(0x9E3779B97F4A7C15)
            z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
            z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
            z = z ^ (z >> np.uint64(31))
        out[:, axis] = (z >> np.uint64(11)).astype(np.float64) / float(1 << 53) * 2.0 - 1.0
    return out * magnitude


@dataclass
class Tetrahedralization:
    """Delaunay tets over ``vertices``.

    ``work`` holds the jittered coordinates the combinatorics were computed
    on; every tet is positively oriented with respect to them.  ``neighbors[t,
    i]`` is the tet across the face opposite slot ``i`` (-1 on the hull).
    """

    vertices: np.ndarray
    work: np.ndarray
    tets: np.ndarray
    neighbors: np.ndarray
    centers: np.ndarray
    radii: np.ndarray
    duplicate_of: np.ndarray
    _incidence: tuple[np.ndarray, np.ndarray] | None = field(default=None, repr=False)

    def __len__(self) -> int:
        return len(self.tets)

    def incidence(self) -> tuple[np.ndarray, np.ndarray]:
        """CSR ``(offsets, tet_ids)`` listing the tets around each vertex."""
        if self._incidence is None:
            flat = self.tets.ravel()
            order = np.argsort(flat, kind="stable")
            counts = np.bincount(flat, minlength=len(self.vertices))
            offsets = np.concatenate([[0], np.cumsum(counts)])
            self._incidence = (offsets, (order // 4).astype(np.int64))
        return self._incidence

    def incident_tets(self, v: int) -> np.ndarray:
        offsets, ids = self.incidence()
        return ids[offsets[v]:offsets[v + 1]]

    def hull_faces(self) -> np.ndarray:
        """Boundary triangles with outward orientation."""
        t, slot = np.nonzero(self.neighbors < 0)
        return self.tets[t[:, None], FACES[slot]]

    def faces(self) -> np.ndarray:
        """All distinct triangles, each row sorted, rows sorted."""
        tri = self.tets[:, FACES].reshape(-1, 3)
        return np.unique(np.sort(tri, axis=1), axis=0)

    def signed_volumes(self, coords: np.ndarray | None = None) -> np.ndarray:
        p = self.work if coords is None else coords
        a = p[self.tets[:, 0]]
        return np.einsum("ij,ij->i", p[self.tets[:, 1]] - a,
                         np.cross(p[self.tets[:, 2]] - a, p[self.tets[:, 3]] - a)) / 6.0

    def to_text(self) -> str:
        return "".join(f"{a} {b} {c} {d}\n" for a, b, c, d in self.tets)


def _seed_indices(pts: np.ndarray) -> np.ndarray:
    """First four input points (in order) spanning a non-degenerate tet."""
    scale = float(np.abs(pts).max()) or 1.0
    diam = float(np.linalg.norm(pts.max(axis=0) - pts.min(axis=0)))
    i0 = 0
    d = np.linalg.norm(pts - pts[i0], axis=1)
    i1 = int(np.argmax(d > 1e-9 * diam))
    cr = np.linalg.norm(np.cross(pts[i1] - pts[i0], pts - pts[i0]), axis=1)
    i2 = int(np.argmax(cr > 1e-9 * diam * diam))
    vol = np.einsum("j,ij->i", np.cross(pts[i1] - pts[i0], pts[i2] - pts[i0]), pts - pts[i0])
    ok = np.abs(vol) > EPS_ORIENT * scale ** 3
    if not (d[i1] > 1e-9 * diam and cr[i2] > 1e-9 * diam * diam and ok.any()):
        raise AllCoplanar("all points lie in one plane (or on a line)")
    i3 = int(np.argmax(ok))
    seeds = np.array([i0, i1, i2, i3], dtype=np.int64)
    if vol[i3] < 0:
        seeds[[2, 3]] = seeds[[3, 2]]
    return seeds


def triangulate(points, jitter: float | None = None, seed: int = 0) -> Tetrahedralization:
    """Delaunay tetrahedralization of ``points``, inserted in their given order.

    ``jitter`` bounds the per-coordinate displacement used to break lattice
    degeneracies (None picks :func:`auto_jitter`, 0 disables it).  Reported
    ``vertices`` keep the original coordinates.  Exact duplicates are skipped
    and recorded in ``duplicate_of``.
    """
    pts = np.ascontiguousarray(np.asarray(points, dtype=np.float64).reshape(-1, 3))
    n = len(pts)
    if n < 4:
        raise TooFewPoints(f"need at least 4 points, got {n}")
    if not np.isfinite(pts).all():
        raise ValueError("points must be finite")
    sv = np.linalg.svd(pts - pts.mean(axis=0), compute_uv=False)
    if sv[0] == 0 or sv[2] <= 1e-12 * sv[0]:
        raise AllCoplanar("all points lie in one plane (or on a line)")

    if jitter is None:
        jitter = auto_jitter(pts)
    work = pts + jitter_offsets(n, jitter, seed)
    seeds = _seed_indices(work)
    rest = np.ones(n, dtype=bool)
    rest[seeds] = False
    order = np.nonzero(rest)[0].astype(np.int64)
    P = np.vstack([work, np.zeros((1, 3))])  # last row: placeholder for the infinite vertex
    tets, nbr, alive, ntet, dup, status, failed = _bowyer_watson(P, seeds, order, n)
    if status != _OK:
        idx = int(order[failed])
        raise NumericalFailure(f"inserting point {idx} failed: {_STATUS_TEXT[status]}", idx)

    tets, nbr, alive = tets[:ntet], nbr[:ntet], alive[:ntet]
    keep = alive & (tets < n).all(axis=1)
    remap = np.full(ntet + 1, -1, dtype=np.int64)  # trailing -1 so remap[-1] == -1
    remap[:ntet][keep] = np.arange(int(keep.sum()))
    final_tets = np.ascontiguousarray(tets[keep])
    final_nbr = remap[nbr[keep]]
    centers, radii = circumcenters(work, final_tets)
    return Tetrahedralization(pts, work, final_tets, final_nbr, centers, radii, dup[:n].copy())
