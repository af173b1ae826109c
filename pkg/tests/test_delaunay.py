import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ortho3d import _accel, delaunay
from ortho3d.delaunay import (FACES, Orientation, SphereSide, circumcenters, circumsphere, in_sphere,
                              jitter_offsets, orient3d, triangulate)
from ortho3d.errors import AllCoplanar, DegenerateTetrahedron, TooFewPoints

from oracles import delaunay_brute_force, empty_sphere_violations, hull_volume

UNIT_TET = np.array([[0, 0, 0], [1, 0, 0], [0, 1, 0], [0, 0, 1]], dtype=float)
FIVE = np.vstack([UNIT_TET, [[0.25, 0.25, 0.25]]])


def canonical(tets):
    return sorted(tuple(sorted(t)) for t in np.asarray(tets).tolist())


# -- predicates ------------------------------------------------------------

def test_orient3d_examples():
    a, b, c, d = UNIT_TET
    assert orient3d(a, b, c, d) is Orientation.POSITIVE
    assert orient3d(a, b, d, c) is Orientation.NEGATIVE
    assert orient3d([0, 0, 0], [1, 0, 0], [0, 1, 0], [3, 4, 0]) is Orientation.DEGENERATE


def test_orient3d_tolerance_scales():
    big = UNIT_TET * 1e6
    assert orient3d(*big) is Orientation.POSITIVE
    flat = big.copy()
    flat[3, 2] = 1e-9  # far below the scaled tolerance
    assert orient3d(*flat) is Orientation.DEGENERATE


def test_circumsphere_unit_tet():
    center, radius = circumsphere(*UNIT_TET)
    np.testing.assert_allclose(center, [0.5, 0.5, 0.5], atol=1e-15)
    assert radius == pytest.approx(math.sqrt(3) / 2, abs=1e-12)
    np.testing.assert_allclose(np.linalg.norm(UNIT_TET - center, axis=1), radius, atol=1e-12)


def test_circumsphere_regular_tet():
    reg = np.array([[1, 1, 1], [1, -1, -1], [-1, 1, -1], [-1, -1, 1]], dtype=float) / (2 * math.sqrt(2))
    assert np.linalg.norm(reg[0] - reg[1]) == pytest.approx(1.0)
    center, radius = circumsphere(*reg)
    assert radius == pytest.approx(math.sqrt(3 / 8), abs=1e-12)
    np.testing.assert_allclose(np.linalg.norm(reg - center, axis=1), radius, atol=1e-12)


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(-50, 50), min_size=3, max_size=3))
def test_circumsphere_translation(t):
    t = np.array(t)
    c0, r0 = circumsphere(*UNIT_TET)
    c1, r1 = circumsphere(*(UNIT_TET + t))
    np.testing.assert_allclose(c1, c0 + t, atol=1e-9)
    assert r1 == pytest.approx(r0, abs=1e-9)


def test_circumsphere_degenerate():
    with pytest.raises(DegenerateTetrahedron):
        circumsphere([0, 0, 0], [1, 0, 0], [0, 1, 0], [1, 1, 0])


def test_in_sphere_examples():
    center, radius = circumsphere(*UNIT_TET)
    assert in_sphere(UNIT_TET, center) is SphereSide.INSIDE
    for v in UNIT_TET:
        assert in_sphere(UNIT_TET, v) is SphereSide.ON
    assert in_sphere(UNIT_TET, center + [2 * radius, 0, 0]) is SphereSide.OUTSIDE


def test_vectorized_circumcenters():
    rng = np.random.default_rng(0)
    pts = rng.random((12, 3))
    tets = np.array([[0, 1, 2, 3], [4, 5, 6, 7], [8, 9, 10, 11]])
    centers, radii = circumcenters(pts, tets)
    for t, c, r in zip(tets, centers, radii):
        c0, r0 = circumsphere(*pts[t])
        np.testing.assert_allclose(c, c0, atol=1e-9)
        assert r == pytest.approx(r0, rel=1e-9)


# -- triangulation ---------------------------------------------------------

def check_structure(tri):
    """Orientation, adjacency symmetry and face multiplicity."""
    assert np.all(tri.signed_volumes() > 0)
    faces = np.sort(tri.tets[:, FACES].reshape(-1, 3), axis=1)
    _, counts = np.unique(faces, axis=0, return_counts=True)
    assert counts.max() <= 2
    assert (counts == 1).sum() == (tri.neighbors < 0).sum()
    for t, row in enumerate(tri.neighbors):
        for slot, u in enumerate(row):
            if u < 0:
                continue
            assert t in tri.neighbors[u]
            shared = set(tri.tets[t]) - {tri.tets[t][slot]}
            assert shared <= set(tri.tets[u])


def test_four_points_one_tet():
    tri = triangulate(UNIT_TET, jitter=0)
    assert len(tri) == 1
    assert canonical(tri.tets) == [(0, 1, 2, 3)]


def test_five_points_match_oracle():
    tri = triangulate(FIVE, jitter=0)
    oracle = delaunay_brute_force(FIVE)
    assert canonical(tri.tets) == oracle
    assert len(oracle) == 4 and all(4 in t for t in oracle)
    check_structure(tri)


@pytest.mark.parametrize("seed", range(5))
def test_fifty_random_points_empty_sphere(seed):
    pts = np.random.default_rng(seed).random((50, 3))
    tri = triangulate(pts, jitter=0)
    assert empty_sphere_violations(pts, tri.tets, 1e-9) == 0
    check_structure(tri)


def test_small_sets_match_brute_force():
    rng = np.random.default_rng(10)
    for n in (6, 8, 11, 14):
        pts = rng.random((n, 3))
        assert canonical(triangulate(pts, jitter=0).tets) == delaunay_brute_force(pts)


@pytest.mark.parametrize("seed", range(3))
def test_volume_equals_hull_volume(seed):
    pts = np.random.default_rng(seed).normal(size=(30, 3))
    tri = triangulate(pts, jitter=0)
    vol = tri.signed_volumes().sum()
    assert vol == pytest.approx(hull_volume(pts), rel=1e-6)


def test_insertion_order_independence():
    rng = np.random.default_rng(3)
    pts = rng.random((80, 3))
    ref = canonical(triangulate(pts, jitter=0).tets)
    for _ in range(5):
        perm = rng.permutation(len(pts))
        tri = triangulate(pts[perm], jitter=0)
        assert canonical(perm[tri.tets]) == ref


def test_matches_scipy_on_larger_cloud():
    from scipy.spatial import Delaunay

    pts = np.random.default_rng(4).random((600, 3))
    ours = canonical(triangulate(pts, jitter=0).tets)
    theirs = canonical(Delaunay(pts).simplices)
    assert ours == theirs


def test_lattice_with_jitter():
    g = np.arange(5, dtype=float)
    pts = np.array(list(itertools.product(g, g, g)))
    tri = triangulate(pts)
    check_structure(tri)
    assert tri.signed_volumes(tri.vertices).sum() == pytest.approx(64.0, rel=1e-6)
    np.testing.assert_array_equal(tri.vertices, pts)  # original coordinates reported
    assert empty_sphere_violations(tri.work, tri.tets, 1e-9) == 0


def test_jitter_is_deterministic_and_bounded():
    a = jitter_offsets(100, 1e-3, seed=7)
    assert np.array_equal(a, jitter_offsets(100, 1e-3, seed=7))
    assert not np.array_equal(a, jitter_offsets(100, 1e-3, seed=8))
    assert np.abs(a).max() <= 1e-3
    # offset i depends only on (seed, i)
    assert np.array_equal(jitter_offsets(40, 1e-3, seed=7), a[:40])


def test_same_seed_same_output():
    g = np.arange(4, dtype=float)
    pts = np.array(list(itertools.product(g, g, g)))
    a, b = triangulate(pts, seed=3), triangulate(pts, seed=3)
    assert np.array_equal(a.tets, b.tets)


def test_duplicates_are_skipped():
    pts = np.vstack([FIVE, FIVE[[1, 4]]])
    tri = triangulate(pts, jitter=0)
    assert canonical(tri.tets) == delaunay_brute_force(FIVE)
    assert list(tri.duplicate_of[5:]) == [1, 4]


def test_errors():
    with pytest.raises(TooFewPoints):
        triangulate(UNIT_TET[:3])
    flat = np.random.default_rng(5).random((20, 3))
    flat[:, 2] = 0.5
    with pytest.raises(AllCoplanar):
        triangulate(flat)


def test_incidence_and_hull_faces():
    tri = triangulate(FIVE, jitter=0)
    assert len(tri.incident_tets(4)) == 4
    assert len(tri.incident_tets(0)) == 3
    hull = tri.hull_faces()
    assert len(hull) == 4
    # outward orientation: the centroid is behind every hull facet
    p = tri.work
    n = np.cross(p[hull[:, 1]] - p[hull[:, 0]], p[hull[:, 2]] - p[hull[:, 0]])
    assert np.all(np.einsum("ij,ij->i", n, p[4] - p[hull[:, 0]]) < 0)
    assert tri.to_text().count("\n") == 4


def test_interpreted_kernel_agrees(monkeypatch):
    pts = np.random.default_rng(6).random((25, 3))
    fast = triangulate(pts, jitter=0)
    monkeypatch.setattr(delaunay, "_bowyer_watson", _accel.py_func(delaunay._bowyer_watson))
    slow = triangulate(pts, jitter=0)
    assert np.array_equal(fast.tets, slow.tets)
