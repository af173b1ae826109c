import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ortho3d.errors import MeshIOError
from ortho3d.meshio import (MeshStats, TriangleMesh, compute_stats, obj_text, ply_bytes, report,
                            stats_from_json, table_row, write_obj, write_ply)

from oracles import icosphere, read_obj, read_ply

TET_SURFACE = TriangleMesh(np.array([[0, 0, 0], [1, 0, 0], [0, 1, 0], [0, 0, 1]], dtype=float),
                           np.array([[0, 2, 1], [0, 1, 3], [0, 3, 2], [1, 2, 3]]))


def random_mesh(n_tri=100, seed=0):
    rng = np.random.default_rng(seed)
    verts = rng.normal(size=(60, 3)) * 1e3
    tris = np.array([rng.choice(60, 3, replace=False) for _ in range(n_tri)])
    return TriangleMesh(verts, tris)


# -- OBJ -------------------------------------------------------------------

def test_single_triangle_obj(tmp_path):
    mesh = TriangleMesh([[0, 0, 0], [1, 0, 0], [0, 1, 0]], [[0, 1, 2]])
    write_obj(mesh, tmp_path / "t.obj")
    raw = (tmp_path / "t.obj").read_bytes()
    lines = raw.decode().splitlines()
    assert len(lines) == 4
    assert [l.split()[0] for l in lines] == ["v", "v", "v", "f"]
    assert lines[3] == "f 1 2 3"
    assert b"\r" not in raw and raw.endswith(b"\n")


def test_empty_obj(tmp_path):
    empty = TriangleMesh(np.empty((0, 3)), np.empty((0, 3)))
    write_obj(empty, tmp_path / "e.obj")
    assert (tmp_path / "e.obj").read_bytes() == b""
    text = obj_text(empty, header="made by a test")
    assert text == "# made by a test\n"


def test_obj_round_trip(tmp_path):
    mesh = random_mesh()
    write_obj(mesh, tmp_path / "r.obj")
    v, f = read_obj((tmp_path / "r.obj").read_text())
    np.testing.assert_allclose(v, mesh.vertices, rtol=1e-8, atol=1e-9)
    np.testing.assert_array_equal(f, mesh.triangles)


def test_obj_nine_significant_digits():
    mesh = TriangleMesh([[1 / 3, 123456.789012, -2e-10]], np.empty((0, 3)))
    assert obj_text(mesh) == "v 0.333333333 123456.789 -2e-10\n"


def test_write_error(tmp_path):
    with pytest.raises(MeshIOError):
        write_obj(TET_SURFACE, tmp_path / "missing" / "x.obj")
    with pytest.raises(MeshIOError):
        write_ply(TET_SURFACE, tmp_path / "missing" / "x.ply")


# -- PLY -------------------------------------------------------------------

def test_ply_header_and_size():
    verts = np.array(np.meshgrid([0, 1], [0, 1], [0, 1])).reshape(3, -1).T.astype(float)
    tris = np.arange(36).reshape(12, 3) % 8
    raw = ply_bytes(TriangleMesh(verts, tris))
    end = raw.index(b"end_header\n") + len(b"end_header\n")
    header = raw[:end].decode()
    assert "format binary_little_endian 1.0" in header
    assert "element vertex 8" in header and "element face 12" in header
    assert len(raw) - end == 8 * 24 + 12 * 13


def test_ply_round_trip_matches_obj(tmp_path):
    mesh = random_mesh(seed=1)
    write_ply(mesh, tmp_path / "m.ply")
    write_obj(mesh, tmp_path / "m.obj")
    pv, pf = read_ply((tmp_path / "m.ply").read_bytes())
    ov, of = read_obj((tmp_path / "m.obj").read_text())
    np.testing.assert_array_equal(pv, mesh.vertices)
    np.testing.assert_array_equal(pf, of)
    np.testing.assert_allclose(pv, ov, rtol=1e-8, atol=1e-9)


# -- stats -----------------------------------------------------------------

def test_single_triangle_stats():
    s = compute_stats(TriangleMesh([[0, 0, 0], [1, 0, 0], [0, 1, 0]], [[0, 1, 2]]))
    assert (s.n_points, s.n_edges, s.n_triangles, s.euler_characteristic, s.boundary_edges) == (3, 3, 1, 1, 3)


def test_tetrahedron_stats():
    s = TET_SURFACE.stats
    assert (s.n_points, s.n_edges, s.n_triangles, s.euler_characteristic, s.boundary_edges) == (4, 6, 4, 2, 0)
    assert s.nonmanifold_edges == 0


def test_icosphere_stats():
    verts, faces = icosphere(3)
    s = compute_stats(TriangleMesh(verts, faces))
    assert s.n_points == 642
    assert 2 * s.n_edges == 3 * s.n_triangles
    assert s.euler_characteristic == 2


def test_nonmanifold_and_unused_vertices():
    # three triangles sharing edge (0, 1), plus an unreferenced vertex
    verts = np.zeros((6, 3))
    s = compute_stats(TriangleMesh(verts, [[0, 1, 2], [0, 1, 3], [1, 0, 4]]))
    assert s.nonmanifold_edges == 1
    assert s.n_points == 6 and s.n_points_used == 5
    assert s.euler_characteristic == 5 - s.n_edges + 3


def test_torus_euler():
    n, m = 8, 6
    idx = lambda i, j: (i % n) * m + (j % m)
    tris = []
    for i in range(n):
        for j in range(m):
            tris += [(idx(i, j), idx(i + 1, j), idx(i + 1, j + 1)), (idx(i, j), idx(i + 1, j + 1), idx(i, j + 1))]
    s = compute_stats(TriangleMesh(np.zeros((n * m, 3)), tris))
    assert s.euler_characteristic == 0  # genus 1
    assert 2 * s.n_edges == 3 * s.n_triangles


@settings(max_examples=30, deadline=None)
@given(st.dictionaries(st.sampled_from(["load", "carve", "crust", "export"]), st.floats(0, 1e4)))
def test_stage_times_sum_to_total(times):
    s = compute_stats(TET_SURFACE, times)
    assert s.stage_times == times
    assert s.total_time * 60 == pytest.approx(sum(times.values()), rel=0.01, abs=1e-12)


def test_stats_do_not_touch_timings():
    times = {"a": 1.0}
    s = compute_stats(TET_SURFACE, times)
    assert s.stage_times is not times and times == {"a": 1.0}


# -- report ----------------------------------------------------------------

def test_report_fixture_row():
    stats = MeshStats(n_points=42401, n_triangles=246631, stage_times={"total": 1.378 * 60})
    assert table_row(42401, 246631, 1.378) == "42401  246631  1.378"
    lines = report(stats).splitlines()
    assert lines[0] == "Points  Triangles  Time(min)"
    assert lines[1] == "42401  246631  1.378"


def test_empty_report_row():
    assert report(MeshStats()).splitlines()[1] == "0  0  0.000"


def test_json_round_trip():
    stats = compute_stats(TET_SURFACE, {"carve": 1.5, "crust": 3.25})
    text = report(stats, "json")
    d = json.loads(text)
    assert set(d) == {"n_points", "n_triangles", "time_minutes", "stage_times", "euler_characteristic",
                      "boundary_edges", "nonmanifold_edges"}
    back = stats_from_json(text)
    for key in ("n_points", "n_triangles", "euler_characteristic", "boundary_edges", "nonmanifold_edges",
                "stage_times"):
        assert getattr(back, key) == getattr(stats, key)
    assert back.total_time == stats.total_time


def test_unknown_report_format():
    with pytest.raises(ValueError):
        report(MeshStats(), "xml")
