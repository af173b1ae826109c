"""Acceptance criteria for the full pipeline, one test per criterion.

Each test prints a single ``PASS``/``FAIL`` line with its measured runtime.
Runtimes cover the library calls under test; brute-force oracles are timed
separately and excluded.  Run with ``pytest tests/test_acceptance.py -s`` or
``python tests/test_acceptance.py``.
"""
import io
import time
from contextlib import contextmanager, redirect_stdout

import numpy as np
import pytest

from ortho3d.carve import CarveGrid, carve, extract_boundary
from ortho3d.cli import main
from ortho3d.corners import cornerness, detect_corners, harris_response
from ortho3d.crust import reconstruct
from ortho3d.delaunay import triangulate
from ortho3d.envelope import ViewKind, ViewRegion, extrude, point_in_region
from ortho3d.imaging import GrayImage
from ortho3d.meshio import MeshStats, report

from conftest import write_box_views
from oracles import (delaunay_brute_force, empty_sphere_violations, harris_naive, icosphere, read_obj,
                     square_image)


@pytest.fixture
def criterion(capsys):
    """Yield a timer; print one PASS/FAIL line when the test body finishes."""

    @contextmanager
    def run(name, limit_s=None):
        clock = {"elapsed": 0.0}

        @contextmanager
        def timed():
            t0 = time.perf_counter()
            try:
                yield
            finally:
                clock["elapsed"] += time.perf_counter() - t0

        ok = False
        try:
            yield timed
            ok = limit_s is None or clock["elapsed"] < limit_s
            if not ok:
                raise AssertionError(f"{name}: {clock['elapsed']:.2f} s exceeds {limit_s} s")
        finally:
            budget = f" (limit {limit_s:g} s)" if limit_s else ""
            with capsys.disabled():
                print(f"\n[{'PASS' if ok else 'FAIL'}] {name}: {clock['elapsed']:.2f} s{budget}")

    return run


def test_harris_oracle_equivalence(criterion):
    with criterion("Harris oracle equivalence", limit_s=5) as timed:
        rng = np.random.default_rng(2024)
        images = [rng.random((32, 32)) for _ in range(10)]
        for data in images:
            with timed():
                R = harris_response(data)
            assert np.max(np.abs(R - harris_naive(data))) <= 1e-12
        with timed():
            cps = detect_corners(GrayImage(square_image(64, 32, 16)))
        assert len(cps) == 4
        truth = np.array([[16, 16], [47, 16], [16, 47], [47, 47]])
        for p in cps.xy:
            assert np.abs(truth - p).max(axis=1).min() <= 2


def test_cornerness_formula_fixtures(criterion):
    with criterion("Cornerness formula fixtures", limit_s=1) as timed:
        with timed():
            for a in (1e-3, 0.25, 1.0, 3.5, 100.0):
                assert abs(cornerness(a, 0.0, 0.0) - (-0.04 * a * a)) <= 1e-12 * max(1.0, a * a)
                assert abs(cornerness(a, 0.0, a) - 0.84 * a * a) <= 1e-12 * max(1.0, a * a)
            a = np.linspace(0.1, 2.0, 7)
            np.testing.assert_allclose(cornerness(a, 0 * a, 0 * a), -0.04 * a * a, rtol=0, atol=1e-12)
            np.testing.assert_allclose(cornerness(a, 0 * a, a), 0.84 * a * a, rtol=0, atol=1e-12)


def test_carve_oracle(criterion):
    square = np.array([[0, 0], [10, 0], [10, 10], [0, 10]], dtype=float)
    envs = [extrude(ViewRegion(ViewKind.FRONT, square)), extrude(ViewRegion(ViewKind.TOP, square))]
    with criterion("Carve oracle", limit_s=10) as timed:
        with timed():
            grid = carve(envs, 16)
        expected = np.zeros(grid.shape, dtype=bool)
        for idx in np.ndindex(*grid.shape):
            c = grid.centers(np.array(idx))
            expected[idx] = all(point_in_region(e.region, c[list(e.plane_axes)]) for e in envs)
        assert np.array_equal(grid.occupancy, expected)
        assert grid.occupancy.sum() == 16 ** 3
        with timed():
            cloud = extract_boundary(CarveGrid(8, np.zeros(3), 1.0, np.ones((8, 8, 8), dtype=bool)))
        assert len(cloud) == 296 == 6 * 64 - 96 + 8


def test_delaunay_empty_sphere(criterion):
    with criterion("Delaunay empty-sphere", limit_s=30) as timed:
        pts = np.random.default_rng(7).random((50, 3))
        with timed():
            tri = triangulate(pts, jitter=0)
        assert empty_sphere_violations(pts, tri.tets, 1e-9) == 0
        five = np.array([[0, 0, 0], [1, 0, 0], [0, 1, 0], [0, 0, 1], [0.25, 0.25, 0.25]])
        with timed():
            tri5 = triangulate(five, jitter=0)
        got = sorted(tuple(sorted(t)) for t in tri5.tets.tolist())
        assert got == delaunay_brute_force(five)


def test_crust_on_sphere(criterion):
    verts, _ = icosphere(3)
    assert len(verts) == 642
    with criterion("Crust on a sphere", limit_s=120) as timed:
        with timed():
            mesh = reconstruct(verts).mesh
        assert mesh.triangles.max() < len(verts)
        np.testing.assert_array_equal(mesh.vertices, verts)
        r = np.linalg.norm(verts[mesh.triangles].mean(axis=1), axis=1)
        assert r.min() >= 0.95 and r.max() <= 1.0
        assert mesh.stats.boundary_fraction <= 0.02


def box_run(views, out, *extra):
    args = ["--front", views["front"], "--top", views["top"], "--side", views["side"],
            "--resolution", "64", "--out", str(out), *extra]
    with redirect_stdout(io.StringIO()):
        return main(args)


def test_end_to_end_box(criterion, tmp_path):
    views = write_box_views(tmp_path)
    with criterion("End-to-end box", limit_s=300) as timed:
        with timed():
            code_a = box_run(views, tmp_path / "a.obj", "--seed", "0")
            code_b = box_run(views, tmp_path / "b.obj", "--seed", "0")
        assert code_a == 0 and code_b == 0
        v, _ = read_obj((tmp_path / "a.obj").read_text())
        size = v.max(axis=0) - v.min(axis=0)
        cell = 40 / 63
        assert np.all(np.abs(size - [40, 30, 20]) <= cell), size
        assert (tmp_path / "a.obj").read_bytes() == (tmp_path / "b.obj").read_bytes()


def test_determinism_under_parallelism(criterion, tmp_path):
    views = write_box_views(tmp_path)
    with criterion("Determinism under parallelism") as timed:
        with timed():
            assert box_run(views, tmp_path / "w1.obj", "--workers", "1") == 0
            assert box_run(views, tmp_path / "w4.obj", "--workers", "4") == 0
        assert (tmp_path / "w1.obj").read_bytes() == (tmp_path / "w4.obj").read_bytes()


def test_report_fixture(criterion):
    with criterion("Report fixture") as timed:
        with timed():
            text = report(MeshStats(n_points=42401, n_triangles=246631, stage_times={"total": 1.378 * 60}))
        assert text.splitlines()[1] == "42401  246631  1.378"


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-s", "-q"]))
