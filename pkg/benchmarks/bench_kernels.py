"""Benchmark the numba kernels against their fallbacks.

For each hot kernel this times the jitted version and the pure-numpy
fallback (or the interpreted loop where no vectorized form exists), checks
that both produce the same result, and prints the speedup.  A final section
times carving a 128^3 cube with 1 and 4 workers.

    python benchmarks/bench_kernels.py [--quick]
"""
import argparse
import time

import numpy as np

from ortho3d import _accel, crust, delaunay
from ortho3d.carve import carve
from ortho3d.corners import _nms_kernel, _nms_numpy
from ortho3d.envelope import ViewKind, ViewRegion, _points_in_polygon, _points_in_polygon_numpy, extrude
from ortho3d.imaging import _convolve_numpy, _convolve_rows, gaussian_kernel


def best_of(fn, repeat):
    times = []
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def row(name, size, t_fast, t_slow, same):
    print(f"{name:<16s} {size:<14s} {t_fast * 1e3:10.2f} {t_slow * 1e3:12.2f} {t_slow / t_fast:9.1f}x  "
          f"{'ok' if same else 'MISMATCH'}")


def bench_convolve(n, repeat):
    field = np.random.default_rng(0).random((n, n))
    k = gaussian_kernel(1.0)

    def fast():
        out = np.empty_like(field)
        _convolve_rows(field, k.weights, k.radius, out, 0, n)
        return out

    fast()
    tf, a = best_of(fast, repeat)
    ts, b = best_of(lambda: _convolve_numpy(field, k.weights, k.radius), repeat)
    row("convolve", f"{n}x{n}", tf, ts, np.array_equal(a, b))


def bench_nms(n, repeat):
    R = np.random.default_rng(1).random((n, n))

    def fast():
        keep = np.zeros(R.shape, dtype=np.bool_)
        _nms_kernel(R, 0.5, 2, keep)
        return keep

    fast()
    tf, a = best_of(fast, repeat)
    ts, b = best_of(lambda: _nms_numpy(R, 0.5, 2), repeat)
    row("nms", f"{n}x{n}", tf, ts, np.array_equal(a, b))


def bench_pip(n, repeat):
    t = np.linspace(0, 2 * np.pi, 64, endpoint=False)
    r = 1 + 0.3 * np.sin(5 * t)
    poly = np.ascontiguousarray(np.column_stack([r * np.cos(t), r * np.sin(t)]))
    pts = np.random.default_rng(2).uniform(-1.4, 1.4, size=(n, 2))
    px, py = np.ascontiguousarray(pts[:, 0]), np.ascontiguousarray(pts[:, 1])

    def fast():
        out = np.zeros(n, dtype=np.bool_)
        _points_in_polygon(poly, px, py, 1e-12, out)
        return out

    fast()
    tf, a = best_of(fast, repeat)
    ts, b = best_of(lambda: _points_in_polygon_numpy(poly, px, py, 1e-12), repeat)
    row("point-in-poly", f"{n} pts", tf, ts, np.array_equal(a, b))


def bench_poles(n, repeat):
    pts = np.random.default_rng(3).normal(size=(n, 3))
    tri = delaunay.triangulate(pts)
    S, centers = tri.work, np.ascontiguousarray(tri.centers)
    hull, normals = crust.hull_normals(tri)
    offsets, ids = tri.incidence()

    def fast():
        pp = np.full((n, 3), np.nan)
        pm = np.full((n, 3), np.nan)
        crust._poles_kernel(S, centers, offsets, ids, hull, normals, 100.0, 0, n, pp, pm)
        return pp, pm

    fast()
    tf, a = best_of(fast, repeat)
    ts, b = best_of(lambda: crust._poles_numpy(S, centers, offsets, ids, hull, normals, 100.0), repeat)
    same = all(np.array_equal(x, y, equal_nan=True) for x, y in zip(a, b))
    row("poles", f"{n} samples", tf, ts, same)


def bench_bowyer_watson(n, repeat):
    pts = np.random.default_rng(4).random((n, 3))
    fast_kernel = delaunay._bowyer_watson
    delaunay.triangulate(pts[:10])
    tf, a = best_of(lambda: delaunay.triangulate(pts, jitter=0), repeat)
    delaunay._bowyer_watson = _accel.py_func(fast_kernel)
    try:
        ts, b = best_of(lambda: delaunay.triangulate(pts, jitter=0), 1)
    finally:
        delaunay._bowyer_watson = fast_kernel
    row("bowyer-watson", f"{n} pts", tf, ts, np.array_equal(a.tets, b.tets))


def bench_carve_workers(n, repeat):
    square = np.array([[0, 0], [1, 0], [1, 1], [0, 1]], dtype=float)
    envs = [extrude(ViewRegion(k, square)) for k in ViewKind]
    carve(envs, 8)
    print(f"\ncarve {n}^3 cube")
    base = None
    for workers in (1, 4):
        t, grid = best_of(lambda: carve(envs, n, workers=workers), repeat)
        base = base or t
        print(f"  workers={workers}: {t * 1e3:8.2f} ms  ({base / t:.2f}x)  occupied={int(grid.occupancy.sum())}")


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--quick", action="store_true", help="smaller inputs")
    args = ap.parse_args()
    if not _accel.NUMBA_ENABLED:
        raise SystemExit("numba is disabled (ORTHO3D_DISABLE_NUMBA); nothing to compare")
    q = args.quick
    repeat = 3 if q else 5
    print(f"{'kernel':<16s} {'input':<14s} {'numba ms':>10s} {'fallback ms':>12s} {'speedup':>10s}")
    bench_convolve(128 if q else 512, repeat)
    bench_nms(128 if q else 512, repeat)
    bench_pip(20_000 if q else 200_000, repeat)
    bench_poles(2_000 if q else 20_000, repeat)
    bench_bowyer_watson(150 if q else 400, 2)
    bench_carve_workers(64 if q else 128, repeat)


if __name__ == "__main__":
    main()
