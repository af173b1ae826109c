"""Numba toggle and a tiny thread-pool helper shared by the hot kernels.

Set ``ORTHO3D_DISABLE_NUMBA=1`` before import to run every kernel on the
pure-numpy / interpreted fallback path.  Jitted kernels keep the original
Python function on ``.py_func`` so both paths stay reachable in one process.
"""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor

try:
    import numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None

_DISABLED = os.environ.get("ORTHO3D_DISABLE_NUMBA", "").strip().lower() not in ("", "0", "false", "no")
NUMBA_ENABLED = numba is not None and not _DISABLED


def njit(func):
    """Compile ``func`` with numba when enabled; otherwise return it untouched."""
    if not NUMBA_ENABLED:
        return func
    return numba.njit(cache=True, nogil=True)(func)


def py_func(func):
    """The interpreted version of a (possibly) jitted kernel."""
    return getattr(func, "py_func", func)


def resolve_workers(workers: int | None = None) -> int:
    """0 or None means auto: ``ORTHO3D_WORKERS`` if set, else the CPU count."""
    if workers is None or workers == 0:
        env = os.environ.get("ORTHO3D_WORKERS", "").strip()
        if env and int(env) > 0:
            return int(env)
        return os.cpu_count() or 1
    if workers < 0:
        raise ValueError(f"worker count must be >= 0, got {workers}")
    return workers


def chunk_bounds(n: int, parts: int) -> list[tuple[int, int]]:
    parts = max(1, min(parts, n)) if n > 0 else 1
    step, extra = divmod(n, parts)
    bounds, lo = [], 0
    for i in range(parts):
        hi = lo + step + (1 if i < extra else 0)
        bounds.append((lo, hi))
        lo = hi
    return bounds


def run_chunked(fn, n: int, workers: int | None = None) -> None:
    """Call ``fn(lo, hi)`` over a partition of ``range(n)``.

    Each chunk must write a disjoint slice of a preallocated output, so the
    result does not depend on the worker count.
    """
    workers = resolve_workers(workers)
    bounds = chunk_bounds(n, workers)
    if len(bounds) == 1:
        fn(*bounds[0])
        return
    with ThreadPoolExecutor(max_workers=len(bounds)) as pool:
        for fut in [pool.submit(fn, lo, hi) for lo, hi in bounds]:
            fut.result()
