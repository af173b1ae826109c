"""Triangle meshes: OBJ/PLY writers, statistics and the run report."""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .errors import MeshIOError


@dataclass
class TriangleMesh:
    vertices: np.ndarray
    triangles: np.ndarray

    def __post_init__(self):
        self.vertices = np.asarray(self.vertices, dtype=np.float64).reshape(-1, 3)
        self.triangles = np.asarray(self.triangles, dtype=np.int64).reshape(-1, 3)

    @property
    def stats(self) -> "MeshStats":
        return compute_stats(self)


@dataclass
class MeshStats:
    n_points: int = 0
    n_triangles: int = 0
    n_edges: int = 0
    euler_characteristic: int = 0
    boundary_edges: int = 0
    nonmanifold_edges: int = 0
    n_points_used: int = 0
    stage_times: dict[str, float] = field(default_factory=dict)

    @property
    def total_time(self) -> float:
        """Minutes, the unit of the classic points/triangles/time table."""
        return sum(self.stage_times.values()) / 60.0

    @property
    def boundary_fraction(self) -> float:
        return self.boundary_edges / self.n_edges if self.n_edges else 0.0

    @property
    def nonmanifold_fraction(self) -> float:
        return self.nonmanifold_edges / self.n_edges if self.n_edges else 0.0

    def to_dict(self) -> dict:
        d = asdict(self)
        d["time_minutes"] = self.total_time
        return d


def edge_counts(triangles: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Unique undirected edges and how many triangles use each."""
    if len(triangles) == 0:
        return np.empty((0, 2), dtype=np.int64), np.empty(0, dtype=np.int64)
    e = np.concatenate([triangles[:, [0, 1]], triangles[:, [1, 2]], triangles[:, [2, 0]]])
    e = np.sort(e, axis=1)
    return np.unique(e, axis=0, return_counts=True)


def compute_stats(mesh: TriangleMesh, timings: dict[str, float] | None = None) -> MeshStats:
    edges, counts = edge_counts(mesh.triangles)
    used = len(np.unique(mesh.triangles)) if len(mesh.triangles) else 0
    return MeshStats(
        n_points=len(mesh.vertices),
        n_triangles=len(mesh.triangles),
        n_edges=len(edges),
        euler_characteristic=used - len(edges) + len(mesh.triangles),
        boundary_edges=int((counts == 1).sum()),
        nonmanifold_edges=int((counts >= 3).sum()),
        n_points_used=used,
        stage_times=dict(timings or {}),
    )


# ---------------------------------------------------------------------------
# writers

def obj_text(mesh: TriangleMesh, header: str | None = None) -> str:
    lines = []
    if header:
        lines.extend(f"# {h}" for h in header.splitlines())
    lines.extend(f"v {x:.9g} {y:.9g} {z:.9g}" for x, y, z in mesh.vertices)
    lines.extend(f"f {a + 1} {b + 1} {c + 1}" for a, b, c in mesh.triangles)
    return "".join(line + "\n" for line in lines)


def write_obj(mesh: TriangleMesh, path, header: str | None = None) -> None:
    """ASCII OBJ, 9 significant digits, 1-based faces, LF endings."""
    try:
        with open(path, "w", newline="\n") as fh:
            fh.write(obj_text(mesh, header))
    except OSError as exc:
        raise MeshIOError(f"cannot write {path}: {exc}") from exc


def ply_bytes(mesh: TriangleMesh) -> bytes:
    header = (
        "ply\n"
        "format binary_little_endian 1.0\n"
        f"element vertex {len(mesh.vertices)}\n"
        "property double x\nproperty double y\nproperty double z\n"
        f"element face {len(mesh.triangles)}\n"
        "property list uchar int vertex_indices\n"
        "end_header\n"
    ).encode("ascii")
    face_dtype = np.dtype([("n", "u1"), ("idx", "<i4", (3,))])
    faces = np.empty(len(mesh.triangles), dtype=face_dtype)
    faces["n"] = 3
    faces["idx"] = mesh.triangles
    return header + np.ascontiguousarray(mesh.vertices, dtype="<f8").tobytes() + faces.tobytes()


def write_ply(mesh: TriangleMesh, path) -> None:
    """Binary little-endian PLY: float64 vertices, uchar-count int32 faces."""
    try:
        Path(path).write_bytes(ply_bytes(mesh))
    except OSError as exc:
        raise MeshIOError(f"cannot write {path}: {exc}") from exc


# ---------------------------------------------------------------------------
# report

def report(stats: MeshStats, fmt: str = "text") -> str:
    if fmt == "json":
        return json.dumps({
            "n_points": stats.n_points,
            "n_triangles": stats.n_triangles,
            "time_minutes": stats.total_time,
            "stage_times": stats.stage_times,
            "euler_characteristic": stats.euler_characteristic,
            "boundary_edges": stats.boundary_edges,
            "nonmanifold_edges": stats.nonmanifold_edges,
        }, indent=2)
    if fmt != "text":
        raise ValueError(f"unknown report format {fmt!r}")
    lines = ["Points  Triangles  Time(min)", table_row(stats.n_points, stats.n_triangles, stats.total_time)]
    if stats.stage_times:
        lines.append("")
        lines.extend(f"  {name:<12s} {secs:8.3f} s" for name, secs in stats.stage_times.items())
    return "\n".join(lines) + "\n"


def table_row(n_points: int, n_triangles: int, minutes: float) -> str:
    return f"{n_points}  {n_triangles}  {minutes:.3f}"


def stats_from_json(text: str) -> MeshStats:
    d = json.loads(text)
    return MeshStats(n_points=d["n_points"], n_triangles=d["n_triangles"],
                     euler_characteristic=d["euler_characteristic"],
                     boundary_edges=d["boundary_edges"], nonmanifold_edges=d["nonmanifold_edges"],
                     stage_times=dict(d["stage_times"]))
