"""End-to-end run: view images in, triangle mesh and statistics out."""
from __future__ import annotations

import logging
import time
from contextlib import contextmanager
from dataclasses import dataclass, field, fields
from pathlib import Path

from .carve import carve, check_consistency, extract_boundary
from .corners import HarrisParams, detect_corners
from .crust import reconstruct
from .envelope import ViewKind, build_view_region, extrude
from .errors import ConfigError, MeshIOError, Ortho3DError
from .imaging import load_image
from .meshio import MeshStats, compute_stats, write_obj, write_ply

log = logging.getLogger(__name__)

VIEWS = (("front", ViewKind.FRONT), ("top", ViewKind.TOP), ("side", ViewKind.LEFT_SIDE))


@dataclass
class PipelineConfig:
    front: str | None = None
    top: str | None = None
    side: str | None = None
    scale_front: float = 1.0
    scale_top: float = 1.0
    scale_side: float = 1.0
    sigma: float = 1.0
    harris_k: float = 0.04
    threshold: float = 0.01
    nms_radius: int = 2
    resolution: int = 64
    invert: bool = False
    out: str = "model.obj"
    format: str | None = None
    report: str = "text"
    dump_corners: str | None = None
    dump_polygons: str | None = None
    dump_points: str | None = None
    points_binary: bool = False
    dump_tets: str | None = None
    dump_poles: str | None = None
    workers: int = 0
    seed: int = 0
    allow_inconsistent: bool = False

    def views(self) -> list[tuple[str, ViewKind, str, float]]:
        out = []
        for name, kind in VIEWS:
            path = getattr(self, name)
            if path:
                out.append((name, kind, path, float(getattr(self, f"scale_{name}"))))
        return out

    @property
    def mesh_format(self) -> str:
        if self.format:
            return self.format
        return "ply" if str(self.out).lower().endswith(".ply") else "obj"

    def validate(self) -> None:
        views = self.views()
        if len(views) < 2:
            raise ConfigError(f"two or more mutually perpendicular views are required; got {len(views)}")
        if len({str(Path(p).resolve()) for _, _, p, _ in views}) < len(views):
            raise ConfigError("each view needs its own image")
        if self.resolution < 4:
            raise ConfigError(f"resolution must be >= 4, got {self.resolution}")
        for name, _, _, scale in views:
            if not scale > 0:
                raise ConfigError(f"scale for {name} must be > 0, got {scale}")
        if self.mesh_format not in ("obj", "ply"):
            raise ConfigError(f"format must be obj or ply, got {self.mesh_format!r}")
        if self.report not in ("text", "json"):
            raise ConfigError(f"report must be text or json, got {self.report!r}")
        if self.workers < 0:
            raise ConfigError("workers must be >= 0")
        self.harris_params()

    def harris_params(self) -> HarrisParams:
        return HarrisParams(sigma=self.sigma, k=self.harris_k, rel_threshold=self.threshold,
                            nms_radius=self.nms_radius)


_BOOL_TRUE = {"1", "true", "yes", "on"}
_BOOL_FALSE = {"0", "false", "no", "off"}


def parse_config_text(text: str) -> dict:
    """``key = value`` lines; ``#`` starts a comment.  Keys may use dashes or underscores."""
    types = {f.name: f.type for f in fields(PipelineConfig)}
    values = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"config line {lineno}: expected key = value")
        key, val = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in types:
            raise ConfigError(f"config line {lineno}: unknown key {key!r}")
        kind = str(types[key])
        try:
            if kind.startswith("bool"):
                low = val.lower()
                if low not in _BOOL_TRUE | _BOOL_FALSE:
                    raise ValueError(val)
                values[key] = low in _BOOL_TRUE
            elif kind.startswith("int"):
                values[key] = int(val)
            elif kind.startswith("float"):
                values[key] = float(val)
            else:
                values[key] = val
        except ValueError as exc:
            raise ConfigError(f"config line {lineno}: bad value for {key}: {val!r}") from exc
    return values


def load_config(path) -> dict:
    try:
        return parse_config_text(Path(path).read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc


@dataclass
class RunResult:
    stats: MeshStats
    out_path: Path
    consistency: dict = field(default_factory=dict)


@contextmanager
def _stage(name: str, times: dict):
    t0 = time.perf_counter()
    try:
        yield
    except Ortho3DError as exc:
        if not getattr(exc, "stage_name", None):
            exc.stage_name = name
        raise
    finally:
        times[name] = times.get(name, 0.0) + time.perf_counter() - t0


def _write_dump(path, text: str | bytes) -> None:
    try:
        p = Path(path)
        p.parent.mkdir(parents=True, exist_ok=True)
        if isinstance(text, bytes):
            p.write_bytes(text)
        else:
            p.write_text(text)
    except OSError as exc:
        raise MeshIOError(f"cannot write {path}: {exc}") from exc


def run_pipeline(cfg: PipelineConfig) -> RunResult:
    """Load, detect, build envelopes, carve, reconstruct, export."""
    cfg.validate()
    times: dict[str, float] = {}
    views = cfg.views()
    if len(views) == 2:
        log.warning("running with two views; a third perpendicular view refines complex objects")
    params = cfg.harris_params()
    workers = cfg.workers

    with _stage("load", times):
        images = {name: load_image(path) for name, _, path, _ in views}
    with _stage("corners", times):
        cps = {name: detect_corners(images[name], params, view_id=name, workers=workers)
               for name, _, _, _ in views}
    if cfg.dump_corners:
        for name, cp in cps.items():
            _write_dump(Path(cfg.dump_corners) / f"corners_{name}.csv", cp.to_csv())
    with _stage("envelopes", times):
        regions = {name: build_view_region(images[name], cps[name], kind, scale, cfg.invert)
                   for name, kind, _, scale in views}
        envelopes = [extrude(regions[name]) for name, _, _, _ in views]
    if cfg.dump_polygons:
        for name, region in regions.items():
            _write_dump(Path(cfg.dump_polygons) / f"polygon_{name}.csv", region.to_csv())
    with _stage("carve", times):
        report = check_consistency(envelopes)
        grid = carve(envelopes, cfg.resolution, cfg.allow_inconsistent, workers)
    with _stage("boundary", times):
        cloud = extract_boundary(grid)
    if cfg.dump_points:
        _write_dump(cfg.dump_points, cloud.to_bytes() if cfg.points_binary else cloud.to_xyz())
    with _stage("crust", times):
        result = reconstruct(cloud, seed=cfg.seed, workers=workers)
    if cfg.dump_poles:
        _write_dump(cfg.dump_poles, result.poles.to_text())
    if cfg.dump_tets:
        _write_dump(cfg.dump_tets, result.union_tri.to_text())
    out = Path(cfg.out)
    with _stage("export", times):
        try:
            out.parent.mkdir(parents=True, exist_ok=True)
        except OSError as exc:
            raise MeshIOError(f"cannot create {out.parent}: {exc}") from exc
        if cfg.mesh_format == "ply":
            write_ply(result.mesh, out)
        else:
            write_obj(result.mesh, out)
    stats = compute_stats(result.mesh, times)
    return RunResult(stats, out, report.ratios)
