"""Command line entry point: ``ortho3d --front F.png --top T.png [--side S.png] --out model.obj``."""
from __future__ import annotations

import argparse
import logging
import sys

from .errors import ConfigError, Ortho3DError
from .meshio import report
from .pipeline import PipelineConfig, load_config, run_pipeline


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="ortho3d",
        description="Reconstruct a 3D triangle mesh from two or three orthographic view images.")
    views = p.add_argument_group("views")
    views.add_argument("--front", help="front view image (PGM or PNG)")
    views.add_argument("--top", help="top view image")
    views.add_argument("--side", help="left side view image")
    for name in ("front", "top", "side"):
        views.add_argument(f"--scale-{name}", type=float, help=f"world units per pixel in the {name} view (1.0)")
    views.add_argument("--invert", action="store_true", default=None,
                       help="objects are darker than the background")
    harris = p.add_argument_group("corner detection")
    harris.add_argument("--sigma", type=float, help="Gaussian scale in pixels (1.0)")
    harris.add_argument("--harris-k", type=float, help="cornerness constant (0.04)")
    harris.add_argument("--threshold", type=float, help="relative cornerness threshold (0.01)")
    harris.add_argument("--nms-radius", type=int, help="non-maximum suppression radius in pixels (2)")
    p.add_argument("--resolution", type=int, help="carving cells along the longest axis (64)")
    p.add_argument("--allow-inconsistent", action="store_true", default=None,
                   help="carve even when view extents disagree by more than 5%%")
    out = p.add_argument_group("output")
    out.add_argument("--out", help="mesh path (model.obj)")
    out.add_argument("--format", choices=("obj", "ply"), help="mesh format (from the extension)")
    out.add_argument("--report", choices=("text", "json"), help="report format on stdout (text)")
    out.add_argument("--dump-corners", metavar="DIR", help="write corners_<view>.csv files")
    out.add_argument("--dump-polygons", metavar="DIR", help="write polygon_<view>.csv files")
    out.add_argument("--dump-points", metavar="PATH", help="write the boundary samples as XYZ")
    out.add_argument("--points-binary", action="store_true", default=None,
                     help="write --dump-points as little-endian float64 triples")
    out.add_argument("--dump-poles", metavar="PATH", help="write per-sample poles")
    out.add_argument("--dump-tets", metavar="PATH", help="write the samples+poles tets")
    p.add_argument("--workers", type=int, help="worker threads, 0 = auto (ORTHO3D_WORKERS or CPU count)")
    p.add_argument("--seed", type=int, help="jitter seed (0)")
    p.add_argument("--config", metavar="PATH", help="key = value config file; flags override it")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    return p


def config_from_args(args: argparse.Namespace) -> PipelineConfig:
    values = load_config(args.config) if args.config else {}
    for key, val in vars(args).items():
        if key in ("config", "verbose") or val is None:
            continue
        values[key] = val
    return PipelineConfig(**values)


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = config_from_args(args)
        result = run_pipeline(cfg)
    except Ortho3DError as exc:
        stage = getattr(exc, "stage_name", None) or exc.stage
        print(f"ortho3d: {stage} stage failed: {exc}", file=sys.stderr)
        return exc.exit_code
    except TypeError as exc:  # unknown keys reaching the config dataclass
        print(f"ortho3d: config stage failed: {exc}", file=sys.stderr)
        return ConfigError.exit_code
    sys.stdout.write(report(result.stats, cfg.report))
    return 0


if __name__ == "__main__":
    sys.exit(main())
