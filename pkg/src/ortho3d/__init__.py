"""Orthographic views to a 3D triangle mesh.

Harris control points, silhouette envelopes, visual-hull carving and crust
surface reconstruction, exported as OBJ or PLY.
"""
from ._accel import NUMBA_ENABLED
from .carve import CarveGrid, PointCloud3D, carve, check_consistency, extract_boundary
from .corners import ControlPointSet, HarrisParams, cornerness, detect_corners, structure_tensor
from .crust import PoleSet, compute_poles, crust_extract, reconstruct, voronoi_vertices
from .delaunay import Tetrahedralization, circumsphere, in_sphere, orient3d, triangulate
from .envelope import Envelope, ViewKind, ViewRegion, build_view_region, extrude, point_in_region
from .imaging import GrayImage, Kernel, convolve, gaussian_kernel, gradients, load_image
from .meshio import MeshStats, TriangleMesh, compute_stats, report, write_obj, write_ply
from .pipeline import PipelineConfig, run_pipeline

__version__ = "0.1.0"

__all__ = [
    "NUMBA_ENABLED", "CarveGrid", "PointCloud3D", "carve", "check_consistency", "extract_boundary",
    "ControlPointSet", "HarrisParams", "cornerness", "detect_corners", "structure_tensor",
    "PoleSet", "compute_poles", "crust_extract", "reconstruct", "voronoi_vertices",
    "Tetrahedralization", "circumsphere", "in_sphere", "orient3d", "triangulate",
    "Envelope", "ViewKind", "ViewRegion", "build_view_region", "extrude", "point_in_region",
    "GrayImage", "Kernel", "convolve", "gaussian_kernel", "gradients", "load_image",
    "MeshStats", "TriangleMesh", "compute_stats", "report", "write_obj", "write_ply",
    "PipelineConfig", "run_pipeline",
]
