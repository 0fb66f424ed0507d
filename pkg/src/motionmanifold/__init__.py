"""Skeletal animations as curves in joint space, analysed with square-root velocity geometry."""
from .applications import blend, cut_dendrogram, cyclify, distance_matrix, hierarchical_cluster
from .curve_core import SampledCurve, SrvCurve, project_closed, srv_inverse, srv_transform
from .geodesics import path_length, path_straightening, sphere_geodesic
from .mocap_io import AnimationClip, Skeleton, parse_bvh, read_bvh, write_bvh
from .motion_space import optimal_reparametrization, shape_distance

__all__ = [
    "AnimationClip",
    "blend",
    "cut_dendrogram",
    "cyclify",
    "distance_matrix",
    "hierarchical_cluster",
    "optimal_reparametrization",
    "parse_bvh",
    "path_length",
    "path_straightening",
    "project_closed",
    "read_bvh",
    "SampledCurve",
    "shape_distance",
    "Skeleton",
    "sphere_geodesic",
    "SrvCurve",
    "srv_inverse",
    "srv_transform",
    "write_bvh",
]
