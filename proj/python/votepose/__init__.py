"""Keypoint-voting pose inference."""

from ._core import (
    Annotation,
    LogPolarGrid,
    aggregate,
    annotate,
    bin_of,
    brute_force_map,
    build_kernel,
    default_config,
    gen_synthetic,
    keypoint_names,
    naive_aggregate,
    pckh,
    predict,
    random_scene,
    selftest,
    trws_solve,
)

__all__ = [
    "Annotation",
    "LogPolarGrid",
    "aggregate",
    "annotate",
    "bin_of",
    "brute_force_map",
    "build_kernel",
    "default_config",
    "gen_synthetic",
    "keypoint_names",
    "naive_aggregate",
    "pckh",
    "predict",
    "random_scene",
    "selftest",
    "trws_solve",
]
