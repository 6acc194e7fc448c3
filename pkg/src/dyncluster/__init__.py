"""Generator of dynamic clustering datasets built from time-varying Gaussian components."""

from .config import ScenarioConfig, parse_config, preset, serialize_config
from .engine import ChangeEvent, DatasetWindow, Engine, advance_tick, run
from .errors import ConfigurationError, ModelViolation, RunComplete, StaleSolutionError
from .evaluation import (
    ClusteringSolution,
    DynamicClusteringProblem,
    baseline_optimize,
    intra_cluster_distance,
    offline_performance,
    root_survival,
)
from .model import build_rotation, reflect, sample_point
from .stochastics import PRNG_ID, RandomStream, StreamSet

__all__ = [
    "PRNG_ID",
    "ChangeEvent",
    "ClusteringSolution",
    "ConfigurationError",
    "DatasetWindow",
    "DynamicClusteringProblem",
    "Engine",
    "ModelViolation",
    "RandomStream",
    "RunComplete",
    "ScenarioConfig",
    "StaleSolutionError",
    "StreamSet",
    "advance_tick",
    "baseline_optimize",
    "build_rotation",
    "intra_cluster_distance",
    "offline_performance",
    "parse_config",
    "preset",
    "reflect",
    "root_survival",
    "run",
    "sample_point",
    "serialize_config",
]
