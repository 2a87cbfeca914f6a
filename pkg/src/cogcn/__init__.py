"""CO-GCN: clustering- and outlier-aware graph convolution for monolith decomposition."""

from .gcn import LossWeights, ModelParams
from .ingest import AppGraph, RawMonolith, build_graph, load_graph, parse_monolith
from .metrics import MetricsReport, evaluate_partition
from .synth import PlantedSpec, adjusted_rand_index, planted_graph
from .trainer import TrainConfig, TrainState, fit, rank_outliers

__all__ = [
    "AppGraph",
    "LossWeights",
    "MetricsReport",
    "ModelParams",
    "PlantedSpec",
    "RawMonolith",
    "TrainConfig",
    "TrainState",
    "adjusted_rand_index",
    "build_graph",
    "evaluate_partition",
    "fit",
    "load_graph",
    "parse_monolith",
    "planted_graph",
    "rank_outliers",
]
__version__ = "0.1.0"
