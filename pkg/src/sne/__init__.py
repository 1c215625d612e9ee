"""Signed network embeddings from random walks with a log-bilinear model.

The training entry point is :func:`sne.train.train`.
"""

from .graph import GraphFormatError, Sign, SignedGraph, load_edge_list, load_node_classes
from .model import Mode, SneModel, node_representation, representations
from .train import TrainConfig, TrainReport
from .walks import WalkConfig, WalkSample, generate_samples

__all__ = [
    "GraphFormatError", "Mode", "Sign", "SignedGraph", "SneModel", "TrainConfig", "TrainReport",
    "WalkConfig", "WalkSample", "generate_samples", "load_edge_list", "load_node_classes",
    "node_representation", "representations",
]
__version__ = "0.1.0"
