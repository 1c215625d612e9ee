"""
Edge features for link prediction
=================================

Pairs of node vectors are folded into one edge vector and a 3-way
classifier separates positive edges, negative edges and non-edges.
"""

import numpy as np

from sne.evaluation import EdgeOperator, build_link_dataset, compose_edge_feature
from sne.evaluation import evaluate_link_prediction
from sne.synthetic import two_community_graph
from sne.train import TrainConfig, train
from sne.walks import WalkConfig

u, v = np.array([1.0, 2.0]), np.array([3.0, -4.0])
for op in EdgeOperator:
    print(f"{op.value:9s}", compose_edge_feature(u, v, op))

###############################################################################
# The balanced dataset keeps as many edges of each sign as there are
# negative ones.  Here the two signs are about equally frequent, so the
# negatives are drawn down when positives are short.

graph = two_community_graph(seed=1)
data = build_link_dataset(graph, seed=1, subsample_negatives=True)
print("pairs per class:", data.counts)

model, _ = train(graph, TrainConfig(dim=32, walk=WalkConfig(10, 5, 3, seed=1), neg_samples=100, seed=1))
for op in EdgeOperator:
    acc = evaluate_link_prediction(model, graph, "st", op, seed=1, dataset=data).mean_accuracy
    print(f"{op.value:9s} accuracy {acc:.3f}")
