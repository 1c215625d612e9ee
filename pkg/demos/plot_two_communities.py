"""
Signed embeddings on a two-community graph
==========================================

Friends inside a community, foes across.  Without the signs the two
communities look the same to a random walker, so only a model that keeps
positive and negative edges apart can tell them apart.
"""

import numpy as np

from sne.evaluation import evaluate_node_classification
from sne.synthetic import two_community_graph
from sne.train import TrainConfig, train
from sne.walks import WalkConfig

graph = two_community_graph(n=200, p_in=0.05, p_out=0.05, seed=0)
print(graph.num_nodes, "nodes,", graph.num_edges, "edges")

# three signed edges predict the next node; 100 sampled negatives per step
cfg = TrainConfig(dim=32, walk=WalkConfig(10, 5, 3, seed=0), neg_samples=100, epochs=5)
model, report = train(graph, cfg)
print("mean nll per epoch:", np.round(report.epoch_losses, 3))

###############################################################################
# The learned sign vectors drift apart during training.

print("|c+ - c-| =", np.linalg.norm(model.c_pos - model.c_neg))

signed = evaluate_node_classification(model, graph, "st").mean_accuracy

# tie the two sign vectors together and train again
plain, _ = train(graph, TrainConfig(dim=32, walk=cfg.walk, neg_samples=100, epochs=5,
                                   unsigned_ablation=True))
unsigned = evaluate_node_classification(plain, graph, "st").mean_accuracy
print(f"community accuracy: signed {signed:.3f}, unsigned {unsigned:.3f}")
