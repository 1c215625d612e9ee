"""Planted two-community signed benchmark.

Pairs inside a community are joined by a positive edge with probability
``p_in``; pairs across communities by a negative edge with probability
``p_out``.  Ignoring signs the graph is Erdos-Renyi when ``p_in == p_out``,
so the signs carry all of the community signal.
"""

from __future__ import annotations

import numpy as np

from .graph import SignedGraph


def two_community_graph(n: int = 200, p_in: float = 0.05, p_out: float = 0.05,
                        seed: int = 0) -> SignedGraph:
    """Undirected graph on ``2 * n`` nodes labelled ``"0".."2n-1"``.

    Nodes ``0..n-1`` have class 0, the rest class 1.
    """
    if n < 1:
        raise ValueError("n must be positive")
    rng = np.random.default_rng(seed)
    total = 2 * n
    community = np.repeat([0, 1], n)
    iu, ju = np.triu_indices(total, k=1)
    same = community[iu] == community[ju]
    draw = rng.random(len(iu))
    keep = np.where(same, draw < p_in, draw < p_out)
    signs = np.where(same[keep], 1, -1)
    return SignedGraph(
        [str(i) for i in range(total)], iu[keep], ju[keep], signs,
        directed=False, node_classes={i: int(c) for i, c in enumerate(community)},
    )
