"""Synthetic stochastic-block-model datasets for tests and smoke runs."""

from __future__ import annotations

import numpy as np

from .graph import Graph, canonical_edges
from .rng import stream_rng


def generate_sbm(
    n_nodes,
    n_blocks=2,
    p_in=0.5,
    p_out=0.02,
    n_features=8,
    seed=0,
    feature_shift=0.0,
):
    """Sample an SBM graph whose blocks double as class labels.

    Nodes are split into ``n_blocks`` near-equal groups; each unordered
    pair is joined with probability ``p_in`` inside a block and ``p_out``
    across blocks.  Features are standard normal draws; a nonzero
    ``feature_shift`` adds a per-block mean offset so the classes become
    separable from features alone.
    """
    if n_nodes < 1:
        raise ValueError("n_nodes must be positive")
    if not (1 <= n_blocks <= n_nodes):
        raise ValueError("n_blocks must be in [1, n_nodes]")
    rng = stream_rng(seed, "sbm")

    labels = np.sort(np.arange(n_nodes, dtype=np.int64) % n_blocks)
    block_members = [np.flatnonzero(labels == b) for b in range(n_blocks)]

    pairs = []
    for a in range(n_blocks):
        for b in range(a, n_blocks):
            ma, mb = block_members[a], block_members[b]
            p = p_in if a == b else p_out
            draw = rng.random((ma.shape[0], mb.shape[0]))
            if a == b:
                hit = np.triu(draw < p, k=1)
            else:
                hit = draw < p
            ii, jj = np.nonzero(hit)
            if ii.size:
                pairs.append(np.column_stack([ma[ii], mb[jj]]))
    edges = (
        canonical_edges(np.concatenate(pairs))
        if pairs
        else np.empty((0, 2), dtype=np.int64)
    )

    features = rng.standard_normal((n_nodes, n_features))
    if feature_shift:
        shift = rng.standard_normal((n_blocks, n_features))
        features = features + feature_shift * shift[labels]

    return Graph(
        n_nodes=n_nodes,
        edges=edges,
        features=features,
        labels=labels,
        node_ids=np.arange(n_nodes, dtype=np.int64),
    ).validate()
