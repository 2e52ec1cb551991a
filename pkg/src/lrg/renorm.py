"""Diffusion propagator, macro-node partition, and scale-aligned rewiring.

A node pair merges into one macro-node when the information the pair
exchanged by time tau (the off-diagonal propagator entry) exceeds the
self-information of either node (the smaller diagonal entry).  Macro-nodes
are the connected components of that merge relation.  Rewiring keeps the
original node set, gives all members of a macro-node the union of their
neighborhoods, and drops intra-macro links.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import NegativeTau, PartitionSizeMismatch
from .graph import Graph, canonical_edges, laplacian
from .spectral import eigendecompose, propagator_eigenvalues


@dataclass(frozen=True)
class Propagator:
    """Trace-normalized heat kernel at a fixed diffusion time."""

    values: np.ndarray
    tau: float

    @property
    def n(self):
        return self.values.shape[0]


@dataclass(frozen=True)
class MacroNodePartition:
    """Node -> macro-node assignment at a given tau.

    Macro ids are dense in [0, n_macro) and ordered by each group's
    smallest member node id.
    """

    assignment: np.ndarray
    tau: float

    @property
    def n_macro(self):
        return int(self.assignment.max()) + 1 if self.assignment.size else 0

    def members(self):
        """List of member-index arrays, one per macro id."""
        order = np.argsort(self.assignment, kind="stable")
        bounds = np.searchsorted(self.assignment[order], np.arange(self.n_macro + 1))
        return [order[bounds[k]:bounds[k + 1]] for k in range(self.n_macro)]


@dataclass(frozen=True)
class RenormalizedGraph(Graph):
    """A Graph rewired to one scale, keeping its partition as provenance."""

    partition: MacroNodePartition = None


def propagator_matrix(spec, tau):
    """rho(tau) = Q diag(mu) Q^T with mu from propagator_eigenvalues."""
    if tau <= 0:
        raise NegativeTau(f"tau must be positive, got {tau}")
    mu = propagator_eigenvalues(spec, tau)
    q = spec.eigenvectors
    rho = (q * mu) @ q.T
    rho = 0.5 * (rho + rho.T)
    return Propagator(values=rho, tau=float(tau))


def macro_node_partition(rho):
    """Partition nodes by the merge relation rho_ij > min(rho_ii, rho_jj).

    The relation is closed under connectivity (union-find), with strict
    inequality, so tied pairs stay separate.
    """
    roots = _kernels.merge_labels(rho.values)
    _, inverse = np.unique(roots, return_inverse=True)
    # roots are each group's smallest member, so ascending root order is
    # already smallest-member order
    return MacroNodePartition(assignment=inverse.astype(np.int64), tau=rho.tau)


def rewire(g, p):
    """Rewire ``g`` so macro-node members share one merged neighborhood.

    Two nodes are joined exactly when they sit in different macro-nodes
    and some original edge joins those two macro-nodes.  Node count,
    features, and labels are unchanged; intra-macro edges are dropped.
    """
    if p.assignment.shape[0] != g.n_nodes:
        raise PartitionSizeMismatch(
            f"partition covers {p.assignment.shape[0]} nodes, graph has {g.n_nodes}"
        )
    members = p.members()
    if g.edges.size:
        macro_pairs = p.assignment[g.edges]
        macro_pairs = macro_pairs[macro_pairs[:, 0] != macro_pairs[:, 1]]
        macro_pairs = canonical_edges(macro_pairs) if macro_pairs.size else macro_pairs
    else:
        macro_pairs = np.empty((0, 2), dtype=np.int64)

    blocks = []
    for a, b in macro_pairs:
        ma, mb = members[a], members[b]
        blocks.append(
            np.column_stack([
                np.repeat(ma, mb.shape[0]),
                np.tile(mb, ma.shape[0]),
            ])
        )
    edges = (
        canonical_edges(np.concatenate(blocks))
        if blocks
        else np.empty((0, 2), dtype=np.int64)
    )
    return RenormalizedGraph(
        n_nodes=g.n_nodes,
        edges=edges,
        features=g.features,
        labels=g.labels,
        node_ids=g.node_ids,
        masks=g.masks,
        partition=p,
    )


def renormalize_at(g, tau):
    """Full pipeline at one scale: Laplacian, spectrum, propagator, partition, rewire."""
    spec = eigendecompose(laplacian(g))
    rho = propagator_matrix(spec, tau)
    return rewire(g, macro_node_partition(rho))
