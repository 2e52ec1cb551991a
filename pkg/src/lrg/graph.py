"""Graph container, canonical text dataset I/O, component extraction, Laplacian.

A dataset directory holds plain UTF-8 text files ('#'-prefixed comment
lines and blank lines are ignored):

    edges.tsv      one edge per line, two whitespace-separated node ids
    features.csv   one row per node (row index = node id), comma-separated reals
    labels.csv     one integer class id per line
    masks.csv      optional, one token per line from {train, val, test}

Edges are undirected; reversed duplicates and self-loops in the input are
deduplicated and dropped during load.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import EmptyGraph, MalformedLine, MissingFile, NodeIndexOutOfRange

logger = logging.getLogger(__name__)

MASK_TOKENS = ("train", "val", "test")
TRAIN, VAL, TEST = 0, 1, 2


def canonical_edges(pairs):
    """Canonical edge array: i < j per row, no self-loops, unique, lexsorted."""
    arr = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
    arr = np.sort(arr, axis=1)
    arr = arr[arr[:, 0] != arr[:, 1]]
    if arr.shape[0] == 0:
        return np.empty((0, 2), dtype=np.int64)
    return np.unique(arr, axis=0)


@dataclass(frozen=True)
class Graph:
    """Undirected unweighted simple graph with node features and labels.

    ``edges`` is an [m, 2] int array in canonical form (see
    :func:`canonical_edges`).  ``node_ids`` carries the original external
    identifiers so nodes stay traceable after component extraction.
    ``masks`` is an optional [n] int8 array with values TRAIN/VAL/TEST.
    """

    n_nodes: int
    edges: np.ndarray
    features: np.ndarray
    labels: np.ndarray
    node_ids: np.ndarray
    masks: np.ndarray | None = None

    @property
    def n_edges(self):
        return self.edges.shape[0]

    @property
    def n_features(self):
        return self.features.shape[1]

    @property
    def n_classes(self):
        return int(self.labels.max()) + 1 if self.labels.size else 0

    def degrees(self):
        deg = np.zeros(self.n_nodes, dtype=np.int64)
        if self.edges.size:
            deg += np.bincount(self.edges[:, 0], minlength=self.n_nodes)
            deg += np.bincount(self.edges[:, 1], minlength=self.n_nodes)
        return deg

    def adjacency(self):
        """Dense symmetric 0/1 adjacency matrix."""
        a = np.zeros((self.n_nodes, self.n_nodes))
        if self.edges.size:
            i, j = self.edges[:, 0], self.edges[:, 1]
            a[i, j] = 1.0
            a[j, i] = 1.0
        return a

    def mask_indices(self, which):
        if self.masks is None:
            raise ValueError("graph carries no masks")
        return np.flatnonzero(self.masks == which)

    def validate(self):
        """Raise ValueError if any structural invariant is violated."""
        e = self.edges
        if e.ndim != 2 or e.shape[1] != 2:
            raise ValueError("edges must be an [m, 2] array")
        if e.size:
            if e.min() < 0 or e.max() >= self.n_nodes:
                raise ValueError("edge endpoint outside [0, n_nodes)")
            if np.any(e[:, 0] >= e[:, 1]):
                raise ValueError("edges not canonical (need i < j per row)")
            if np.unique(e, axis=0).shape[0] != e.shape[0]:
                raise ValueError("duplicate edges")
        if self.features.shape[0] != self.n_nodes:
            raise ValueError("features row count != n_nodes")
        if self.labels.shape[0] != self.n_nodes:
            raise ValueError("labels length != n_nodes")
        if self.labels.size and self.labels.min() < 0:
            raise ValueError("negative class id")
        if self.node_ids.shape[0] != self.n_nodes:
            raise ValueError("node_ids length != n_nodes")
        if self.masks is not None and self.masks.shape[0] != self.n_nodes:
            raise ValueError("masks length != n_nodes")
        return self


def _data_lines(path):
    with open(path, encoding="utf-8") as fh:
        for line_no, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            yield line_no, line


def _require(path):
    if not path.is_file():
        raise MissingFile(path)
    return path


def load_graph(dataset_dir):
    """Load a Graph from a canonical dataset directory.

    Duplicate and reversed edges are deduplicated, self-loops dropped.
    Raises MissingFile, MalformedLine, or NodeIndexOutOfRange on bad input.
    """
    dataset_dir = Path(dataset_dir)
    if not dataset_dir.is_dir():
        raise MissingFile(dataset_dir)
    features_path = _require(dataset_dir / "features.csv")
    labels_path = _require(dataset_dir / "labels.csv")
    edges_path = _require(dataset_dir / "edges.tsv")

    rows = []
    width = None
    for line_no, line in _data_lines(features_path):
        parts = line.split(",")
        if width is None:
            width = len(parts)
        elif len(parts) != width:
            raise MalformedLine(
                features_path, line_no, f"expected {width} values, got {len(parts)}"
            )
        try:
            rows.append([float(p) for p in parts])
        except ValueError:
            raise MalformedLine(features_path, line_no, "unparseable real value") from None
    features = np.asarray(rows, dtype=np.float64)
    if features.size == 0:
        features = features.reshape(0, 0)
    n_nodes = features.shape[0]

    labels = []
    for line_no, line in _data_lines(labels_path):
        try:
            labels.append(int(line))
        except ValueError:
            raise MalformedLine(labels_path, line_no, "unparseable class id") from None
    labels = np.asarray(labels, dtype=np.int64)
    if labels.shape[0] != n_nodes:
        raise MalformedLine(
            labels_path, labels.shape[0] + 1,
            f"{labels.shape[0]} labels for {n_nodes} feature rows",
        )
    if labels.size and labels.min() < 0:
        raise MalformedLine(labels_path, 1, "negative class id")

    raw_edges = []
    for line_no, line in _data_lines(edges_path):
        parts = line.split()
        if len(parts) != 2:
            raise MalformedLine(
                edges_path, line_no, f"expected 2 node ids, got {len(parts)}"
            )
        try:
            u, v = int(parts[0]), int(parts[1])
        except ValueError:
            raise MalformedLine(edges_path, line_no, "unparseable node id") from None
        for node in (u, v):
            if node < 0 or node >= n_nodes:
                raise NodeIndexOutOfRange(edges_path, line_no, node, n_nodes)
        raw_edges.append((u, v))
    edges = canonical_edges(raw_edges)

    masks = None
    masks_path = dataset_dir / "masks.csv"
    if masks_path.is_file():
        tokens = []
        for line_no, line in _data_lines(masks_path):
            if line not in MASK_TOKENS:
                raise MalformedLine(masks_path, line_no, f"unknown mask token {line!r}")
            tokens.append(MASK_TOKENS.index(line))
        if len(tokens) != n_nodes:
            raise MalformedLine(
                masks_path, len(tokens) + 1,
                f"{len(tokens)} mask rows for {n_nodes} nodes",
            )
        masks = np.asarray(tokens, dtype=np.int8)

    g = Graph(
        n_nodes=n_nodes,
        edges=edges,
        features=features,
        labels=labels,
        node_ids=np.arange(n_nodes, dtype=np.int64),
        masks=masks,
    )
    return g.validate()


def save_graph(g, out_dir):
    """Write a Graph to a dataset directory in the canonical text format."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    with open(out_dir / "edges.tsv", "w", encoding="utf-8") as fh:
        for u, v in g.edges:
            fh.write(f"{u}\t{v}\n")
    with open(out_dir / "features.csv", "w", encoding="utf-8") as fh:
        for row in g.features:
            fh.write(",".join(format(x, ".17g") for x in row))
            fh.write("\n")
    with open(out_dir / "labels.csv", "w", encoding="utf-8") as fh:
        for y in g.labels:
            fh.write(f"{y}\n")
    if g.masks is not None:
        with open(out_dir / "masks.csv", "w", encoding="utf-8") as fh:
            for m in g.masks:
                fh.write(MASK_TOKENS[m] + "\n")
    return out_dir


def _edge_components(n_nodes, edges):
    """Connected component label per node, via union-find over the edge list."""
    parent = np.arange(n_nodes, dtype=np.int64)

    def find(x):
        root = x
        while parent[root] != root:
            root = parent[root]
        while parent[x] != root:
            parent[x], x = root, parent[x]
        return root

    for u, v in edges:
        ru, rv = find(u), find(v)
        if ru != rv:
            if ru < rv:
                parent[rv] = ru
            else:
                parent[ru] = rv
    return np.fromiter((find(i) for i in range(n_nodes)), dtype=np.int64, count=n_nodes)


def largest_connected_component(g):
    """Induced subgraph on the largest connected component, densely re-indexed.

    Ties between equal-size components go to the one whose smallest
    original node id is smallest.  node_ids keep the original identifiers.
    """
    if g.n_nodes == 0:
        raise EmptyGraph("cannot take the largest component of an empty graph")
    comp = _edge_components(g.n_nodes, g.edges)
    roots, sizes = np.unique(comp, return_counts=True)
    best = None
    best_key = None
    for root, size in zip(roots, sizes):
        min_id = int(g.node_ids[comp == root].min())
        key = (-size, min_id)
        if best_key is None or key < best_key:
            best, best_key = root, key
    keep = np.flatnonzero(comp == best)

    n_isolated = int(np.sum(g.degrees() == 0))
    if keep.shape[0] < g.n_nodes:
        logger.info(
            "largest component keeps %d of %d nodes (%d isolated nodes dropped)",
            keep.shape[0], g.n_nodes, n_isolated,
        )

    remap = np.full(g.n_nodes, -1, dtype=np.int64)
    remap[keep] = np.arange(keep.shape[0], dtype=np.int64)
    if g.edges.size:
        edge_keep = remap[g.edges[:, 0]] >= 0
        edges = canonical_edges(remap[g.edges[edge_keep]])
    else:
        edges = np.empty((0, 2), dtype=np.int64)
    return Graph(
        n_nodes=keep.shape[0],
        edges=edges,
        features=g.features[keep],
        labels=g.labels[keep],
        node_ids=g.node_ids[keep],
        masks=None if g.masks is None else g.masks[keep],
    ).validate()


@dataclass(frozen=True)
class LaplacianMatrix:
    """Combinatorial Laplacian L = D - A of an undirected graph."""

    values: np.ndarray

    @property
    def n(self):
        return self.values.shape[0]


def laplacian(g):
    """Dense Laplacian of ``g``; callers normally pass the LCC output."""
    n = g.n_nodes
    values = np.zeros((n, n))
    if g.edges.size:
        i, j = g.edges[:, 0], g.edges[:, 1]
        values[i, j] = -1.0
        values[j, i] = -1.0
    np.fill_diagonal(values, g.degrees().astype(np.float64))
    return LaplacianMatrix(values=values)
