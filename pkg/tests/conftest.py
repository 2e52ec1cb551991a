"""Shared fixtures and the acceptance-criteria terminal summary."""

import itertools
import os
from pathlib import Path

import numpy as np
import pytest

from lrg.generate import generate_sbm
from lrg.graph import Graph, canonical_edges, largest_connected_component, save_graph

CORA_DIR = Path(os.environ.get("LRG_DATA_DIR", "data")) / "cora"
CORA_SKIP_REASON = (
    f"dataset not found at {CORA_DIR} (set $LRG_DATA_DIR); this environment has "
    "no network access to fetch it; see README 'Real datasets' for provisioning"
)

requires_cora = pytest.mark.skipif(not CORA_DIR.is_dir(), reason=CORA_SKIP_REASON)


def make_graph(n, edges, n_features=1, labels=None, features=None, masks=None):
    if labels is None:
        labels = np.zeros(n, dtype=np.int64)
    if features is None:
        features = np.zeros((n, n_features))
    return Graph(
        n_nodes=n,
        edges=canonical_edges(edges),
        features=np.asarray(features, dtype=np.float64),
        labels=np.asarray(labels, dtype=np.int64),
        node_ids=np.arange(n, dtype=np.int64),
        masks=None if masks is None else np.asarray(masks, dtype=np.int8),
    ).validate()


def random_connected_graph(rng, n_min=3, n_max=50):
    """G(n, p) sample, reduced to its largest component (>= 3 nodes)."""
    while True:
        n = int(rng.integers(n_min, n_max + 1))
        p = min(1.0, 2.0 * np.log(max(n, 2)) / n)
        draw = rng.random((n, n))
        ii, jj = np.nonzero(np.triu(draw < p, k=1))
        if ii.size == 0:
            continue
        g = largest_connected_component(
            make_graph(n, np.column_stack([ii, jj]))
        )
        if g.n_nodes >= n_min:
            return g


@pytest.fixture
def k2():
    return make_graph(2, [(0, 1)])


@pytest.fixture
def p3():
    return make_graph(3, [(0, 1), (1, 2)])


@pytest.fixture
def k3():
    return make_graph(3, [(0, 1), (0, 2), (1, 2)])


def _barbell():
    edges = list(itertools.combinations(range(5), 2))
    edges += [(i + 5, j + 5) for i, j in itertools.combinations(range(5), 2)]
    edges.append((4, 5))
    return make_graph(10, edges)


@pytest.fixture
def barbell():
    """Two K5 cliques joined by a single bridge edge."""
    return _barbell()


@pytest.fixture(scope="session")
def sbm():
    """Connected, feature-separable two-block SBM for training tests."""
    g = largest_connected_component(
        generate_sbm(
            n_nodes=80, n_blocks=2, p_in=0.4, p_out=0.02,
            n_features=8, seed=0, feature_shift=1.5,
        )
    )
    assert g.n_nodes >= 70
    return g


@pytest.fixture
def dataset_dir(tmp_path):
    """Write a Graph to a dataset directory; returns (graph) -> path."""

    def _write(g, name="ds"):
        out = tmp_path / name
        save_graph(g, out)
        return out

    return _write


# --- acceptance summary -------------------------------------------------

_acceptance_info = {}


def pytest_collection_modifyitems(items):
    for item in items:
        if item.fspath.basename == "test_acceptance.py":
            doc = (item.function.__doc__ or "").strip().splitlines()
            _acceptance_info[item.nodeid] = doc[0] if doc else item.name


def pytest_terminal_summary(terminalreporter):
    if not _acceptance_info:
        return
    status = {}
    for outcome, label in (
        ("passed", "PASS"), ("failed", "FAIL"), ("error", "FAIL"), ("skipped", "SKIP"),
    ):
        for rep in terminalreporter.stats.get(outcome, []):
            if rep.nodeid in _acceptance_info:
                status[rep.nodeid] = label
    if not status:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for nodeid in sorted(_acceptance_info):
        if nodeid in status:
            terminalreporter.write_line(
                f"{status[nodeid]:<5} {_acceptance_info[nodeid]}"
            )
