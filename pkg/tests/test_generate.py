import numpy as np
import pytest

from lrg.generate import generate_sbm


def test_same_seed_same_graph():
    a = generate_sbm(n_nodes=50, seed=7)
    b = generate_sbm(n_nodes=50, seed=7)
    np.testing.assert_array_equal(a.edges, b.edges)
    np.testing.assert_array_equal(a.features, b.features)


def test_different_seeds_differ():
    a = generate_sbm(n_nodes=50, seed=0)
    b = generate_sbm(n_nodes=50, seed=1)
    assert a.edges.shape != b.edges.shape or not np.array_equal(a.edges, b.edges)


def test_labels_are_sorted_blocks():
    g = generate_sbm(n_nodes=10, n_blocks=3)
    assert g.labels.tolist() == sorted(g.labels.tolist())
    counts = np.bincount(g.labels)
    assert counts.max() - counts.min() <= 1


def test_extreme_probabilities_give_disjoint_cliques():
    g = generate_sbm(n_nodes=12, n_blocks=3, p_in=1.0, p_out=0.0)
    # each block of 4 is complete, no cross edges
    assert g.n_edges == 3 * 6
    cross = g.labels[g.edges[:, 0]] != g.labels[g.edges[:, 1]]
    assert not cross.any()


def test_feature_shift_separates_blocks():
    g = generate_sbm(n_nodes=400, n_blocks=2, n_features=4, feature_shift=3.0, seed=2)
    m0 = g.features[g.labels == 0].mean(axis=0)
    m1 = g.features[g.labels == 1].mean(axis=0)
    assert np.linalg.norm(m0 - m1) > 1.0


def test_no_shift_means_match():
    g = generate_sbm(n_nodes=400, n_blocks=2, n_features=4, feature_shift=0.0, seed=2)
    m0 = g.features[g.labels == 0].mean(axis=0)
    m1 = g.features[g.labels == 1].mean(axis=0)
    assert np.linalg.norm(m0 - m1) < 0.5


def test_edge_probability_plausible():
    g = generate_sbm(n_nodes=300, n_blocks=1, p_in=0.1, seed=3)
    expected = 0.1 * 300 * 299 / 2
    assert abs(g.n_edges - expected) < 5 * np.sqrt(expected)


@pytest.mark.parametrize("kwargs", [
    {"n_nodes": 0},
    {"n_nodes": 5, "n_blocks": 0},
    {"n_nodes": 5, "n_blocks": 6},
])
def test_rejects_bad_arguments(kwargs):
    with pytest.raises(ValueError):
        generate_sbm(**kwargs)
