"""End-to-end acceptance suite; each test is one numbered criterion.

The terminal summary (see conftest) prints one PASS/FAIL/SKIP line per
criterion.  Criteria that need the Cora dataset skip with an explicit
reason when it is not provisioned under $LRG_DATA_DIR.
"""

import itertools
import time
import warnings

import numpy as np
import pytest
from scipy.linalg import expm
from scipy.stats import rankdata

from lrg.experiment import (
    ALPHA,
    ExperimentConfig,
    compare,
    prepare_dataset,
    random_scale_control,
    results_rows,
    run_variant,
    write_results_csv,
)
from lrg.graph import laplacian
from lrg.nn import EncoderConfig, MultiScaleModel
from lrg.renorm import (
    MacroNodePartition,
    macro_node_partition,
    propagator_matrix,
    renormalize_at,
    rewire,
)
from lrg.rng import stream_rng
from lrg.spectral import (
    eigendecompose,
    entropy_scan,
    scan_graph,
    von_neumann_entropy,
)
from lrg.stats import _exact_p, _normal_p, wilcoxon_signed_rank
from lrg.training import gradient_check

from conftest import (
    CORA_DIR,
    make_graph,
    random_connected_graph,
    requires_cora,
)


@pytest.fixture(scope="module")
def sample():
    """Fixed sample of 50 random connected graphs with 3..50 nodes."""
    rng = stream_rng(2026, "test")
    return [random_connected_graph(rng, 3, 50) for _ in range(50)]


def test_criterion_01(sample):
    """1. Entropy limits: S(1e-6/lmax) >= 0.999, S(1e6/l2) <= 1e-6, nonincreasing grid (50 graphs, <10 s)."""
    t0 = time.perf_counter()
    for g in sample:
        spec = eigendecompose(laplacian(g))
        lam = spec.eigenvalues
        assert von_neumann_entropy(spec, 1e-6 / lam[-1]) >= 0.999
        assert von_neumann_entropy(spec, 1e6 / lam[1]) <= 1e-6
        scan = entropy_scan(spec)
        assert np.all(np.diff(scan.entropy) <= 1e-9)
    assert time.perf_counter() - t0 < 10.0


def test_criterion_02(sample):
    """2. Heat capacity C(tau) >= -1e-6 at every grid point of the same sample."""
    for g in sample:
        scan = scan_graph(g, assume_connected=True)
        assert scan.heat_capacity.min() >= -1e-6


@requires_cora
def test_criterion_03():
    """3. Cora characteristic scale: top tau* in [0.47, 0.67]."""
    g = prepare_dataset(CORA_DIR)
    scan = scan_graph(g, assume_connected=True)
    assert scan.characteristic_scales
    assert 0.47 <= scan.top_scale <= 0.67


def test_criterion_04(sample):
    """4. Propagator matches the dense matrix-exponential oracle (1e-8) with unit trace (1e-10)."""
    small = [g for g in sample if g.n_nodes <= 20]
    assert small
    for g in small:
        lap = laplacian(g)
        spec = eigendecompose(lap)
        for tau in (0.01, 0.5, 3.0, 50.0):
            rho = propagator_matrix(spec, tau).values
            kernel = expm(-tau * lap.values)
            oracle = kernel / np.trace(kernel)
            assert np.abs(rho - oracle).max() <= 1e-8
            assert abs(np.trace(rho) - 1.0) <= 1e-10


def closure_labels(rho):
    """Brute-force partition: transitive closure of the merge relation."""
    diag = np.diag(rho)
    merge = rho > np.minimum(diag[:, None], diag[None, :])
    np.fill_diagonal(merge, True)
    reach = merge.copy()
    for k in range(rho.shape[0]):
        reach |= reach[:, k:k + 1] & reach[k:k + 1, :]
    first = np.array([np.flatnonzero(row)[0] for row in reach])
    return np.unique(first, return_inverse=True)[1]


def test_criterion_05():
    """5. Partition equals brute-force transitive closure (200 graphs, 5 scales each)."""
    rng = stream_rng(5, "test")
    for _ in range(200):
        g = random_connected_graph(rng, 3, 8)
        spec = eigendecompose(laplacian(g))
        for tau in 10.0 ** rng.uniform(-2.0, 2.0, size=5):
            rho = propagator_matrix(spec, float(tau))
            got = macro_node_partition(rho).assignment
            np.testing.assert_array_equal(got, closure_labels(rho.values))


def test_criterion_06(barbell):
    """6. Rewiring invariants: no self or intra-macro edges, shared neighborhoods, singleton identity."""
    rng = stream_rng(6, "test")
    graphs = [barbell] + [random_connected_graph(rng, 4, 30) for _ in range(12)]
    for g in graphs:
        for tau in (0.1, 0.7, 2.0, 20.0):
            rg = renormalize_at(g, tau)
            rg.validate()
            assign = rg.partition.assignment
            if rg.edges.size:
                assert np.all(rg.edges[:, 0] != rg.edges[:, 1])
                assert np.all(assign[rg.edges[:, 0]] != assign[rg.edges[:, 1]])
            adj = rg.adjacency()
            for members in rg.partition.members():
                for m in members[1:]:
                    np.testing.assert_array_equal(adj[m], adj[members[0]])
        singles = MacroNodePartition(
            assignment=np.arange(g.n_nodes, dtype=np.int64), tau=0.05
        )
        np.testing.assert_array_equal(rewire(g, singles).edges, g.edges)


def test_criterion_07(barbell):
    """7. Gradient checks: analytic vs central differences < 1e-4 for GCN and GAT (<5 s)."""
    rng = stream_rng(7, "test")
    features = rng.normal(size=(barbell.n_nodes, 8))
    labels = np.repeat([0, 1], 5)
    idx = np.arange(barbell.n_nodes)
    t0 = time.perf_counter()
    for kind, heads in (("gcn", 1), ("gat", 2)):
        cfg = EncoderConfig(
            kind=kind, in_dim=8, hidden_dim=6, out_dim=5, gat_heads=heads
        )
        model = MultiScaleModel([cfg], n_classes=2)
        params = model.init_params(stream_rng(7, "init"))
        ctxs = model.prepare([barbell], features)
        err = gradient_check(
            model, ctxs, params, labels, idx, n_checks=6, rng=rng
        )
        assert err < 1e-4, f"{kind}: relative error {err}"
    assert time.perf_counter() - t0 < 5.0


def enumerated_p(diffs, alternative):
    """Null tail probability from all 2^n sign patterns."""
    d = diffs[diffs != 0]
    ranks = rankdata(np.abs(d))
    w = ranks[d > 0].sum()
    signs = np.array(list(itertools.product((0.0, 1.0), repeat=d.size)))
    sums = signs @ ranks
    if alternative == "greater":
        return float(np.mean(sums >= w - 1e-9))
    return float(np.mean(sums <= w + 1e-9))


def test_criterion_08():
    """8. Wilcoxon: exact path equals sign enumeration (n<=15); normal path within 0.01 at n=15."""
    rng = stream_rng(8, "test")
    for n in (1, 2, 3, 5, 8, 12, 15):
        for _ in range(3):
            d = rng.choice([-1.0, 1.0], size=n)
            if rng.random() < 0.5:
                d *= rng.choice([1.0, 2.0], size=n)
            zeros = np.zeros_like(d)
            for alternative in ("greater", "less"):
                res = wilcoxon_signed_rank(d, zeros, alternative)
                assert res.method == "exact"
                assert res.p_value == pytest.approx(
                    enumerated_p(d, alternative), abs=1e-12
                )

    # binary score tables: every surviving difference is +1 or -1
    for _ in range(40):
        d = rng.choice([-1.0, 1.0], size=15)
        ranks = rankdata(np.abs(d))
        double_ranks = np.rint(2.0 * ranks).astype(np.int64)
        w_plus = float(ranks[d > 0].sum())
        for alternative in ("greater", "less"):
            exact = _exact_p(double_ranks, int(round(2.0 * w_plus)), alternative)
            approx = _normal_p(ranks, w_plus, alternative)
            assert abs(approx - exact) <= 0.01


# --- Cora benchmarks ----------------------------------------------------


def cora_config(variant):
    return ExperimentConfig(
        dataset=str(CORA_DIR), encoder_kind="gcn", variant=variant
    )


@pytest.fixture(scope="module")
def cora_graph():
    return prepare_dataset(CORA_DIR)


@pytest.fixture(scope="module")
def cora_sb(cora_graph, tmp_path_factory):
    """GCN single-base run over 10 seeds, with its results.csv on disk."""
    t0 = time.perf_counter()
    run = run_variant(cora_config("SB"), graph=cora_graph)
    elapsed = time.perf_counter() - t0
    path = tmp_path_factory.mktemp("cora_sb") / "results.csv"
    write_results_csv(path, results_rows(run, "cora"))
    return run, path, elapsed


@requires_cora
def test_criterion_09(cora_sb):
    """9. Cora GCN_SB mean test accuracy in [67, 77]% over 10 seeds (<30 min)."""
    run, _, elapsed = cora_sb
    mean_acc = float(np.mean([rec.test_acc for rec in run.records]))
    assert 0.67 <= mean_acc <= 0.77
    assert elapsed < 1800.0


@requires_cora
def test_criterion_10(cora_graph):
    """10. Cora GCN_MR beats GCN_MB: directional mean gap, Wilcoxon p < 0.05 (warn if only directional)."""
    mb = run_variant(cora_config("MB"), graph=cora_graph)
    mr = run_variant(cora_config("MR"), graph=cora_graph)
    mean_mb = float(np.mean([rec.test_acc for rec in mb.records]))
    mean_mr = float(np.mean([rec.test_acc for rec in mr.records]))
    assert mean_mr > mean_mb
    comp = compare(mr.score_table, mb.score_table)
    if comp.p_value >= ALPHA:
        warnings.warn(
            f"MR > MB holds directionally ({mean_mr:.4f} vs {mean_mb:.4f}) "
            f"but p = {comp.p_value:.4f} misses the 0.05 threshold"
        )
    else:
        assert comp.verdict == "+"


@requires_cora
def test_criterion_11(cora_graph):
    """11. Cora random-scale control: 0 of 30 random scales significant at 0.05/30."""
    report = random_scale_control(
        cora_config("MR"), graph=cora_graph, n_samples=10
    )
    assert len(report.samples) == 30
    assert report.alpha_corrected == pytest.approx(0.05 / 30, rel=1e-12)
    assert report.n_significant == 0


@requires_cora
def test_criterion_12(cora_sb, cora_graph, tmp_path):
    """12. Determinism: repeating the GCN_SB run yields byte-identical results.csv."""
    _, first_path, _ = cora_sb
    rerun = run_variant(cora_config("SB"), graph=cora_graph)
    again = tmp_path / "results.csv"
    write_results_csv(again, results_rows(rerun, "cora"))
    assert again.read_bytes() == first_path.read_bytes()
