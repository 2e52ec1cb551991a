import numpy as np
import pytest

from lrg.errors import InvalidRange, NegativeTau, NoPeak
from lrg.graph import laplacian
from lrg.rng import stream_rng
from lrg.spectral import (
    detect_peaks,
    eigendecompose,
    entropy_scan,
    propagator_eigenvalues,
    scan_graph,
    von_neumann_entropy,
    write_peaks_csv,
    write_scan_csv,
)

from conftest import make_graph, random_connected_graph

# closed-form entropy of K2 at tau = 0.5: mu = softmax([0, -1]),
# S = -(mu0 ln mu0 + mu1 ln mu1) / ln 2, evaluated with scalar arithmetic
K2_MU_HALF = (0.7310585786300049, 0.2689414213699951)
K2_S_HALF = 0.8399415380215869


def spectrum_of(g):
    return eigendecompose(laplacian(g))


class TestEigendecompose:
    def test_k2_eigenvalues(self, k2):
        np.testing.assert_allclose(spectrum_of(k2).eigenvalues, [0.0, 2.0], atol=1e-12)

    def test_p3_eigenvalues(self, p3):
        np.testing.assert_allclose(
            spectrum_of(p3).eigenvalues, [0.0, 1.0, 3.0], atol=1e-12
        )

    def test_k3_eigenvalues(self, k3):
        np.testing.assert_allclose(
            spectrum_of(k3).eigenvalues, [0.0, 3.0, 3.0], atol=1e-12
        )

    def test_smallest_eigenvalue_exactly_zero(self, barbell):
        assert spectrum_of(barbell).eigenvalues[0] == 0.0

    def test_eigenvectors_orthonormal(self, barbell):
        q = spectrum_of(barbell).eigenvectors
        np.testing.assert_allclose(q.T @ q, np.eye(q.shape[0]), atol=1e-10)


class TestPropagatorEigenvalues:
    def test_tau_zero_uniform(self, k2):
        np.testing.assert_array_equal(
            propagator_eigenvalues(spectrum_of(k2), 0.0), [0.5, 0.5]
        )

    def test_k2_half(self, k2):
        np.testing.assert_allclose(
            propagator_eigenvalues(spectrum_of(k2), 0.5), K2_MU_HALF, atol=1e-12
        )

    def test_large_tau_point_mass(self, barbell):
        mu = propagator_eigenvalues(spectrum_of(barbell), 1e6)
        expected = np.zeros(10)
        expected[0] = 1.0
        np.testing.assert_allclose(mu, expected, atol=1e-12)

    def test_negative_tau_rejected(self, k2):
        with pytest.raises(NegativeTau):
            propagator_eigenvalues(spectrum_of(k2), -0.1)

    def test_sums_to_one(self, barbell):
        spec = spectrum_of(barbell)
        for tau in (1e-3, 0.1, 5.0, 1e4):
            assert abs(propagator_eigenvalues(spec, tau).sum() - 1.0) < 1e-12


class TestEntropy:
    def test_tau_zero_is_one(self, k3):
        # mu is exactly uniform at tau = 0; S differs from 1 only by
        # rounding in mu * log(mu)
        assert von_neumann_entropy(spectrum_of(k3), 0.0) == pytest.approx(1.0, abs=1e-12)

    def test_tau_zero_exact_for_k2(self, k2):
        # 0.5 and log(0.5) are exactly representable negations, so K2 hits 1.0
        assert von_neumann_entropy(spectrum_of(k2), 0.0) == 1.0

    def test_k2_half_frozen(self, k2):
        assert abs(von_neumann_entropy(spectrum_of(k2), 0.5) - K2_S_HALF) < 1e-9

    def test_large_tau_vanishes(self, barbell):
        assert von_neumann_entropy(spectrum_of(barbell), 1e6) < 1e-9

    def test_single_node(self):
        g = make_graph(1, [])
        assert von_neumann_entropy(spectrum_of(g), 1.0) == 0.0

    def test_monotone_on_random_graphs(self):
        rng = stream_rng(0, "test")
        for _ in range(10):
            g = random_connected_graph(rng, n_max=30)
            scan = scan_graph(g, assume_connected=True)
            assert np.all(np.diff(scan.entropy) <= 1e-9)


class TestEntropyScan:
    def test_grid_is_geometric(self, k2):
        scan = entropy_scan(spectrum_of(k2), 0.1, 10.0, 9)
        ratios = scan.taus[1:] / scan.taus[:-1]
        np.testing.assert_allclose(ratios, ratios[0], rtol=1e-10)
        assert scan.taus[0] == pytest.approx(0.1)
        assert scan.taus[-1] == pytest.approx(10.0)

    def test_k2_default_grid(self, k2):
        scan = entropy_scan(spectrum_of(k2))
        assert scan.entropy[0] > 0.999
        assert len(scan.characteristic_scales) == 1
        # the K2 peak sits near tau ~ 1.2 on the default grid
        assert 0.8 < scan.top_scale < 1.8

    def test_barbell_peak_location(self, barbell):
        scan = scan_graph(barbell, assume_connected=True)
        assert scan.characteristic_scales
        assert 0.4 < scan.top_scale < 0.9

    def test_peaks_sorted_by_height(self, barbell):
        scan = scan_graph(barbell, assume_connected=True)
        heights = [c for _, c in scan.characteristic_scales]
        assert heights == sorted(heights, reverse=True)

    @pytest.mark.parametrize("bad", [(0.0, 1.0), (-1.0, 1.0), (5.0, 1.0), (2.0, 2.0)])
    def test_invalid_range(self, k2, bad):
        with pytest.raises(InvalidRange):
            entropy_scan(spectrum_of(k2), *bad)

    def test_too_few_points(self, k2):
        with pytest.raises(InvalidRange):
            entropy_scan(spectrum_of(k2), 0.1, 1.0, points=4)

    def test_heat_capacity_matches_entropy_slope(self, barbell):
        scan = scan_graph(barbell, assume_connected=True)
        log_taus = np.log(scan.taus)
        interior = -(scan.entropy[2:] - scan.entropy[:-2]) / (
            log_taus[2:] - log_taus[:-2]
        )
        np.testing.assert_allclose(scan.heat_capacity[1:-1], interior, atol=1e-12)


class TestDetectPeaks:
    def test_returns_scales(self, barbell):
        peaks = detect_peaks(scan_graph(barbell, assume_connected=True))
        assert peaks and peaks[0][0] > 0

    def test_no_peak_raises_with_advice(self, k2):
        # C increases monotonically over this narrow window: no interior max
        scan = entropy_scan(spectrum_of(k2), 1e-3, 5e-3, 16)
        with pytest.raises(NoPeak, match="widen"):
            detect_peaks(scan)


class TestScanGraph:
    def test_reduces_to_lcc(self):
        g = make_graph(5, [(0, 1), (1, 2), (3, 4)])
        scan = scan_graph(g)
        # entropy normalization reflects the 3-node component
        assert scan.entropy[0] <= 1.0

    def test_writers(self, tmp_path, barbell):
        scan = scan_graph(barbell, assume_connected=True)
        scan_path = tmp_path / "scan.csv"
        peaks_path = tmp_path / "peaks.csv"
        write_scan_csv(scan, scan_path)
        write_peaks_csv(scan, peaks_path)
        rows = scan_path.read_text().strip().splitlines()
        assert rows[0] == "tau,entropy,heat_capacity"
        assert len(rows) == 1 + scan.taus.shape[0]
        peak_rows = peaks_path.read_text().strip().splitlines()
        assert peak_rows[0] == "tau_star,c_value,rank"
        assert len(peak_rows) == 1 + len(scan.characteristic_scales)
