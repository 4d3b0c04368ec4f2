import math

import numpy as np
import pytest

from cumanet.channel import (
    ChannelVector,
    CorrelationMatrix,
    PortGrid,
    build_correlation,
    correlation_entry,
    sample_channel,
    sample_small_scale,
)
from cumanet.specfun import bessel_j0


class TestPortGrid:
    def test_most_square_factorization(self):
        g = PortGrid.from_total(100, 8.0)
        assert (g.n1, g.n2) == (10, 10)
        g = PortGrid.from_total(12, 2.0)
        assert (g.n1, g.n2) == (3, 4)  # n1 <= n2
        g = PortGrid.from_total(7, 1.0)
        assert (g.n1, g.n2) == (1, 7)

    def test_flat_index_round_trip(self):
        g = PortGrid(3, 5, 2.0, 2.0)
        for k in range(g.n_ports):
            i1, i2 = g.grid_index(k)
            assert g.flat_index(i1, i2) == k

    def test_invalid_dimensions(self):
        with pytest.raises(ValueError):
            PortGrid(0, 4, 1.0, 1.0)
        with pytest.raises(ValueError):
            PortGrid(2, 2, -1.0, 1.0)


class TestCorrelationEntry:
    def test_diagonal_is_one(self):
        g = PortGrid(4, 4, 3.0, 3.0)
        for k in range(16):
            assert correlation_entry(g, k, k) == 1.0

    def test_adjacent_pair_on_half_wave_grid(self):
        # 2x2 grid over a 0.5x0.5 aperture: adjacent ports sit 0.5 wavelengths
        # apart, so the kernel is J0(pi) ~ -0.3042
        g = PortGrid(2, 2, 0.5, 0.5)
        v = correlation_entry(g, 0, 1)
        assert v == pytest.approx(bessel_j0(math.pi), abs=1e-15)
        assert v == pytest.approx(-0.3042, abs=5e-5)

    def test_symmetry(self):
        g = PortGrid(3, 4, 2.0, 1.5)
        rng = np.random.default_rng(0)
        for _ in range(50):
            k, m = rng.integers(0, 12, 2)
            assert correlation_entry(g, int(k), int(m)) == correlation_entry(g, int(m), int(k))

    def test_index_bounds(self):
        g = PortGrid(2, 2, 1.0, 1.0)
        with pytest.raises(IndexError):
            correlation_entry(g, 0, 4)

    def test_single_port_dimension_matches_1d(self):
        # a 1 x n grid must equal the n-port line array
        line = PortGrid(1, 6, 3.0, 2.0)
        c = build_correlation(line).entries
        for k in range(6):
            for m in range(6):
                sep = abs(k - m) / 5 * 2.0
                assert c[k, m] == pytest.approx(bessel_j0(2 * math.pi * sep), abs=1e-14)


class TestBuildCorrelation:
    def test_trivial_grid(self):
        g = PortGrid(1, 1, 1.0, 1.0)
        c = build_correlation(g)
        assert c.entries.shape == (1, 1)
        assert c.entries[0, 0] == 1.0
        assert c.sqrt_factor[0, 0] == pytest.approx(1.0)

    def test_reconstruction(self):
        g = PortGrid.from_total(100, 8.0)
        c = build_correlation(g)
        recon = c.sqrt_factor @ c.sqrt_factor.T
        rel = np.linalg.norm(recon - c.entries) / np.linalg.norm(c.entries)
        assert rel <= 1e-8

    def test_entries_properties(self):
        g = PortGrid.from_total(36, 2.0)
        c = build_correlation(g)
        assert np.allclose(c.entries, c.entries.T)
        assert np.allclose(np.diag(c.entries), 1.0)
        assert (np.abs(c.entries) <= 1.0 + 1e-12).all()
        assert c.clamped_eigs >= 0

    def test_empirical_correlation_matches(self):
        g = PortGrid.from_total(100, 8.0)
        c = build_correlation(g)
        rng = np.random.default_rng(42)
        h = sample_small_scale(c, 100_000, rng)
        emp = (h.conj().T @ h).real / len(h)
        assert np.abs(emp - c.entries).max() < 0.02


class TestSampleChannel:
    def test_unit_distance_path_loss(self):
        g = PortGrid(2, 2, 1.0, 1.0)
        c = build_correlation(g)
        ch = sample_channel(c, 1.0, 3.7, np.random.default_rng(1))
        assert ch.path_loss == 1.0

    def test_power_law(self):
        g = PortGrid(2, 2, 1.0, 1.0)
        c = build_correlation(g)
        ch = sample_channel(c, 2.0, 2.4, np.random.default_rng(2))
        assert ch.path_loss == pytest.approx(2.0 ** (-2.4), rel=1e-12)
        assert ch.path_loss == pytest.approx(0.1895, abs=5e-5)

    def test_nonpositive_distance_rejected(self):
        g = PortGrid(2, 2, 1.0, 1.0)
        c = build_correlation(g)
        with pytest.raises(ValueError):
            sample_channel(c, 0.0, 2.4, np.random.default_rng(3))

    def test_per_port_variance_tracks_path_loss(self):
        g = PortGrid.from_total(16, 1.5)
        c = build_correlation(g)
        rng = np.random.default_rng(4)
        r, eta = 3.0, 2.6
        small = sample_small_scale(c, 100_000, rng)
        per_port = np.sqrt(r**-eta) * small
        var = (np.abs(per_port) ** 2).mean()
        assert var == pytest.approx(r**-eta, rel=0.02)

    def test_real_part_covariance_is_half_correlation(self):
        g = PortGrid.from_total(25, 2.0)
        c = build_correlation(g)
        rng = np.random.default_rng(5)
        h = sample_small_scale(c, 100_000, rng)
        cov_re = (h.real.T @ h.real) / len(h)
        assert np.abs(cov_re - 0.5 * c.entries).max() < 0.02
