"""Network and pattern models, file formats, and the seeded surrogate."""

import numpy as np
import pytest

from pixelfas.em_model import (FrequencyGrid, MultiportNetwork, PatternGrid,
                               PowerAngularSpectrum, SurrogateParams,
                               load_network, load_pattern_bundle,
                               save_network, save_pattern_bundle,
                               stack_patterns, synth_dipole_translations,
                               synth_pixel_surrogate)
from pixelfas.errors import ConfigError, ParseError
from pixelfas.numerics import build_quadrature


class TestFrequencyGrid:
    def test_single_sample(self):
        grid = FrequencyGrid(2.5e9, 2.5e9, 1)
        assert grid.samples_hz.tolist() == [2.5e9]

    def test_multi_sample_endpoints(self):
        grid = FrequencyGrid(2.0e9, 3.0e9, 5)
        f = grid.samples_hz
        assert f[0] == 2.0e9 and f[-1] == 3.0e9 and len(f) == 5

    def test_invalid_window_rejected(self):
        with pytest.raises(ConfigError):
            FrequencyGrid(3.0e9, 2.0e9, 2)
        with pytest.raises(ConfigError):
            FrequencyGrid(2.0e9, 3.0e9, 0)


class TestNetworkIO:
    def _random_net(self, rng, q=5, t=2):
        freqs = FrequencyGrid(2.0e9, 3.0e9, t)
        z = rng.standard_normal((t, q + 1, q + 1)) + 1j * rng.standard_normal((t, q + 1, q + 1))
        z = z + z.transpose(0, 2, 1)
        return MultiportNetwork(z=z, freqs=freqs)

    def test_native_round_trip_is_exact(self, tmp_path, rng):
        net = self._random_net(rng)
        path = tmp_path / "net.zmat"
        save_network(net, path)
        back = load_network(path)
        assert np.array_equal(back.z, net.z)
        assert back.freqs.samples_hz.tolist() == net.freqs.samples_hz.tolist()

    def test_touchstone_v2_ri(self, tmp_path):
        z = np.array([[[1 + 2j, 3 + 4j], [3 + 4j, 5 - 6j]]])
        text = "\n".join([
            "[Version] 2.0",
            "# GHz Z RI R 50",
            "[Number of Ports] 2",
            "[Number of Frequencies] 1",
            "[Network Data]",
            "2.5 1 2 3 4 3 4 5 -6",
            "[End]",
        ])
        path = tmp_path / "net.s2p"
        path.write_text(text + "\n")
        net = load_network(path)
        assert net.q == 1
        assert np.allclose(net.z[0], z[0])
        assert net.freqs.samples_hz[0] == pytest.approx(2.5e9)

    def test_garbage_file_raises_parse_error(self, tmp_path):
        path = tmp_path / "bad.zmat"
        path.write_text("not a network\n")
        with pytest.raises(ParseError):
            load_network(path)

    def test_nonreciprocal_matrix_warns(self, rng):
        freqs = FrequencyGrid(2.5e9, 2.5e9, 1)
        z = rng.standard_normal((1, 3, 3)) * (1 + 0j)
        with pytest.warns(UserWarning):
            MultiportNetwork(z=z, freqs=freqs)


class TestPatternBundleIO:
    def test_round_trip(self, tmp_path, small_grid):
        freqs = FrequencyGrid(2.5e9, 2.5e9, 1)
        n = small_grid.n_nodes
        r = np.random.default_rng(5)
        patterns = PatternGrid(
            grid=small_grid, freqs=freqs,
            e_theta=r.standard_normal((1, 3, n)) + 1j * r.standard_normal((1, 3, n)),
            e_phi=r.standard_normal((1, 3, n)) + 1j * r.standard_normal((1, 3, n)))
        save_pattern_bundle(patterns, tmp_path / "bundle")
        back = load_pattern_bundle(tmp_path / "bundle")
        assert np.allclose(back.e_theta, patterns.e_theta, atol=1e-14)
        assert np.allclose(back.e_phi, patterns.e_phi, atol=1e-14)
        assert back.grid.matches(patterns.grid, tol=1e-12)

    def test_port_count_check(self, tmp_path, small_model):
        _, patterns = small_model
        save_pattern_bundle(patterns, tmp_path / "bundle")
        with pytest.raises(ParseError):
            load_pattern_bundle(tmp_path / "bundle",
                                expected_ports=patterns.n_ports + 1)

    def test_missing_directory(self, tmp_path):
        with pytest.raises(ParseError):
            load_pattern_bundle(tmp_path / "nope")


class TestPowerAngularSpectrum:
    def test_uniform_measure_matches_support(self, small_grid):
        pas = PowerAngularSpectrum("upper-hemisphere", 1.0)
        w = pas.weighted_measure(small_grid)
        assert np.sum(w) == pytest.approx(2 * np.pi, rel=1e-12)

    def test_support_mismatch_rejected(self, small_grid):
        pas = PowerAngularSpectrum("horizon-ring", 1.0)
        with pytest.raises(ConfigError):
            pas.weighted_measure(small_grid)


class TestDipoleTranslations:
    def test_shapes_and_magnitude(self):
        grid = build_quadrature("horizon-ring", n_phi=90)
        patterns = synth_dipole_translations(6, 0.5, grid)
        assert patterns.e_theta.shape == (1, 6, 90)
        assert np.allclose(np.abs(patterns.e_theta), 1.0)
        assert np.all(patterns.e_phi == 0)

    def test_first_state_is_reference(self):
        grid = build_quadrature("horizon-ring", n_phi=16)
        patterns = synth_dipole_translations(4, 0.5, grid)
        assert np.allclose(patterns.e_theta[0, 0], 1.0)


class TestSurrogate:
    def test_deterministic_per_seed(self, small_grid):
        freqs = FrequencyGrid(2.5e9, 2.5e9, 1)
        a_net, a_pat = synth_pixel_surrogate(SurrogateParams(q=12, seed=3), small_grid, freqs)
        b_net, b_pat = synth_pixel_surrogate(SurrogateParams(q=12, seed=3), small_grid, freqs)
        c_net, _ = synth_pixel_surrogate(SurrogateParams(q=12, seed=4), small_grid, freqs)
        assert np.array_equal(a_net.z, b_net.z)
        assert np.array_equal(a_pat.e_theta, b_pat.e_theta)
        assert not np.array_equal(a_net.z, c_net.z)

    def test_reciprocal_and_passive(self, small_model):
        net, _ = small_model
        assert np.allclose(net.z, net.z.transpose(0, 2, 1))
        assert net.check_passivity() >= -1e-9

    def test_port_count(self, small_model):
        net, patterns = small_model
        assert net.q == 20
        assert patterns.n_ports == net.q + 1

    def test_stack_patterns_concatenates_ports(self, small_model):
        _, patterns = small_model
        doubled = stack_patterns([patterns, patterns])
        assert doubled.n_ports == 2 * patterns.n_ports
