"""
Tests for model generation by frequency selective extrapolation
"""
import csv

import numpy as np
import pytest

from src.core.concealment_types import FseConfig
from src.core.errors import ConfigError, NoSupportError
from src.core.extrapolation_volume import (
    ExtrapolationVolume, LayerSource, VolumeStatus, WeightVolume, distance_decay
)
from src.core.frequency_selective import (
    FrequencySelectiveExtrapolator, FseTrace, conjugate_index, generate_model_fast,
    generate_model_reference, render_model, to_pixels, weighted_residual_energy
)

from conftest import periodic_texture


def random_problem(seed, volume_dims, hole=True):
    """Random samples with decaying weights and an optional zero-weight hole."""
    rng = np.random.default_rng(seed)
    samples = rng.uniform(0, 255, size=volume_dims)
    weights = rng.uniform(0.1, 1.0, size=volume_dims)
    if hole:
        m, n, p = volume_dims
        weights[m // 3:2 * m // 3, n // 3:2 * n // 3, p // 2] = 0.0
        samples[weights == 0] = 0.0
    return samples, weights


class TestFastPath:

    def test_constant_volume_is_dc(self):
        samples = np.full((8, 8, 2), 100.0)
        weights = distance_decay((8, 8, 2), 1, 0.8)
        cfg = FseConfig(iterations=1, gamma=1.0, fft_dims=(16, 16, 4))
        model = generate_model_fast(samples, weights, cfg)
        assert model.selected[0] == 0
        np.testing.assert_allclose(render_model(model), 100.0, atol=1e-9)

    def test_single_cosine(self):
        m, n, _ = np.mgrid[0:16, 0:16, 0:4]
        samples = np.cos(2 * np.pi * (2 * m + n) / 16)
        cfg = FseConfig(iterations=1, gamma=1.0, fft_dims=(16, 16, 4))
        model = generate_model_fast(samples, np.ones_like(samples), cfg)
        assert model.selected[0] == 132
        assert model.coeffs[2, 1, 0] == pytest.approx(0.5)
        assert model.coeffs[14, 15, 0] == pytest.approx(0.5)
        assert weighted_residual_energy(samples, np.ones_like(samples), model) == pytest.approx(0.0, abs=1e-12)

    def test_zero_input(self):
        samples = np.zeros((6, 6, 2))
        model = generate_model_fast(samples, np.ones_like(samples), FseConfig(iterations=10, fft_dims=(8, 8, 4)))
        assert not np.any(model.coeffs)
        assert model.iterations_run == 10

    def test_coefficients_are_hermitian(self):
        samples, weights = random_problem(3, (6, 6, 3))
        cfg = FseConfig(iterations=40, fft_dims=(8, 8, 4))
        coeffs = generate_model_fast(samples, weights, cfg).coeffs
        mirrored = np.roll(np.flip(coeffs, axis=(0, 1, 2)), 1, axis=(0, 1, 2))
        np.testing.assert_allclose(coeffs, np.conj(mirrored), atol=1e-12)

    def test_weight_scale_invariance(self):
        samples, weights = random_problem(4, (6, 6, 3))
        cfg = FseConfig(iterations=50, fft_dims=(8, 8, 4))
        base = generate_model_fast(samples, weights, cfg)
        scaled = generate_model_fast(samples, 3.7 * weights, cfg)
        assert base.selected == scaled.selected
        np.testing.assert_allclose(base.coeffs, scaled.coeffs, atol=1e-9)

    def test_zero_iterations(self):
        samples, weights = random_problem(5, (6, 6, 3))
        model = generate_model_fast(samples, weights, FseConfig(iterations=0, fft_dims=(8, 8, 4)))
        assert model.selected == [] and not np.any(model.coeffs)


class TestReferencePath:

    @pytest.mark.parametrize("seed", range(20))
    @pytest.mark.parametrize("volume_dims, fft_dims", [
        ((8, 8, 4), (8, 8, 4)),
        ((8, 8, 4), (16, 16, 4)),
        ((10, 10, 3), (16, 16, 4)),
    ])
    def test_matches_fast_path(self, seed, volume_dims, fft_dims):
        samples, weights = random_problem(seed, volume_dims)
        cfg = FseConfig(iterations=100, gamma=0.7, fft_dims=fft_dims)
        fast = generate_model_fast(samples, weights, cfg)
        reference = generate_model_reference(samples, weights, cfg)
        assert fast.selected == reference.selected
        np.testing.assert_allclose(fast.coeffs, reference.coeffs, atol=1e-9)

    def test_conjugate_index(self):
        dims = (8, 8, 4)
        k = np.ravel_multi_index((3, 0, 1), dims)
        assert np.unravel_index(conjugate_index(k, dims), dims) == (5, 0, 3)
        assert conjugate_index(0, dims) == 0
        half = np.ravel_multi_index((4, 4, 2), dims)
        assert conjugate_index(half, dims) == half


class TestEnergy:

    def check_monotone(self, samples, weights, cfg):
        trace = FseTrace(track_energy=True)
        model = generate_model_fast(samples, weights, cfg, trace)
        energies = np.array(trace.energies)
        assert np.all(np.diff(energies) <= 1e-9 * energies[0])
        assert energies[-1] == pytest.approx(weighted_residual_energy(samples, weights, model), rel=1e-9)
        return energies

    @pytest.mark.parametrize("gamma", [0.3, 0.7, 1.0])
    def test_energy_never_grows(self, gamma):
        samples, weights = random_problem(11, (10, 10, 3))
        energies = self.check_monotone(samples, weights, FseConfig(iterations=60, gamma=gamma, fft_dims=(16, 16, 4)))
        assert energies[-1] < energies[0]

    @pytest.mark.slow
    @pytest.mark.parametrize("gamma", [0.3, 0.7, 1.0])
    @pytest.mark.parametrize("seed", range(10))
    def test_energy_never_grows_full_size(self, seed, gamma):
        samples, weights = random_problem(100 + seed, (48, 48, 3))
        self.check_monotone(samples, weights, FseConfig(gamma=gamma))

    def test_trace_csv(self, tmp_path):
        samples, weights = random_problem(13, (6, 6, 2))
        trace = FseTrace()
        generate_model_fast(samples, weights, FseConfig(iterations=5, fft_dims=(8, 8, 4)), trace)
        path = tmp_path / "trace" / "block.csv"
        trace.to_csv(str(path))
        with open(path, newline='') as f:
            rows = list(csv.reader(f))
        assert rows[0] == ['iteration', 'km', 'kn', 'kp', 'delta_abs', 'energy']
        assert len(rows) == 6
        assert rows[1][-1] == ''


class TestInputErrors:

    def test_transform_smaller_than_volume(self):
        samples, weights = random_problem(0, (10, 10, 3))
        with pytest.raises(ConfigError):
            generate_model_fast(samples, weights, FseConfig(fft_dims=(8, 8, 4)))

    def test_negative_weights(self):
        samples, weights = random_problem(0, (6, 6, 2))
        weights[0, 0, 0] = -0.1
        with pytest.raises(ValueError):
            generate_model_fast(samples, weights, FseConfig(fft_dims=(8, 8, 4)))

    def test_zero_weights(self):
        samples = np.ones((6, 6, 2))
        with pytest.raises(NoSupportError):
            generate_model_reference(samples, np.zeros_like(samples), FseConfig(fft_dims=(8, 8, 4)))

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            generate_model_fast(np.ones((6, 6, 2)), np.ones((6, 6, 3)), FseConfig(fft_dims=(8, 8, 4)))


class TestExtrapolator:

    def make_volume(self):
        texture = periodic_texture(48, 48).T.astype(np.float64)
        status = np.full((48, 48, 1), VolumeStatus.SUPPORT, dtype=np.uint8)
        status[16:32, 16:32, 0] = VolumeStatus.LOSS
        samples = texture[:, :, None].copy()
        samples[status == VolumeStatus.LOSS] = 0.0
        vol = ExtrapolationVolume(samples=samples, status=status, origin=(0, 0),
                                  layers=[LayerSource(p=0, frame=0, shift=(0, 0))], n_prev=0)
        weights = distance_decay(vol.dims, 0, 0.8)
        weights[status == VolumeStatus.LOSS] = 0.0
        return vol, WeightVolume(weights=weights, layer_factors=(1.0,)), texture

    def test_block_values(self):
        vol, weights, texture = self.make_volume()
        extrapolator = FrequencySelectiveExtrapolator(FseConfig(iterations=300, fft_dims=(64, 64, 1)))
        values = extrapolator.extrapolate(vol, weights)
        assert values.shape == (16, 16)
        assert np.isrealobj(values)
        assert np.abs(values - texture[16:32, 16:32]).mean() < 2.0

    def test_to_pixels(self):
        np.testing.assert_array_equal(to_pixels(np.array([-3.0, 12.6, 300.0])), [0.0, 13.0, 255.0])
