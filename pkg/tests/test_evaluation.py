"""
Tests for PSNR measurement, weight training and mode comparisons
"""
import numpy as np
import pytest

from src.core.concealment_types import ConcealConfig, ConcealMode, ConcealPresets
from src.core.errors import DegenerateFitError, EmptyMaskError
from src.core.evaluation import (
    DEFAULT_OMEGA_GRID, TrainingPair, best_weight_search, collect_training_pairs,
    fit_weight_model, representative_error, run_comparison, omega_sensitivity
)
from src.core.loss_patterns import LossMask, apply_loss, checkerboard_mask, slice_mask
from src.core.motion_estimator import MotionEstimate
from src.core.quality_metrics import capped_psnr, psnr_blocks, psnr_per_block
from src.core.video_sequence import VideoSequence, load_sequence

from conftest import blurred_noise, periodic_texture, quick_config, translated_frames


def pairs_on_line(errors, omega_max, t_e, noise=None):
    omegas = omega_max * (1.0 - np.asarray(errors) / t_e)
    if noise is not None:
        omegas = omegas + noise
    return [TrainingPair(float(e), float(w)) for e, w in zip(errors, omegas)]


class TestPsnr:

    def setup_method(self):
        self.original = VideoSequence.from_luma(np.full((1, 32, 32), 100, dtype=np.uint8))
        self.mask = LossMask(self.original.geometry)
        self.mask.mark_lost(0, (0, 0))

    def test_perfect_match(self):
        assert psnr_blocks(self.original, self.original, self.mask) == float('inf')
        assert capped_psnr(float('inf')) == 99.99

    def test_constant_offset(self):
        concealed = self.original.luma.copy()
        concealed[0, :16, :16] += 16
        assert psnr_blocks(self.original, concealed, self.mask) == pytest.approx(24.05, abs=0.01)

    def test_half_samples_off_by_one(self):
        concealed = self.original.luma.copy()
        concealed[0, :8, :16] += 1
        assert psnr_blocks(self.original, concealed, self.mask) == pytest.approx(51.14, abs=0.01)

    def test_only_damaged_blocks_count(self):
        concealed = self.original.luma.copy()
        concealed[0, 16:, :] = 0
        assert psnr_blocks(self.original, concealed, self.mask) == float('inf')

    def test_symmetric(self, rng):
        a = rng.integers(0, 256, size=(1, 32, 32)).astype(np.uint8)
        b = rng.integers(0, 256, size=(1, 32, 32)).astype(np.uint8)
        assert psnr_blocks(a, b, self.mask) == psnr_blocks(b, a, self.mask)

    def test_concealed_blocks_count(self):
        self.mask.mark_concealed(0, (0, 0))
        concealed = self.original.luma.copy()
        concealed[0, :16, :16] += 16
        assert np.isfinite(psnr_blocks(self.original, concealed, self.mask))

    def test_empty_mask(self):
        with pytest.raises(EmptyMaskError):
            psnr_blocks(self.original, self.original, LossMask(self.original.geometry))

    def test_per_block(self):
        concealed = self.original.luma.copy()
        concealed[0, 16:, 16:] += 16
        assert psnr_per_block(self.original, concealed, 0, (0, 0)) == float('inf')
        assert psnr_per_block(self.original, concealed, 0, (1, 1)) == pytest.approx(24.05, abs=0.01)


class TestFit:

    def test_two_points(self):
        assert fit_weight_model(pairs_on_line([0.0, 10.0], 1.0, 20.0)) == pytest.approx((1.0, 20.0))

    def test_exact_recovery(self):
        errors = np.random.default_rng(0).uniform(0, 84.375, 2000)
        omega_max, t_e = fit_weight_model(pairs_on_line(errors, 0.675, 84.375))
        assert omega_max == pytest.approx(0.675, abs=1e-9)
        assert t_e == pytest.approx(84.375, abs=1e-9)

    @pytest.mark.parametrize("seed", range(10))
    def test_noisy_recovery(self, seed):
        rng = np.random.default_rng(seed)
        errors = rng.uniform(0, 84.375, 2000)
        pairs = pairs_on_line(errors, 0.675, 84.375, noise=rng.normal(0, 0.05, 2000))
        omega_max, t_e = fit_weight_model(pairs)
        assert abs(omega_max - 0.675) <= 0.05
        assert abs(t_e - 84.375) <= 5.0

    def test_too_few_pairs(self):
        with pytest.raises(DegenerateFitError):
            fit_weight_model([TrainingPair(1.0, 0.5)])

    def test_single_error_value(self):
        with pytest.raises(DegenerateFitError):
            fit_weight_model([TrainingPair(3.0, 0.5), TrainingPair(3.0, 0.7)])

    def test_rising_line(self):
        with pytest.raises(DegenerateFitError):
            fit_weight_model(pairs_on_line([0.0, 5.0, 10.0], 0.5, -20.0))

    def test_flat_line(self):
        with pytest.raises(DegenerateFitError):
            fit_weight_model([TrainingPair(e, 0.4) for e in (0.0, 5.0, 10.0)])

    def test_negative_intercept(self):
        pairs = [TrainingPair(0.0, -0.1), TrainingPair(10.0, -0.2)]
        with pytest.raises(DegenerateFitError):
            fit_weight_model(pairs)


class TestRepresentativeError:

    def test_mean_of_reliable(self):
        estimates = [MotionEstimate(-2, (0, 0), 2.0, True), MotionEstimate(-1, (0, 0), 4.0, True),
                     MotionEstimate(1, (0, 0), 9.0, False)]
        assert representative_error(estimates) == pytest.approx(3.0)

    def test_mean_of_all_when_none_reliable(self):
        estimates = [MotionEstimate(-2, (0, 0), 20.0), MotionEstimate(-1, (0, 0), 40.0)]
        assert representative_error(estimates) == pytest.approx(30.0)

    def test_no_estimates(self):
        with pytest.raises(ValueError):
            representative_error([])


class TestBestWeightSearch:

    def search(self, seq, grid, frame=2, block=(1, 1)):
        mask = LossMask(seq.geometry)
        mask.mark_lost(frame, block)
        buffer = apply_loss(seq, mask).frame_buffer()
        return best_weight_search(buffer, seq, mask, frame, block, quick_config(), grid)

    def test_single_candidate(self, textured_sequence):
        assert self.search(textured_sequence, [0.0]).best_omega == 0.0

    def test_identical_references_prefer_large_weight(self, static_sequence):
        pair = self.search(static_sequence, DEFAULT_OMEGA_GRID)
        assert pair.best_omega >= 1.0
        assert pair.error == 0.0
        assert pair.frame == 2 and pair.block == (1, 1)

    def test_noise_references_get_no_weight(self, rng):
        texture = periodic_texture(64, 64)
        noise = rng.integers(0, 256, size=(2, 64, 64)).astype(np.uint8)
        seq = VideoSequence.from_luma(np.concatenate([noise, texture[None]]))
        assert self.search(seq, (0.0, 0.25, 0.5, 1.0)).best_omega == 0.0

    def test_grid_order_does_not_matter(self, textured_sequence):
        grid = (0.0, 0.3, 0.6, 0.9)
        forward = self.search(textured_sequence, grid)
        backward = self.search(textured_sequence, tuple(reversed(grid)) + (0.3,))
        assert forward == backward

    def test_empty_grid(self, textured_sequence):
        with pytest.raises(ValueError):
            self.search(textured_sequence, [])

    def test_default_grid(self):
        assert DEFAULT_OMEGA_GRID[0] == 0.0
        assert DEFAULT_OMEGA_GRID[-1] == 1.5
        assert len(DEFAULT_OMEGA_GRID) == 31


class TestTraining:

    def test_collect_pairs(self):
        frames = translated_frames(blurred_noise(200, 200, 9), 96, 96, (1, 1), 3)
        seq = VideoSequence.from_luma(frames)
        progress = []
        pairs = collect_training_pairs(seq, [0, 2], blocks_per_frame=2, config=quick_config(),
                                       omega_grid=(0.0, 0.5, 1.0), seed=1,
                                       progress_callback=lambda c, t: progress.append((c, t)))
        # frame 0 has no previous frame to train on
        assert [p.frame for p in pairs] == [2, 2]
        assert all(1 <= p.block[0] <= 4 and 1 <= p.block[1] <= 4 for p in pairs)
        assert all(p.error == pytest.approx(0.0) for p in pairs)
        assert progress[-1] == (2, 2)

    def test_collect_pairs_threads(self):
        frames = translated_frames(blurred_noise(200, 200, 9), 96, 96, (1, 1), 3)
        seq = VideoSequence.from_luma(frames)
        kwargs = dict(blocks_per_frame=3, config=quick_config(), omega_grid=(0.0, 0.7), seed=4)
        assert collect_training_pairs(seq, [2], threads=3, **kwargs) == collect_training_pairs(seq, [2], **kwargs)


class TestComparison:

    def masks(self, geometry):
        return {
            'checkerboard': checkerboard_mask([2], 0, geometry),
            'slices': slice_mask([3], 1, geometry),
        }

    def test_rows_and_gains(self, textured_sequence):
        modes = [ConcealMode.CONTENT_ADAPTIVE, ConcealMode.TEMPORAL_COPY]
        table = run_comparison(textured_sequence, self.masks(textured_sequence.geometry), modes, quick_config())

        assert [(r.pattern, r.mode) for r in table.rows] == [
            ('checkerboard', modes[0]), ('checkerboard', modes[1]),
            ('slices', modes[0]), ('slices', modes[1]),
        ]
        assert [g.pattern for g in table.gains] == ['checkerboard', 'slices', 'mean']
        per_pattern = [capped_psnr(table.psnr(p, modes[0])) - capped_psnr(table.psnr(p, modes[1]))
                       for p in ('checkerboard', 'slices')]
        assert table.mean_gain(*modes) == pytest.approx(np.mean(per_pattern))
        assert table.rows[0].blocks == 8

    def test_single_mode(self, textured_sequence):
        table = run_comparison(textured_sequence, self.masks(textured_sequence.geometry),
                               [ConcealMode.FIXED_WEIGHTING], quick_config())
        assert len(table.rows) == 2
        assert table.gains == []

    def test_masks_untouched(self, textured_sequence):
        masks = self.masks(textured_sequence.geometry)
        before = {name: mask.copy() for name, mask in masks.items()}
        run_comparison(textured_sequence, masks, [ConcealMode.TEMPORAL_COPY], quick_config())
        assert masks == before

    def test_threads(self, textured_sequence):
        masks = self.masks(textured_sequence.geometry)
        modes = [ConcealMode.CONTENT_ADAPTIVE, ConcealMode.TEMPORAL_COPY]
        serial = run_comparison(textured_sequence, masks, modes, quick_config())
        parallel = run_comparison(textured_sequence, masks, modes, quick_config(), threads=3)
        assert parallel.rows == serial.rows

    def test_sensitivity(self, textured_sequence):
        calls = []
        rows = omega_sensitivity(textured_sequence, self.masks(textured_sequence.geometry),
                                 [(10, 3), (5, 2)], quick_config(), ConcealMode.TEMPORAL_COPY,
                                 progress_callback=lambda current, total: calls.append((current, total)))
        assert [(t_abs, t_rel, row.pattern) for t_abs, t_rel, row in rows] == [
            (10, 3, 'checkerboard'), (10, 3, 'slices'), (5, 2, 'checkerboard'), (5, 2, 'slices'),
        ]
        assert calls == [(0, 2), (1, 2), (2, 2)]


def controlled_similarity_sequence():
    """
    Triplets (noisy copy, exact copy, lossy frame) of smooth textures.

    In every lossy frame the previous frame is an exact copy and the one before
    carries additive noise of sigma 20 or 40.
    """
    rng = np.random.default_rng(21)
    frames = []
    for k, sigma in enumerate((20, 40, 20)):
        base = blurred_noise(96, 96, seed=30 + k)
        noisy = np.clip(base + rng.normal(0, sigma, base.shape), 0, 255)
        frames.extend([np.rint(noisy).astype(np.uint8), base, base])
    return VideoSequence.from_luma(np.stack(frames))


@pytest.mark.slow
def test_content_adaptive_beats_fixed_weighting():
    seq = controlled_similarity_sequence()
    mask = checkerboard_mask([2, 5, 8], 0, seq.geometry)
    assert mask.lost_count() >= 50
    table = run_comparison(seq, {'checkerboard': mask},
                           [ConcealMode.CONTENT_ADAPTIVE, ConcealMode.FIXED_WEIGHTING], ConcealConfig())
    assert table.mean_gain(ConcealMode.CONTENT_ADAPTIVE, ConcealMode.FIXED_WEIGHTING) >= 0.1


@pytest.mark.slow
def test_foreman_beats_temporal_copy(foreman_path):
    seq = load_sequence(foreman_path, 352, 288, max_frames=12)
    mask = checkerboard_mask(range(1, 11), 0, seq.geometry)
    config = ConcealPresets.apply(ConcealConfig(), "B-frames")
    table = run_comparison(seq, {'checkerboard': mask},
                           [ConcealMode.CONTENT_ADAPTIVE, ConcealMode.TEMPORAL_COPY], config, threads=4)
    assert table.mean_gain(ConcealMode.CONTENT_ADAPTIVE, ConcealMode.TEMPORAL_COPY) >= 1.0
