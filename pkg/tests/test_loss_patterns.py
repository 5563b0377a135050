"""
Tests for loss masks and artificial loss patterns
"""
import numpy as np
import pytest

from src.core.errors import GeometryMismatchError, MaskFormatError
from src.core.loss_patterns import (
    BlockState, LossMask, apply_loss, checkerboard_mask, concealment_order,
    random_block_selection, slice_mask
)
from src.core.video_sequence import FrameGeometry, VideoSequence

CIF = FrameGeometry(352, 288, 3)


class TestPatterns:

    def test_checkerboard_cif_count(self):
        mask = checkerboard_mask([1], 0, CIF)
        assert mask.lost_count(1) == 198
        assert mask.lost_count(0) == 0
        assert mask.state(1, (0, 0)) == BlockState.LOST
        assert mask.state(1, (1, 0)) == BlockState.INTACT

    def test_checkerboard_has_no_lost_neighbours(self):
        mask = checkerboard_mask([0], 1, CIF)
        for bx, by in mask.lost_blocks(0):
            for nx, ny in ((bx + 1, by), (bx, by + 1)):
                if nx < mask.columns and ny < mask.rows:
                    assert mask.state(0, (nx, ny)) == BlockState.INTACT

    def test_slice_pattern(self):
        mask = slice_mask([0, 2], 1, CIF)
        assert mask.lost_count(0) == 22 * 9
        assert all(by % 2 == 1 for _, by in mask.lost_blocks(2))

    def test_invalid_parity(self):
        with pytest.raises(ValueError):
            checkerboard_mask([0], 2, CIF)

    def test_raster_order(self):
        mask = slice_mask([0], 0, FrameGeometry(48, 48, 1))
        assert concealment_order(mask, 0) == [(0, 0), (1, 0), (2, 0), (0, 2), (1, 2), (2, 2)]

    def test_random_selection_is_reproducible_and_interior(self):
        first = random_block_selection([0, 2], 25, CIF, seed=3)
        second = random_block_selection([0, 2], 25, CIF, seed=3)
        assert first == second
        assert first.lost_count(0) == 25
        for bx, by in first.lost_blocks(2):
            assert 0 < bx < first.columns - 1 and 0 < by < first.rows - 1


class TestMaskState:

    def test_concealment_transition(self):
        mask = LossMask(CIF)
        mask.mark_lost(0, (3, 4))
        mask.mark_concealed(0, (3, 4))
        assert mask.state(0, (3, 4)) == BlockState.CONCEALED
        assert mask.lost_count() == 0
        assert mask.damaged_count() == 1
        with pytest.raises(ValueError):
            mask.mark_concealed(0, (5, 5))

    def test_pixel_status(self):
        mask = LossMask(FrameGeometry(32, 32, 1))
        mask.mark_lost(0, (1, 0))
        status = mask.pixel_status(0)
        assert status.shape == (32, 32)
        assert np.all(status[:16, 16:] == BlockState.LOST)
        assert np.all(status[16:, :] == BlockState.INTACT)
        assert mask.pixel_status(0, 8).shape == (16, 16)

    def test_union(self):
        a = checkerboard_mask([0], 0, CIF)
        b = checkerboard_mask([0], 1, CIF)
        assert a.union(b).lost_count(0) == 396

    def test_union_geometry_mismatch(self):
        with pytest.raises(GeometryMismatchError):
            LossMask(CIF).union(LossMask(FrameGeometry(176, 144, 3)))


class TestMaskFile:

    def test_save_load(self, tmp_path):
        mask = slice_mask([0, 2], 0, CIF)
        path = tmp_path / "mask.txt"
        mask.save(str(path))
        assert LossMask.load(str(path), CIF) == mask

    def test_malformed_line(self, tmp_path):
        path = tmp_path / "mask.txt"
        path.write_text("# header\n0 1 x\n")
        with pytest.raises(MaskFormatError):
            LossMask.load(str(path), CIF)

    def test_block_outside_grid(self, tmp_path):
        path = tmp_path / "mask.txt"
        path.write_text("0 22 0\n")
        with pytest.raises(MaskFormatError):
            LossMask.load(str(path), CIF)


class TestApplyLoss:

    def test_only_damaged_blocks_change(self, textured_sequence):
        mask = LossMask(textured_sequence.geometry)
        mask.mark_lost(1, (2, 1))
        corrupted = apply_loss(textured_sequence, mask, fill=0)

        assert np.all(corrupted.luma[1, 16:32, 32:48] == 0)
        assert np.all(corrupted.cb[1, 8:16, 16:24] == 0)
        untouched = np.ones(corrupted.luma.shape, dtype=bool)
        untouched[1, 16:32, 32:48] = False
        np.testing.assert_array_equal(corrupted.luma[untouched], textured_sequence.luma[untouched])

    def test_geometry_checked(self, textured_sequence):
        with pytest.raises(GeometryMismatchError):
            apply_loss(textured_sequence, LossMask(FrameGeometry(64, 64, 3)))

    def test_fill_value(self):
        seq = VideoSequence.from_luma(np.full((1, 16, 16), 9, dtype=np.uint8))
        mask = LossMask(seq.geometry)
        mask.mark_lost(0, (0, 0))
        assert np.all(apply_loss(seq, mask, fill=77).luma == 77)
