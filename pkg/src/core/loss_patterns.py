"""
Loss Patterns - Artificial block loss layouts and per-block concealment status
Checkerboard models isolated losses, interleaved slices model consecutive losses
"""
import logging
from enum import IntEnum
from pathlib import Path
from typing import Iterable, List, Optional, Tuple

import numpy as np

from .errors import FrameIndexError, GeometryMismatchError, MaskFormatError
from .video_sequence import FrameGeometry, VideoSequence

logger = logging.getLogger(__name__)

BlockCoord = Tuple[int, int]  # (bx, by)

DEFAULT_BLOCK_SIZE = 16


class BlockState(IntEnum):
    """Concealment status of one block."""
    INTACT = 0
    LOST = 1
    CONCEALED = 2


class LossMask:
    """
    Per-frame grid of block states.

    The grid is indexed [frame, by, bx]. A block goes intact -> lost while the mask
    is being built and lost -> concealed while the pipeline runs; nothing else.
    """

    def __init__(self, geometry: FrameGeometry, block_size: int = DEFAULT_BLOCK_SIZE):
        self.geometry = geometry
        self.block_size = block_size
        columns, rows = geometry.block_grid(block_size)
        self.grid = np.zeros((geometry.frame_count, rows, columns), dtype=np.uint8)

    @property
    def columns(self) -> int:
        return self.grid.shape[2]

    @property
    def rows(self) -> int:
        return self.grid.shape[1]

    @property
    def frame_count(self) -> int:
        return self.grid.shape[0]

    def state(self, frame: int, block: BlockCoord) -> BlockState:
        """Get the state of a block."""
        bx, by = block
        return BlockState(int(self.grid[frame, by, bx]))

    def mark_lost(self, frame: int, block: BlockCoord):
        """Mark an intact block as lost."""
        self._check_frame(frame)
        bx, by = block
        if self.grid[frame, by, bx] == BlockState.CONCEALED:
            raise ValueError(f"block {block} in frame {frame} is already concealed")
        self.grid[frame, by, bx] = BlockState.LOST

    def mark_concealed(self, frame: int, block: BlockCoord):
        """Flip a lost block to concealed."""
        bx, by = block
        if self.grid[frame, by, bx] != BlockState.LOST:
            raise ValueError(f"block {block} in frame {frame} is not lost")
        self.grid[frame, by, bx] = BlockState.CONCEALED

    def lost_blocks(self, frame: int) -> List[BlockCoord]:
        """Get still-lost blocks of a frame in raster order."""
        by, bx = np.nonzero(self.grid[frame] == BlockState.LOST)
        return [(int(x), int(y)) for y, x in zip(by, bx)]

    def damaged_blocks(self, frame: int) -> List[BlockCoord]:
        """Get lost or concealed blocks of a frame in raster order."""
        by, bx = np.nonzero(self.grid[frame] != BlockState.INTACT)
        return [(int(x), int(y)) for y, x in zip(by, bx)]

    def lost_count(self, frame: Optional[int] = None) -> int:
        """Count still-lost blocks (in one frame or all frames)."""
        grid = self.grid if frame is None else self.grid[frame]
        return int(np.count_nonzero(grid == BlockState.LOST))

    def damaged_count(self, frame: Optional[int] = None) -> int:
        """Count lost or concealed blocks."""
        grid = self.grid if frame is None else self.grid[frame]
        return int(np.count_nonzero(grid != BlockState.INTACT))

    def frames_with_losses(self) -> List[int]:
        """Get indices of frames containing at least one lost block."""
        return [int(t) for t in np.nonzero((self.grid == BlockState.LOST).any(axis=(1, 2)))[0]]

    def pixel_status(self, frame: int, block_size: Optional[int] = None) -> np.ndarray:
        """
        Expand the block grid of a frame to a per-sample state map.

        Args:
            frame: Frame index
            block_size: Sample size of one block (defaults to the mask's, chroma uses half)

        Returns:
            (rows*block_size, columns*block_size) uint8 array of BlockState values
        """
        size = block_size or self.block_size
        return np.repeat(np.repeat(self.grid[frame], size, axis=0), size, axis=1)

    def copy(self) -> 'LossMask':
        duplicate = LossMask(self.geometry, self.block_size)
        duplicate.grid = self.grid.copy()
        return duplicate

    def union(self, other: 'LossMask') -> 'LossMask':
        """Combine two masks; a block is lost if it is lost in either."""
        self.check_compatible(other.geometry)
        if other.block_size != self.block_size:
            raise GeometryMismatchError("block sizes differ")
        combined = self.copy()
        combined.grid = np.maximum(self.grid, other.grid)
        return combined

    def check_compatible(self, geometry: FrameGeometry):
        """Raise if the mask was built for another geometry."""
        if (geometry.width, geometry.height, geometry.frame_count) != \
                (self.geometry.width, self.geometry.height, self.geometry.frame_count):
            raise GeometryMismatchError(
                f"mask is {self.geometry.width}x{self.geometry.height}x{self.geometry.frame_count}, "
                f"sequence is {geometry.width}x{geometry.height}x{geometry.frame_count}"
            )

    def save(self, path: str):
        """
        Write the mask as text, one damaged block per line: `frame bx by`.
        """
        output_path = Path(path)
        output_path.parent.mkdir(parents=True, exist_ok=True)
        with open(output_path, 'w') as f:
            f.write(f"# loss mask {self.geometry.width}x{self.geometry.height} "
                    f"frames={self.geometry.frame_count} block={self.block_size}\n")
            f.write("# frame bx by\n")
            frames, bys, bxs = np.nonzero(self.grid != BlockState.INTACT)
            for t, by, bx in zip(frames, bys, bxs):
                f.write(f"{t} {bx} {by}\n")

    @classmethod
    def load(
        cls,
        path: str,
        geometry: FrameGeometry,
        block_size: int = DEFAULT_BLOCK_SIZE
    ) -> 'LossMask':
        """
        Read a text mask; every listed block is lost.

        Args:
            path: Mask file path
            geometry: Geometry of the sequence the mask belongs to
            block_size: Block size in samples

        Returns:
            LossMask
        """
        mask = cls(geometry, block_size)
        with open(path, 'r') as f:
            for line_number, line in enumerate(f, start=1):
                line = line.split('#', 1)[0].strip()
                if not line:
                    continue
                parts = line.split()
                try:
                    t, bx, by = (int(p) for p in parts)
                except ValueError:
                    raise MaskFormatError(f"{path}:{line_number}: expected 'frame bx by', got '{line}'")
                if not (0 <= bx < mask.columns and 0 <= by < mask.rows):
                    raise MaskFormatError(f"{path}:{line_number}: block ({bx}, {by}) outside grid")
                if not 0 <= t < mask.frame_count:
                    raise MaskFormatError(f"{path}:{line_number}: frame {t} outside sequence")
                mask.mark_lost(t, (bx, by))
        logger.info("Loaded %d lost blocks from %s", mask.lost_count(), Path(path).name)
        return mask

    def __eq__(self, other) -> bool:
        if not isinstance(other, LossMask):
            return NotImplemented
        return self.block_size == other.block_size and np.array_equal(self.grid, other.grid)

    def _check_frame(self, frame: int):
        if not 0 <= frame < self.frame_count:
            raise FrameIndexError(f"frame {frame} outside 0..{self.frame_count - 1}")


def checkerboard_mask(
    frames: Iterable[int],
    parity: int,
    geometry: FrameGeometry,
    block_size: int = DEFAULT_BLOCK_SIZE
) -> LossMask:
    """
    Isolated losses: block (bx, by) is lost iff (bx + by) % 2 == parity.

    Args:
        frames: Frames carrying losses
        parity: 0 or 1
        geometry: Sequence geometry

    Returns:
        LossMask
    """
    if parity not in (0, 1):
        raise ValueError("parity must be 0 or 1")
    mask = LossMask(geometry, block_size)
    by, bx = np.indices((mask.rows, mask.columns))
    pattern = (bx + by) % 2 == parity
    for t in frames:
        mask._check_frame(t)
        mask.grid[t][pattern] = BlockState.LOST
    return mask


def slice_mask(
    frames: Iterable[int],
    phase: int,
    geometry: FrameGeometry,
    block_size: int = DEFAULT_BLOCK_SIZE
) -> LossMask:
    """
    Consecutive losses: every block row with by % 2 == phase is lost.
    """
    if phase not in (0, 1):
        raise ValueError("phase must be 0 or 1")
    mask = LossMask(geometry, block_size)
    for t in frames:
        mask._check_frame(t)
        mask.grid[t, phase::2, :] = BlockState.LOST
    return mask


def random_block_selection(
    frames: Iterable[int],
    count: int,
    geometry: FrameGeometry,
    seed: int = 0,
    block_size: int = DEFAULT_BLOCK_SIZE
) -> LossMask:
    """
    Pick `count` distinct interior blocks per frame, reproducibly.

    Border blocks are skipped so every selected block has a complete support ring.
    """
    mask = LossMask(geometry, block_size)
    rng = np.random.default_rng(seed)
    interior = [(bx, by) for by in range(1, mask.rows - 1) for bx in range(1, mask.columns - 1)]
    if not interior:
        return mask
    for t in frames:
        mask._check_frame(t)
        picks = rng.choice(len(interior), size=min(count, len(interior)), replace=False)
        for index in sorted(int(i) for i in picks):
            mask.mark_lost(t, interior[index])
    return mask


def apply_loss(seq: VideoSequence, mask: LossMask, fill: int = 0) -> VideoSequence:
    """
    Overwrite the samples of every damaged block with a fill value.

    Chroma planes, when present, lose the co-located half-size blocks too.

    Args:
        seq: Undistorted sequence
        mask: Loss mask for the sequence
        fill: Value written into lost samples

    Returns:
        Corrupted copy of the sequence
    """
    mask.check_compatible(seq.geometry)
    damaged = mask.grid != BlockState.INTACT

    def corrupt(plane: np.ndarray, size: int) -> np.ndarray:
        expanded = np.repeat(np.repeat(damaged, size, axis=1), size, axis=2)
        out = plane.copy()
        out[expanded] = fill
        return out

    luma = corrupt(seq.luma, mask.block_size)
    if not seq.has_chroma:
        return VideoSequence(luma, fps=seq.fps)
    half = mask.block_size // 2
    return VideoSequence(luma, corrupt(seq.cb, half), corrupt(seq.cr, half), fps=seq.fps)


def concealment_order(mask: LossMask, frame: int) -> List[BlockCoord]:
    """Raster order (top-to-bottom, left-to-right) of the lost blocks of a frame."""
    return mask.lost_blocks(frame)


def block_rect(block: BlockCoord, block_size: int) -> Tuple[int, int, int, int]:
    """Get (x0, y0, x1, y1) sample bounds of a block (end exclusive)."""
    bx, by = block
    return bx * block_size, by * block_size, (bx + 1) * block_size, (by + 1) * block_size

