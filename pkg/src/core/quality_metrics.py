"""
Quality Metrics - PSNR between reconstructed and undistorted block samples
"""
import math
from typing import Union

import numpy as np

from .errors import EmptyMaskError
from .loss_patterns import BlockCoord, BlockState, LossMask, block_rect
from .video_sequence import VideoSequence

PEAK = 255.0
PSNR_CAP = 99.99  # stands in for +inf in text output

Frames = Union[VideoSequence, np.ndarray]


def _luma(source: Frames) -> np.ndarray:
    return source.luma if isinstance(source, VideoSequence) else np.asarray(source)


def psnr_from_mse(mse: float) -> float:
    """10*log10(255^2 / mse); inf for a perfect match."""
    if mse <= 0.0:
        return math.inf
    return 10.0 * math.log10(PEAK * PEAK / mse)


def capped_psnr(value: float) -> float:
    """Clamp a PSNR to the text output cap."""
    return min(value, PSNR_CAP)


def damaged_sample_map(mask: LossMask) -> np.ndarray:
    """(frames, height, width) boolean map of samples in lost or concealed blocks."""
    size = mask.block_size
    damaged = mask.grid != BlockState.INTACT
    return np.repeat(np.repeat(damaged, size, axis=1), size, axis=2)


def psnr_blocks(original: Frames, concealed: Frames, mask: LossMask) -> float:
    """
    PSNR over the luma samples of every damaged block of all frames.

    Args:
        original: Undistorted sequence
        concealed: Reconstructed sequence
        mask: Loss mask; lost and concealed blocks both count

    Returns:
        PSNR in dB (inf when every sample matches)

    Raises:
        EmptyMaskError: if the mask holds no damaged block
    """
    a, b = _luma(original), _luma(concealed)
    if a.shape != b.shape:
        raise ValueError(f"sequence shapes differ: {a.shape} vs {b.shape}")
    if isinstance(original, VideoSequence):
        mask.check_compatible(original.geometry)
    samples = damaged_sample_map(mask)
    if not samples.any():
        raise EmptyMaskError("no damaged blocks to measure")
    diff = a[samples].astype(np.float64) - b[samples].astype(np.float64)
    return psnr_from_mse(float(np.mean(diff * diff)))


def psnr_per_block(original: Frames, concealed: Frames, frame: int, block: BlockCoord,
                   block_size: int = 16) -> float:
    """PSNR of one block of one frame."""
    x0, y0, x1, y1 = block_rect(block, block_size)
    a = _luma(original)[frame, y0:y1, x0:x1].astype(np.float64)
    b = _luma(concealed)[frame, y0:y1, x0:x1].astype(np.float64)
    return psnr_from_mse(float(np.mean((a - b) ** 2)))


def block_psnr(reference: np.ndarray, values: np.ndarray) -> float:
    """PSNR between two equally shaped sample arrays."""
    diff = np.asarray(reference, dtype=np.float64) - np.asarray(values, dtype=np.float64)
    return psnr_from_mse(float(np.mean(diff * diff)))
