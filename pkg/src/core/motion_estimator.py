"""
Motion Estimator - Decoder-side motion vector estimation for lost blocks
Matches the intact ring around a lost block against shifted reference frames
"""
import logging
from dataclasses import dataclass, replace
from typing import Iterable, List, Optional, Set, Tuple, Union

import numpy as np

from .errors import EmptySupportError, FrameIndexError
from .loss_patterns import BlockCoord, BlockState, LossMask, block_rect
from .video_sequence import FrameBuffer, VideoSequence, padded_plane

logger = logging.getLogger(__name__)

FrameSource = Union[VideoSequence, FrameBuffer, np.ndarray]


@dataclass(frozen=True)
class MotionEstimate:
    """Winning displacement of a lost block towards frame tau + kappa."""
    kappa: int
    vector: Tuple[int, int]  # (x_d, y_d)
    error: float             # RMS luma difference over the ring
    reliable: bool = False


@dataclass(frozen=True)
class SupportRing:
    """Intact or concealed samples framing a lost block (absolute coordinates)."""
    xs: np.ndarray
    ys: np.ndarray
    width: int

    def __len__(self) -> int:
        return int(self.xs.size)

    @property
    def pixels(self) -> Set[Tuple[int, int]]:
        return set(zip(self.xs.tolist(), self.ys.tolist()))


def as_frames(source: FrameSource) -> np.ndarray:
    """Get the (frames, height, width) luma array of any frame source."""
    if isinstance(source, (VideoSequence, FrameBuffer)):
        return source.luma
    return np.asarray(source)


def build_support_ring(
    mask: LossMask,
    frame: int,
    block: BlockCoord,
    width: int = 4,
    block_size: Optional[int] = None
) -> SupportRing:
    """
    Collect the ring of usable samples around a lost block.

    Args:
        mask: Loss mask holding the current block states
        frame: Frame containing the block
        block: Block coordinate (bx, by)
        width: Ring width in samples
        block_size: Sample size of a block (defaults to the mask's)

    Returns:
        SupportRing clipped to the frame, without still-lost samples
    """
    size = block_size or mask.block_size
    status = mask.pixel_status(frame, size)
    height, width_px = status.shape
    x0, y0, x1, y1 = block_rect(block, size)

    xa, ya = max(x0 - width, 0), max(y0 - width, 0)
    xb, yb = min(x1 + width, width_px), min(y1 + width, height)
    usable = status[ya:yb, xa:xb] != BlockState.LOST
    usable[y0 - ya:y1 - ya, x0 - xa:x1 - xa] = False

    ys, xs = np.nonzero(usable)
    if xs.size == 0:
        raise EmptySupportError(f"no usable samples around block {block} in frame {frame}")
    return SupportRing(xs=xs + xa, ys=ys + ya, width=width)


def match_error(
    seq: FrameSource,
    ring: SupportRing,
    tau: int,
    candidate: Tuple[int, int],
    kappa: int
) -> float:
    """
    RMS difference between the ring in frame tau and its shifted copy in tau + kappa.

    Direct per-candidate evaluation; shifted reads replicate the frame edge.
    """
    frames = as_frames(seq)
    _check_reference(frames, tau, kappa)
    if len(ring) == 0:
        raise EmptySupportError("empty support ring")

    height, width = frames.shape[1:]
    dx, dy = candidate
    current = frames[tau][ring.ys, ring.xs].astype(np.float64)
    rx = np.clip(ring.xs + dx, 0, width - 1)
    ry = np.clip(ring.ys + dy, 0, height - 1)
    reference = frames[tau + kappa][ry, rx].astype(np.float64)
    return float(np.sqrt(np.mean((current - reference) ** 2)))


def candidate_errors(
    seq: FrameSource,
    ring: SupportRing,
    tau: int,
    kappa: int,
    d_max: int
) -> np.ndarray:
    """
    Sum of squared ring differences for every candidate vector.

    Returns:
        (2*d_max+1, 2*d_max+1) array indexed [y_d + d_max, x_d + d_max]
    """
    frames = as_frames(seq)
    _check_reference(frames, tau, kappa)
    if len(ring) == 0:
        raise EmptySupportError("empty support ring")

    current = frames[tau][ring.ys, ring.xs].astype(np.float64)
    reference = padded_plane(frames[tau + kappa].astype(np.float64), d_max)
    offsets = np.arange(2 * d_max + 1)
    # ring samples lie inside the frame, so a pad of d_max covers every shift
    rows = ring.ys[None, :] + offsets[:, None]
    cols = ring.xs[None, :] + offsets[:, None]
    shifted = reference[rows[:, None, :], cols[None, :, :]]
    return np.sum((shifted - current) ** 2, axis=2)


def estimate_motion(
    seq: FrameSource,
    mask: LossMask,
    frame: int,
    block: BlockCoord,
    kappa: int,
    d_max: int = 16,
    ring: Optional[SupportRing] = None,
    ring_width: int = 4,
    block_size: Optional[int] = None
) -> MotionEstimate:
    """
    Exhaustive integer search for the displacement of a lost block.

    Ties on the error are broken by smaller |x_d| + |y_d|, then smaller y_d,
    then smaller x_d.

    Args:
        seq: Frame source holding the decoder state
        mask: Loss mask
        frame: Frame tau containing the block
        block: Block coordinate
        kappa: Reference frame offset
        d_max: Maximum displacement per axis
        ring: Precomputed support ring (built from the mask if None)

    Returns:
        MotionEstimate (reliability not yet assessed)
    """
    if ring is None:
        ring = build_support_ring(mask, frame, block, ring_width, block_size)
    sse = candidate_errors(seq, ring, frame, kappa, d_max)

    best = sse.min()
    iy, ix = np.nonzero(sse == best)
    candidates = [(int(x) - d_max, int(y) - d_max) for y, x in zip(iy, ix)]
    dx, dy = min(candidates, key=lambda v: (abs(v[0]) + abs(v[1]), v[1], v[0]))
    error = float(np.sqrt(best / len(ring)))

    logger.debug("frame %d block %s kappa %+d: vector (%d, %d) error %.3f",
                 frame, block, kappa, dx, dy, error)
    return MotionEstimate(kappa=kappa, vector=(dx, dy), error=error)


def homogeneity_ok(error: float, best_error: float, t_rel: float) -> bool:
    """Homogeneity across reference frames: error within t_rel of the best one."""
    return error <= t_rel * max(best_error, 1.0)


def assess_reliability(
    estimates: Iterable[MotionEstimate],
    t_abs: float = 10.0,
    t_rel: float = 3.0
) -> List[MotionEstimate]:
    """
    Flag each estimate reliable iff its error passes the absolute and homogeneity tests.

    Args:
        estimates: Estimates of one block towards all reference frames
        t_abs: Absolute error threshold
        t_rel: Relative (homogeneity) threshold

    Returns:
        Estimates with the reliable flag set
    """
    estimates = list(estimates)
    if not estimates:
        return []
    best_error = min(e.error for e in estimates)
    return [
        replace(e, reliable=bool(e.error <= t_abs and homogeneity_ok(e.error, best_error, t_rel)))
        for e in estimates
    ]


def is_alignment_reliable(estimates: Iterable[MotionEstimate]) -> bool:
    """Motion alignment is used only if every reference estimate is reliable."""
    estimates = list(estimates)
    return bool(estimates) and all(e.reliable for e in estimates)


class MotionEstimator:
    """Estimates and judges the motion of lost blocks towards all reference frames."""

    def __init__(
        self,
        d_max: int = 16,
        ring_width: int = 4,
        t_abs: float = 10.0,
        t_rel: float = 3.0
    ):
        """
        Initialize the estimator.

        Args:
            d_max: Maximum displacement per axis
            ring_width: Width of the matching ring in samples
            t_abs: Absolute reliability threshold
            t_rel: Homogeneity threshold
        """
        self.d_max = d_max
        self.ring_width = ring_width
        self.t_abs = t_abs
        self.t_rel = t_rel

    def estimate_block(
        self,
        seq: FrameSource,
        mask: LossMask,
        frame: int,
        block: BlockCoord,
        kappas: Iterable[int],
        block_size: Optional[int] = None
    ) -> List[MotionEstimate]:
        """
        Estimate vectors towards every available reference frame and assess them.

        Raises:
            EmptySupportError: when the block has no usable ring
        """
        ring = build_support_ring(mask, frame, block, self.ring_width, block_size)
        estimates = [
            estimate_motion(seq, mask, frame, block, kappa, self.d_max, ring=ring)
            for kappa in kappas
        ]
        return assess_reliability(estimates, self.t_abs, self.t_rel)


def _check_reference(frames: np.ndarray, tau: int, kappa: int):
    count = frames.shape[0]
    if not 0 <= tau < count or not 0 <= tau + kappa < count:
        raise FrameIndexError(f"reference frame {tau}{kappa:+d} outside 0..{count - 1}")
