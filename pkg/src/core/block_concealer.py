"""
Block Concealer - Runs the concealment of lost blocks frame by frame
Motion estimation, volume extraction, weighting and extrapolation per block
"""
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Dict, List, Optional, Tuple

import cv2
import numpy as np

from .concealment_types import ConcealConfig, ConcealMode
from .errors import EmptySupportError, GeometryMismatchError, NoSupportError
from .extrapolation_volume import build_weights, compact_layers, extract_volume
from .frequency_selective import FrequencySelectiveExtrapolator, FseTrace, to_pixels
from .loss_patterns import BlockCoord, BlockState, LossMask, block_rect, concealment_order
from .motion_estimator import MotionEstimate, MotionEstimator, is_alignment_reliable
from .quality_metrics import psnr_per_block
from .video_sequence import FrameBuffer, VideoSequence, padded_plane
from ..utils.volume_dump import dump_volume

logger = logging.getLogger(__name__)

MID_GRAY = 128.0


@dataclass
class BlockReport:
    """Outcome of concealing one block."""
    frame: int
    block: BlockCoord
    mode: ConcealMode
    estimates: List[MotionEstimate] = field(default_factory=list)
    layer_factors: Tuple[float, ...] = ()   # per volume layer p, before compaction
    aligned: bool = False
    fallback: bool = False
    psnr: Optional[float] = None
    planes: Dict[str, np.ndarray] = field(default_factory=dict, repr=False)

    @property
    def samples(self) -> np.ndarray:
        """Reconstructed luma block, indexed [y, x]."""
        return self.planes['y']

    def factor_for(self, kappa: int, n_prev: int) -> Optional[float]:
        p = kappa + n_prev
        if 0 <= p < len(self.layer_factors):
            return self.layer_factors[p]
        return None


@dataclass
class ConcealResult:
    """Concealed sequence plus one report per concealed block."""
    sequence: VideoSequence
    reports: List[BlockReport]

    @property
    def concealed_count(self) -> int:
        return len(self.reports)

    @property
    def fallback_count(self) -> int:
        return sum(1 for r in self.reports if r.fallback)

    @property
    def mean_block_psnr(self) -> Optional[float]:
        values = [r.psnr for r in self.reports if r.psnr is not None and np.isfinite(r.psnr)]
        return float(np.mean(values)) if values else None


def halve_vector(vector: Tuple[int, int]) -> Tuple[int, int]:
    """Scale a luma vector to chroma resolution, rounding halves away from zero."""
    return tuple(int(np.sign(v) * np.floor(abs(v) / 2.0 + 0.5)) for v in vector)


def fallback_fill(
    plane: np.ndarray,
    mask: LossMask,
    frame: int,
    block: BlockCoord,
    block_size: int,
    border: int
) -> np.ndarray:
    """
    Fill a block without model support.

    Every sample takes the nearest intact or concealed sample of the current frame
    within the volume window; with none there, the co-located block of the previous
    frame is copied, and mid-gray is used for the first frame.

    Returns:
        Block samples indexed [y, x]
    """
    status = mask.pixel_status(frame, block_size)
    height, width = status.shape
    x0, y0, x1, y1 = block_rect(block, block_size)
    xa, ya = max(x0 - border, 0), max(y0 - border, 0)
    xb, yb = min(x1 + border, width), min(y1 + border, height)

    available = status[ya:yb, xa:xb] != BlockState.LOST
    if available.any():
        # zero pixels are the sources; labels count them in raster order from 1
        sources = np.where(available, 0, 255).astype(np.uint8)
        _, labels = cv2.distanceTransformWithLabels(
            sources, cv2.DIST_L2, 5, labelType=cv2.DIST_LABEL_PIXEL
        )
        values = plane[frame, ya:yb, xa:xb][available]
        filled = values[labels - 1]
        return filled[y0 - ya:y1 - ya, x0 - xa:x1 - xa].astype(np.float64)

    if frame > 0:
        return plane[frame - 1, y0:y1, x0:x1].astype(np.float64)
    return np.full((block_size, block_size), MID_GRAY)


def dependency_levels(
    blocks: List[BlockCoord],
    block_size: int,
    extent: int
) -> List[List[BlockCoord]]:
    """
    Group raster-ordered blocks into levels that can be concealed concurrently.

    A block depends on every earlier block whose footprint reaches into its window
    (footprint grown by `extent`); its level is one above the deepest dependency.
    """
    levels: Dict[BlockCoord, int] = {}
    rects = [block_rect(b, block_size) for b in blocks]
    for j, block in enumerate(blocks):
        x0, y0, x1, y1 = rects[j]
        level = 0
        for i in range(j):
            ax0, ay0, ax1, ay1 = rects[i]
            if ax0 < x1 + extent and ax1 > x0 - extent and ay0 < y1 + extent and ay1 > y0 - extent:
                level = max(level, levels[blocks[i]] + 1)
        levels[block] = level

    grouped: List[List[BlockCoord]] = [[] for _ in range(max(levels.values(), default=-1) + 1)]
    for block in blocks:
        grouped[levels[block]].append(block)
    return grouped


class BlockConcealer:
    """Conceals single lost blocks in a frame buffer."""

    def __init__(
        self,
        config: Optional[ConcealConfig] = None,
        trace_dir: Optional[str] = None,
        dump_dir: Optional[str] = None
    ):
        """
        Initialize the concealer.

        Args:
            config: Pipeline parameters (validated here)
            trace_dir: Write a per-block FSE trace CSV into this folder
            dump_dir: Write every volume with its weights into this folder
        """
        self.config = config or ConcealConfig()
        self.config.validate()
        self.estimator = MotionEstimator(
            d_max=self.config.d_max,
            ring_width=self.config.ring_width,
            t_abs=self.config.t_abs,
            t_rel=self.config.t_rel
        )
        self.extrapolator = FrequencySelectiveExtrapolator(self.config.fse)
        self.chroma_config = self.config.halved() if self.config.conceal_chroma else None
        self.chroma_extrapolator = (
            FrequencySelectiveExtrapolator(self.chroma_config.fse) if self.chroma_config else None
        )
        self.trace_dir = Path(trace_dir) if trace_dir else None
        self.dump_dir = Path(dump_dir) if dump_dir else None

    @property
    def window_extent(self) -> int:
        """How far around a block its concealment reads the current frame."""
        return max(self.config.border, self.config.ring_width)

    def reference_offsets(self, frame: int, frame_count: int) -> List[int]:
        """Offsets kappa whose reference frame exists."""
        return [k for k in self.config.kappas if 0 <= frame + k < frame_count]

    def estimate(
        self,
        buffer: FrameBuffer,
        mask: LossMask,
        frame: int,
        block: BlockCoord
    ) -> List[MotionEstimate]:
        """Motion estimates with reliability flags; empty when the block has no ring."""
        kappas = self.reference_offsets(frame, buffer.frame_count)
        try:
            return self.estimator.estimate_block(
                buffer.luma, mask, frame, block, kappas, self.config.block_size
            )
        except EmptySupportError:
            logger.warning("frame %d block %s: no support ring, motion unknown", frame, block)
            return []

    def extrapolate_block(
        self,
        buffer: FrameBuffer,
        mask: LossMask,
        frame: int,
        block: BlockCoord,
        estimates: Optional[List[MotionEstimate]] = None,
        layer_omega_override: Optional[float] = None
    ) -> BlockReport:
        """
        Reconstruct a lost block without touching the buffer or the mask.

        Args:
            buffer: Decoder state
            mask: Loss mask with current block states
            frame: Frame holding the block
            block: Lost block
            estimates: Reuse these motion estimates instead of searching again
            layer_omega_override: Uniform reference-layer factor (distorted layer 1.0)

        Returns:
            BlockReport holding the rounded block samples of every concealed plane
        """
        if mask.state(frame, block) != BlockState.LOST:
            raise ValueError(f"block {block} in frame {frame} is not lost")
        if estimates is None:
            estimates = self.estimate(buffer, mask, frame, block)

        report = BlockReport(
            frame=frame,
            block=block,
            mode=self.config.mode,
            estimates=list(estimates),
            aligned=is_alignment_reliable(estimates)
        )

        values, factors, fallback = self._extrapolate_plane(
            buffer.luma, mask, frame, block, report.estimates, self.config,
            self.extrapolator, layer_omega_override, 'y'
        )
        report.planes['y'] = values
        report.layer_factors = factors
        report.fallback = fallback

        if self.chroma_config is not None and buffer.has_chroma:
            chroma_estimates = [replace(e, vector=halve_vector(e.vector)) for e in report.estimates]
            for name in ('cb', 'cr'):
                values, _, fallback = self._extrapolate_plane(
                    buffer.plane(name), mask, frame, block, chroma_estimates, self.chroma_config,
                    self.chroma_extrapolator, layer_omega_override, name
                )
                report.planes[name] = values
                report.fallback = report.fallback or fallback
        return report

    def write_block(self, buffer: FrameBuffer, mask: LossMask, report: BlockReport):
        """Write reconstructed samples into the buffer and mark the block concealed."""
        for name, values in report.planes.items():
            size = self.config.block_size if name == 'y' else self.chroma_config.block_size
            x0, y0, x1, y1 = block_rect(report.block, size)
            buffer.plane(name)[report.frame, y0:y1, x0:x1] = values
        mask.mark_concealed(report.frame, report.block)

    def conceal_block(
        self,
        buffer: FrameBuffer,
        mask: LossMask,
        frame: int,
        block: BlockCoord
    ) -> BlockReport:
        """
        Conceal one lost block in place.

        Args:
            buffer: Decoder state, updated in the block footprint
            mask: Loss mask; the block flips from lost to concealed

        Returns:
            BlockReport
        """
        report = self.extrapolate_block(buffer, mask, frame, block)
        self.write_block(buffer, mask, report)
        return report

    def _extrapolate_plane(
        self,
        plane: np.ndarray,
        mask: LossMask,
        frame: int,
        block: BlockCoord,
        estimates: List[MotionEstimate],
        config: ConcealConfig,
        extrapolator: FrequencySelectiveExtrapolator,
        layer_omega_override: Optional[float],
        plane_name: str
    ) -> Tuple[np.ndarray, Tuple[float, ...], bool]:
        if config.mode == ConcealMode.TEMPORAL_COPY:
            return self._temporal_copy(plane, mask, frame, block, estimates, config)

        vol = extract_volume(plane, mask, frame, block, estimates, config)
        try:
            weights = build_weights(vol, estimates, config, layer_omega_override)
        except NoSupportError:
            logger.warning("frame %d block %s (%s): no weighted support, using fallback fill",
                           frame, block, plane_name)
            fill = fallback_fill(plane, mask, frame, block, config.block_size, config.border)
            return fill, (), True

        stem = f"f{frame:04d}_x{block[0]:03d}_y{block[1]:03d}_{plane_name}"
        if self.dump_dir is not None:
            dump_volume(vol, weights, str(self.dump_dir / f"{stem}.vol"))

        trace = FseTrace(track_energy=True) if self.trace_dir is not None else None
        compact_vol, compact_weights = compact_layers(vol, weights)
        values = extrapolator.extrapolate(compact_vol, compact_weights, trace)
        if trace is not None:
            trace.to_csv(str(self.trace_dir / f"{stem}.csv"))

        logger.debug("frame %d block %s (%s): %d of %d layers modelled",
                     frame, block, plane_name, compact_vol.dims[2], vol.dims[2])
        # [m, n] -> [y, x]
        return to_pixels(values.T), weights.layer_factors, False

    def _temporal_copy(
        self,
        plane: np.ndarray,
        mask: LossMask,
        frame: int,
        block: BlockCoord,
        estimates: List[MotionEstimate],
        config: ConcealConfig
    ) -> Tuple[np.ndarray, Tuple[float, ...], bool]:
        if frame == 0:
            fill = fallback_fill(plane, mask, frame, block, config.block_size, config.border)
            return fill, (), True

        previous = next((e for e in estimates if e.kappa == -1), None)
        dx, dy = previous.vector if previous is not None and previous.reliable else (0, 0)
        pad = max(abs(dx), abs(dy), 1)
        reference = padded_plane(plane[frame - 1], pad)
        x0, y0, x1, y1 = block_rect(block, config.block_size)
        copied = reference[y0 + dy + pad:y1 + dy + pad, x0 + dx + pad:x1 + dx + pad]
        return copied.astype(np.float64), (), False


def conceal_sequence(
    seq: VideoSequence,
    mask: LossMask,
    config: Optional[ConcealConfig] = None,
    original: Optional[VideoSequence] = None,
    threads: int = 1,
    progress_callback: Optional[Callable[[int, int], None]] = None,
    trace_dir: Optional[str] = None,
    dump_dir: Optional[str] = None
) -> ConcealResult:
    """
    Conceal every lost block of a sequence.

    Frames are processed in temporal order and blocks in raster order; with more
    than one thread, blocks of a frame whose windows do not overlap are concealed
    together and written back in raster order, which gives the same output.

    Args:
        seq: Distorted sequence
        mask: Loss mask; lost blocks are flipped to concealed in place
        config: Pipeline parameters
        original: Undistorted sequence for per-block PSNR
        threads: Worker threads per dependency level
        progress_callback: Callback function(current, total) for progress updates

    Returns:
        ConcealResult
    """
    config = config or ConcealConfig()
    mask.check_compatible(seq.geometry)
    if mask.block_size != config.block_size:
        raise GeometryMismatchError(
            f"mask block size {mask.block_size} differs from configured {config.block_size}"
        )
    if original is not None:
        mask.check_compatible(original.geometry)

    concealer = BlockConcealer(config, trace_dir=trace_dir, dump_dir=dump_dir)
    if config.conceal_chroma and not seq.has_chroma:
        logger.warning("chroma concealment requested but the sequence has no chroma")

    buffer = seq.frame_buffer()
    frames = mask.frames_with_losses()
    total = mask.lost_count()
    done = 0
    reports: List[BlockReport] = []

    if progress_callback:
        progress_callback(0, total)

    executor = ThreadPoolExecutor(max_workers=threads) if threads > 1 else None
    try:
        for t in frames:
            blocks = concealment_order(mask, t)
            if executor is not None:
                levels = dependency_levels(blocks, config.block_size, concealer.window_extent)
            else:
                levels = [[b] for b in blocks]

            frame_reports = []
            for level in levels:
                if executor is not None and len(level) > 1:
                    level_reports = list(executor.map(
                        lambda b: concealer.extrapolate_block(buffer, mask, t, b), level
                    ))
                else:
                    level_reports = [concealer.extrapolate_block(buffer, mask, t, b) for b in level]

                for report in level_reports:
                    concealer.write_block(buffer, mask, report)
                    if original is not None:
                        report.psnr = psnr_per_block(original, buffer.luma, t, report.block, config.block_size)
                    frame_reports.append(report)
                    done += 1
                    if progress_callback:
                        progress_callback(done, total)

            frame_reports.sort(key=lambda r: (r.block[1], r.block[0]))
            reports.extend(frame_reports)
            logger.info("Frame %d: concealed %d blocks", t, len(frame_reports))
    finally:
        if executor is not None:
            executor.shutdown()

    fallbacks = sum(1 for r in reports if r.fallback)
    if fallbacks:
        logger.warning("%d of %d blocks used the fallback fill", fallbacks, len(reports))
    return ConcealResult(sequence=buffer.to_sequence(), reports=reports)
