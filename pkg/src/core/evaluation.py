"""
Evaluation - Comparison runs and training of the temporal weighting parameters
Best weights are searched per block and a line is fitted through (error, weight) pairs
"""
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from itertools import combinations
from typing import Callable, Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from .block_concealer import BlockConcealer, conceal_sequence
from .concealment_types import ConcealConfig, ConcealMode
from .errors import DegenerateFitError
from .loss_patterns import BlockCoord, LossMask, apply_loss, block_rect, random_block_selection
from .motion_estimator import MotionEstimate
from .quality_metrics import block_psnr, capped_psnr, psnr_blocks, psnr_per_block
from .video_sequence import FrameBuffer, FrameGeometry, VideoSequence

logger = logging.getLogger(__name__)

# 0.00, 0.05, ..., 1.50
DEFAULT_OMEGA_GRID: Tuple[float, ...] = tuple(round(0.05 * i, 2) for i in range(31))

__all__ = [
    'DEFAULT_OMEGA_GRID', 'TrainingPair', 'ComparisonRow', 'GainRow', 'ComparisonTable',
    'psnr_blocks', 'psnr_per_block', 'representative_error', 'best_weight_search',
    'collect_training_pairs', 'fit_weight_model', 'run_comparison', 'omega_sensitivity',
]


@dataclass(frozen=True)
class TrainingPair:
    """Motion error of a block and the reference weight that concealed it best."""
    error: float
    best_omega: float
    frame: int = -1
    block: BlockCoord = (-1, -1)
    best_psnr: float = float('nan')


@dataclass(frozen=True)
class ComparisonRow:
    pattern: str
    mode: ConcealMode
    psnr: float
    blocks: int
    fallbacks: int = 0


@dataclass(frozen=True)
class GainRow:
    """PSNR of mode_a minus PSNR of mode_b; pattern 'mean' averages all patterns."""
    pattern: str
    mode_a: ConcealMode
    mode_b: ConcealMode
    gain: float


@dataclass
class ComparisonTable:
    rows: List[ComparisonRow] = field(default_factory=list)
    gains: List[GainRow] = field(default_factory=list)

    def psnr(self, pattern: str, mode: ConcealMode) -> float:
        for row in self.rows:
            if row.pattern == pattern and row.mode == mode:
                return row.psnr
        raise KeyError((pattern, mode))

    def mean_gain(self, mode_a: ConcealMode, mode_b: ConcealMode) -> float:
        for gain in self.gains:
            if gain.pattern == 'mean' and gain.mode_a == mode_a and gain.mode_b == mode_b:
                return gain.gain
        raise KeyError((mode_a, mode_b))


def representative_error(estimates: Iterable[MotionEstimate]) -> float:
    """
    One motion error per block: mean over reliable reference estimates,
    or over all of them when none is reliable.
    """
    references = [e for e in estimates if e.kappa != 0]
    if not references:
        raise ValueError("no reference estimates")
    reliable = [e.error for e in references if e.reliable]
    return float(np.mean(reliable if reliable else [e.error for e in references]))


def _search_config(config: ConcealConfig) -> ConcealConfig:
    return config.with_overrides(mode=ConcealMode.CONTENT_ADAPTIVE, conceal_chroma=False)


def best_weight_search(
    buffer: FrameBuffer,
    original: VideoSequence,
    mask: LossMask,
    frame: int,
    block: BlockCoord,
    config: Optional[ConcealConfig] = None,
    omega_grid: Sequence[float] = DEFAULT_OMEGA_GRID,
    concealer: Optional[BlockConcealer] = None
) -> TrainingPair:
    """
    Find the uniform reference-layer weight that conceals a block best.

    The block is extrapolated once per grid value with every reference layer
    weighted by that value and the distorted layer by 1; equal PSNRs go to the
    larger weight.

    Args:
        buffer: Decoder state holding the block as lost
        original: Undistorted sequence (same frame indexing as buffer)
        mask: Loss mask with the block lost
        frame: Frame of the block
        block: Lost block
        config: Pipeline parameters
        omega_grid: Candidate weights
        concealer: Reuse an existing concealer

    Returns:
        TrainingPair
    """
    if not omega_grid:
        raise ValueError("omega grid is empty")
    concealer = concealer or BlockConcealer(_search_config(config or ConcealConfig()))
    size = concealer.config.block_size
    estimates = concealer.estimate(buffer, mask, frame, block)

    x0, y0, x1, y1 = block_rect(block, size)
    target = original.luma[frame, y0:y1, x0:x1]

    best = None
    for omega in sorted(set(float(g) for g in omega_grid)):
        report = concealer.extrapolate_block(
            buffer, mask, frame, block, estimates=estimates, layer_omega_override=omega
        )
        score = block_psnr(target, report.samples)
        if best is None or score >= best[0]:
            best = (score, omega)

    pair = TrainingPair(
        error=representative_error(estimates),
        best_omega=best[1],
        frame=frame,
        block=block,
        best_psnr=best[0]
    )
    logger.debug("frame %d block %s: error %.3f best omega %.2f", frame, block, pair.error, pair.best_omega)
    return pair


def _isolated_loss_window(
    original: VideoSequence,
    frame: int,
    block: BlockCoord,
    config: ConcealConfig
) -> Tuple[FrameBuffer, VideoSequence, LossMask, int]:
    """Frames around one block with only that block lost, re-indexed from 0."""
    lo = max(frame - config.n_prev, 0)
    hi = min(frame + config.n_follow + 1, original.frame_count)
    local = VideoSequence(original.luma[lo:hi], fps=original.fps)
    mask = LossMask(FrameGeometry(local.width, local.height, local.frame_count), config.block_size)
    mask.mark_lost(frame - lo, block)
    buffer = apply_loss(local, mask).frame_buffer()
    return buffer, local, mask, frame - lo


def collect_training_pairs(
    original: VideoSequence,
    frames: Iterable[int],
    blocks_per_frame: int = 25,
    config: Optional[ConcealConfig] = None,
    omega_grid: Sequence[float] = DEFAULT_OMEGA_GRID,
    seed: int = 0,
    threads: int = 1,
    progress_callback: Optional[Callable[[int, int], None]] = None
) -> List[TrainingPair]:
    """
    Gather (error, best weight) pairs from isolated losses.

    In every selected frame `blocks_per_frame` interior blocks are drawn; each one is
    lost on its own and searched with best_weight_search.

    Returns:
        Pairs in frame and raster order
    """
    config = _search_config(config or ConcealConfig())
    frames = [t for t in frames if t - 1 >= 0 or config.n_follow > 0]
    selection = random_block_selection(frames, blocks_per_frame, original.geometry, seed, config.block_size)
    jobs = [(t, b) for t in selection.frames_with_losses() for b in selection.lost_blocks(t)]
    concealer = BlockConcealer(config)
    total = len(jobs)
    completed = [0]

    def search(job: Tuple[int, BlockCoord]) -> TrainingPair:
        t, block = job
        buffer, local, mask, local_t = _isolated_loss_window(original, t, block, config)
        pair = best_weight_search(buffer, local, mask, local_t, block, config, omega_grid, concealer)
        return TrainingPair(pair.error, pair.best_omega, t, block, pair.best_psnr)

    def report(pair: TrainingPair) -> TrainingPair:
        completed[0] += 1
        if progress_callback:
            progress_callback(completed[0], total)
        return pair

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as executor:
            pairs = [report(p) for p in executor.map(search, jobs)]
    else:
        pairs = [report(search(job)) for job in jobs]

    logger.info("Collected %d training pairs from %d frames", len(pairs), len(selection.frames_with_losses()))
    return pairs


def fit_weight_model(pairs: Sequence[TrainingPair]) -> Tuple[float, float]:
    """
    Least-squares line best_omega = a + b * error.

    Returns:
        (omega_max, t_e) = (a, -a / b)

    Raises:
        DegenerateFitError: fewer than two distinct errors, or the line does not
            fall from a positive intercept
    """
    if len(pairs) < 2:
        raise DegenerateFitError(f"need at least 2 pairs, got {len(pairs)}")
    errors = np.array([p.error for p in pairs], dtype=np.float64)
    omegas = np.array([p.best_omega for p in pairs], dtype=np.float64)
    if np.unique(errors).size < 2:
        raise DegenerateFitError("all pairs share one motion error")

    slope, intercept = np.polyfit(errors, omegas, 1)
    tolerance = 1e-12 * max(1.0, float(np.max(np.abs(omegas)))) / max(float(np.ptp(errors)), 1e-300)
    if slope >= -tolerance:
        raise DegenerateFitError(f"no decreasing trend (slope {slope:.3g})")
    if intercept <= 0:
        raise DegenerateFitError(f"non-positive intercept {intercept:.3g}")

    omega_max, t_e = float(intercept), float(-intercept / slope)
    logger.info("Fitted omega_max=%.6f t_e=%.6f from %d pairs", omega_max, t_e, len(pairs))
    return omega_max, t_e


def run_comparison(
    original: VideoSequence,
    masks: Dict[str, LossMask],
    modes: Sequence[ConcealMode],
    config: Optional[ConcealConfig] = None,
    threads: int = 1,
    progress_callback: Optional[Callable[[int, int], None]] = None
) -> ComparisonTable:
    """
    Conceal every loss pattern with every mode and compare PSNRs.

    Each (pattern, mode) cell runs independently on a fresh copy of its mask.
    Gains are listed for every pair of modes in the given order, per pattern
    and averaged over patterns; a single mode gives no gain rows.

    Args:
        original: Undistorted sequence
        masks: Loss masks keyed by pattern name
        modes: Concealment modes
        config: Base parameters (mode is replaced per cell)
        threads: Cells run concurrently

    Returns:
        ComparisonTable
    """
    config = config or ConcealConfig()
    modes = [ConcealMode(m) for m in modes]
    cells = [(name, mode) for name in masks for mode in modes]
    distorted = {name: apply_loss(original, mask) for name, mask in masks.items()}
    completed = [0]

    def run_cell(cell: Tuple[str, ConcealMode]) -> ComparisonRow:
        name, mode = cell
        mask = masks[name].copy()
        result = conceal_sequence(distorted[name], mask, config.with_overrides(mode=mode), original=original)
        value = psnr_blocks(original, result.sequence, masks[name])
        logger.info("%s / %s: %.2f dB over %d blocks", name, mode.label, value, result.concealed_count)
        return ComparisonRow(name, mode, value, result.concealed_count, result.fallback_count)

    def report(row: ComparisonRow) -> ComparisonRow:
        completed[0] += 1
        if progress_callback:
            progress_callback(completed[0], len(cells))
        return row

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as executor:
            rows = [report(r) for r in executor.map(run_cell, cells)]
    else:
        rows = [report(run_cell(c)) for c in cells]

    table = ComparisonTable(rows=rows)
    for mode_a, mode_b in combinations(modes, 2):
        per_pattern = []
        for name in masks:
            gain = capped_psnr(table.psnr(name, mode_a)) - capped_psnr(table.psnr(name, mode_b))
            per_pattern.append(gain)
            table.gains.append(GainRow(name, mode_a, mode_b, gain))
        table.gains.append(GainRow('mean', mode_a, mode_b, float(np.mean(per_pattern))))
    return table


def omega_sensitivity(
    original: VideoSequence,
    masks: Dict[str, LossMask],
    thresholds: Sequence[Tuple[float, float]],
    config: Optional[ConcealConfig] = None,
    mode: ConcealMode = ConcealMode.CONTENT_ADAPTIVE,
    threads: int = 1,
    progress_callback: Optional[Callable[[int, int], None]] = None
) -> List[Tuple[float, float, ComparisonRow]]:
    """
    Repeat a comparison for several reliability threshold pairs.

    Returns:
        (t_abs, t_rel, row) for every threshold pair and pattern
    """
    config = config or ConcealConfig()
    results = []
    if progress_callback:
        progress_callback(0, len(thresholds))
    for i, (t_abs, t_rel) in enumerate(thresholds):
        table = run_comparison(original, masks, [mode], config.with_overrides(t_abs=t_abs, t_rel=t_rel), threads)
        results.extend((t_abs, t_rel, row) for row in table.rows)
        if progress_callback:
            progress_callback(i + 1, len(thresholds))
    return results
