"""
Report Exporter - Writes block reports, comparison tables, training pairs and frame snapshots
"""
import csv
import logging
import math
from pathlib import Path
from typing import Callable, Iterable, List, Optional, Sequence, Tuple

from .block_concealer import BlockReport
from .evaluation import ComparisonRow, ComparisonTable, TrainingPair
from .quality_metrics import capped_psnr
from .video_sequence import VideoSequence
from ..utils.image_formats import ImageFormats

logger = logging.getLogger(__name__)

REPORT_HEADER = ['frame', 'bx', 'by', 'kappa', 'dx', 'dy', 'err', 'reliable', 'omega', 'psnr']
PAIRS_HEADER = ['error', 'best_omega']
TABLE_HEADER = ['pattern', 'mode', 'psnr', 'blocks', 'fallbacks']
GAIN_HEADER = ['pattern', 'mode_a', 'mode_b', 'gain']


def _number(value: Optional[float], digits: int = 6) -> str:
    if value is None or (isinstance(value, float) and math.isnan(value)):
        return ''
    return f"{value:.{digits}f}"


def _psnr(value: Optional[float]) -> str:
    return '' if value is None else f"{capped_psnr(value):.2f}"


def _open_csv(path: str):
    output_path = Path(path)
    output_path.parent.mkdir(parents=True, exist_ok=True)
    return open(output_path, 'w', newline='')


def report_rows(reports: Iterable[BlockReport], n_prev: int) -> List[List[str]]:
    """
    One row per block and reference offset.

    Blocks without motion estimates get a single row with empty motion columns.
    """
    rows = []
    for report in reports:
        bx, by = report.block
        if not report.estimates:
            rows.append([str(report.frame), str(bx), str(by), '', '', '', '', '', '', _psnr(report.psnr)])
            continue
        for estimate in report.estimates:
            rows.append([
                str(report.frame), str(bx), str(by),
                str(estimate.kappa), str(estimate.vector[0]), str(estimate.vector[1]),
                _number(estimate.error),
                '1' if estimate.reliable else '0',
                _number(report.factor_for(estimate.kappa, n_prev)),
                _psnr(report.psnr),
            ])
    return rows


class ReportExporter:
    """Exports concealment results as CSV files and image snapshots."""

    def __init__(self, n_prev: int = 2):
        """
        Initialize the exporter.

        Args:
            n_prev: Previous reference frames, locates the layer of each offset
        """
        self.n_prev = n_prev

    def export_block_report(self, reports: Sequence[BlockReport], path: str) -> str:
        """Write the per-block report CSV."""
        with _open_csv(path) as f:
            writer = csv.writer(f)
            writer.writerow(REPORT_HEADER)
            writer.writerows(report_rows(reports, self.n_prev))
        logger.info("Wrote report for %d blocks to %s", len(reports), Path(path).name)
        return path

    def export_training_pairs(self, pairs: Sequence[TrainingPair], path: str) -> str:
        """Write training pairs as error,best_omega rows."""
        with _open_csv(path) as f:
            writer = csv.writer(f)
            writer.writerow(PAIRS_HEADER)
            for pair in pairs:
                writer.writerow([f"{pair.error:.6f}", f"{pair.best_omega:.4f}"])
        logger.info("Wrote %d training pairs to %s", len(pairs), Path(path).name)
        return path

    def export_comparison(self, table: ComparisonTable, path: str) -> str:
        """Write the comparison table followed by its gain rows."""
        with _open_csv(path) as f:
            writer = csv.writer(f)
            writer.writerow(TABLE_HEADER)
            for row in table.rows:
                writer.writerow([row.pattern, row.mode.label, _psnr(row.psnr), row.blocks, row.fallbacks])
            if table.gains:
                writer.writerow([])
                writer.writerow(GAIN_HEADER)
                for gain in table.gains:
                    writer.writerow([gain.pattern, gain.mode_a.label, gain.mode_b.label, f"{gain.gain:.2f}"])
        return path

    def export_sensitivity(self, rows: Sequence[Tuple[float, float, ComparisonRow]], path: str) -> str:
        """Write a threshold sensitivity run."""
        with _open_csv(path) as f:
            writer = csv.writer(f)
            writer.writerow(['t_abs', 't_rel'] + TABLE_HEADER)
            for t_abs, t_rel, row in rows:
                writer.writerow([t_abs, t_rel, row.pattern, row.mode.label, _psnr(row.psnr),
                                 row.blocks, row.fallbacks])
        return path

    def export_snapshots(
        self,
        seq: VideoSequence,
        frames: Iterable[int],
        output_folder: str,
        format_name: str = 'PNG',
        prefix: str = 'frame',
        progress_callback: Optional[Callable[[int, int], None]] = None
    ) -> List[str]:
        """
        Save selected frames as images.

        Returns:
            List of written file paths
        """
        frames = list(frames)
        extension = ImageFormats.get_extension(format_name)
        written = []
        for i, t in enumerate(frames):
            filepath = Path(output_folder) / f"{prefix}_{t:04d}{extension}"
            written.append(export_snapshot(seq, t, str(filepath), format_name))
            if progress_callback:
                progress_callback(i + 1, len(frames))
        return written


def export_snapshot(seq: VideoSequence, t: int, path: str, format_name: str = 'PNG') -> str:
    """Save frame t as an image (gray for luma-only sequences)."""
    luma = seq.frame(t)
    cb = seq.cb[t] if seq.has_chroma else None
    cr = seq.cr[t] if seq.has_chroma else None
    return ImageFormats.save_image(ImageFormats.frame_to_image(luma, cb, cr), path, format_name)
