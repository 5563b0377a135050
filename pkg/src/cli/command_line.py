"""
Command Line - corrupt / conceal / evaluate / train / compare workflows over raw video files
Exit codes: 0 success, 1 usage error, 2 data error
"""
import argparse
import logging
import sys
from typing import Dict, List, Optional, Sequence

from ..core.block_concealer import conceal_sequence
from ..core.concealment_types import ConcealConfig, ConcealMode, ConcealPresets, FseConfig
from ..core.errors import ConcealmentError, ConfigError
from ..core.evaluation import (
    DEFAULT_OMEGA_GRID, collect_training_pairs, fit_weight_model, omega_sensitivity, run_comparison
)
from ..core.loss_patterns import LossMask, apply_loss, checkerboard_mask, slice_mask
from ..core.quality_metrics import capped_psnr, psnr_blocks
from ..core.report_exporter import ReportExporter
from ..core.video_sequence import PIXEL_FORMATS, VideoSequence, load_sequence, save_sequence
from ..utils.frame_ranges import parse_frame_range
from ..utils.image_formats import ImageFormats
from .progress_output import ConsoleProgress

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2

MODE_LABELS = [mode.label for mode in ConcealMode]
PATTERNS = ('checkerboard', 'slices')
DEFAULT_TRAIN_FRAMES = '5..200:5'

# flag dest -> ConcealConfig / FseConfig field
CONFIG_FLAGS = {
    'n_prev': int, 'n_follow': int, 'd_max': int, 'ring_width': int,
    't_abs': float, 't_rel': float, 'omega_max': float, 't_e': float, 'delta': float,
    'block_size': int, 'border': int, 'iterations': int, 'gamma': float, 'rho_hat': float,
}


class _ArgumentParser(argparse.ArgumentParser):
    """ArgumentParser reporting usage errors as ConfigError instead of exiting with 2."""

    def error(self, message: str):
        raise ConfigError(f"{self.prog}: {message}")


def _common_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('input', help="Raw planar input video")
    common.add_argument('--width', type=int, required=True, help="Luma width in pixels")
    common.add_argument('--height', type=int, required=True, help="Luma height in pixels")
    common.add_argument('--max-frames', type=int, default=None, help="Read at most this many frames")
    common.add_argument('--format', dest='pixel_format', choices=sorted(PIXEL_FORMATS), default='i420',
                        help="Raw layout (default: i420)")
    common.add_argument('--threads', type=int, default=1, help="Worker threads (output is identical)")
    verbosity = common.add_mutually_exclusive_group()
    verbosity.add_argument('--verbose', action='store_true', help="Debug logging")
    verbosity.add_argument('--quiet', action='store_true', help="Warnings and errors only")
    return common


def _config_parser() -> argparse.ArgumentParser:
    defaults = ConcealConfig()
    fse = FseConfig()
    parser = argparse.ArgumentParser(add_help=False)
    group = parser.add_argument_group("concealment parameters")
    group.add_argument('--mode', choices=MODE_LABELS, default=defaults.mode.label,
                       help=f"Concealment algorithm (default: {defaults.mode.label})")
    presets = "; ".join(
        f"{name}: {ConcealPresets.get_description(name)}" for name in ConcealPresets.get_type_names()
    )
    group.add_argument('--preset', choices=ConcealPresets.get_type_names(), default=None,
                       help=f"Reference frame availability preset ({presets})")
    for name, kind in CONFIG_FLAGS.items():
        default = getattr(fse, name) if hasattr(fse, name) else getattr(defaults, name)
        group.add_argument('--' + name.replace('_', '-'), dest=name, type=kind, default=None,
                           help=f"(default: {default})")
    group.add_argument('--fft-dims', type=int, nargs=3, metavar=('FM', 'FN', 'FP'), default=None,
                       help=f"Transform size (default: {' '.join(map(str, fse.fft_dims))})")
    group.add_argument('--conceal-chroma', action='store_true', help="Conceal Cb and Cr as well")
    return parser


def build_parser() -> argparse.ArgumentParser:
    common = _common_parser()
    config = _config_parser()
    parser = _ArgumentParser(
        prog='conceal-tool',
        description="Block loss concealment by content-adaptive motion-compensated "
                    "frequency selective extrapolation"
    )
    sub = parser.add_subparsers(dest='command', required=True, parser_class=_ArgumentParser)

    corrupt = sub.add_parser('corrupt', parents=[common], help="Apply an artificial loss pattern")
    corrupt.add_argument('--pattern', choices=PATTERNS, default='checkerboard')
    corrupt.add_argument('--parity', '--phase', dest='parity', type=int, choices=(0, 1), default=0,
                         help="Checkerboard parity or slice phase")
    corrupt.add_argument('--frames', default=None, help="Frames to corrupt, e.g. 5..200:5 (default: all)")
    corrupt.add_argument('--fill', type=int, default=0, help="Value written into lost samples")
    corrupt.add_argument('--block-size', type=int, default=16)
    corrupt.add_argument('--output', required=True, help="Corrupted video")
    corrupt.add_argument('--mask-out', required=True, help="Loss mask text file")

    conceal = sub.add_parser('conceal', parents=[common, config], help="Conceal lost blocks")
    conceal.add_argument('--mask', required=True, help="Loss mask text file")
    conceal.add_argument('--output', required=True, help="Concealed video")
    conceal.add_argument('--reference', default=None, help="Undistorted video for PSNR")
    conceal.add_argument('--report', default=None, help="Per-block CSV report")
    conceal.add_argument('--snapshot-dir', default=None, help="Save concealed frames as images")
    conceal.add_argument('--snapshot-format', choices=ImageFormats.get_format_list(), default='PNG')
    conceal.add_argument('--dump-dir', default=None, help="Dump every volume with its weights")
    conceal.add_argument('--trace-dir', default=None, help="Write per-block model generation traces")

    evaluate = sub.add_parser('evaluate', parents=[common], help="PSNR over damaged blocks")
    evaluate.add_argument('--reference', required=True, help="Undistorted video")
    evaluate.add_argument('--mask', required=True, help="Loss mask text file")
    evaluate.add_argument('--block-size', type=int, default=16)

    train = sub.add_parser('train', parents=[common, config], help="Fit omega_max and t_e")
    train.add_argument('--frames', default=None, help=f"Training frames (default: {DEFAULT_TRAIN_FRAMES})")
    train.add_argument('--blocks-per-frame', type=int, default=25)
    train.add_argument('--seed', type=int, default=0)
    train.add_argument('--pairs-out', default=None, help="CSV of (error, best_omega) pairs")

    compare = sub.add_parser('compare', parents=[common, config], help="Compare concealment modes")
    compare.add_argument('--patterns', default='checkerboard,slices')
    compare.add_argument('--modes', default='ca-mc-fse,mc-fse')
    compare.add_argument('--frames', default=None, help="Frames carrying losses (default: all but the first)")
    compare.add_argument('--parity', '--phase', dest='parity', type=int, choices=(0, 1), default=0)
    compare.add_argument('--table', default=None, help="Comparison table CSV")
    compare.add_argument('--thresholds', default=None,
                         help="Also run a reliability sensitivity sweep, e.g. 5:3,10:3,20:2")
    compare.add_argument('--sensitivity-out', default=None, help="CSV for the sensitivity sweep")
    return parser


def _configure_logging(args: argparse.Namespace):
    level = logging.DEBUG if args.verbose else logging.WARNING if args.quiet else logging.INFO
    logging.basicConfig(
        level=level,
        format='%(levelname)s %(name)s: %(message)s',
        stream=sys.stderr,
        force=True
    )


def config_from_args(args: argparse.Namespace) -> ConcealConfig:
    """Build the effective configuration: defaults, then preset, then explicit flags."""
    config = ConcealConfig()
    if args.preset:
        config = ConcealPresets.apply(config, args.preset)
    overrides = {name: getattr(args, name) for name in CONFIG_FLAGS if getattr(args, name) is not None}
    if args.fft_dims is not None:
        overrides['fft_dims'] = tuple(args.fft_dims)
    overrides['mode'] = ConcealMode.from_label(args.mode)
    overrides['conceal_chroma'] = args.conceal_chroma
    config = config.with_overrides(**overrides)
    config.validate()
    return config


def _input_settings(args: argparse.Namespace) -> Dict[str, object]:
    return {
        'input': args.input,
        'width': args.width,
        'height': args.height,
        'format': args.pixel_format,
        'max_frames': args.max_frames if args.max_frames is not None else 'all',
        'threads': args.threads,
    }


def _print_config(
    args: argparse.Namespace,
    config: Optional[ConcealConfig] = None,
    extra: Optional[Dict[str, object]] = None
):
    """Print every effective setting of a run: input flags, concealment parameters, command flags."""
    print(f"[{args.command}] effective configuration")
    settings = _input_settings(args)
    if config is not None:
        settings['preset'] = args.preset or 'none'
        settings.update(config.describe())
    settings.update(extra or {})
    for key, value in settings.items():
        print(f"  {key} = {value}")


def _load(args: argparse.Namespace, path: str) -> VideoSequence:
    return load_sequence(path, args.width, args.height, args.max_frames, args.pixel_format)


def _modes(text: str) -> List[ConcealMode]:
    return [ConcealMode.from_label(label.strip()) for label in text.split(',') if label.strip()]


def _patterns(text: str) -> List[str]:
    patterns = [p.strip() for p in text.split(',') if p.strip()]
    for pattern in patterns:
        if pattern not in PATTERNS:
            raise ConfigError(f"unknown pattern '{pattern}' (choose from {', '.join(PATTERNS)})")
    return patterns


def _thresholds(text: str) -> List[tuple]:
    pairs = []
    for item in text.split(','):
        try:
            t_abs, t_rel = (float(v) for v in item.split(':'))
        except ValueError:
            raise ConfigError(f"cannot parse threshold pair '{item}' (expected t_abs:t_rel)")
        pairs.append((t_abs, t_rel))
    return pairs


def _build_mask(pattern: str, frames: List[int], parity: int, seq: VideoSequence, block_size: int) -> LossMask:
    if pattern == 'checkerboard':
        return checkerboard_mask(frames, parity, seq.geometry, block_size)
    return slice_mask(frames, parity, seq.geometry, block_size)


def _progress(args: argparse.Namespace, title: str) -> ConsoleProgress:
    return ConsoleProgress(title, enabled=not args.quiet)


def cmd_corrupt(args: argparse.Namespace) -> int:
    seq = _load(args, args.input)
    frames = parse_frame_range(args.frames, seq.frame_count) if args.frames else list(range(seq.frame_count))
    mask = _build_mask(args.pattern, frames, args.parity, seq, args.block_size)
    corrupted = apply_loss(seq, mask, args.fill)

    _print_config(args, extra={
        'pattern': args.pattern,
        'parity': args.parity,
        'frames': f"{args.frames or 'all'} ({len(frames)} frames)",
        'fill': args.fill,
        'block_size': args.block_size,
        'output': args.output,
        'mask_out': args.mask_out,
    })

    save_sequence(corrupted, args.output, args.pixel_format)
    mask.save(args.mask_out)
    print(f"Marked {mask.lost_count()} lost blocks in {len(mask.frames_with_losses())} frames")
    return EXIT_OK


def cmd_conceal(args: argparse.Namespace) -> int:
    config = config_from_args(args)
    _print_config(args, config, {
        'mask': args.mask,
        'output': args.output,
        'reference': args.reference or 'none',
        'report': args.report or 'none',
        'snapshot_dir': args.snapshot_dir or 'none',
        'snapshot_format': args.snapshot_format,
        'dump_dir': args.dump_dir or 'none',
        'trace_dir': args.trace_dir or 'none',
    })

    seq = _load(args, args.input)
    mask = LossMask.load(args.mask, seq.geometry, config.block_size)
    measured = mask.copy()
    reference = _load(args, args.reference) if args.reference else None
    frames = mask.frames_with_losses()

    result = conceal_sequence(
        seq, mask, config,
        original=reference,
        threads=args.threads,
        progress_callback=_progress(args, "Concealing"),
        trace_dir=args.trace_dir,
        dump_dir=args.dump_dir
    )
    save_sequence(result.sequence, args.output, args.pixel_format)

    exporter = ReportExporter(config.n_prev)
    if args.report:
        exporter.export_block_report(result.reports, args.report)
    if args.snapshot_dir:
        exporter.export_snapshots(result.sequence, frames, args.snapshot_dir, args.snapshot_format)

    print(f"Concealed {result.concealed_count} blocks ({result.fallback_count} fallback fills)")
    if reference is not None and result.concealed_count:
        print(f"PSNR over concealed blocks: {capped_psnr(psnr_blocks(reference, result.sequence, measured)):.2f} dB")
    return EXIT_OK


def cmd_evaluate(args: argparse.Namespace) -> int:
    _print_config(args, extra={
        'reference': args.reference,
        'mask': args.mask,
        'block_size': args.block_size,
    })
    concealed = _load(args, args.input)
    reference = _load(args, args.reference)
    mask = LossMask.load(args.mask, reference.geometry, args.block_size)
    value = psnr_blocks(reference, concealed, mask)
    print(f"Damaged blocks: {mask.damaged_count()}")
    print(f"PSNR over damaged blocks: {capped_psnr(value):.2f} dB")
    return EXIT_OK


def cmd_train(args: argparse.Namespace) -> int:
    config = config_from_args(args)
    _print_config(args, config, {
        'frames': args.frames or DEFAULT_TRAIN_FRAMES,
        'blocks_per_frame': args.blocks_per_frame,
        'seed': args.seed,
        'pairs_out': args.pairs_out or 'none',
        'omega_grid': f"{DEFAULT_OMEGA_GRID[0]}..{DEFAULT_OMEGA_GRID[-1]}:{DEFAULT_OMEGA_GRID[1]}",
    })

    seq = _load(args, args.input)
    if args.frames:
        frames = parse_frame_range(args.frames, seq.frame_count)
    else:
        frames = [t for t in parse_frame_range(DEFAULT_TRAIN_FRAMES) if t < seq.frame_count]

    pairs = collect_training_pairs(
        seq, frames, args.blocks_per_frame, config,
        seed=args.seed,
        threads=args.threads,
        progress_callback=_progress(args, "Searching weights")
    )
    if args.pairs_out:
        ReportExporter(config.n_prev).export_training_pairs(pairs, args.pairs_out)

    omega_max, t_e = fit_weight_model(pairs)
    print(f"Training pairs: {len(pairs)}")
    print(f"omega_max = {omega_max:.6f}")
    print(f"t_e = {t_e:.6f}")
    return EXIT_OK


def cmd_compare(args: argparse.Namespace) -> int:
    config = config_from_args(args)
    modes = _modes(args.modes)
    patterns = _patterns(args.patterns)
    if not modes or not patterns:
        raise ConfigError("at least one mode and one pattern are required")
    _print_config(args, config, {
        'modes': ','.join(m.label for m in modes),
        'patterns': ','.join(patterns),
        'frames': args.frames or 'all but the first',
        'parity': args.parity,
        'table': args.table or 'none',
        'thresholds': args.thresholds or 'none',
        'sensitivity_out': args.sensitivity_out or 'none',
    })

    seq = _load(args, args.input)
    frames = parse_frame_range(args.frames, seq.frame_count) if args.frames else list(range(1, seq.frame_count))
    masks = {p: _build_mask(p, frames, args.parity, seq, config.block_size) for p in patterns}

    progress = _progress(args, "Comparing")
    table = run_comparison(seq, masks, modes, config, args.threads, progress)
    exporter = ReportExporter(config.n_prev)
    if args.table:
        exporter.export_comparison(table, args.table)

    for row in table.rows:
        print(f"{row.pattern:<14} {row.mode.label:<14} {capped_psnr(row.psnr):6.2f} dB  ({row.blocks} blocks)")
    for gain in table.gains:
        print(f"gain {gain.mode_a.label} over {gain.mode_b.label} [{gain.pattern}]: {gain.gain:+.2f} dB")

    if args.thresholds:
        progress.set_status("Sensitivity sweep")
        rows = omega_sensitivity(seq, masks, _thresholds(args.thresholds), config, modes[0], args.threads, progress)
        if args.sensitivity_out:
            exporter.export_sensitivity(rows, args.sensitivity_out)
        for t_abs, t_rel, row in rows:
            print(f"t_abs={t_abs:g} t_rel={t_rel:g} {row.pattern:<14} {capped_psnr(row.psnr):6.2f} dB")
    return EXIT_OK


COMMANDS = {
    'corrupt': cmd_corrupt,
    'conceal': cmd_conceal,
    'evaluate': cmd_evaluate,
    'train': cmd_train,
    'compare': cmd_compare,
}


def run_cli(argv: Optional[Sequence[str]] = None) -> int:
    """
    Parse arguments and run one subcommand.

    Returns:
        Process exit code
    """
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except ConfigError as e:
        print(str(e), file=sys.stderr)
        parser.print_usage(sys.stderr)
        return EXIT_USAGE
    except SystemExit as e:
        # --help
        return int(e.code or 0)

    _configure_logging(args)
    if args.threads < 1:
        logger.error("--threads must be >= 1")
        return EXIT_USAGE

    try:
        return COMMANDS[args.command](args)
    except ConfigError as e:
        logger.error("%s", e)
        return EXIT_USAGE
    except (ConcealmentError, OSError) as e:
        logger.error("%s", e)
        return EXIT_DATA
