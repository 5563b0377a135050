"""
Extrapolation Volume - Cuts the motion-aligned sample cube around a lost block
and builds the content-adaptive weighting that steers model generation
"""
import logging
from dataclasses import dataclass
from enum import IntEnum
from typing import Dict, Iterable, List, Optional, Tuple

import numpy as np

from .concealment_types import ConcealConfig, ConcealMode
from .errors import NoSupportError
from .loss_patterns import BlockCoord, BlockState, LossMask
from .motion_estimator import MotionEstimate, is_alignment_reliable

logger = logging.getLogger(__name__)


class VolumeStatus(IntEnum):
    """Role of one volume sample in model generation."""
    SUPPORT = 0      # correctly received
    LOSS = 1         # the block being concealed
    CONCEALED = 2    # reconstructed earlier
    UNAVAILABLE = 3  # still lost elsewhere, or outside the sequence


@dataclass(frozen=True)
class LayerSource:
    """Where one layer of the volume was read from."""
    p: int
    frame: Optional[int]        # None when the layer lies outside the sequence
    shift: Tuple[int, int]


@dataclass
class ExtrapolationVolume:
    """
    M x N x P cube centred on a lost block, indexed [m, n, p].

    m runs along x, n along y; layer p = n_prev holds the distorted frame.
    """
    samples: np.ndarray
    status: np.ndarray
    origin: Tuple[int, int]     # (x, y) of sample (0, 0) in the distorted layer
    layers: List[LayerSource]
    n_prev: int

    @property
    def dims(self) -> Tuple[int, int, int]:
        return tuple(self.samples.shape)

    @property
    def loss_region(self) -> np.ndarray:
        return self.status == VolumeStatus.LOSS


@dataclass
class WeightVolume:
    """Per-sample weights plus the temporal factor used for each layer."""
    weights: np.ndarray
    layer_factors: Tuple[float, ...]


def omega(error: float, omega_max: float = 0.675, t_e: float = 84.375) -> float:
    """
    Temporal weighting factor from a motion estimation error.

    Falls linearly from omega_max at error 0 to 0 at t_e and stays 0 above.
    """
    if error < t_e:
        return omega_max * (1.0 - error / t_e)
    return 0.0


def _estimates_by_kappa(estimates: Iterable[MotionEstimate]) -> Dict[int, MotionEstimate]:
    return {e.kappa: e for e in estimates}


def extract_volume(
    frames: np.ndarray,
    mask: LossMask,
    frame: int,
    block: BlockCoord,
    estimates: Iterable[MotionEstimate],
    config: ConcealConfig,
    aligned: Optional[bool] = None
) -> ExtrapolationVolume:
    """
    Cut the extrapolation volume out of the decoder state.

    Args:
        frames: (frames, height, width) plane holding the decoder state
        mask: Loss mask with current block states
        frame: Frame tau containing the lost block
        block: Block coordinate in units of config.block_size
        estimates: Motion estimates (vectors used only when aligned)
        config: Pipeline parameters (block size, border, N_p, N_f)
        aligned: Shift reference layers by their vectors (default: all estimates reliable)

    Returns:
        ExtrapolationVolume
    """
    estimates = list(estimates)
    if aligned is None:
        aligned = is_alignment_reliable(estimates)
    by_kappa = _estimates_by_kappa(estimates)

    size = config.block_size
    side_m, side_n, layer_count = config.volume_dims
    frame_count, height, width = frames.shape
    bx, by = block
    ox, oy = bx * size - config.border, by * size - config.border

    samples = np.zeros((side_m, side_n, layer_count), dtype=np.float64)
    status = np.full((side_m, side_n, layer_count), VolumeStatus.UNAVAILABLE, dtype=np.uint8)
    layers = []

    for p in range(layer_count):
        kappa = p - config.n_prev
        t = frame + kappa
        if not 0 <= t < frame_count:
            layers.append(LayerSource(p=p, frame=None, shift=(0, 0)))
            continue

        shift = (0, 0)
        if aligned and kappa != 0 and kappa in by_kappa:
            shift = by_kappa[kappa].vector
        layers.append(LayerSource(p=p, frame=t, shift=shift))

        xs = ox + shift[0] + np.arange(side_m)
        ys = oy + shift[1] + np.arange(side_n)
        inside = (ys[:, None] >= 0) & (ys[:, None] < height) & (xs[None, :] >= 0) & (xs[None, :] < width)
        xc = np.clip(xs, 0, width - 1)
        yc = np.clip(ys, 0, height - 1)

        block_states = mask.pixel_status(t, size)[np.ix_(yc, xc)]
        layer_status = np.full(block_states.shape, VolumeStatus.UNAVAILABLE, dtype=np.uint8)
        layer_status[block_states == BlockState.INTACT] = VolumeStatus.SUPPORT
        layer_status[block_states == BlockState.CONCEALED] = VolumeStatus.CONCEALED
        if kappa == 0:
            b0, b1 = config.border, config.border + size
            layer_status[b0:b1, b0:b1] = VolumeStatus.LOSS
        layer_status[~inside] = VolumeStatus.UNAVAILABLE

        layer_samples = frames[t][np.ix_(yc, xc)].astype(np.float64)
        usable = (layer_status == VolumeStatus.SUPPORT) | (layer_status == VolumeStatus.CONCEALED)
        layer_samples[~usable] = 0.0

        # (n, m) image rows -> [m, n]
        samples[:, :, p] = layer_samples.T
        status[:, :, p] = layer_status.T

    return ExtrapolationVolume(
        samples=samples,
        status=status,
        origin=(ox, oy),
        layers=layers,
        n_prev=config.n_prev
    )


def distance_decay(dims: Tuple[int, int, int], n_prev: int, rho_hat: float) -> np.ndarray:
    """rho_hat ** (Euclidean distance to the volume centre in the distorted layer)."""
    side_m, side_n, layer_count = dims
    m = np.arange(side_m) - (side_m - 1) / 2.0
    n = np.arange(side_n) - (side_n - 1) / 2.0
    p = np.arange(layer_count) - n_prev
    distance = np.sqrt(m[:, None, None] ** 2 + n[None, :, None] ** 2 + p[None, None, :] ** 2)
    return np.power(rho_hat, distance)


def layer_factors(
    vol: ExtrapolationVolume,
    estimates: Iterable[MotionEstimate],
    config: ConcealConfig,
    layer_omega_override: Optional[float] = None
) -> Tuple[float, ...]:
    """
    Temporal factor of every layer.

    Fixed weighting uses 1 everywhere. Content-adaptive weighting gives the distorted
    layer omega_max and each reference layer omega(its motion error); a layer without
    an estimate gets 0. An override sets all reference layers to one value with the
    distorted layer at 1.
    """
    by_kappa = _estimates_by_kappa(estimates)
    factors = []
    for source in vol.layers:
        kappa = source.p - vol.n_prev
        if layer_omega_override is not None:
            factors.append(1.0 if kappa == 0 else float(layer_omega_override))
        elif config.mode == ConcealMode.FIXED_WEIGHTING:
            factors.append(1.0)
        elif kappa == 0:
            factors.append(config.omega_max)
        elif kappa in by_kappa:
            factors.append(omega(by_kappa[kappa].error, config.omega_max, config.t_e))
        else:
            factors.append(0.0)
    return tuple(factors)


def build_weights(
    vol: ExtrapolationVolume,
    estimates: Iterable[MotionEstimate],
    config: ConcealConfig,
    layer_omega_override: Optional[float] = None
) -> WeightVolume:
    """
    Build the weighting volume for model generation.

    Args:
        vol: Extrapolation volume
        estimates: Motion estimates supplying the per-layer errors
        config: Pipeline parameters (mode, omega_max, t_e, delta, rho_hat)
        layer_omega_override: Uniform reference-layer factor (training search)

    Returns:
        WeightVolume

    Raises:
        NoSupportError: if no sample carries positive weight
    """
    factors = layer_factors(vol, estimates, config, layer_omega_override)
    weights = distance_decay(vol.dims, vol.n_prev, config.fse.rho_hat)
    weights = weights * np.asarray(factors)[None, None, :]
    weights[vol.status == VolumeStatus.CONCEALED] *= config.delta
    weights[(vol.status == VolumeStatus.LOSS) | (vol.status == VolumeStatus.UNAVAILABLE)] = 0.0

    if not np.any(weights > 0):
        raise NoSupportError("weighting volume is zero everywhere")
    logger.debug("layer factors %s", ", ".join(f"{f:.4f}" for f in factors))
    return WeightVolume(weights=weights, layer_factors=factors)


def compact_layers(
    vol: ExtrapolationVolume,
    weights: WeightVolume
) -> Tuple[ExtrapolationVolume, WeightVolume]:
    """
    Trim zero-weighted layers from the front and back of the volume.

    Only the outer runs are removed, so the surviving layers keep their spacing and the
    model on them is unchanged. Interior zero layers stay in place; the distorted layer
    always stays.
    """
    used = [p for p in range(vol.dims[2]) if np.any(weights.weights[:, :, p] > 0)]
    first = min(used + [vol.n_prev])
    last = max(used + [vol.n_prev])
    keep = list(range(first, last + 1))
    if len(keep) == vol.dims[2]:
        return vol, weights
    compacted = ExtrapolationVolume(
        samples=vol.samples[:, :, keep],
        status=vol.status[:, :, keep],
        origin=vol.origin,
        layers=[vol.layers[p] for p in keep],
        n_prev=keep.index(vol.n_prev)
    )
    return compacted, WeightVolume(
        weights=weights.weights[:, :, keep],
        layer_factors=tuple(weights.layer_factors[p] for p in keep)
    )
