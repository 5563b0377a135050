"""
Frequency Selective Extrapolation - Iterative weighted approximation of a sample
volume by 3-D DFT basis functions

The fast path works entirely on the spectrum of the weighted residual; the
reference path repeats the same iteration sample by sample and exists to check it.
"""
import csv
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from .concealment_types import FseConfig
from .errors import ConfigError, NoSupportError
from .extrapolation_volume import ExtrapolationVolume, WeightVolume

logger = logging.getLogger(__name__)

VolumeLike = Union[ExtrapolationVolume, np.ndarray]
WeightsLike = Union[WeightVolume, np.ndarray]


@dataclass
class SpectralModel:
    """
    Expansion coefficients over the transform grid.

    coeffs[k] is the amplitude of phi_k[m, n, p] = exp(2j*pi*(k_m*m/F_M + k_n*n/F_N + k_p*p/F_P)),
    so the model is g = sum_k coeffs[k] * phi_k.
    """
    coeffs: np.ndarray
    volume_dims: Tuple[int, int, int]
    selected: List[int] = field(default_factory=list)  # linear bin per iteration
    iterations_run: int = 0

    @property
    def fft_dims(self) -> Tuple[int, int, int]:
        return tuple(self.coeffs.shape)

    @property
    def selected_set(self) -> set:
        """Indices with a nonzero accumulated coefficient."""
        return set(int(k) for k in np.flatnonzero(self.coeffs))


@dataclass
class FseTraceRow:
    iteration: int
    bin: Tuple[int, int, int]
    delta_magnitude: float
    energy: Optional[float] = None


class FseTrace:
    """Optional per-iteration record of model generation."""

    def __init__(self, track_energy: bool = False):
        """
        Initialize the trace.

        Args:
            track_energy: Also record the weighted residual energy after each iteration
        """
        self.track_energy = track_energy
        self.rows: List[FseTraceRow] = []
        self.initial_energy: Optional[float] = None

    def record(self, iteration: int, bin_index: Tuple[int, int, int],
               delta: complex, energy: Optional[float] = None):
        self.rows.append(FseTraceRow(iteration, tuple(int(b) for b in bin_index), abs(delta), energy))

    @property
    def energies(self) -> List[float]:
        """Energy before the first iteration followed by the energy after each one."""
        return [self.initial_energy] + [r.energy for r in self.rows]

    def to_csv(self, path: str):
        """Write the trace as CSV (iteration, bin, |delta c|, energy)."""
        output_path = Path(path)
        output_path.parent.mkdir(parents=True, exist_ok=True)
        with open(output_path, 'w', newline='') as f:
            writer = csv.writer(f)
            writer.writerow(['iteration', 'km', 'kn', 'kp', 'delta_abs', 'energy'])
            for row in self.rows:
                energy = '' if row.energy is None else f"{row.energy:.12g}"
                writer.writerow([row.iteration, *row.bin, f"{row.delta_magnitude:.12g}", energy])


def _unpack(vol: VolumeLike, w: WeightsLike) -> Tuple[np.ndarray, np.ndarray]:
    samples = vol.samples if isinstance(vol, ExtrapolationVolume) else np.asarray(vol, dtype=np.float64)
    weights = w.weights if isinstance(w, WeightVolume) else np.asarray(w, dtype=np.float64)
    if samples.shape != weights.shape or samples.ndim != 3:
        raise ValueError(f"volume {samples.shape} and weights {weights.shape} must be equal 3-D shapes")
    return samples, weights


def _check_inputs(samples: np.ndarray, weights: np.ndarray, cfg: FseConfig):
    if any(f < v for f, v in zip(cfg.fft_dims, samples.shape)):
        raise ConfigError(f"fft_dims {cfg.fft_dims} smaller than volume {samples.shape}")
    if np.any(weights < 0):
        raise ValueError("weights must be non-negative")
    if not np.any(weights > 0):
        raise NoSupportError("all weights are zero")


def conjugate_index(linear: int, fft_dims: Sequence[int]) -> int:
    """Linear index of the bin -k for bin k."""
    k = np.unravel_index(linear, fft_dims)
    mirrored = tuple((-ki) % fi for ki, fi in zip(k, fft_dims))
    return int(np.ravel_multi_index(mirrored, fft_dims))


def _basis_on_volume(bin_index: Tuple[int, int, int], volume_dims: Sequence[int],
                     fft_dims: Sequence[int]) -> np.ndarray:
    """phi_k evaluated on the volume grid."""
    axes = [np.exp(2j * np.pi * k * np.arange(v) / f) for k, v, f in zip(bin_index, volume_dims, fft_dims)]
    return axes[0][:, None, None] * axes[1][None, :, None] * axes[2][None, None, :]


def generate_model_fast(
    vol: VolumeLike,
    w: WeightsLike,
    cfg: FseConfig,
    trace: Optional[FseTrace] = None
) -> SpectralModel:
    """
    Generate the model in the Fourier domain.

    Per iteration the bin with the largest weighted residual spectrum magnitude is
    chosen (represented by the lower linear index of it and its mirror), its update
    gamma * R_w[u] / W[0] is added at u and conjugated at -u (real part only for
    self-mirrored bins), and the residual spectrum loses the update convolved with
    the weight spectrum.

    Args:
        vol: Extrapolation volume or plain sample array (loss samples hold 0)
        w: Weight volume or plain weight array
        cfg: FSE settings
        trace: Optional trace to fill

    Returns:
        SpectralModel
    """
    samples, weights = _unpack(vol, w)
    _check_inputs(samples, weights, cfg)
    fft_dims = tuple(cfg.fft_dims)
    region = tuple(slice(0, d) for d in samples.shape)

    padded_weights = np.zeros(fft_dims, dtype=np.float64)
    padded_weights[region] = weights
    padded_residual = np.zeros(fft_dims, dtype=np.float64)
    padded_residual[region] = weights * samples

    spectrum = np.fft.fftn(padded_residual)
    weight_spectrum = np.fft.fftn(padded_weights)
    weight_sum = float(weight_spectrum[0, 0, 0].real)
    # tiled copy: a window starting at F - u reads W[(k - u) mod F] without rolling
    tiled = np.tile(weight_spectrum, (2, 2, 2))

    def shifted(bin_index: Tuple[int, ...]) -> np.ndarray:
        return tiled[tuple(slice(f - k, 2 * f - k) for k, f in zip(bin_index, fft_dims))]

    coeffs = np.zeros(fft_dims, dtype=np.complex128)
    model = SpectralModel(coeffs=coeffs, volume_dims=tuple(samples.shape))

    residual = None
    if trace is not None and trace.track_energy:
        residual = samples.copy()
        trace.initial_energy = float(np.sum(weights * residual ** 2))

    for iteration in range(cfg.iterations):
        magnitude = spectrum.real ** 2 + spectrum.imag ** 2
        u = int(np.argmax(magnitude))
        mirror = conjugate_index(u, fft_dims)
        u, mirror = min(u, mirror), max(u, mirror)
        u_bin = np.unravel_index(u, fft_dims)

        delta = cfg.gamma * spectrum[u_bin] / weight_sum
        if u == mirror:
            delta = complex(delta.real, 0.0)
            coeffs[u_bin] += delta
            spectrum -= delta * shifted(u_bin)
        else:
            mirror_bin = np.unravel_index(mirror, fft_dims)
            coeffs[u_bin] += delta
            coeffs[mirror_bin] += np.conj(delta)
            spectrum -= delta * shifted(u_bin) + np.conj(delta) * shifted(mirror_bin)

        model.selected.append(u)
        if trace is not None:
            energy = None
            if residual is not None:
                phi = _basis_on_volume(u_bin, samples.shape, fft_dims)
                update = delta * phi
                residual -= update.real if u == mirror else 2.0 * update.real
                energy = float(np.sum(weights * residual ** 2))
            trace.record(iteration, u_bin, delta, energy)

    model.iterations_run = cfg.iterations
    logger.debug("fast FSE: %d iterations, %d active bins", cfg.iterations, len(model.selected_set))
    return model


def generate_model_reference(
    vol: VolumeLike,
    w: WeightsLike,
    cfg: FseConfig
) -> SpectralModel:
    """
    Same iteration evaluated directly on the samples.

    Every iteration projects the weighted residual on each basis function,
    c_k = sum(r * conj(phi_k) * w) / sum(|phi_k|^2 * w), picks the k with the largest
    energy decrease |c_k|^2 * sum(|phi_k|^2 * w) and subtracts gamma * c_k * phi_k
    (with the mirrored bin) from the residual. Cost grows with
    iterations * bins * samples, so it is meant for small volumes.
    """
    samples, weights = _unpack(vol, w)
    _check_inputs(samples, weights, cfg)
    fft_dims = tuple(cfg.fft_dims)
    volume_dims = samples.shape

    axes = [np.exp(2j * np.pi * np.outer(np.arange(f), np.arange(v)) / f)
            for f, v in zip(fft_dims, volume_dims)]
    basis = np.einsum('am,bn,cp->abcmnp', *axes).reshape(int(np.prod(fft_dims)), -1)
    flat_weights = weights.ravel()
    norms = (np.abs(basis) ** 2) @ flat_weights

    residual = samples.ravel().astype(np.float64).copy()
    coeffs = np.zeros(fft_dims, dtype=np.complex128)
    model = SpectralModel(coeffs=coeffs, volume_dims=tuple(volume_dims))

    for _ in range(cfg.iterations):
        projections = (basis.conj() @ (residual * flat_weights)) / norms
        decrease = (projections.real ** 2 + projections.imag ** 2) * norms
        u = int(np.argmax(decrease))
        mirror = conjugate_index(u, fft_dims)
        u, mirror = min(u, mirror), max(u, mirror)

        delta = cfg.gamma * projections[u]
        u_bin = np.unravel_index(u, fft_dims)
        if u == mirror:
            delta = complex(delta.real, 0.0)
            coeffs[u_bin] += delta
            residual -= (delta * basis[u]).real
        else:
            coeffs[u_bin] += delta
            coeffs[np.unravel_index(mirror, fft_dims)] += np.conj(delta)
            residual -= 2.0 * (delta * basis[u]).real
        model.selected.append(u)

    model.iterations_run = cfg.iterations
    return model


def render_model(model: SpectralModel, region: Optional[np.ndarray] = None) -> np.ndarray:
    """
    Evaluate the model on the volume grid.

    Args:
        model: Spectral model
        region: Boolean mask of volume shape selecting samples (None: whole volume)

    Returns:
        Real model values (whole volume, or the selected samples in C order)
    """
    total = float(np.prod(model.fft_dims))
    full = np.fft.ifftn(model.coeffs) * total
    volume = full[tuple(slice(0, d) for d in model.volume_dims)].real
    if region is None:
        return volume
    return volume[region]


def weighted_residual_energy(vol: VolumeLike, w: WeightsLike, model: SpectralModel) -> float:
    """sum(w * (f - g)^2) over the volume."""
    samples, weights = _unpack(vol, w)
    return float(np.sum(weights * (samples - render_model(model)) ** 2))


def to_pixels(values: np.ndarray) -> np.ndarray:
    """Round and clamp model output to 8-bit sample values (as float)."""
    return np.clip(np.rint(values), 0, 255)


class FrequencySelectiveExtrapolator:
    """Generates models and extrapolates the loss area of a volume."""

    def __init__(self, config: Optional[FseConfig] = None):
        self.config = config or FseConfig()

    def extrapolate(
        self,
        vol: ExtrapolationVolume,
        weights: WeightVolume,
        trace: Optional[FseTrace] = None
    ) -> np.ndarray:
        """
        Model the volume and cut out the loss area.

        Returns:
            Real model values at the loss samples, shaped [m, n] of the block
        """
        model = generate_model_fast(vol, weights, self.config, trace)
        values = render_model(model)[:, :, vol.n_prev]
        loss = vol.loss_region[:, :, vol.n_prev]
        ms, ns = np.nonzero(loss)
        return values[ms.min():ms.max() + 1, ns.min():ns.max() + 1]
