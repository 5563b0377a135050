"""
Concealment Types - Concealment modes, parameter sets and availability presets
"""
from dataclasses import dataclass, field, fields, replace
from enum import Enum
from typing import Dict, Tuple

from .errors import ConfigError


class ConcealMode(str, Enum):
    """Concealment algorithm."""
    CONTENT_ADAPTIVE = 'content_adaptive'  # CA-MC-FSE
    FIXED_WEIGHTING = 'fixed_weighting'    # MC-FSE
    TEMPORAL_COPY = 'temporal_copy'        # DMVE-style copy

    @classmethod
    def from_label(cls, label: str) -> 'ConcealMode':
        """Resolve a mode from its value or its command-line label."""
        for mode in cls:
            if label in (mode.value, mode.label):
                return mode
        raise ConfigError(f"unknown mode '{label}'")

    @property
    def label(self) -> str:
        return {
            ConcealMode.CONTENT_ADAPTIVE: 'ca-mc-fse',
            ConcealMode.FIXED_WEIGHTING: 'mc-fse',
            ConcealMode.TEMPORAL_COPY: 'temporal-copy',
        }[self]


@dataclass(frozen=True)
class FseConfig:
    """Settings for model generation by frequency selective extrapolation."""
    iterations: int = 800
    gamma: float = 0.7                              # orthogonality deficiency compensation
    fft_dims: Tuple[int, int, int] = (64, 64, 16)   # (F_M, F_N, F_P)
    rho_hat: float = 0.8                            # spatial decay of the weighting

    def validate(self, volume_dims: Tuple[int, int, int] = (0, 0, 0)):
        """Raise ConfigError for out-of-range values."""
        if self.iterations < 0:
            raise ConfigError("iterations must be >= 0")
        if not 0.0 < self.gamma <= 1.0:
            raise ConfigError("gamma must lie in (0, 1]")
        if not 0.0 < self.rho_hat <= 1.0:
            raise ConfigError("rho_hat must lie in (0, 1]")
        if len(self.fft_dims) != 3 or any(d <= 0 for d in self.fft_dims):
            raise ConfigError("fft_dims needs three positive sizes")
        if any(f < v for f, v in zip(self.fft_dims, volume_dims)):
            raise ConfigError(f"fft_dims {self.fft_dims} smaller than volume {volume_dims}")

    def halved(self) -> 'FseConfig':
        """Settings for half-resolution (chroma) volumes."""
        fm, fn, fp = self.fft_dims
        return replace(self, fft_dims=(max(fm // 2, 1), max(fn // 2, 1), fp))


@dataclass(frozen=True)
class ConcealConfig:
    """Complete parameter set of the concealment pipeline."""
    n_prev: int = 2            # N_p
    n_follow: int = 0          # N_f (0: P-frames, 1: B-frames)
    d_max: int = 16
    ring_width: int = 4
    t_abs: float = 10.0
    t_rel: float = 3.0
    omega_max: float = 0.675
    t_e: float = 84.375
    delta: float = 0.2         # attenuation of already concealed samples
    mode: ConcealMode = ConcealMode.CONTENT_ADAPTIVE
    block_size: int = 16
    border: int = 16           # width of the support frame around the block
    conceal_chroma: bool = False
    fse: FseConfig = field(default_factory=FseConfig)

    @property
    def layer_count(self) -> int:
        return self.n_prev + self.n_follow + 1

    @property
    def volume_dims(self) -> Tuple[int, int, int]:
        side = self.block_size + 2 * self.border
        return side, side, self.layer_count

    @property
    def kappas(self) -> Tuple[int, ...]:
        """Reference frame offsets, oldest first."""
        return tuple(range(-self.n_prev, 0)) + tuple(range(1, self.n_follow + 1))

    def validate(self):
        """Raise ConfigError for invalid combinations."""
        if self.n_prev < 0 or self.n_follow < 0:
            raise ConfigError("n_prev and n_follow must be >= 0")
        if self.n_prev + self.n_follow < 1:
            raise ConfigError("at least one reference frame is required")
        for name in ('d_max', 'ring_width', 't_abs', 't_rel', 'omega_max', 't_e', 'delta'):
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be > 0")
        if self.block_size <= 0 or self.border < 0:
            raise ConfigError("block_size must be > 0 and border >= 0")
        if self.conceal_chroma and self.block_size % 2:
            raise ConfigError("chroma concealment needs an even block size")
        self.fse.validate(self.volume_dims)

    def with_overrides(self, **overrides) -> 'ConcealConfig':
        """Copy with some fields replaced; FseConfig fields are accepted too."""
        fse_names = {f.name for f in fields(FseConfig)}
        fse_overrides = {k: overrides.pop(k) for k in list(overrides) if k in fse_names}
        fse = replace(self.fse, **fse_overrides) if fse_overrides else self.fse
        if 'mode' in overrides and not isinstance(overrides['mode'], ConcealMode):
            overrides['mode'] = ConcealMode.from_label(overrides['mode'])
        return replace(self, fse=fse, **overrides)

    def halved(self) -> 'ConcealConfig':
        """Parameters for half-resolution chroma planes."""
        return replace(
            self,
            block_size=self.block_size // 2,
            border=self.border // 2,
            ring_width=max(self.ring_width // 2, 1),
            d_max=max(self.d_max // 2, 1),
            fse=self.fse.halved(),
        )

    def describe(self) -> Dict[str, object]:
        """Flat view of every effective setting."""
        described = {f.name: getattr(self, f.name) for f in fields(self) if f.name != 'fse'}
        described['mode'] = self.mode.label
        for f in fields(self.fse):
            described[f.name] = getattr(self.fse, f.name)
        return described


@dataclass(frozen=True)
class ConcealPreset:
    """Reference frame availability for a frame type."""
    name: str
    description: str
    n_prev: int
    n_follow: int


class ConcealPresets:
    """Available frame-type presets."""

    TYPES: Dict[str, ConcealPreset] = {
        "P-frames": ConcealPreset(
            name="P-frames",
            description="Losses in P-frames: two previous frames, no following frame",
            n_prev=2,
            n_follow=0
        ),
        "B-frames": ConcealPreset(
            name="B-frames",
            description="Losses in B-frames: two previous frames and one following frame",
            n_prev=2,
            n_follow=1
        ),
    }

    @classmethod
    def get_type_names(cls) -> list:
        """Get list of available preset names."""
        return list(cls.TYPES.keys())

    @classmethod
    def get_settings(cls, type_name: str) -> ConcealPreset:
        """Get a preset; unknown names fall back to P-frames."""
        return cls.TYPES.get(type_name, cls.TYPES["P-frames"])

    @classmethod
    def get_description(cls, type_name: str) -> str:
        """Get description for a preset."""
        preset = cls.TYPES.get(type_name)
        return preset.description if preset else ""

    @classmethod
    def apply(cls, config: ConcealConfig, type_name: str) -> ConcealConfig:
        """Set N_p and N_f of a config from a preset."""
        preset = cls.get_settings(type_name)
        return replace(config, n_prev=preset.n_prev, n_follow=preset.n_follow)
