from .errors import ConcealmentError, ConfigError
from .video_sequence import VideoSequence, FrameBuffer, FrameGeometry, load_sequence, save_sequence
from .loss_patterns import LossMask, BlockState, checkerboard_mask, slice_mask, apply_loss
from .motion_estimator import MotionEstimator, MotionEstimate
from .extrapolation_volume import ExtrapolationVolume, WeightVolume, extract_volume, build_weights
from .frequency_selective import FrequencySelectiveExtrapolator, SpectralModel
from .concealment_types import ConcealConfig, ConcealMode, ConcealPresets, FseConfig
from .block_concealer import BlockConcealer, conceal_sequence
from .evaluation import run_comparison, collect_training_pairs, fit_weight_model
from .report_exporter import ReportExporter
