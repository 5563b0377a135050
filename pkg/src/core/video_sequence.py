"""
Video Sequence - Loads, stores and accesses raw planar video material
Frames are kept as 8-bit planes; every out-of-frame read replicates the edge
"""
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Iterable, Optional, Tuple

import cv2
import numpy as np

from .errors import FrameIndexError, SequenceFormatError

logger = logging.getLogger(__name__)


# Bytes per luma sample for each supported raw layout
PIXEL_FORMATS = {
    'i420': 1.5,   # Y, then quarter-size Cb and Cr
    'gray': 1.0,   # Y only
}


@dataclass(frozen=True)
class FrameGeometry:
    """Container for sequence geometry."""
    width: int
    height: int
    frame_count: int

    def block_grid(self, block_size: int) -> Tuple[int, int]:
        """
        Get the block grid dimensions for a block size.

        Returns:
            Tuple of (columns, rows)
        """
        if self.width % block_size or self.height % block_size:
            raise SequenceFormatError(
                f"{self.width}x{self.height} is not divisible by block size {block_size}"
            )
        return self.width // block_size, self.height // block_size


class VideoSequence:
    """
    Immutable sequence of 8-bit planar frames.

    Luma is stored as a (frames, height, width) array; chroma planes are optional
    and have half the luma resolution in both directions.
    """

    def __init__(
        self,
        luma: np.ndarray,
        cb: Optional[np.ndarray] = None,
        cr: Optional[np.ndarray] = None,
        fps: Optional[float] = None
    ):
        luma = np.asarray(luma)
        if luma.ndim != 3:
            raise SequenceFormatError("luma must be a (frames, height, width) array")
        if (cb is None) != (cr is None):
            raise SequenceFormatError("both chroma planes are required when one is given")

        self._luma = self._freeze(luma)
        self._cb = None
        self._cr = None
        if cb is not None:
            expected = (luma.shape[0], luma.shape[1] // 2, luma.shape[2] // 2)
            if np.shape(cb) != expected or np.shape(cr) != expected:
                raise SequenceFormatError(f"chroma planes must have shape {expected}")
            self._cb = self._freeze(cb)
            self._cr = self._freeze(cr)
        self.fps = fps

    @staticmethod
    def _freeze(plane: np.ndarray) -> np.ndarray:
        if np.issubdtype(np.asarray(plane).dtype, np.floating):
            plane = np.rint(plane)
        frozen = np.clip(plane, 0, 255).astype(np.uint8)
        frozen.setflags(write=False)
        return frozen

    @classmethod
    def from_luma(
        cls,
        frames: Iterable[np.ndarray],
        with_chroma: bool = False,
        fps: Optional[float] = None
    ) -> 'VideoSequence':
        """
        Build a sequence from luma frames (used for synthetic material).

        Args:
            frames: Iterable of 2-D luma arrays
            with_chroma: Attach neutral (128) chroma planes

        Returns:
            VideoSequence
        """
        luma = np.stack([np.asarray(f) for f in frames]) if not isinstance(frames, np.ndarray) \
            else np.asarray(frames)
        if not with_chroma:
            return cls(luma, fps=fps)
        t, h, w = luma.shape
        neutral = np.full((t, h // 2, w // 2), 128, dtype=np.uint8)
        return cls(luma, neutral, neutral.copy(), fps=fps)

    @property
    def luma(self) -> np.ndarray:
        return self._luma

    @property
    def cb(self) -> Optional[np.ndarray]:
        return self._cb

    @property
    def cr(self) -> Optional[np.ndarray]:
        return self._cr

    @property
    def has_chroma(self) -> bool:
        return self._cb is not None

    @property
    def width(self) -> int:
        return self._luma.shape[2]

    @property
    def height(self) -> int:
        return self._luma.shape[1]

    @property
    def frame_count(self) -> int:
        return self._luma.shape[0]

    @property
    def geometry(self) -> FrameGeometry:
        return FrameGeometry(self.width, self.height, self.frame_count)

    def planes(self) -> Dict[str, np.ndarray]:
        """Get all available planes keyed by name."""
        planes = {'y': self._luma}
        if self.has_chroma:
            planes['cb'] = self._cb
            planes['cr'] = self._cr
        return planes

    def frame(self, t: int) -> np.ndarray:
        """Get the luma plane of frame t."""
        self._check_frame(t)
        return self._luma[t]

    def sample(self, x: int, y: int, t: int) -> int:
        """Read v[x, y, t] with edge replication outside the frame."""
        self._check_frame(t)
        xc = min(max(int(x), 0), self.width - 1)
        yc = min(max(int(y), 0), self.height - 1)
        return int(self._luma[t, yc, xc])

    def frame_buffer(self) -> 'FrameBuffer':
        """Create a writable floating point copy used as decoder state."""
        return FrameBuffer(
            self._luma.astype(np.float64),
            None if self._cb is None else self._cb.astype(np.float64),
            None if self._cr is None else self._cr.astype(np.float64),
            fps=self.fps
        )

    def __eq__(self, other) -> bool:
        if not isinstance(other, VideoSequence):
            return NotImplemented
        if self.has_chroma != other.has_chroma:
            return False
        return all(
            np.array_equal(a, b) for a, b in zip(self.planes().values(), other.planes().values())
        )

    def _check_frame(self, t: int):
        if not 0 <= t < self.frame_count:
            raise FrameIndexError(f"frame {t} outside 0..{self.frame_count - 1}")


class FrameBuffer:
    """Writable copy of a sequence holding partially concealed content."""

    def __init__(
        self,
        luma: np.ndarray,
        cb: Optional[np.ndarray] = None,
        cr: Optional[np.ndarray] = None,
        fps: Optional[float] = None
    ):
        self.luma = luma
        self.cb = cb
        self.cr = cr
        self.fps = fps

    @property
    def frame_count(self) -> int:
        return self.luma.shape[0]

    @property
    def has_chroma(self) -> bool:
        return self.cb is not None

    def plane(self, name: str) -> np.ndarray:
        """Get a plane by name ('y', 'cb' or 'cr')."""
        return {'y': self.luma, 'cb': self.cb, 'cr': self.cr}[name]

    def to_sequence(self) -> VideoSequence:
        """Round and clamp to 8-bit and freeze."""
        return VideoSequence(self.luma, self.cb, self.cr, fps=self.fps)


def frame_size_bytes(width: int, height: int, pixel_format: str = 'i420') -> int:
    """Get the byte size of one raw frame."""
    if pixel_format not in PIXEL_FORMATS:
        raise SequenceFormatError(f"unknown pixel format '{pixel_format}'")
    if width <= 0 or height <= 0:
        raise SequenceFormatError(f"invalid dimensions {width}x{height}")
    if pixel_format == 'i420':
        if width % 2 or height % 2:
            raise SequenceFormatError("I420 needs even width and height")
        return width * height + 2 * (width // 2) * (height // 2)
    return width * height


def load_sequence(
    path: str,
    width: int,
    height: int,
    max_frames: Optional[int] = None,
    pixel_format: str = 'i420',
    fps: Optional[float] = None
) -> VideoSequence:
    """
    Load a headerless raw planar file.

    Args:
        path: Raw file path
        width: Luma width in pixels
        height: Luma height in pixels
        max_frames: Maximum number of frames to read (None reads all)
        pixel_format: 'i420' or 'gray'

    Returns:
        VideoSequence with min(max_frames, available) frames
    """
    frame_bytes = frame_size_bytes(width, height, pixel_format)
    file_path = Path(path)
    size = file_path.stat().st_size
    if size % frame_bytes:
        raise SequenceFormatError(
            f"{file_path.name}: {size} bytes is not a multiple of the "
            f"{frame_bytes}-byte {width}x{height} {pixel_format} frame"
        )

    available = size // frame_bytes
    count = available if max_frames is None else min(max_frames, available)
    raw = np.fromfile(str(file_path), dtype=np.uint8, count=count * frame_bytes)
    frames = raw.reshape(count, frame_bytes)

    luma_size = width * height
    luma = frames[:, :luma_size].reshape(count, height, width)
    cb = cr = None
    if pixel_format == 'i420':
        chroma_size = (width // 2) * (height // 2)
        chroma_shape = (count, height // 2, width // 2)
        cb = frames[:, luma_size:luma_size + chroma_size].reshape(chroma_shape)
        cr = frames[:, luma_size + chroma_size:].reshape(chroma_shape)

    logger.info("Loaded %d of %d frames (%dx%d %s) from %s",
                count, available, width, height, pixel_format, file_path.name)
    return VideoSequence(luma, cb, cr, fps=fps)


def save_sequence(seq: VideoSequence, path: str, pixel_format: Optional[str] = None):
    """
    Store a sequence as a headerless raw planar file.

    Sequences without chroma are written with neutral chroma in i420.

    Args:
        seq: Sequence to store
        path: Output path
        pixel_format: 'i420' or 'gray' (default: i420 if the sequence has chroma)
    """
    if pixel_format is None:
        pixel_format = 'i420' if seq.has_chroma else 'gray'
    frame_size_bytes(seq.width, seq.height, pixel_format)

    output_path = Path(path)
    output_path.parent.mkdir(parents=True, exist_ok=True)
    with open(output_path, 'wb') as f:
        for t in range(seq.frame_count):
            f.write(seq.luma[t].tobytes())
            if pixel_format != 'i420':
                continue
            if seq.has_chroma:
                f.write(seq.cb[t].tobytes())
                f.write(seq.cr[t].tobytes())
            else:
                neutral = np.full((seq.height // 2, seq.width // 2), 128, dtype=np.uint8)
                f.write(neutral.tobytes())
                f.write(neutral.tobytes())

    logger.info("Wrote %d frames to %s", seq.frame_count, output_path.name)


def sample(seq: VideoSequence, x: int, y: int, t: int) -> int:
    """Read v[x, y, t]; out-of-frame coordinates are clamped to the edge."""
    return seq.sample(x, y, t)


def padded_plane(plane: np.ndarray, pad: int) -> np.ndarray:
    """
    Pad a 2-D plane by edge replication.

    Reading padded[y + pad, x + pad] equals the clamped read of plane at (x, y)
    for any |offset| up to pad outside the frame.
    """
    if pad <= 0:
        return plane
    source = np.array(plane, order='C', copy=True)
    return cv2.copyMakeBorder(source, pad, pad, pad, pad, cv2.BORDER_REPLICATE)
