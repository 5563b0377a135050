"""
Shared fixtures: synthetic sequences with seeded textures
"""
import os
import sys
from pathlib import Path

import cv2
import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).resolve().parent.parent))

from src.core.concealment_types import ConcealConfig  # noqa: E402
from src.core.video_sequence import VideoSequence  # noqa: E402


def blurred_noise(height: int, width: int, seed: int = 0) -> np.ndarray:
    """Smooth random texture in 16..240 with a unique best match under any shift."""
    rng = np.random.default_rng(seed)
    noise = rng.uniform(0, 255, size=(height, width)).astype(np.float32)
    smooth = cv2.GaussianBlur(noise, (5, 5), 1.2)
    smooth = (smooth - smooth.min()) / max(float(smooth.max() - smooth.min()), 1e-6)
    return np.rint(16 + 224 * smooth).astype(np.uint8)


def periodic_texture(height: int, width: int, x0: int = 0, y0: int = 0) -> np.ndarray:
    """Integer texture built from DFT-grid cosines of period 4 and 2 (exact in 8 bit)."""
    y, x = np.mgrid[y0:y0 + height, x0:x0 + width]
    texture = (128
               + 40 * np.cos(np.pi * x / 2)
               + 30 * np.cos(np.pi * (x + y) / 2)
               + 20 * np.sin(np.pi * y / 2)
               + 10 * np.cos(np.pi * x))
    return np.rint(texture).astype(np.uint8)


def translated_frames(base: np.ndarray, height: int, width: int, shift, count: int,
                      anchor=(40, 40)) -> np.ndarray:
    """
    Crop `count` frames from a large texture; content moves by `shift` per frame.

    Frame t-1 at (x + dx, y + dy) equals frame t at (x, y).
    """
    dx, dy = shift
    ax, ay = anchor
    frames = []
    for t in range(count):
        ox = ax + (count - 1 - t) * (-dx)
        oy = ay + (count - 1 - t) * (-dy)
        frames.append(base[oy:oy + height, ox:ox + width])
    return np.stack(frames)


def quick_config(**overrides) -> ConcealConfig:
    """Default parameters with a shallow transform along time for faster tests."""
    settings = dict(fft_dims=(64, 64, 4), iterations=200)
    settings.update(overrides)
    return ConcealConfig().with_overrides(**settings)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def static_sequence():
    """Four identical 64x64 frames of the periodic texture."""
    frame = periodic_texture(64, 64)
    return VideoSequence.from_luma(np.stack([frame] * 4))


@pytest.fixture
def textured_sequence():
    """Four 64x64 frames of smooth noise moving by (2, 1) per frame, with chroma."""
    base = blurred_noise(200, 200, seed=7)
    luma = translated_frames(base, 64, 64, (2, 1), 4)
    cb = np.full((4, 32, 32), 110, dtype=np.uint8)
    cr = np.full((4, 32, 32), 140, dtype=np.uint8)
    return VideoSequence(luma, cb, cr)


@pytest.fixture
def foreman_path():
    path = os.environ.get('FOREMAN_CIF')
    if not path or not Path(path).is_file():
        pytest.skip("FOREMAN_CIF does not point at an uncoded CIF I420 file")
    return path
