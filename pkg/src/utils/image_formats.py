"""
Image Formats - Turns decoded frames into images and writes snapshot files
"""
import logging
from pathlib import Path
from typing import Optional

import cv2
import numpy as np
from PIL import Image

logger = logging.getLogger(__name__)


class ImageFormats:
    """Snapshot file formats and frame-to-image conversion."""

    FORMATS = {
        'PNG': {
            'extension': '.png',
            'pillow_format': 'PNG',
            'options': {'compress_level': 6}
        },
        'TIFF': {
            'extension': '.tiff',
            'pillow_format': 'TIFF',
            'options': {'compression': 'tiff_lzw'}
        },
        'BMP': {
            'extension': '.bmp',
            'pillow_format': 'BMP',
            'options': {}
        },
        'JPG': {
            'extension': '.jpg',
            'pillow_format': 'JPEG',
            'options': {'quality': 95}
        },
        'WebP': {
            'extension': '.webp',
            'pillow_format': 'WEBP',
            'options': {'quality': 95, 'method': 4}
        },
    }

    @classmethod
    def get_format_list(cls) -> list:
        """Get list of available format names."""
        return list(cls.FORMATS.keys())

    @classmethod
    def get_extension(cls, format_name: str) -> str:
        """Get file extension for a format."""
        return cls.FORMATS.get(format_name, {}).get('extension', '.png')

    @staticmethod
    def frame_to_image(
        luma: np.ndarray,
        cb: Optional[np.ndarray] = None,
        cr: Optional[np.ndarray] = None
    ) -> Image.Image:
        """
        Convert one planar frame to a PIL image.

        Args:
            luma: (height, width) 8-bit plane
            cb: Optional half-resolution Cb plane
            cr: Optional half-resolution Cr plane

        Returns:
            Grayscale image for luma only, RGB otherwise
        """
        luma = np.ascontiguousarray(luma, dtype=np.uint8)
        if cb is None or cr is None:
            return Image.fromarray(luma)
        height, width = luma.shape
        i420 = np.concatenate([
            luma.reshape(-1),
            np.ascontiguousarray(cb, dtype=np.uint8).reshape(-1),
            np.ascontiguousarray(cr, dtype=np.uint8).reshape(-1),
        ]).reshape(height * 3 // 2, width)
        return Image.fromarray(cv2.cvtColor(i420, cv2.COLOR_YUV2RGB_I420))

    @classmethod
    def save_image(
        cls,
        image: Image.Image,
        filepath: str,
        format_name: str = 'PNG',
        quality: Optional[int] = None
    ) -> str:
        """
        Save an image in the specified format.

        Args:
            image: PIL Image to save
            filepath: Output file path (extension is corrected to the format)
            format_name: Format name (PNG, TIFF, ...)
            quality: Optional quality override for lossy formats (1-100)

        Returns:
            Path actually written

        Raises:
            ValueError: for an unknown format
        """
        format_info = cls.FORMATS.get(format_name)
        if not format_info:
            raise ValueError(f"unknown image format '{format_name}'")

        path = Path(filepath)
        if path.suffix.lower() != format_info['extension']:
            path = path.with_suffix(format_info['extension'])
        path.parent.mkdir(parents=True, exist_ok=True)

        options = format_info['options'].copy()
        if quality is not None and format_name in ['JPG', 'WebP']:
            options['quality'] = max(1, min(100, quality))

        image.save(str(path), format_info['pillow_format'], **options)
        logger.debug("Saved %s", path.name)
        return str(path)
