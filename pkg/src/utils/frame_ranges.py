"""
Frame Ranges - Parses frame selections such as `5..200:5` or `0,3,10..12`
"""
import re
from typing import List, Optional

from ..core.errors import ConfigError, FrameIndexError

_RANGE = re.compile(r'^(\d+)\.\.(\d+)(?::(\d+))?$')


def parse_frame_range(text: str, frame_count: Optional[int] = None) -> List[int]:
    """
    Parse a comma separated list of frame numbers and inclusive ranges `a..b[:step]`.

    Args:
        text: Selection text
        frame_count: When given, every frame must lie in 0..frame_count-1

    Returns:
        Sorted list of distinct frame indices

    Raises:
        ConfigError: malformed selection
        FrameIndexError: a frame outside the sequence
    """
    frames = set()
    for part in (p.strip() for p in text.split(',')):
        if not part:
            raise ConfigError(f"empty item in frame selection '{text}'")
        if part.isdigit():
            frames.add(int(part))
            continue
        match = _RANGE.match(part)
        if not match:
            raise ConfigError(f"cannot parse frame selection '{part}' (expected a..b:step)")
        start, end = int(match.group(1)), int(match.group(2))
        step = int(match.group(3) or 1)
        if step <= 0 or end < start:
            raise ConfigError(f"invalid frame range '{part}'")
        frames.update(range(start, end + 1, step))

    selected = sorted(frames)
    if frame_count is not None and selected and selected[-1] >= frame_count:
        raise FrameIndexError(f"frame {selected[-1]} outside 0..{frame_count - 1}")
    return selected
