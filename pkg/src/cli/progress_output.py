"""
Progress Output - Shows progress of long-running operations on the console
"""
import sys
from typing import Optional, TextIO


class ConsoleProgress:
    """Single-line progress display usable as a progress_callback(current, total)."""

    def __init__(self, title: str = "Processing", stream: Optional[TextIO] = None, enabled: bool = True):
        """
        Initialize the display.

        Args:
            title: Label printed in front of the counter
            stream: Output stream (stderr by default, stdout stays free for summaries)
            enabled: Print nothing when False
        """
        self.title = title
        self.stream = stream or sys.stderr
        self.enabled = enabled
        self._last_percentage = -1

    def set_status(self, text: str):
        """Set the label for following updates."""
        self.title = text
        self._last_percentage = -1

    def set_progress(self, current: int, total: int):
        """Print progress values when the percentage changes."""
        if not self.enabled or total <= 0:
            return
        percentage = int((current / total) * 100)
        if percentage == self._last_percentage:
            return
        self._last_percentage = percentage
        end = "\n" if current >= total else ""
        self.stream.write(f"\r{self.title}: {current} / {total} ({percentage}%)" + end)
        self.stream.flush()

    def __call__(self, current: int, total: int):
        self.set_progress(current, total)
