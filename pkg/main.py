#!/usr/bin/env python3
"""
Block Concealment Tool

Conceals lost 16x16 blocks in raw video sequences by content-adaptive
motion-compensated frequency selective extrapolation.

Functions:
- Artificial loss patterns (checkerboard, interleaved slices)
- Concealment (content-adaptive, fixed weighting, temporal copy)
- PSNR evaluation over concealed blocks and mode comparisons
- Training of the temporal weighting parameters

Usage:
    python main.py conceal input.yuv --width 352 --height 288 --mask loss.txt --output out.yuv
"""

import sys

from src.cli.command_line import run_cli


if __name__ == "__main__":
    sys.exit(run_cli())
