"""Orientation-adaptive pixel-space visual servoing: simulation, harness, teleop."""

__version__ = "0.1.0"
