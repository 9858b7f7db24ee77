"""Conditional-flow video codec: coding backbone, bitstream, training and evaluation."""

__version__ = "0.1.0"

from cnfv import errors

__all__ = ["errors", "__version__"]
