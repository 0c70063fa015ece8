"""Crop-management policy workbench.

Trains nitrogen and irrigation policies with deep Q-learning on a daily
maize surrogate, distils them into partial-observation policies by
behavior cloning, and scores everything under five reward presets.
"""

from .kernels import BACKEND

__version__ = "0.1.0"
__all__ = ["BACKEND", "__version__"]
