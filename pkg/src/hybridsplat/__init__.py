"""hybridsplat: CPU differentiable hybrid 2D/3D Gaussian splatting.

A scene is a set of anisotropic Gaussians, each flagged flat (2D) or
volumetric (3D). Volumetric primitives are rasterized through the affine
projection approximation, flat ones through exact ray-splat intersection,
and both are composited in one front-to-back blending pass. Training
couples that renderer with adaptive type exchange driven by effective rank
and frequency-decoupled supervision in the Haar wavelet domain.
"""

from . import core, exchange, freq, grad, raster
from .errors import (CheckpointError, ConfigError, DegenerateScaleError,
                     IntegrityError, InvalidParameterError, ManifestError,
                     NumericError, SplatError)

__version__ = "0.1.0"

__all__ = [
    "core", "exchange", "freq", "grad", "raster",
    "SplatError", "ConfigError", "InvalidParameterError",
    "DegenerateScaleError", "IntegrityError", "ManifestError",
    "CheckpointError", "NumericError",
]
