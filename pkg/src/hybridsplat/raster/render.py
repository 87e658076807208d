"""Forward rendering API over the tile-based blending kernels."""

from dataclasses import dataclass

import numpy as np

from ..core import CameraView, GaussianSet
from ..errors import ConfigError, IntegrityError
from . import _blend_py
from .project import RenderSettings, SplatFrame, build_frame

try:
    from . import _blend_cy
    HAVE_EXT = True
except ImportError:       # pragma: no cover - depends on the build
    _blend_cy = None
    HAVE_EXT = False


def active_backend(settings: RenderSettings):
    if settings.backend == "auto":
        return "cython" if HAVE_EXT else "python"
    if settings.backend == "cython" and not HAVE_EXT:
        raise ConfigError("compiled blending kernel is not available")
    if settings.backend not in ("cython", "python"):
        raise ConfigError("backend must be auto, cython, or python")
    return settings.backend


@dataclass
class BlendLog:
    """Per-pixel ordered record of every composited contribution.

    `offsets` is CSR over pixels in row-major order; `position` indexes the
    frame's sorted splat arrays while `gaussian_index` maps back into the
    scene. (u, v) are tangent-frame intersection coordinates for flat
    primitives and projected-center offsets for volumetric ones.
    """
    offsets: np.ndarray
    position: np.ndarray
    gaussian_index: np.ndarray
    alpha: np.ndarray
    u: np.ndarray
    v: np.ndarray

    def entries(self, ix, iy, width):
        lo = self.offsets[iy * width + ix]
        hi = self.offsets[iy * width + ix + 1]
        return [(int(self.gaussian_index[e]), float(self.alpha[e]),
                 (float(self.u[e]), float(self.v[e])))
                for e in range(lo, hi)]


@dataclass
class RenderOutput:
    color: np.ndarray          # (H, W, 3) raw blend, unclamped
    depth: np.ndarray          # (H, W) expected depth under the blend weights
    transmittance: np.ndarray  # (H, W) remaining transparency
    blend_log: BlendLog
    frame: SplatFrame
    scene_fingerprint: tuple

    def check_scene(self, scene: GaussianSet):
        if scene_fingerprint(scene) != self.scene_fingerprint:
            raise IntegrityError("blend log does not match this scene")


def scene_fingerprint(scene: GaussianSet):
    return (scene.count, float(scene.center.sum()),
            float(scene.opacity_logit.sum()), float(scene.log_scale.sum()))


def _forward_cython(frame, background):
    bg = np.asarray(background, dtype=np.float64)
    return _blend_cy.forward_blend(
        frame.height, frame.width, frame.tile_size,
        frame.tile_offsets, frame.tile_ids,
        frame.typ, frame.center2d, frame.conic,
        np.ascontiguousarray(frame.mrow.reshape(-1, 12)),
        frame.alpha_eff, frame.color, frame.depth, frame.bbox, bg)


def render(scene: GaussianSet, camera: CameraView,
           settings: RenderSettings = None) -> RenderOutput:
    """Rasterize the scene for one view in a single alpha-blending pass."""
    if settings is None:
        settings = RenderSettings()
    frame = build_frame(scene, camera, settings)
    backend = active_backend(settings)
    if backend == "cython":
        res = _forward_cython(frame, settings.background)
    else:
        res = _blend_py.forward_blend(frame, settings.background)
    color, depth, trans, offsets, pos, alpha, u, v = res
    log = BlendLog(offsets, pos, frame.idx[pos] if pos.size else pos,
                   alpha, u, v)
    return RenderOutput(color, depth, trans, log, frame,
                        scene_fingerprint(scene))


def render_naive(scene: GaussianSet, camera: CameraView,
                 settings: RenderSettings = None) -> RenderOutput:
    """All-pairs per-pixel reference compositor (no tiles, no bounds).

    Shares the projection and contribution math with `render`; used as the
    oracle the tile renderer is checked against.
    """
    if settings is None:
        settings = RenderSettings()
    frame = build_frame(scene, camera, settings)
    every = np.arange(frame.count, dtype=np.int64)
    res = _blend_py.forward_blend(frame, settings.background,
                                  candidates=lambda ix, iy: every)
    color, depth, trans, offsets, pos, alpha, u, v = res
    log = BlendLog(offsets, pos, frame.idx[pos] if pos.size else pos,
                   alpha, u, v)
    return RenderOutput(color, depth, trans, log, frame,
                        scene_fingerprint(scene))
