"""Hybrid rasterizer: affine projection for volumetric primitives and exact
ray-splat intersection for flat ones, composited in one blending pass."""

from .project import (ALPHA_CLAMP, DegenerateIntersection, EARLY_STOP_T,
                      LOWPASS_SIGMA, MIN_ALPHA, ProjectedSplat,
                      RenderSettings, SCREEN_DILATION, SplatFrame,
                      build_frame, evaluate_contribution, project_gaussian_3d,
                      ray_splat_intersect)
from .render import (HAVE_EXT, BlendLog, RenderOutput, active_backend,
                     render, render_naive, scene_fingerprint)

__all__ = [
    "ALPHA_CLAMP", "DegenerateIntersection", "EARLY_STOP_T", "LOWPASS_SIGMA",
    "MIN_ALPHA", "ProjectedSplat", "RenderSettings", "SCREEN_DILATION",
    "SplatFrame", "build_frame", "evaluate_contribution",
    "project_gaussian_3d", "ray_splat_intersect",
    "HAVE_EXT", "BlendLog", "RenderOutput", "active_backend", "render",
    "render_naive", "scene_fingerprint",
]
