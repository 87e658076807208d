"""Per-splat screen-space preparation for the hybrid rasterizer.

Volumetric (3D) primitives are projected with the affine approximation:
the world covariance is pushed through the projection Jacobian and inverted
into a screen-space conic. Flat (2D) primitives keep the exact geometry:
the rows of the splat-to-pixel homogeneous map are stored so pixel rays can
be intersected with the splat plane during blending.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.special import expit

from ..core import CameraView, Gaussian, GaussianSet, eval_sh, quat_to_matrix
from ..errors import ConfigError, SplatError
from ..exchange import ExchangeConfig, modulated_opacity

ALPHA_CLAMP = 0.99          # keeps 1/(1 - alpha) finite in the backward pass
MIN_ALPHA = 1.0 / 255.0     # contributions below this are dropped
EARLY_STOP_T = 1e-4         # stop blending once transmittance falls below
SCREEN_DILATION = 0.3       # px^2 added to the projected covariance diagonal
LOWPASS_SIGMA = 0.5         # px; screen-space low-pass for flat primitives
SUPPORT_C = 2.0 * np.log(255.0)   # d <= SUPPORT_C covers alpha_t >= 1/255
DEGENERATE_DEN = 1e-9
BBOX_PAD = 1.0


class DegenerateIntersection(SplatError):
    """Pixel ray is (nearly) parallel to the splat plane."""


@dataclass
class RenderSettings:
    background: tuple = (0.0, 0.0, 0.0)
    tile_size: int = 16
    theta_z: float = 1.05
    t_z: float = 1e-3
    lambda_z: float = 1.0
    backend: str = "auto"      # auto | cython | python

    def modulation(self):
        return ExchangeConfig(theta_z=self.theta_z, t_z=self.t_z,
                              lambda_z=self.lambda_z)


@dataclass
class ProjectedSplat:
    """Screen-space view of one primitive, per-type fields optional."""
    gaussian_index: int
    type_spec: int
    screen_center: np.ndarray           # (2,) pixels
    depth_key: float                    # view-space z
    radius: float
    conic: Optional[np.ndarray] = None          # (2, 2) for type 1
    plane_params: Optional[np.ndarray] = None   # (3, 4) rows of the pixel map


class SplatFrame:
    """Sorted, culled per-splat arrays plus tile bins for one view."""

    def __init__(self, scene, camera, settings, arrays):
        self.scene = scene
        self.camera = camera
        self.settings = settings
        for k, v in arrays.items():
            setattr(self, k, v)
        self.height = camera.height
        self.width = camera.width
        self.tile_size = settings.tile_size

    @property
    def count(self):
        return self.idx.shape[0]

    def splat(self, k):
        """ProjectedSplat view of sorted slot k (contract surface)."""
        typ = int(self.typ[k])
        return ProjectedSplat(
            gaussian_index=int(self.idx[k]),
            type_spec=typ,
            screen_center=self.center2d[k].copy(),
            depth_key=float(self.depth[k]),
            radius=float(self.radius[k]),
            conic=(np.array([[self.conic[k, 0], self.conic[k, 1]],
                             [self.conic[k, 1], self.conic[k, 2]]])
                   if typ == 1 else None),
            plane_params=self.mrow[k].copy() if typ == 0 else None,
        )


def _camera_projection(camera):
    """(V, tvec, T): rotation block, translation, world->pixel 4x4 map."""
    W = camera.world_to_camera
    return W[:3, :3], W[:3, 3], camera.projection_matrix()


def splat_to_world(center, rotation_matrix, sx, sy):
    """4x4 (u, v, *, 1) -> world homogeneous map of a flat primitive."""
    H = np.zeros((4, 4))
    H[:3, 0] = sx * rotation_matrix[:, 0]
    H[:3, 1] = sy * rotation_matrix[:, 1]
    H[:3, 3] = center
    H[3, 3] = 1.0
    return H


def ray_splat_intersect(splat: ProjectedSplat, pixel):
    """Tangent-frame coordinates (u, v) of the pixel ray / plane hit.

    The splat center maps to (0, 0) and the primitive is the unit isotropic
    Gaussian in these coordinates.
    """
    if splat.plane_params is None:
        raise ConfigError("ray_splat_intersect needs a flat primitive")
    px, py = float(pixel[0]), float(pixel[1])
    m = splat.plane_params
    hu = px * m[2] - m[0]
    hv = py * m[2] - m[1]
    den = hu[0] * hv[1] - hu[1] * hv[0]
    if abs(den) < DEGENERATE_DEN:
        raise DegenerateIntersection("pixel ray nearly parallel to splat plane")
    u = (hu[1] * hv[3] - hu[3] * hv[1]) / den
    v = (hu[3] * hv[0] - hu[0] * hv[3]) / den
    return u, v


def evaluate_contribution(splat: ProjectedSplat, pixel, opacity):
    """alpha_t = opacity * exp(-d/2), clamped to <= 0.99.

    d is the conic Mahalanobis distance for volumetric primitives and
    min(ray-splat distance, screen-space low-pass distance) for flat ones.
    A degenerate ray-plane intersection skips the primitive entirely for
    this pixel (returns 0), matching the blending kernels.
    """
    px, py = float(pixel[0]), float(pixel[1])
    if splat.type_spec == 1:
        dx = px - splat.screen_center[0]
        dy = py - splat.screen_center[1]
        c = splat.conic
        d = c[0, 0] * dx * dx + 2.0 * c[0, 1] * dx * dy + c[1, 1] * dy * dy
    else:
        dx = px - splat.screen_center[0]
        dy = py - splat.screen_center[1]
        d_screen = (dx * dx + dy * dy) / (LOWPASS_SIGMA * LOWPASS_SIGMA)
        try:
            u, v = ray_splat_intersect(splat, pixel)
        except DegenerateIntersection:
            return 0.0
        d = min(u * u + v * v, d_screen)
    return min(opacity * np.exp(-0.5 * d), ALPHA_CLAMP)


def project_gaussian_3d(g: Gaussian, camera: CameraView,
                        settings: RenderSettings = None) -> ProjectedSplat:
    """Affine-project one volumetric primitive; returns None when culled."""
    if settings is None:
        settings = RenderSettings()
    if g.type_spec != 1:
        raise ConfigError("project_gaussian_3d needs a volumetric primitive")
    scene = GaussianSet(g.center[None], g.log_scale[None], g.rotation[None],
                        np.array([g.opacity_logit]), g.sh_coeffs[None],
                        np.array([1], np.uint8))
    frame = build_frame(scene, camera, settings)
    return frame.splat(0) if frame.count else None


def project_scene(scene: GaussianSet, camera: CameraView,
                  settings: RenderSettings):
    """Cull, project, shade, and depth-sort every primitive.

    Returns the dict of per-splat arrays in front-to-back order (ties broken
    by index), without tile bins yet.
    """
    V, tvec, T = _camera_projection(camera)
    n = scene.count
    if n == 0:
        return None

    t_cam = scene.center @ V.T + tvec
    keep = t_cam[:, 2] > camera.near
    order = np.flatnonzero(keep)
    if order.size == 0:
        return None
    # Front-to-back by view depth, ties broken by original index.
    order = order[np.lexsort((order, t_cam[order, 2]))]

    idx = order.astype(np.int32)
    typ = scene.type_spec[order]
    t_cam = t_cam[order]
    z = t_cam[:, 2]
    center2d = np.stack([camera.fx * t_cam[:, 0] / z + camera.cx,
                         camera.fy * t_cam[:, 1] / z + camera.cy], axis=1)

    quat = scene.rotation[order]
    R = quat_to_matrix(quat)
    s = np.exp(scene.log_scale[order])
    alpha = expit(scene.opacity_logit[order])

    m = order.size
    cov2d = np.zeros((m, 3))
    conic = np.zeros((m, 3))
    mrow = np.zeros((m, 3, 4))
    alpha_eff = alpha.copy()
    valid = np.ones(m, dtype=bool)

    is3d = typ == 1
    if np.any(is3d):
        i3 = np.flatnonzero(is3d)
        J = np.zeros((i3.size, 2, 3))
        zi = z[i3]
        J[:, 0, 0] = camera.fx / zi
        J[:, 0, 2] = -camera.fx * t_cam[i3, 0] / zi ** 2
        J[:, 1, 1] = camera.fy / zi
        J[:, 1, 2] = -camera.fy * t_cam[i3, 1] / zi ** 2
        U = J @ V
        RS = R[i3] * s[i3, None, :]
        sigma = RS @ np.swapaxes(RS, 1, 2)
        sig2d = U @ sigma @ np.swapaxes(U, 1, 2)
        a = sig2d[:, 0, 0] + SCREEN_DILATION
        b = sig2d[:, 0, 1]
        c = sig2d[:, 1, 1] + SCREEN_DILATION
        det = a * c - b * b
        ok = det > 1e-18
        inv = np.where(ok, 1.0 / np.where(ok, det, 1.0), 0.0)
        cov2d[i3, 0], cov2d[i3, 1], cov2d[i3, 2] = a, b, c
        conic[i3, 0] = c * inv
        conic[i3, 1] = -b * inv
        conic[i3, 2] = a * inv
        valid[i3] = ok

    is2d = ~is3d
    if np.any(is2d):
        i2 = np.flatnonzero(is2d)
        # H columns: s_x t_u | s_y t_v | 0 | center (homogeneous).
        Hm = np.zeros((i2.size, 4, 4))
        Hm[:, :3, 0] = s[i2, 0, None] * R[i2, :, 0]
        Hm[:, :3, 1] = s[i2, 1, None] * R[i2, :, 1]
        Hm[:, :3, 3] = scene.center[order][i2]
        Hm[:, 3, 3] = 1.0
        M = np.einsum("rc,ncd->nrd", T, Hm)
        mrow[i2] = M[:, (0, 1, 3), :]
        alpha_eff[i2] = modulated_opacity(
            alpha[i2], scene.log_scale[order][i2][:, 2], settings.modulation())

    # View-dependent color from the camera center direction.
    cam_pos = camera.camera_center
    delta = scene.center[order] - cam_pos
    cam_dist = np.linalg.norm(delta, axis=1)
    view_dir = delta / np.maximum(cam_dist, 1e-12)[:, None]
    color = eval_sh(scene.sh_coeffs[order], scene.sh_degree, view_dir)

    arrays = dict(idx=idx, typ=typ.astype(np.uint8), depth=z, t_cam=t_cam,
                  center2d=center2d, cov2d=cov2d, conic=conic, mrow=mrow,
                  alpha=alpha, alpha_eff=alpha_eff, color=color,
                  view_dir=view_dir, cam_dist=cam_dist, valid=valid)
    return arrays


def _bboxes(arrays, width, height):
    """Inclusive pixel bounds covering every alpha_t >= 1/255 contribution."""
    m = arrays["idx"].shape[0]
    typ = arrays["typ"]
    ctr = arrays["center2d"]
    bbox = np.zeros((m, 4), dtype=np.float64)
    radius = np.ones(m)

    is3d = typ == 1
    if np.any(is3d):
        i3 = np.flatnonzero(is3d)
        a = arrays["cov2d"][i3, 0]
        b = arrays["cov2d"][i3, 1]
        c = arrays["cov2d"][i3, 2]
        hx = np.sqrt(SUPPORT_C * a) + BBOX_PAD
        hy = np.sqrt(SUPPORT_C * c) + BBOX_PAD
        bbox[i3, 0] = ctr[i3, 0] - hx
        bbox[i3, 1] = ctr[i3, 1] - hy
        bbox[i3, 2] = ctr[i3, 0] + hx
        bbox[i3, 3] = ctr[i3, 1] + hy
        lam_max = 0.5 * ((a + c) + np.sqrt((a - c) ** 2 + 4.0 * b * b))
        radius[i3] = np.maximum(1.0, 3.0 * np.sqrt(lam_max))

    i2 = np.flatnonzero(~is3d)
    for k in i2:
        m3 = arrays["mrow"][k]
        # 2D homography (u, v, 1) -> (x w, y w, w).
        A = np.stack([m3[:, 0], m3[:, 1], m3[:, 2] + m3[:, 3]], axis=1)
        lo = ctr[k] - LOWPASS_SIGMA * np.sqrt(SUPPORT_C) - BBOX_PAD
        hi = ctr[k] + LOWPASS_SIGMA * np.sqrt(SUPPORT_C) + BBOX_PAD
        x0, y0 = lo
        x1, y1 = hi
        # Exact AABB of the projected support ellipse via the dual conic,
        # valid only when the whole support disk stays in front.
        w_min = A[2, 2] - np.sqrt(SUPPORT_C) * np.hypot(A[2, 0], A[2, 1])
        full_screen = w_min <= 1e-9
        if not full_screen:
            Q = A @ np.diag([SUPPORT_C, SUPPORT_C, -1.0]) @ A.T
            dx = Q[0, 2] ** 2 - Q[0, 0] * Q[2, 2]
            dy = Q[1, 2] ** 2 - Q[1, 1] * Q[2, 2]
            if dx >= 0.0 and dy >= 0.0 and abs(Q[2, 2]) > 1e-18:
                sx = np.sqrt(dx) / abs(Q[2, 2])
                sy = np.sqrt(dy) / abs(Q[2, 2])
                mx = Q[0, 2] / Q[2, 2]
                my = Q[1, 2] / Q[2, 2]
                x0 = min(x0, mx - sx - BBOX_PAD)
                x1 = max(x1, mx + sx + BBOX_PAD)
                y0 = min(y0, my - sy - BBOX_PAD)
                y1 = max(y1, my + sy + BBOX_PAD)
            else:
                full_screen = True
        if full_screen:
            x0, y0, x1, y1 = 0.0, 0.0, width - 1.0, height - 1.0
        bbox[k] = (x0, y0, x1, y1)
        radius[k] = max(1.0, 0.5 * (x1 - x0), 0.5 * (y1 - y0))

    out = np.zeros((m, 4), dtype=np.int32)
    out[:, 0] = np.clip(np.floor(bbox[:, 0]), 0, width - 1)
    out[:, 1] = np.clip(np.floor(bbox[:, 1]), 0, height - 1)
    out[:, 2] = np.clip(np.ceil(bbox[:, 2]), 0, width - 1)
    out[:, 3] = np.clip(np.ceil(bbox[:, 3]), 0, height - 1)
    # Splats fully off screen keep an empty box (x0 > x1).
    off = (bbox[:, 2] < 0) | (bbox[:, 0] > width - 1) | \
          (bbox[:, 3] < 0) | (bbox[:, 1] > height - 1)
    out[off, 2] = -1
    return out, radius


def _tile_bins(bbox, width, height, tile):
    tx = (width + tile - 1) // tile
    ty = (height + tile - 1) // tile
    n_tiles = tx * ty
    counts = np.zeros(n_tiles, dtype=np.int64)
    spans = []
    for k in range(bbox.shape[0]):
        if bbox[k, 2] < bbox[k, 0]:
            spans.append(None)
            continue
        tx0, tx1 = bbox[k, 0] // tile, bbox[k, 2] // tile
        ty0, ty1 = bbox[k, 1] // tile, bbox[k, 3] // tile
        spans.append((tx0, tx1, ty0, ty1))
        for tyy in range(ty0, ty1 + 1):
            counts[tyy * tx + tx0:tyy * tx + tx1 + 1] += 1
    offsets = np.zeros(n_tiles + 1, dtype=np.int64)
    np.cumsum(counts, out=offsets[1:])
    ids = np.zeros(offsets[-1], dtype=np.int32)
    cursor = offsets[:-1].copy()
    for k, span in enumerate(spans):
        if span is None:
            continue
        tx0, tx1, ty0, ty1 = span
        for tyy in range(ty0, ty1 + 1):
            for txx in range(tx0, tx1 + 1):
                t = tyy * tx + txx
                ids[cursor[t]] = k
                cursor[t] += 1
    return offsets, ids


def build_frame(scene: GaussianSet, camera: CameraView,
                settings: RenderSettings = None) -> SplatFrame:
    """Full screen-space preparation: project, bound, and bin into tiles."""
    if settings is None:
        settings = RenderSettings()
    arrays = project_scene(scene, camera, settings)
    if arrays is None:
        arrays = _empty_arrays()
    if not np.all(arrays["valid"]):
        # Splats with a singular projected covariance are culled outright.
        good = arrays["valid"]
        arrays = {k: v[good] for k, v in arrays.items()}
    bbox, radius = _bboxes(arrays, camera.width, camera.height)
    arrays["bbox"] = bbox
    arrays["radius"] = radius
    offsets, ids = _tile_bins(bbox, camera.width, camera.height,
                              settings.tile_size)
    arrays["tile_offsets"] = offsets
    arrays["tile_ids"] = ids
    return SplatFrame(scene, camera, settings, arrays)


def _empty_arrays():
    return dict(idx=np.zeros(0, np.int32), typ=np.zeros(0, np.uint8),
                depth=np.zeros(0), t_cam=np.zeros((0, 3)),
                center2d=np.zeros((0, 2)), cov2d=np.zeros((0, 3)),
                conic=np.zeros((0, 3)), mrow=np.zeros((0, 3, 4)),
                alpha=np.zeros(0), alpha_eff=np.zeros(0),
                color=np.zeros((0, 3)), view_dir=np.zeros((0, 3)),
                cam_dist=np.zeros(0), valid=np.zeros(0, bool))
