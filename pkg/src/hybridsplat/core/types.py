"""Domain types: single Gaussians, the structure-of-arrays scene, cameras."""

from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.special import expit

from ..errors import ConfigError, InvalidParameterError
from .sh import n_bases


@dataclass
class Gaussian:
    """One primitive; type_spec 0 = flat (2D), 1 = volumetric (3D)."""
    center: np.ndarray          # (3,) world units
    log_scale: np.ndarray       # (3,) log domain, s = exp(log_scale)
    rotation: np.ndarray        # (4,) unit quaternion, w-first
    opacity_logit: float
    sh_coeffs: np.ndarray       # (3, (degree+1)^2)
    type_spec: int

    @property
    def scale(self):
        return np.exp(self.log_scale)

    @property
    def opacity(self):
        return float(expit(self.opacity_logit))


class GaussianSet:
    """Structure-of-arrays store of N primitives plus densification stats."""

    FIELDS = ("center", "log_scale", "rotation", "opacity_logit",
              "sh_coeffs", "type_spec")

    def __init__(self, center, log_scale, rotation, opacity_logit,
                 sh_coeffs, type_spec, extent=1.0):
        self.center = np.ascontiguousarray(center, dtype=np.float64)
        self.log_scale = np.ascontiguousarray(log_scale, dtype=np.float64)
        self.rotation = np.ascontiguousarray(rotation, dtype=np.float64)
        self.opacity_logit = np.ascontiguousarray(opacity_logit, dtype=np.float64)
        self.sh_coeffs = np.ascontiguousarray(sh_coeffs, dtype=np.float64)
        self.type_spec = np.ascontiguousarray(type_spec, dtype=np.uint8)
        self.extent = float(extent)
        n = self.count
        self.grad_accum = np.zeros(n, dtype=np.float64)
        self.obs_count = np.zeros(n, dtype=np.int64)
        self.validate()

    @classmethod
    def empty(cls, sh_degree=2, extent=1.0):
        b = n_bases(sh_degree)
        return cls(np.zeros((0, 3)), np.zeros((0, 3)), np.zeros((0, 4)),
                   np.zeros(0), np.zeros((0, 3, b)), np.zeros(0, np.uint8),
                   extent=extent)

    @property
    def count(self):
        return self.center.shape[0]

    @property
    def sh_degree(self):
        return int(round(np.sqrt(self.sh_coeffs.shape[2]))) - 1

    @property
    def scales(self):
        return np.exp(self.log_scale)

    @property
    def opacities(self):
        return expit(self.opacity_logit)

    def validate(self):
        n = self.count
        shapes = {
            "center": (n, 3), "log_scale": (n, 3), "rotation": (n, 4),
            "opacity_logit": (n,), "type_spec": (n,),
        }
        for name, shape in shapes.items():
            arr = getattr(self, name)
            if arr.shape != shape:
                raise InvalidParameterError(
                    "field %s has shape %s, expected %s" % (name, arr.shape, shape))
        if self.sh_coeffs.shape[:2] != (n, 3):
            raise InvalidParameterError(
                "sh_coeffs has shape %s" % (self.sh_coeffs.shape,))
        b = self.sh_coeffs.shape[2]
        if n_bases(self.sh_degree) != b:
            raise InvalidParameterError("sh basis count %d is not (l+1)^2" % b)
        if not np.all(np.isin(self.type_spec, (0, 1))):
            raise InvalidParameterError("type_spec must be 0 or 1")
        for name in ("center", "log_scale", "rotation", "opacity_logit", "sh_coeffs"):
            if not np.all(np.isfinite(getattr(self, name))):
                raise InvalidParameterError("non-finite values in %s" % name)

    def get(self, i):
        return Gaussian(self.center[i].copy(), self.log_scale[i].copy(),
                        self.rotation[i].copy(), float(self.opacity_logit[i]),
                        self.sh_coeffs[i].copy(), int(self.type_spec[i]))

    def copy(self):
        out = GaussianSet(*(getattr(self, f).copy() for f in self.FIELDS),
                          extent=self.extent)
        out.grad_accum = self.grad_accum.copy()
        out.obs_count = self.obs_count.copy()
        return out

    def keep(self, mask):
        """New set holding only the masked rows; stats carried over."""
        mask = np.asarray(mask, dtype=bool)
        out = GaussianSet(*(getattr(self, f)[mask] for f in self.FIELDS),
                          extent=self.extent)
        out.grad_accum = self.grad_accum[mask].copy()
        out.obs_count = self.obs_count[mask].copy()
        return out

    def append(self, other):
        """New set with `other`'s rows appended; new rows get zero stats."""
        arrs = [np.concatenate([getattr(self, f), getattr(other, f)])
                for f in self.FIELDS]
        out = GaussianSet(*arrs, extent=self.extent)
        out.grad_accum = np.concatenate([self.grad_accum, other.grad_accum])
        out.obs_count = np.concatenate([self.obs_count, other.obs_count])
        return out

    def reset_stats(self):
        self.grad_accum[:] = 0.0
        self.obs_count[:] = 0

    def type_census(self):
        n3 = int(np.count_nonzero(self.type_spec))
        return self.count - n3, n3

    def renormalize_rotations(self):
        norm = np.linalg.norm(self.rotation, axis=1, keepdims=True)
        bad = norm[:, 0] <= 1e-8
        if np.any(bad):
            self.rotation[bad] = (1.0, 0.0, 0.0, 0.0)
            norm[bad] = 1.0
        self.rotation /= norm


@dataclass
class CameraView:
    """Pinhole camera with a rigid world-to-camera pose.

    Pixel (ix, iy) is sampled at continuous image coordinates
    (ix + 0.5, iy + 0.5); the projection of a world point is
    (fx X/Z + cx, fy Y/Z + cy) in those coordinates.
    """
    fx: float
    fy: float
    cx: float
    cy: float
    width: int
    height: int
    world_to_camera: np.ndarray     # (4, 4)
    near: float = 0.01
    far: float = 100.0
    gt_image: Optional[np.ndarray] = None   # (H, W, 3) in [0, 1]
    gt_depth: Optional[np.ndarray] = None   # (H, W) scene units
    cam_id: str = ""

    def __post_init__(self):
        self.world_to_camera = np.asarray(self.world_to_camera, dtype=np.float64)
        if self.fx <= 0 or self.fy <= 0:
            raise ConfigError("focal lengths must be positive")
        if not (0 < self.near < self.far):
            raise ConfigError("need 0 < near < far")
        if self.world_to_camera.shape != (4, 4):
            raise ConfigError("world_to_camera must be 4x4")
        R = self.world_to_camera[:3, :3]
        if not np.allclose(R @ R.T, np.eye(3), atol=1e-6):
            raise ConfigError("world_to_camera rotation block is not orthonormal")
        if self.gt_image is not None:
            self.gt_image = np.asarray(self.gt_image, dtype=np.float64)
            if self.gt_image.shape != (self.height, self.width, 3):
                raise ConfigError("gt_image shape does not match camera dims")

    @property
    def camera_center(self):
        """Camera origin in world coordinates."""
        R = self.world_to_camera[:3, :3]
        t = self.world_to_camera[:3, 3]
        return -R.T @ t

    def projection_matrix(self):
        """4x4 world -> pixel-homogeneous map; w of the output is view z."""
        K = np.array([
            [self.fx, 0.0, self.cx, 0.0],
            [0.0, self.fy, self.cy, 0.0],
            [0.0, 0.0, 1.0, 0.0],
            [0.0, 0.0, 1.0, 0.0],
        ])
        return K @ self.world_to_camera


def check_image(buf, channels=(1, 3)):
    """Validate an image buffer: finite, HxW or HxWxC with C in `channels`."""
    buf = np.asarray(buf)
    if buf.ndim == 2:
        pass
    elif buf.ndim == 3 and buf.shape[2] in channels:
        pass
    else:
        raise ConfigError("bad image shape %s" % (buf.shape,))
    if buf.size == 0:
        raise ConfigError("empty image")
    if not np.all(np.isfinite(buf)):
        raise InvalidParameterError("image contains NaN or Inf")
    return buf
