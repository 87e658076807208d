"""Domain types and shared primitives: covariances and SH color decoding."""

from .rotation import (build_covariance, matrix_to_quat, normalize_quaternion,
                       quat_to_matrix, quat_to_matrix_grad)
from .sh import eval_sh, eval_sh_backward, n_bases, rgb_to_band0, sh_basis
from .types import CameraView, Gaussian, GaussianSet, check_image

__all__ = [
    "build_covariance", "matrix_to_quat", "normalize_quaternion",
    "quat_to_matrix", "quat_to_matrix_grad",
    "eval_sh", "eval_sh_backward", "n_bases", "rgb_to_band0", "sh_basis",
    "CameraView", "Gaussian", "GaussianSet", "check_image",
]
