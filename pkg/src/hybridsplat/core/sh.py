"""Real spherical-harmonics color evaluation, degrees 0..3.

Coefficients are stored per channel as (3, (degree+1)^2). Band 0 carries a
+0.5 offset so that zero coefficients decode to mid-gray, and the decoded
color is clamped to >= 0.
"""

import numpy as np

from ..errors import ConfigError

C0 = 0.28209479177387814
C1 = 0.4886025119029199
C2 = (1.0925484305920792, -1.0925484305920792, 0.31539156525252005,
      -1.0925484305920792, 0.5462742152960396)
C3 = (-0.5900435899266435, 2.890611442640554, -0.4570457994644658,
      0.3731763325901154, -0.4570457994644658, 1.445305721320277,
      -0.5900435899266435)

MAX_DEGREE = 3


def n_bases(degree):
    return (degree + 1) ** 2


def rgb_to_band0(rgb):
    """Inverse of the band-0 decode: coefficients reproducing `rgb`."""
    return (np.asarray(rgb, dtype=np.float64) - 0.5) / C0


def sh_basis(degree, dirs):
    """Basis values, shape (..., (degree+1)^2), for unit directions (..., 3)."""
    if degree not in (0, 1, 2, 3):
        raise ConfigError("sh degree must be in {0,1,2,3}, got %r" % (degree,))
    dirs = np.asarray(dirs, dtype=np.float64)
    x, y, z = dirs[..., 0], dirs[..., 1], dirs[..., 2]
    out = np.empty(dirs.shape[:-1] + (n_bases(degree),), dtype=np.float64)
    out[..., 0] = C0
    if degree >= 1:
        out[..., 1] = -C1 * y
        out[..., 2] = C1 * z
        out[..., 3] = -C1 * x
    if degree >= 2:
        xx, yy, zz = x * x, y * y, z * z
        out[..., 4] = C2[0] * x * y
        out[..., 5] = C2[1] * y * z
        out[..., 6] = C2[2] * (2.0 * zz - xx - yy)
        out[..., 7] = C2[3] * x * z
        out[..., 8] = C2[4] * (xx - yy)
    if degree >= 3:
        xx, yy, zz = x * x, y * y, z * z
        out[..., 9] = C3[0] * y * (3.0 * xx - yy)
        out[..., 10] = C3[1] * x * y * z
        out[..., 11] = C3[2] * y * (4.0 * zz - xx - yy)
        out[..., 12] = C3[3] * z * (2.0 * zz - 3.0 * xx - 3.0 * yy)
        out[..., 13] = C3[4] * x * (4.0 * zz - xx - yy)
        out[..., 14] = C3[5] * z * (xx - yy)
        out[..., 15] = C3[6] * x * (xx - 3.0 * yy)
    return out


def sh_basis_grad(degree, dirs):
    """d(basis)/d(direction), shape (..., (degree+1)^2, 3)."""
    if degree not in (0, 1, 2, 3):
        raise ConfigError("sh degree must be in {0,1,2,3}, got %r" % (degree,))
    dirs = np.asarray(dirs, dtype=np.float64)
    x, y, z = dirs[..., 0], dirs[..., 1], dirs[..., 2]
    B = n_bases(degree)
    out = np.zeros(dirs.shape[:-1] + (B, 3), dtype=np.float64)
    if degree >= 1:
        out[..., 1, 1] = -C1
        out[..., 2, 2] = C1
        out[..., 3, 0] = -C1
    if degree >= 2:
        out[..., 4, 0] = C2[0] * y
        out[..., 4, 1] = C2[0] * x
        out[..., 5, 1] = C2[1] * z
        out[..., 5, 2] = C2[1] * y
        out[..., 6, 0] = C2[2] * (-2.0 * x)
        out[..., 6, 1] = C2[2] * (-2.0 * y)
        out[..., 6, 2] = C2[2] * (4.0 * z)
        out[..., 7, 0] = C2[3] * z
        out[..., 7, 2] = C2[3] * x
        out[..., 8, 0] = C2[4] * (2.0 * x)
        out[..., 8, 1] = C2[4] * (-2.0 * y)
    if degree >= 3:
        out[..., 9, 0] = C3[0] * 6.0 * x * y
        out[..., 9, 1] = C3[0] * (3.0 * x * x - 3.0 * y * y)
        out[..., 10, 0] = C3[1] * y * z
        out[..., 10, 1] = C3[1] * x * z
        out[..., 10, 2] = C3[1] * x * y
        out[..., 11, 0] = C3[2] * (-2.0 * x * y)
        out[..., 11, 1] = C3[2] * (4.0 * z * z - x * x - 3.0 * y * y)
        out[..., 11, 2] = C3[2] * (8.0 * y * z)
        out[..., 12, 0] = C3[3] * (-6.0 * x * z)
        out[..., 12, 1] = C3[3] * (-6.0 * y * z)
        out[..., 12, 2] = C3[3] * (6.0 * z * z - 3.0 * x * x - 3.0 * y * y)
        out[..., 13, 0] = C3[4] * (4.0 * z * z - 3.0 * x * x - y * y)
        out[..., 13, 1] = C3[4] * (-2.0 * x * y)
        out[..., 13, 2] = C3[4] * (8.0 * x * z)
        out[..., 14, 0] = C3[5] * (2.0 * x * z)
        out[..., 14, 1] = C3[5] * (-2.0 * y * z)
        out[..., 14, 2] = C3[5] * (x * x - y * y)
        out[..., 15, 0] = C3[6] * (3.0 * x * x - 3.0 * y * y)
        out[..., 15, 1] = C3[6] * (-6.0 * x * y)
    return out


def eval_sh(sh_coeffs, degree, view_dir):
    """Decode a view-dependent RGB color, each channel clamped to >= 0.

    sh_coeffs: (..., 3, (degree+1)^2); view_dir: unit (..., 3).
    """
    sh_coeffs = np.asarray(sh_coeffs, dtype=np.float64)
    basis = sh_basis(degree, view_dir)
    if sh_coeffs.shape[-1] < basis.shape[-1]:
        raise ConfigError(
            "sh_coeffs has %d bases, degree %d needs %d"
            % (sh_coeffs.shape[-1], degree, basis.shape[-1]))
    raw = np.einsum("...cb,...b->...c", sh_coeffs[..., :basis.shape[-1]], basis)
    return np.maximum(raw + 0.5, 0.0)


def eval_sh_backward(sh_coeffs, degree, view_dir, d_color):
    """Gradients of eval_sh: (d_sh_coeffs, d_view_dir).

    d_color is the upstream gradient on the clamped color. The clamp
    contributes a zero subgradient where the raw value was negative.
    """
    sh_coeffs = np.asarray(sh_coeffs, dtype=np.float64)
    basis = sh_basis(degree, view_dir)
    B = basis.shape[-1]
    raw = np.einsum("...cb,...b->...c", sh_coeffs[..., :B], basis) + 0.5
    mask = (raw > 0.0).astype(np.float64)
    up = d_color * mask
    d_sh = np.zeros_like(sh_coeffs)
    d_sh[..., :B] = up[..., :, None] * basis[..., None, :]
    dbasis = np.einsum("...cb,...c->...b", sh_coeffs[..., :B], up)
    d_dir = np.einsum("...b,...bd->...d", dbasis, sh_basis_grad(degree, view_dir))
    return d_sh, d_dir
