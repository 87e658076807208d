"""Level-1 orthonormal Haar decomposition and its exact adjoint.

Filters are (1/sqrt2, 1/sqrt2) and (1/sqrt2, -1/sqrt2) with stride 2, so the
transform is orthogonal: the inverse is the transpose and energy is
partitioned exactly across the four sub-bands. Odd image dimensions are
edge-replicated to even before the transform and cropped on the inverse.
"""

from dataclasses import dataclass

import numpy as np

from ..errors import ConfigError

INV_SQRT2 = 1.0 / np.sqrt(2.0)


@dataclass
class DwtBands:
    """Sub-bands of a level-1 decomposition; LL is the low-frequency image."""
    LL: np.ndarray
    LH: np.ndarray
    HL: np.ndarray
    HH: np.ndarray
    orig_shape: tuple

    def detail_bands(self):
        return (self.LH, self.HL, self.HH)


def _pad_even(img):
    h, w = img.shape[:2]
    ph, pw = h % 2, w % 2
    if ph or pw:
        pad = ((0, ph), (0, pw)) + ((0, 0),) * (img.ndim - 2)
        img = np.pad(img, pad, mode="edge")
    return img


def _pad_even_adjoint(grad, orig_shape):
    """Adjoint of edge replication: fold padded row/col back onto the edge."""
    h, w = orig_shape[:2]
    gh, gw = grad.shape[:2]
    if gh != h:
        grad = grad.copy()
        grad[h - 1] += grad[h]
        grad = grad[:h]
    if gw != w:
        grad = grad.copy()
        grad[:, w - 1] += grad[:, w]
        grad = grad[:, :w]
    return grad


def dwt_level1(image):
    """Decompose an HxW or HxWxC image into LL/LH/HL/HH sub-bands.

    Band names follow the convention LL = L I L^T, LH = H I L^T,
    HL = L I H^T, HH = H I H^T, with the low/high filters applied along the
    row axis on the left and the column axis on the right.
    """
    image = np.asarray(image, dtype=np.float64)
    if image.size == 0:
        raise ConfigError("cannot transform an empty image")
    orig_shape = image.shape
    image = _pad_even(image)
    # Left factor: filter pairs of rows. Right factor: pairs of columns.
    lo_r = (image[0::2] + image[1::2]) * INV_SQRT2
    hi_r = (image[0::2] - image[1::2]) * INV_SQRT2
    LL = (lo_r[:, 0::2] + lo_r[:, 1::2]) * INV_SQRT2
    HL = (lo_r[:, 0::2] - lo_r[:, 1::2]) * INV_SQRT2
    LH = (hi_r[:, 0::2] + hi_r[:, 1::2]) * INV_SQRT2
    HH = (hi_r[:, 0::2] - hi_r[:, 1::2]) * INV_SQRT2
    return DwtBands(LL, LH, HL, HH, orig_shape)


def idwt_level1(bands):
    """Invert dwt_level1, cropping back to the original shape."""
    LL, LH, HL, HH = bands.LL, bands.LH, bands.HL, bands.HH
    h2, w2 = LL.shape[:2]
    out = np.zeros((h2 * 2, w2 * 2) + LL.shape[2:], dtype=np.float64)
    lo_r = (LL + HL) * INV_SQRT2
    lo_r2 = (LL - HL) * INV_SQRT2
    hi_r = (LH + HH) * INV_SQRT2
    hi_r2 = (LH - HH) * INV_SQRT2
    out[0::2, 0::2] = (lo_r + hi_r) * INV_SQRT2
    out[1::2, 0::2] = (lo_r - hi_r) * INV_SQRT2
    out[0::2, 1::2] = (lo_r2 + hi_r2) * INV_SQRT2
    out[1::2, 1::2] = (lo_r2 - hi_r2) * INV_SQRT2
    h, w = bands.orig_shape[:2]
    return out[:h, :w]


def dwt_adjoint(bands):
    """Adjoint of dwt_level1 as a linear map on the original image space.

    For even sizes this equals idwt_level1; for padded-odd sizes the
    replication adjoint folds gradients back onto the edge pixels.
    """
    h, w = bands.orig_shape[:2]
    padded = DwtBands(bands.LL, bands.LH, bands.HL, bands.HH,
                      ((h + h % 2), (w + w % 2)) + tuple(bands.orig_shape[2:]))
    full = idwt_level1(padded)
    return _pad_even_adjoint(full, bands.orig_shape)


def frequency_losses(rendered, gt):
    """(L_low, L_high): MSE on LL and summed MSE over the detail bands."""
    rendered = np.asarray(rendered, dtype=np.float64)
    gt = np.asarray(gt, dtype=np.float64)
    if rendered.shape != gt.shape:
        raise ConfigError("rendered and gt shapes differ: %s vs %s"
                          % (rendered.shape, gt.shape))
    br, bg = dwt_level1(rendered), dwt_level1(gt)
    l_low = float(np.mean((br.LL - bg.LL) ** 2))
    l_high = float(sum(np.mean((a - b) ** 2)
                       for a, b in zip(br.detail_bands(), bg.detail_bands())))
    return l_low, l_high


def frequency_loss_grads(rendered, gt):
    """Pixel-space gradients (dL_low/dI, dL_high/dI) of frequency_losses."""
    rendered = np.asarray(rendered, dtype=np.float64)
    gt = np.asarray(gt, dtype=np.float64)
    if rendered.shape != gt.shape:
        raise ConfigError("rendered and gt shapes differ: %s vs %s"
                          % (rendered.shape, gt.shape))
    br, bg = dwt_level1(rendered), dwt_level1(gt)
    zero = np.zeros_like(br.LL)
    d_ll = 2.0 * (br.LL - bg.LL) / br.LL.size
    g_low = dwt_adjoint(DwtBands(d_ll, zero, zero, zero, br.orig_shape))
    d_lh = 2.0 * (br.LH - bg.LH) / br.LH.size
    d_hl = 2.0 * (br.HL - bg.HL) / br.HL.size
    d_hh = 2.0 * (br.HH - bg.HH) / br.HH.size
    g_high = dwt_adjoint(DwtBands(np.zeros_like(d_ll), d_lh, d_hl, d_hh,
                                  br.orig_shape))
    return g_low, g_high
