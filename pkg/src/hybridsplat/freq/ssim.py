"""SSIM with an 11x11 Gaussian window and the mixed L1 / D-SSIM color loss.

Constants C1 = 0.01^2 and C2 = 0.03^2 assume a unit dynamic range. The
window is zero-padded at the borders ('same' convolution), and gradients
are exact for that choice.
"""

import numpy as np
from scipy.ndimage import correlate1d

from ..errors import ConfigError

WINDOW_SIZE = 11
WINDOW_SIGMA = 1.5
C1 = 0.01 ** 2
C2 = 0.03 ** 2


def _gaussian_window():
    half = WINDOW_SIZE // 2
    xs = np.arange(-half, half + 1, dtype=np.float64)
    w = np.exp(-(xs ** 2) / (2.0 * WINDOW_SIGMA ** 2))
    return w / w.sum()

_WINDOW = _gaussian_window()


def _blur(img):
    """Separable window filter over the two leading axes, zero padded."""
    out = correlate1d(img, _WINDOW, axis=0, mode="constant", cval=0.0)
    return correlate1d(out, _WINDOW, axis=1, mode="constant", cval=0.0)


def _moments(x, y):
    mu_x, mu_y = _blur(x), _blur(y)
    sig_x = _blur(x * x) - mu_x * mu_x
    sig_y = _blur(y * y) - mu_y * mu_y
    sig_xy = _blur(x * y) - mu_x * mu_y
    return mu_x, mu_y, sig_x, sig_y, sig_xy


def ssim(x, y):
    """Mean structural similarity between two HxW or HxWxC images."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape:
        raise ConfigError("image shapes differ: %s vs %s" % (x.shape, y.shape))
    mu_x, mu_y, sig_x, sig_y, sig_xy = _moments(x, y)
    num = (2.0 * mu_x * mu_y + C1) * (2.0 * sig_xy + C2)
    den = (mu_x ** 2 + mu_y ** 2 + C1) * (sig_x + sig_y + C2)
    return float(np.mean(num / den))


def ssim_grad(x, y):
    """d(mean SSIM)/dx for fixed reference y."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    mu_x, mu_y, sig_x, sig_y, sig_xy = _moments(x, y)
    a1 = 2.0 * mu_x * mu_y + C1
    a2 = 2.0 * sig_xy + C2
    b1 = mu_x ** 2 + mu_y ** 2 + C1
    b2 = sig_x + sig_y + C2
    # Partials of the per-pixel SSIM map w.r.t. the local moments.
    d_mu_x = 2.0 * (mu_y * a2 * b1 - mu_x * a1 * a2) / (b1 * b1 * b2)
    d_sig_x = -a1 * a2 / (b1 * b2 * b2)
    d_sig_xy = 2.0 * a1 / (b1 * b2)
    grad = (_blur(d_mu_x - 2.0 * mu_x * d_sig_x - mu_y * d_sig_xy)
            + 2.0 * x * _blur(d_sig_x) + y * _blur(d_sig_xy))
    return grad / x.size


def color_loss(rendered, gt, lam):
    """(1 - lam) * mean-L1 + lam * (1 - SSIM)/2."""
    rendered = np.asarray(rendered, dtype=np.float64)
    gt = np.asarray(gt, dtype=np.float64)
    if rendered.shape != gt.shape:
        raise ConfigError("image shapes differ: %s vs %s"
                          % (rendered.shape, gt.shape))
    if not 0.0 <= lam <= 1.0:
        raise ConfigError("dssim mix must be in [0,1], got %r" % (lam,))
    l1 = float(np.mean(np.abs(rendered - gt)))
    if lam == 0.0:
        return l1
    return (1.0 - lam) * l1 + lam * (1.0 - ssim(rendered, gt)) / 2.0


def color_loss_grad(rendered, gt, lam):
    """Pixel-space gradient of color_loss."""
    rendered = np.asarray(rendered, dtype=np.float64)
    gt = np.asarray(gt, dtype=np.float64)
    grad = (1.0 - lam) * np.sign(rendered - gt) / rendered.size
    if lam > 0.0:
        grad = grad - lam * 0.5 * ssim_grad(rendered, gt)
    return grad
