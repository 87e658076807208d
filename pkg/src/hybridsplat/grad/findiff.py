"""Central finite-difference oracle for the analytic backward pass.

The oracle renders twice per scalar parameter and stays independent of the
replay-based backward it checks. Parameters whose perturbation changes the
splat depth order (a genuinely non-differentiable event) are reported as
excluded rather than compared.
"""

from dataclasses import dataclass

import numpy as np

from ..core import GaussianSet
from ..errors import ConfigError
from ..raster import RenderSettings, render
from .backward import backward
from .bundle import param_labels

FIELD_SLOTS = (
    ("center", 3), ("log_scale", 3), ("rotation", 4),
    ("opacity_logit", 1), ("sh_coeffs", None),
)


def _param_count(scene):
    return 11 + 3 * scene.sh_coeffs.shape[2]


def _set_param(scene, gauss, slot, value):
    b = scene.sh_coeffs.shape[2]
    if slot < 3:
        scene.center[gauss, slot] = value
    elif slot < 6:
        scene.log_scale[gauss, slot - 3] = value
    elif slot < 10:
        scene.rotation[gauss, slot - 6] = value
    elif slot == 10:
        scene.opacity_logit[gauss] = value
    else:
        k = slot - 11
        scene.sh_coeffs[gauss, k // b, k % b] = value


def _get_param(scene, gauss, slot):
    b = scene.sh_coeffs.shape[2]
    if slot < 3:
        return scene.center[gauss, slot]
    if slot < 6:
        return scene.log_scale[gauss, slot - 3]
    if slot < 10:
        return scene.rotation[gauss, slot - 6]
    if slot == 10:
        return scene.opacity_logit[gauss]
    k = slot - 11
    return scene.sh_coeffs[gauss, k // b, k % b]


@dataclass
class FiniteDiffReport:
    rel_err: np.ndarray        # flat over gaussians x params; nan = excluded
    excluded: np.ndarray       # order-flip parameters
    labels: list
    analytic: np.ndarray
    numeric: np.ndarray

    @property
    def max_rel_err(self):
        live = self.rel_err[~self.excluded]
        return float(np.nanmax(live)) if live.size else 0.0

    def pass_fraction(self, tol):
        live = self.rel_err[~self.excluded]
        if live.size == 0:
            return 1.0
        return float(np.mean(live <= tol))


def finite_diff_check(scene: GaussianSet, camera, loss, loss_grad, eps,
                      param_subset=None,
                      settings: RenderSettings = None) -> FiniteDiffReport:
    """Compare analytic gradients of loss(render(...).color) to central
    differences.

    loss: image -> scalar; loss_grad: image -> (H, W, 3) its exact pixel
    gradient. `param_subset` optionally restricts slots per primitive
    (indices into the canonical flat order). eps must lie in [1e-6, 1e-2].
    """
    if not 1e-6 <= eps <= 1e-2:
        raise ConfigError("eps must be in [1e-6, 1e-2], got %r" % (eps,))
    if settings is None:
        settings = RenderSettings()

    out = render(scene, camera, settings)
    base = loss(out.color)
    if not np.isfinite(base):
        raise ConfigError("loss is non-finite at the base point")
    pixel_grad = np.asarray(loss_grad(out.color), dtype=np.float64)
    analytic_grads, _ = backward(scene, camera, out, pixel_grad)
    analytic_flat = analytic_grads.flat()

    p = _param_count(scene)
    slots = range(p) if param_subset is None else param_subset
    slots = list(slots)
    n = scene.count

    rel = np.full((n, p), np.nan)
    excluded = np.zeros((n, p), dtype=bool)
    numeric = np.full((n, p), np.nan)

    for gi in range(n):
        for slot in slots:
            theta = _get_param(scene, gi, slot)
            work = scene.copy()
            _set_param(work, gi, slot, theta + eps)
            out_p = render(work, camera, settings)
            _set_param(work, gi, slot, theta - eps)
            out_m = render(work, camera, settings)
            if not np.array_equal(out_p.frame.idx, out_m.frame.idx):
                excluded[gi, slot] = True
                continue
            fd = (loss(out_p.color) - loss(out_m.color)) / (2.0 * eps)
            numeric[gi, slot] = fd
            rel[gi, slot] = (abs(analytic_flat[gi, slot] - fd)
                             / max(abs(fd), 1e-8))

    mask = np.zeros((n, p), dtype=bool)
    mask[:, slots] = True
    labels = param_labels(scene)
    return FiniteDiffReport(rel_err=rel[mask],
                            excluded=excluded[mask],
                            labels=[l for l, m in zip(labels, mask.ravel()) if m],
                            analytic=analytic_flat[mask],
                            numeric=numeric[mask])
