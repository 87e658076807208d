"""Analytic backward pass: screen-space kernel gradients chained through
projection, covariance construction, opacity modulation, and SH decoding."""

import numpy as np

from ..core import eval_sh_backward, quat_to_matrix, quat_to_matrix_grad
from ..errors import IntegrityError
from ..exchange import modulated_opacity_grads
from ..raster import _blend_py
from ..raster.render import active_backend
from .bundle import ParamGrads

try:
    from ..raster import _blend_cy
except ImportError:      # pragma: no cover - depends on the build
    _blend_cy = None


def _kernel_backward(frame, output, pixel_grads, background, backend):
    if backend == "cython" and _blend_cy is not None:
        log = output.blend_log
        return _blend_cy.backward_blend(
            frame.height, frame.width,
            frame.typ, frame.center2d, frame.conic,
            np.ascontiguousarray(frame.mrow.reshape(-1, 12)),
            frame.alpha_eff, frame.color,
            output.transmittance, log.offsets, log.position, log.alpha,
            log.u, log.v,
            np.ascontiguousarray(pixel_grads),
            np.asarray(background, dtype=np.float64))
    log = output.blend_log
    return _blend_py.backward_blend(
        frame, output.transmittance, log.offsets, log.position, log.alpha,
        log.u, log.v, pixel_grads, background)


def backward(scene, camera, output, pixel_grad):
    """Gradients of a scalar image loss with upstream dL/d(color image).

    pixel_grad may be (H, W, 3) for a single loss or (KG, H, W, 3) for
    several; one blend replay serves all of them. Returns a single
    ParamGrads (or a list of KG) plus the per-primitive touched mask.
    """
    single = pixel_grad.ndim == 3
    pixel_grads = pixel_grad[None] if single else pixel_grad
    if pixel_grads.shape[1:] != (camera.height, camera.width, 3):
        raise IntegrityError("pixel_grad shape %s does not match the camera"
                             % (pixel_grad.shape,))
    if not np.all(np.isfinite(pixel_grads)):
        raise IntegrityError("pixel_grad contains non-finite values")
    output.check_scene(scene)

    frame = output.frame
    kg_count = pixel_grads.shape[0]
    grads = [ParamGrads.zeros_like(scene) for _ in range(kg_count)]
    touched_full = np.zeros(scene.count, dtype=bool)
    if frame.count == 0:
        result = grads[0] if single else grads
        return result, touched_full

    backend = active_backend(frame.settings)
    g_color, g_alpha, g_ctr, g_cov, g_mrow, touched = _kernel_backward(
        frame, output, np.ascontiguousarray(pixel_grads, dtype=np.float64),
        frame.settings.background, backend)
    g_mrow = g_mrow.reshape(frame.count, kg_count, 3, 4)
    touched_full[frame.idx[touched.astype(bool)]] = True

    cam = camera
    V = cam.world_to_camera[:3, :3]
    T = cam.projection_matrix()
    idx = frame.idx
    order_sel = idx.astype(np.int64)
    typ = frame.typ
    t_cam = frame.t_cam
    X, Y, Z = t_cam[:, 0], t_cam[:, 1], t_cam[:, 2]
    alpha = frame.alpha

    quat = scene.rotation[order_sel]
    qnorm = np.linalg.norm(quat, axis=1)
    qhat = quat / qnorm[:, None]
    R = quat_to_matrix(qhat)
    s = np.exp(scene.log_scale[order_sel])

    is3d = typ == 1
    i3 = np.flatnonzero(is3d)
    i2 = np.flatnonzero(~is3d)

    # Type-independent geometry reused across upstream gradients.
    if i3.size:
        J3 = np.zeros((i3.size, 2, 3))
        z3 = Z[i3]
        J3[:, 0, 0] = cam.fx / z3
        J3[:, 0, 2] = -cam.fx * X[i3] / z3 ** 2
        J3[:, 1, 1] = cam.fy / z3
        J3[:, 1, 2] = -cam.fy * Y[i3] / z3 ** 2
        U3 = J3 @ V
        D3 = s[i3] ** 2
        sigma3 = np.einsum("nij,nj,nkj->nik", R[i3], D3, R[i3])
    if i2.size:
        mod = frame.settings.modulation()
        damp2, dlogz2 = modulated_opacity_grads(
            alpha[i2], scene.log_scale[order_sel][i2, 2], mod)

    dadl = alpha * (1.0 - alpha)   # d(sigmoid)/d(logit)

    for kg in range(kg_count):
        g = grads[kg]
        d_center = np.zeros((frame.count, 3))
        d_logscale = np.zeros((frame.count, 3))
        d_R = np.zeros((frame.count, 3, 3))
        d_logit = np.zeros(frame.count)

        # SH color and its view-direction path into the center.
        d_sh, d_dir = eval_sh_backward(scene.sh_coeffs[order_sel],
                                       scene.sh_degree, frame.view_dir,
                                       g_color[:, kg, :])
        r = frame.cam_dist
        dot = np.einsum("nd,nd->n", d_dir, frame.view_dir)
        d_center += (d_dir - dot[:, None] * frame.view_dir) / r[:, None]

        # Projected-center path (Mahalanobis center and the low-pass).
        gx = g_ctr[:, kg, 0]
        gy = g_ctr[:, kg, 1]
        dX = gx * cam.fx / Z
        dY = gy * cam.fy / Z
        dZ = -gx * cam.fx * X / Z ** 2 - gy * cam.fy * Y / Z ** 2

        if i3.size:
            Gp = np.zeros((i3.size, 2, 2))
            Gp[:, 0, 0] = g_cov[i3, kg, 0]
            Gp[:, 0, 1] = g_cov[i3, kg, 1]
            Gp[:, 1, 0] = g_cov[i3, kg, 1]
            Gp[:, 1, 1] = g_cov[i3, kg, 2]
            dSigma = np.einsum("nji,njk,nkl->nil", U3, Gp, U3)
            dU = np.einsum("nij,njk,nkl->nil", Gp + np.swapaxes(Gp, 1, 2),
                           U3, sigma3)
            dJ = dU @ V.T
            z3 = Z[i3]
            dX[i3] += dJ[:, 0, 2] * (-cam.fx / z3 ** 2)
            dY[i3] += dJ[:, 1, 2] * (-cam.fy / z3 ** 2)
            dZ[i3] += (dJ[:, 0, 0] * (-cam.fx / z3 ** 2)
                       + dJ[:, 1, 1] * (-cam.fy / z3 ** 2)
                       + dJ[:, 0, 2] * (2.0 * cam.fx * X[i3] / z3 ** 3)
                       + dJ[:, 1, 2] * (2.0 * cam.fy * Y[i3] / z3 ** 3))
            d_R[i3] += np.einsum("nij,njk,nk->nik",
                                 dSigma + np.swapaxes(dSigma, 1, 2),
                                 R[i3], D3)
            dD = np.einsum("nji,njk,nki->ni", R[i3], dSigma, R[i3])
            d_logscale[i3] += 2.0 * D3 * dD
            d_logit[i3] += g_alpha[i3, kg] * dadl[i3]

        if i2.size:
            dM = np.zeros((i2.size, 4, 4))
            dM[:, (0, 1, 3), :] = g_mrow[i2, kg]
            dH = np.einsum("rc,nrd->ncd", T, dM)
            sx = s[i2, 0]
            sy = s[i2, 1]
            d_logscale[i2, 0] += np.einsum(
                "nd,nd->n", R[i2, :, 0], dH[:, :3, 0]) * sx
            d_logscale[i2, 1] += np.einsum(
                "nd,nd->n", R[i2, :, 1], dH[:, :3, 1]) * sy
            d_R[i2, :, 0] += sx[:, None] * dH[:, :3, 0]
            d_R[i2, :, 1] += sy[:, None] * dH[:, :3, 1]
            d_center[i2] += dH[:, :3, 3]
            ga2 = g_alpha[i2, kg]
            d_logit[i2] += ga2 * damp2 * dadl[i2]
            d_logscale[i2, 2] += ga2 * dlogz2

        d_tcam = np.stack([dX, dY, dZ], axis=1)
        d_center += d_tcam @ V

        d_quat = quat_to_matrix_grad(qhat, d_R) / qnorm[:, None]

        g.center[order_sel] += d_center
        g.log_scale[order_sel] += d_logscale
        g.rotation[order_sel] += d_quat
        g.opacity_logit[order_sel] += d_logit
        g.sh_coeffs[order_sel] += d_sh

    result = grads[0] if single else grads
    return result, touched_full
