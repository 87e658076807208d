"""Pure-Python reference implementation of the blending kernels.

Semantics are kept operation-for-operation identical to the compiled
extension so the two backends produce bitwise-equal images. This module is
the fallback when the extension is unavailable and the ground truth the
benchmark compares against.
"""

import numpy as np

from .project import (ALPHA_CLAMP, DEGENERATE_DEN, EARLY_STOP_T,
                      LOWPASS_SIGMA, MIN_ALPHA)

_INV_LP2 = 1.0 / (LOWPASS_SIGMA * LOWPASS_SIGMA)


def _distance(k, px, py, typ, ctr, conic, mrow):
    """(d, u, v) of splat k at the pixel sample, or None when degenerate.

    For volumetric splats (u, v) is the pixel offset from the projected
    center; for flat splats it is the tangent-frame intersection.
    """
    dx = px - ctr[k, 0]
    dy = py - ctr[k, 1]
    if typ[k] == 1:
        a, b, c = conic[k, 0], conic[k, 1], conic[k, 2]
        return a * dx * dx + 2.0 * b * dx * dy + c * dy * dy, dx, dy
    m = mrow[k]
    hu0 = px * m[2, 0] - m[0, 0]
    hu1 = px * m[2, 1] - m[0, 1]
    hu3 = px * m[2, 3] - m[0, 3]
    hv0 = py * m[2, 0] - m[1, 0]
    hv1 = py * m[2, 1] - m[1, 1]
    hv3 = py * m[2, 3] - m[1, 3]
    den = hu0 * hv1 - hu1 * hv0
    if abs(den) < DEGENERATE_DEN:
        return None
    u = (hu1 * hv3 - hu3 * hv1) / den
    v = (hu3 * hv0 - hu0 * hv3) / den
    d_ray = u * u + v * v
    d_screen = (dx * dx + dy * dy) * _INV_LP2
    if d_ray <= d_screen:
        return d_ray, u, v
    return d_screen, u, v


def _pixel_candidates_tiled(frame, ix, iy):
    tile = frame.tile_size
    tx = (frame.width + tile - 1) // tile
    t = (iy // tile) * tx + (ix // tile)
    lo, hi = frame.tile_offsets[t], frame.tile_offsets[t + 1]
    return frame.tile_ids[lo:hi]


def forward_blend(frame, background, candidates=None):
    """Front-to-back alpha blending over the whole image.

    `candidates(ix, iy)` yields candidate splat slots in depth order; the
    default uses the frame's tile bins with a bounding-box test, while the
    naive oracle passes every slot with no geometric test.
    """
    H, W = frame.height, frame.width
    typ, ctr = frame.typ, frame.center2d
    conic, mrow = frame.conic, frame.mrow
    alpha_eff, color, depth = frame.alpha_eff, frame.color, frame.depth
    bbox = frame.bbox
    use_bbox = candidates is None

    out_color = np.zeros((H, W, 3))
    out_depth = np.zeros((H, W))
    out_T = np.ones((H, W))
    offsets = np.zeros(H * W + 1, dtype=np.int64)
    log_pos, log_alpha, log_u, log_v = [], [], [], []

    bg = np.asarray(background, dtype=np.float64)
    for iy in range(H):
        py = iy + 0.5
        for ix in range(W):
            px = ix + 0.5
            if use_bbox:
                cand = _pixel_candidates_tiled(frame, ix, iy)
            else:
                cand = candidates(ix, iy)
            T = 1.0
            cr = cg = cb = 0.0
            dsum = 0.0
            count = 0
            for k in cand:
                if use_bbox and not (bbox[k, 0] <= ix <= bbox[k, 2]
                                     and bbox[k, 1] <= iy <= bbox[k, 3]):
                    continue
                hit = _distance(k, px, py, typ, ctr, conic, mrow)
                if hit is None:
                    continue
                d, u, v = hit
                at = alpha_eff[k] * np.exp(-0.5 * d)
                if at > ALPHA_CLAMP:
                    at = ALPHA_CLAMP
                if at < MIN_ALPHA:
                    continue
                w = at * T
                cr += w * color[k, 0]
                cg += w * color[k, 1]
                cb += w * color[k, 2]
                dsum += w * depth[k]
                log_pos.append(k)
                log_alpha.append(at)
                log_u.append(u)
                log_v.append(v)
                count += 1
                T *= 1.0 - at
                if T < EARLY_STOP_T:
                    break
            out_color[iy, ix] = (cr + bg[0] * T, cg + bg[1] * T, cb + bg[2] * T)
            out_depth[iy, ix] = dsum
            out_T[iy, ix] = T
            offsets[iy * W + ix + 1] = offsets[iy * W + ix] + count

    return (out_color, out_depth, out_T, offsets,
            np.asarray(log_pos, dtype=np.int32),
            np.asarray(log_alpha, dtype=np.float64),
            np.asarray(log_u, dtype=np.float64),
            np.asarray(log_v, dtype=np.float64))


def backward_blend(frame, out_T, offsets, log_pos, log_alpha, log_u, log_v,
                   pixel_grads, background):
    """Back-to-front replay producing per-splat screen-space gradients.

    pixel_grads has shape (KG, H, W, 3): KG independent upstream gradients
    are propagated in one replay. Returns per-splat accumulators
    (g_color, g_alpha_eff, g_center2d, g_cov2d, g_mrow, touched).
    """
    H, W = frame.height, frame.width
    M = frame.count
    KG = pixel_grads.shape[0]
    typ, ctr = frame.typ, frame.center2d
    conic, mrow = frame.conic, frame.mrow
    alpha_eff, color = frame.alpha_eff, frame.color

    g_color = np.zeros((M, KG, 3))
    g_alpha = np.zeros((M, KG))
    g_ctr = np.zeros((M, KG, 2))
    g_cov = np.zeros((M, KG, 3))
    g_mrow = np.zeros((M, KG, 3, 4))
    touched = np.zeros(M, dtype=np.uint8)

    bg = np.asarray(background, dtype=np.float64)
    for iy in range(H):
        py = iy + 0.5
        for ix in range(W):
            px = ix + 0.5
            lo = offsets[iy * W + ix]
            hi = offsets[iy * W + ix + 1]
            if hi == lo:
                continue
            T_run = out_T[iy, ix]
            s0 = bg[0] * T_run
            s1 = bg[1] * T_run
            s2 = bg[2] * T_run
            for e in range(hi - 1, lo - 1, -1):
                k = int(log_pos[e])
                at = log_alpha[e]
                u = log_u[e]
                v = log_v[e]
                one_m = 1.0 - at
                T_run /= one_m
                touched[k] = 1

                c0, c1, c2 = color[k, 0], color[k, 1], color[k, 2]
                w = at * T_run
                # Distance and clamp state are recomputed, not stored.
                if typ[k] == 1:
                    d = (conic[k, 0] * u * u + 2.0 * conic[k, 1] * u * v
                         + conic[k, 2] * v * v)
                else:
                    dx = px - ctr[k, 0]
                    dy = py - ctr[k, 1]
                    d_ray = u * u + v * v
                    d_screen = (dx * dx + dy * dy) * _INV_LP2
                    ray_branch = d_ray <= d_screen
                    d = d_ray if ray_branch else d_screen
                raw = alpha_eff[k] * np.exp(-0.5 * d)
                clamped = raw > ALPHA_CLAMP
                exp_d = np.exp(-0.5 * d)

                for kg in range(KG):
                    gp = pixel_grads[kg, iy, ix]
                    g_color[k, kg, 0] += gp[0] * w
                    g_color[k, kg, 1] += gp[1] * w
                    g_color[k, kg, 2] += gp[2] * w
                    d_at = (gp[0] * (c0 * T_run - s0 / one_m)
                            + gp[1] * (c1 * T_run - s1 / one_m)
                            + gp[2] * (c2 * T_run - s2 / one_m))
                    if clamped:
                        continue
                    g_alpha[k, kg] += d_at * exp_d
                    dd = d_at * (-0.5 * at)
                    if typ[k] == 1:
                        a, b, c = conic[k, 0], conic[k, 1], conic[k, 2]
                        vx = a * u + b * v
                        vy = b * u + c * v
                        g_ctr[k, kg, 0] += -2.0 * vx * dd
                        g_ctr[k, kg, 1] += -2.0 * vy * dd
                        g_cov[k, kg, 0] += -dd * vx * vx
                        g_cov[k, kg, 1] += -dd * vx * vy
                        g_cov[k, kg, 2] += -dd * vy * vy
                    elif ray_branch:
                        m = mrow[k]
                        hu0 = px * m[2, 0] - m[0, 0]
                        hu1 = px * m[2, 1] - m[0, 1]
                        hu3 = px * m[2, 3] - m[0, 3]
                        hv0 = py * m[2, 0] - m[1, 0]
                        hv1 = py * m[2, 1] - m[1, 1]
                        hv3 = py * m[2, 3] - m[1, 3]
                        den = hu0 * hv1 - hu1 * hv0
                        du = dd * 2.0 * u
                        dv = dd * 2.0 * v
                        dhu0 = (du * (-u * hv1) + dv * (-hv3 - v * hv1)) / den
                        dhu1 = (du * (hv3 + u * hv0) + dv * (v * hv0)) / den
                        dhu3 = (du * (-hv1) + dv * hv0) / den
                        dhv0 = (du * (u * hu1) + dv * (hu3 + v * hu1)) / den
                        dhv1 = (du * (-hu3 - u * hu0) + dv * (-v * hu0)) / den
                        dhv3 = (du * hu1 + dv * (-hu0)) / den
                        g_mrow[k, kg, 0, 0] -= dhu0
                        g_mrow[k, kg, 0, 1] -= dhu1
                        g_mrow[k, kg, 0, 3] -= dhu3
                        g_mrow[k, kg, 1, 0] -= dhv0
                        g_mrow[k, kg, 1, 1] -= dhv1
                        g_mrow[k, kg, 1, 3] -= dhv3
                        g_mrow[k, kg, 2, 0] += px * dhu0 + py * dhv0
                        g_mrow[k, kg, 2, 1] += px * dhu1 + py * dhv1
                        g_mrow[k, kg, 2, 3] += px * dhu3 + py * dhv3
                    else:
                        g_ctr[k, kg, 0] += -2.0 * dx * _INV_LP2 * dd
                        g_ctr[k, kg, 1] += -2.0 * dy * _INV_LP2 * dd
                # Suffix color now includes this splat.
                s0 += c0 * w
                s1 += c1 * w
                s2 += c2 * w

    return g_color, g_alpha, g_ctr, g_cov, g_mrow, touched
