"""Quaternion <-> rotation matrix conversions and covariance construction.

Quaternions are stored w-first (w, x, y, z). All conversions normalize the
input quaternion; near-zero quaternions are rejected rather than silently
renormalized into garbage.
"""

import numpy as np

from ..errors import InvalidParameterError

QUAT_MIN_NORM = 1e-8


def normalize_quaternion(q):
    """Return q / |q| for quaternions of shape (..., 4)."""
    q = np.asarray(q, dtype=np.float64)
    norm = np.linalg.norm(q, axis=-1, keepdims=True)
    if np.any(norm <= QUAT_MIN_NORM):
        raise InvalidParameterError("quaternion norm below %g" % QUAT_MIN_NORM)
    return q / norm


def quat_to_matrix(q):
    """Rotation matrices (..., 3, 3) from w-first quaternions (..., 4).

    The input is normalized first, so any nonzero quaternion is valid.
    """
    q = normalize_quaternion(q)
    w, x, y, z = q[..., 0], q[..., 1], q[..., 2], q[..., 3]
    R = np.empty(q.shape[:-1] + (3, 3), dtype=np.float64)
    R[..., 0, 0] = 1.0 - 2.0 * (y * y + z * z)
    R[..., 0, 1] = 2.0 * (x * y - w * z)
    R[..., 0, 2] = 2.0 * (x * z + w * y)
    R[..., 1, 0] = 2.0 * (x * y + w * z)
    R[..., 1, 1] = 1.0 - 2.0 * (x * x + z * z)
    R[..., 1, 2] = 2.0 * (y * z - w * x)
    R[..., 2, 0] = 2.0 * (x * z - w * y)
    R[..., 2, 1] = 2.0 * (y * z + w * x)
    R[..., 2, 2] = 1.0 - 2.0 * (x * x + y * y)
    return R


def matrix_to_quat(R):
    """w-first unit quaternion from a proper rotation matrix (Shepperd).

    Sign convention: w >= 0. Batched input of shape (..., 3, 3) is accepted.
    """
    R = np.asarray(R, dtype=np.float64)
    single = R.ndim == 2
    if single:
        R = R[None]
    flat = R.reshape(-1, 3, 3)
    q = np.empty((flat.shape[0], 4), dtype=np.float64)
    for i, m in enumerate(flat):
        t = np.trace(m)
        if t > 0:
            r = np.sqrt(1.0 + t)
            s = 0.5 / r
            q[i] = (0.5 * r, (m[2, 1] - m[1, 2]) * s,
                    (m[0, 2] - m[2, 0]) * s, (m[1, 0] - m[0, 1]) * s)
        else:
            k = int(np.argmax(np.diag(m)))
            a, b, c = k, (k + 1) % 3, (k + 2) % 3
            r = np.sqrt(1.0 + m[a, a] - m[b, b] - m[c, c])
            s = 0.5 / r
            qv = np.empty(4)
            qv[0] = (m[c, b] - m[b, c]) * s
            qv[1 + a] = 0.5 * r
            qv[1 + b] = (m[b, a] + m[a, b]) * s
            qv[1 + c] = (m[c, a] + m[a, c]) * s
            q[i] = qv
        if q[i, 0] < 0:
            q[i] = -q[i]
    q = q.reshape(R.shape[:-2] + (4,))
    return q[0] if single else q


def quat_to_matrix_grad(q_unit, dR):
    """Backpropagate dL/dR (..., 3, 3) to the unnormalized quaternion.

    `q_unit` must already be normalized (as produced inside quat_to_matrix);
    the returned gradient includes the Jacobian of the normalization, so it
    is valid for the raw stored quaternion of the same direction and norm 1.
    For a stored quaternion with |q| != 1 the caller should scale by 1/|q|.
    """
    w, x, y, z = q_unit[..., 0], q_unit[..., 1], q_unit[..., 2], q_unit[..., 3]

    def g(i, j):
        return dR[..., i, j]

    dw = 2.0 * (-z * g(0, 1) + y * g(0, 2) + z * g(1, 0)
                - x * g(1, 2) - y * g(2, 0) + x * g(2, 1))
    dx = 2.0 * (y * g(0, 1) + z * g(0, 2) + y * g(1, 0)
                - 2.0 * x * g(1, 1) - w * g(1, 2) + z * g(2, 0)
                + w * g(2, 1) - 2.0 * x * g(2, 2))
    dy = 2.0 * (-2.0 * y * g(0, 0) + x * g(0, 1) + w * g(0, 2)
                + x * g(1, 0) + z * g(1, 2) - w * g(2, 0)
                + z * g(2, 1) - 2.0 * y * g(2, 2))
    dz = 2.0 * (-2.0 * z * g(0, 0) - w * g(0, 1) + x * g(0, 2)
                + w * g(1, 0) - 2.0 * z * g(1, 1) + y * g(1, 2)
                + x * g(2, 0) + y * g(2, 1))
    dq = np.stack([dw, dx, dy, dz], axis=-1)
    # Project onto the tangent space of the unit sphere (normalization
    # Jacobian at |q| = 1), keeping the invariant |q| = 1 testable.
    dot = np.sum(dq * q_unit, axis=-1, keepdims=True)
    return dq - dot * q_unit


def build_covariance(log_scale, rotation, type_spec):
    """Covariance R diag(s^2) R^T with s = exp(log_scale).

    For flat primitives (type_spec == 0) the z scale is excluded from the
    construction; the stored value stays untouched. Accepts single vectors
    or batches with matching leading shape.
    """
    log_scale = np.asarray(log_scale, dtype=np.float64)
    rotation = np.asarray(rotation, dtype=np.float64)
    if not (np.all(np.isfinite(log_scale)) and np.all(np.isfinite(rotation))):
        raise InvalidParameterError("non-finite scale or rotation")
    s = np.exp(log_scale)
    t = np.asarray(type_spec)
    s = np.where(
        (t[..., None] if t.ndim else t) == 0,
        s * np.array([1.0, 1.0, 0.0]),
        s,
    )
    R = quat_to_matrix(rotation)
    RS = R * s[..., None, :]
    return RS @ np.swapaxes(RS, -1, -2)
