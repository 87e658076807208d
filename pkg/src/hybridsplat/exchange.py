"""Adaptive type exchange between flat (2D) and volumetric (3D) primitives.

Demotion 3D -> 2D happens when the effective rank of the squared scales
drops below a threshold; before flipping the type, the scale axes are
permuted so the smallest scale lands on z, with the rotation adjusted to
keep the covariance bit-for-bit meaningful. Promotion 2D -> 3D keeps all
parameters and just flips the type. Flat primitives keep a live z scale
through an opacity modulation so gradient flow can grow it back.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit

from .core import Gaussian, GaussianSet, matrix_to_quat, quat_to_matrix
from .errors import ConfigError, DegenerateScaleError

P_IDENTITY = np.eye(3)
P_X = np.array([[0.0, 1.0, 0.0],
                [0.0, 0.0, 1.0],
                [1.0, 0.0, 0.0]])
P_Y = np.array([[0.0, 0.0, 1.0],
                [1.0, 0.0, 0.0],
                [0.0, 1.0, 0.0]])


@dataclass
class ExchangeConfig:
    theta_e: float = 2.05       # effective-rank threshold, both directions
    theta_z: float = 1.05       # modulation gate center, scale units
    t_z: float = 1e-3           # modulation gate temperature
    lambda_z: float = 1.0       # opacity coupling strength
    interval: int = 500         # iterations between exchange passes
    start_iter: int = 500
    end_iter: int = 30_000

    def __post_init__(self):
        if not 1.0 < self.theta_e < 3.0:
            raise ConfigError("theta_e must be in (1, 3), got %r" % self.theta_e)
        if self.t_z <= 0:
            raise ConfigError("modulation temperature must be positive")
        if self.interval < 1:
            raise ConfigError("exchange interval must be >= 1")


@dataclass
class ExchangeReport:
    """Outcome of one exchange pass over the scene."""
    n_3d_to_2d: int
    n_2d_to_3d: int
    n_2d: int
    n_3d: int
    erank_hist: np.ndarray = field(default_factory=lambda: np.zeros(0))
    erank_edges: np.ndarray = field(default_factory=lambda: np.zeros(0))


def effective_rank(log_scale):
    """exp of the entropy of the normalized squared scales; in [1, 3].

    Accepts a (3,) vector or an (N, 3) batch of log-domain scales. The
    stored z scale always participates, also for flat primitives.
    """
    ls = np.asarray(log_scale, dtype=np.float64)
    q = np.exp(2.0 * ls)
    tot = q.sum(axis=-1, keepdims=True)
    if np.any(tot == 0.0) or not np.all(np.isfinite(q)):
        raise DegenerateScaleError("squared scales sum to zero or overflow")
    p = q / tot
    ent = -np.sum(np.where(p > 0.0, p * np.log(np.where(p > 0.0, p, 1.0)), 0.0),
                  axis=-1)
    out = np.exp(ent)
    return float(out) if ls.ndim == 1 else out


def choose_permutation(scale):
    """Permutation placing the smallest scale on the z axis.

    Ties prefer the identity, then the x permutation, keeping the pass
    deterministic.
    """
    s = np.asarray(scale, dtype=np.float64)
    sx, sy, sz = s
    if sz <= sx and sz <= sy:
        return P_IDENTITY
    if sx <= sy:
        return P_X
    return P_Y


def reparameterize_3d_to_2d(g: Gaussian) -> Gaussian:
    """Convert a volumetric primitive to flat, preserving its covariance."""
    scale = np.exp(g.log_scale)
    P = choose_permutation(scale)
    new_scale = np.diag(P @ np.diag(scale) @ P.T)
    R = quat_to_matrix(g.rotation)
    new_rot = matrix_to_quat(R @ P.T)
    return Gaussian(g.center.copy(), np.log(new_scale), new_rot,
                    g.opacity_logit, g.sh_coeffs.copy(), 0)


def modulated_z(log_scale_z, config: ExchangeConfig):
    """Gated z scale s_z* = sigmoid((s_z - theta_z)/T_z) * s_z."""
    sz = np.exp(np.asarray(log_scale_z, dtype=np.float64))
    return expit((sz - config.theta_z) / config.t_z) * sz


def modulated_opacity(opacity, log_scale_z, config: ExchangeConfig):
    """Effective opacity alpha * exp(-lambda_z * s_z*) of a flat primitive."""
    return np.asarray(opacity, dtype=np.float64) * np.exp(
        -config.lambda_z * modulated_z(log_scale_z, config))


def modulated_opacity_grads(opacity, log_scale_z, config: ExchangeConfig):
    """(d alpha_eff / d alpha, d alpha_eff / d log_scale_z).

    Used by the backward pass to route gradient into the stored z scale of
    flat primitives.
    """
    sz = np.exp(np.asarray(log_scale_z, dtype=np.float64))
    gate = expit((sz - config.theta_z) / config.t_z)
    sz_star = gate * sz
    damp = np.exp(-config.lambda_z * sz_star)
    d_alpha = damp
    # d sz*/d sz = gate + sz * gate' / T_z, then d sz/d log sz = sz.
    d_szstar_d_sz = gate + sz * gate * (1.0 - gate) / config.t_z
    d_logz = (np.asarray(opacity, dtype=np.float64) * damp
              * (-config.lambda_z) * d_szstar_d_sz * sz)
    return d_alpha, d_logz


def modulate_opacity(g: Gaussian, config: ExchangeConfig) -> float:
    """Per-contract scalar form of the opacity modulation for one primitive."""
    return float(modulated_opacity(g.opacity, g.log_scale[2], config))


def exchange_pass(scene: GaussianSet, config: ExchangeConfig) -> ExchangeReport:
    """Flip types in place wherever effective rank disagrees with the type."""
    eranks = effective_rank(scene.log_scale) if scene.count else np.zeros(0)
    t = scene.type_spec
    demote = (t == 1) & (eranks < config.theta_e)
    promote = (t == 0) & (eranks > config.theta_e)

    for i in np.flatnonzero(demote):
        g2 = reparameterize_3d_to_2d(scene.get(i))
        scene.log_scale[i] = g2.log_scale
        scene.rotation[i] = g2.rotation
        scene.type_spec[i] = 0
    scene.type_spec[promote] = 1

    n2, n3 = scene.type_census()
    hist, edges = np.histogram(eranks, bins=20, range=(1.0, 3.0))
    return ExchangeReport(int(np.count_nonzero(demote)),
                          int(np.count_nonzero(promote)),
                          n2, n3, hist, edges)
