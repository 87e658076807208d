"""Per-primitive gradient conflict resolution between frequency bands.

A conflict is a negative inner product between a primitive's low- and
high-frequency gradient vectors. The resolution is asymmetric: flat
primitives keep the low-frequency direction and the high-frequency gradient
loses its conflicting component; volumetric primitives keep high frequency.
"""

from dataclasses import dataclass

import numpy as np

from ..errors import ConfigError, IntegrityError

MODES = ("projection", "naive", "mask")


@dataclass
class LossWeights:
    """Weights of the photometric and frequency terms plus the combine mode."""
    lam: float = 0.2            # D-SSIM mix inside the color loss
    lambda_low: float = 0.2
    lambda_high: float = 0.4
    mode: str = "projection"

    def __post_init__(self):
        if min(self.lam, self.lambda_low, self.lambda_high) < 0:
            raise ConfigError("loss weights must be >= 0")
        if self.mode not in MODES:
            raise ConfigError("mode must be one of %s" % (MODES,))


def project_conflicting_gradients(g_low, g_high, type_spec):
    """Resolve one primitive's band conflict; returns (g_low', g_high').

    No conflict (dot >= 0) returns both unchanged. A zero-norm preserved
    vector skips the projection.
    """
    g_low = np.asarray(g_low, dtype=np.float64)
    g_high = np.asarray(g_high, dtype=np.float64)
    dot = float(g_low @ g_high)
    if dot >= 0.0:
        return g_low, g_high
    if type_spec == 0:
        nrm = float(g_low @ g_low)
        if nrm == 0.0:
            return g_low, g_high
        return g_low, g_high - (dot / nrm) * g_low
    nrm = float(g_high @ g_high)
    if nrm == 0.0:
        return g_low, g_high
    return g_low - (dot / nrm) * g_high, g_high


def combine_gradients(g_color, g_low, g_high, type_spec, mode="projection"):
    """Total per-primitive update gradients plus the conflict count.

    Inputs are (N, P) flattened per-primitive gradient matrices. Modes:
    projection applies the asymmetric projection, naive sums the raw terms,
    mask zeroes the conflicting less-relevant band.
    """
    if mode not in MODES:
        raise ConfigError("mode must be one of %s" % (MODES,))
    g_color = np.asarray(g_color, dtype=np.float64)
    g_low = np.asarray(g_low, dtype=np.float64)
    g_high = np.asarray(g_high, dtype=np.float64)
    type_spec = np.asarray(type_spec)
    if not (g_color.shape == g_low.shape == g_high.shape
            and g_color.shape[0] == type_spec.shape[0]):
        raise IntegrityError("gradient arrays are misaligned with the scene")

    dots = np.einsum("np,np->n", g_low, g_high)
    conflicted = dots < 0.0
    n_conflicts = int(np.count_nonzero(conflicted))
    if mode == "naive" or n_conflicts == 0:
        return g_color + g_low + g_high, n_conflicts

    g_low = g_low.copy()
    g_high = g_high.copy()
    flat = conflicted & (type_spec == 0)
    volu = conflicted & (type_spec == 1)
    if mode == "mask":
        g_high[flat] = 0.0
        g_low[volu] = 0.0
    else:
        low_nrm = np.einsum("np,np->n", g_low, g_low)
        high_nrm = np.einsum("np,np->n", g_high, g_high)
        f = flat & (low_nrm > 0.0)
        g_high[f] -= (dots[f] / low_nrm[f])[:, None] * g_low[f]
        v = volu & (high_nrm > 0.0)
        g_low[v] -= (dots[v] / high_nrm[v])[:, None] * g_high[v]
    return g_color + g_low + g_high, n_conflicts
