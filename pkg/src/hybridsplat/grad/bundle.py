"""Per-parameter gradient containers mirroring the scene layout."""

from dataclasses import dataclass

import numpy as np

from ..core import GaussianSet
from ..errors import IntegrityError


@dataclass
class ParamGrads:
    """Gradients for every trainable array of a GaussianSet."""
    center: np.ndarray         # (N, 3)
    log_scale: np.ndarray      # (N, 3)
    rotation: np.ndarray       # (N, 4)
    opacity_logit: np.ndarray  # (N,)
    sh_coeffs: np.ndarray      # (N, 3, B)

    @classmethod
    def zeros_like(cls, scene: GaussianSet):
        return cls(np.zeros_like(scene.center),
                   np.zeros_like(scene.log_scale),
                   np.zeros_like(scene.rotation),
                   np.zeros_like(scene.opacity_logit),
                   np.zeros_like(scene.sh_coeffs))

    @property
    def count(self):
        return self.center.shape[0]

    def flat(self):
        """(N, P) matrix, one flattened gradient row per primitive.

        Order per row: center, log_scale, rotation, opacity_logit, sh.
        """
        n = self.count
        return np.concatenate([
            self.center.reshape(n, -1),
            self.log_scale.reshape(n, -1),
            self.rotation.reshape(n, -1),
            self.opacity_logit.reshape(n, 1),
            self.sh_coeffs.reshape(n, -1),
        ], axis=1)

    @classmethod
    def from_flat(cls, flat, template):
        n = template.count
        b = template.sh_coeffs.shape[2]
        if flat.shape != (n, 11 + 3 * b):
            raise IntegrityError("flat gradient shape %s does not match scene"
                                 % (flat.shape,))
        return cls(flat[:, 0:3].copy(),
                   flat[:, 3:6].copy(),
                   flat[:, 6:10].copy(),
                   flat[:, 10].copy(),
                   flat[:, 11:].reshape(n, 3, b).copy())

    def assert_finite(self):
        for name in ("center", "log_scale", "rotation", "opacity_logit",
                     "sh_coeffs"):
            if not np.all(np.isfinite(getattr(self, name))):
                raise IntegrityError("non-finite gradient in %s" % name)


@dataclass
class GradientBundle:
    """The three per-parameter gradient sets consumed by gradient surgery."""
    g_color: ParamGrads
    g_low: ParamGrads
    g_high: ParamGrads

    @classmethod
    def zeros_like(cls, scene: GaussianSet):
        return cls(ParamGrads.zeros_like(scene), ParamGrads.zeros_like(scene),
                   ParamGrads.zeros_like(scene))


def param_labels(scene: GaussianSet):
    """Flat parameter names aligned with ParamGrads.flat(), one scene row
    after another."""
    b = scene.sh_coeffs.shape[2]
    per = (["center.%d" % i for i in range(3)]
           + ["log_scale.%d" % i for i in range(3)]
           + ["rotation.%d" % i for i in range(4)]
           + ["opacity_logit"]
           + ["sh.%d.%d" % (c, k) for c in range(3) for k in range(b)])
    return [("g%d.%s" % (g, p)) for g in range(scene.count) for p in per]
