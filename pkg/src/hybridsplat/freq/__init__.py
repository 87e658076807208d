"""Frequency-domain supervision: Haar DWT, losses, and gradient surgery."""

from .dwt import (DwtBands, dwt_adjoint, dwt_level1, frequency_loss_grads,
                  frequency_losses, idwt_level1)
from .ssim import color_loss, color_loss_grad, ssim, ssim_grad
from .surgery import (LossWeights, MODES, combine_gradients,
                      project_conflicting_gradients)

__all__ = [
    "DwtBands", "dwt_adjoint", "dwt_level1", "frequency_loss_grads",
    "frequency_losses", "idwt_level1",
    "color_loss", "color_loss_grad", "ssim", "ssim_grad",
    "LossWeights", "MODES", "combine_gradients",
    "project_conflicting_gradients",
]
