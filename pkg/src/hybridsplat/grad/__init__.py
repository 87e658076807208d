"""Backward pass and the finite-difference oracle used to test it."""

from .backward import backward
from .bundle import GradientBundle, ParamGrads, param_labels
from .findiff import FiniteDiffReport, finite_diff_check

__all__ = ["backward", "GradientBundle", "ParamGrads", "param_labels",
           "FiniteDiffReport", "finite_diff_check"]
