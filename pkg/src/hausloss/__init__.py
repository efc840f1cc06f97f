"""Hausdorff distance metrics, HD estimators, and HD-based segmentation losses.

The exact metrics live in :mod:`hausloss.metrics`; the three estimator/loss
families (distance transform, erosion, disk convolution) in
:mod:`hausloss.hd_dt`, :mod:`hausloss.hd_er` and :mod:`hausloss.hd_cv`; their
Dice combinations and gradient checks in :mod:`hausloss.losses`.
"""

__version__ = "0.1.0"

from .edt import DistanceMap, boundary_dt, edt_to_set, squared_edt
from .errors import HauslossError
from .grid import BinaryMask, BoundarySet, Grid, GridSpec, ProbMap, boundary, threshold
from .hd_cv import CvLossParams, KernelBank, hd_cv_estimate, loss_cv, make_kernel
from .hd_dt import DtLossEvaluator, DtLossParams, hd_dt_estimate, loss_dt, loss_dt_gaussian, loss_dt_os
from .hd_er import ErLossParams, StructuringElement, cross, erode_binary, erode_soft, hd_er_estimate, loss_er
from .losses import (LambdaState, combined_loss, dsc_loss, gradient_check, hd_loss,
                     update_lambda)
from .lossval import LossEval
from .metrics import (MetricReport, asd, directed_hd, dsc, evaluate, exact_hd, hausdorff,
                      modified_hd, partial_hd, percentile_hd)

__all__ = [
    "BinaryMask", "BoundarySet", "CvLossParams", "DistanceMap", "DtLossEvaluator",
    "DtLossParams", "ErLossParams", "Grid", "GridSpec", "HauslossError", "KernelBank",
    "LambdaState", "LossEval", "MetricReport", "ProbMap", "StructuringElement", "asd",
    "boundary", "boundary_dt", "combined_loss", "cross", "directed_hd", "dsc", "dsc_loss",
    "edt_to_set", "erode_binary", "erode_soft", "evaluate", "exact_hd", "gradient_check",
    "hausdorff", "hd_cv_estimate", "hd_dt_estimate", "hd_er_estimate", "hd_loss", "loss_cv",
    "loss_dt", "loss_dt_gaussian", "loss_dt_os", "loss_er", "make_kernel", "modified_hd",
    "partial_hd", "percentile_hd", "squared_edt", "threshold", "update_lambda",
]
