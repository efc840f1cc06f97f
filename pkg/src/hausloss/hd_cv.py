"""Hausdorff estimation with normalized disk / ball kernels.

A disk of radius r centred on a false-positive site fits inside the
complement of the reference mask iff that site is farther than r from the
reference.  Testing this with a convolution and a hard threshold for a range
of radii brackets the boundary distance.  The loss replaces the hard threshold
with the soft one from :mod:`hausloss.kernels` and the binary set differences
with their relaxed versions.

Convolutions treat everything outside the grid as background, so the
complement of a mask is 1 there.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import HauslossError
from .grid import Grid, as_mask, check_same_spec, coerce_pair, difference, spacing_unit, threshold
from .kernels import KernelBank, make_kernel, soft_threshold  # noqa: F401  (re-exported)
from .lossval import LossEval, total

RADII_2D = (3, 6, 9, 12, 15, 18)
RADII_3D = (3, 6, 9)
LEVEL = 0.5


def default_radii(rank: int) -> tuple:
    return RADII_2D if rank == 2 else RADII_3D


def hd_cv_estimate(p, q, radii: Sequence[float] = None, spacing=None) -> float:
    """Largest radius at which any of the four disk-fitting tests fires.

    The tests are: a disk around a false-positive site fits outside ``p``, a
    disk around a false-negative site fits inside ``p``, and the mirrored pair
    with ``q``.  Radii are searched in ascending order; firing is monotone so
    the search stops at the first radius where nothing fires.  When the masks
    differ but no radius fires, one lattice unit is returned.
    """
    p, q = as_mask(p, spacing), as_mask(q, spacing)
    spec = check_same_spec(p, q)
    bank = KernelBank(spec.rank, tuple(radii) if radii is not None else default_radii(spec.rank))
    fp_sites = difference(q, p).data.astype(bool)
    fn_sites = difference(p, q).data.astype(bool)
    if not (fp_sites.any() or fn_sites.any()):
        return 0.0
    best = 0.0
    for r in bank.radii:
        cp, n = bank.counts(p.data, r)
        cq, _ = bank.counts(q.data, r)
        fired = ((cp[fp_sites] == 0).any() or (cp[fn_sites] == n).any()
                 or (cq[fn_sites] == 0).any() or (cq[fp_sites] == n).any())
        if not fired:
            break
        best = r
    return max(best, 1.0) * spacing_unit(spec)


def relaxed_difference(p, q, spacing=None):
    """Relaxed ``q \\ p`` and ``p \\ q``: ``(p-q)**2 q`` and ``(p-q)**2 p``."""
    p, q = coerce_pair(p, q, spacing)
    sq = (p.data - q.data) ** 2
    return Grid(sq * q.data, p.spec), Grid(sq * p.data, p.spec)


@dataclass(frozen=True)
class CvLossParams:
    radii: tuple = None
    alpha: float = 2.0
    soft_threshold_level: float = LEVEL

    def __post_init__(self):
        if self.radii is not None:
            object.__setattr__(self, "radii", KernelBank(2, self.radii).radii)
        if not self.alpha > 0:
            raise HauslossError("alpha must be positive")
        if not 0 < self.soft_threshold_level < 1:
            raise HauslossError("soft threshold level must be in (0, 1)")

    def resolved_radii(self, rank: int) -> tuple:
        return self.radii if self.radii is not None else tuple(map(float, default_radii(rank)))


def cv_weights(p_bar: np.ndarray, q_bar: np.ndarray, params: CvLossParams):
    """Per-site weights multiplying the relaxed ``q\\p`` and ``p\\q`` terms."""
    bank = KernelBank(p_bar.ndim, params.resolved_radii(p_bar.ndim))
    level = params.soft_threshold_level
    w_qp = np.zeros(p_bar.shape)
    w_pq = np.zeros(p_bar.shape)
    for r in bank.radii:
        cp, n = bank.counts(p_bar, r)
        cq, _ = bank.counts(q_bar, r)
        fp, fq = cp / n, cq / n
        scale = r ** params.alpha
        w_qp += scale * (soft_threshold(1.0 - fp, level) + soft_threshold(fq, level))
        w_pq += scale * (soft_threshold(fp, level) + soft_threshold(1.0 - fq, level))
    return w_qp, w_pq


def loss_cv(p, q, params: CvLossParams = None, spacing=None) -> LossEval:
    """Radius-weighted soft disk tests applied to the relaxed set differences.

    Convolutions of the thresholded masks are constants for the gradient; it
    flows only through the relaxed differences.
    """
    params = params or CvLossParams()
    p, q = coerce_pair(p, q, spacing)
    p_bar = threshold(p, LEVEL).data
    q_bar = threshold(q, LEVEL).data
    w_qp, w_pq = cv_weights(p_bar, q_bar, params)
    pv, qv = p.data, q.data
    err = pv - qv
    sq = err * err
    n = p.spec.size
    value = total(w_qp * sq * qv + w_pq * sq * pv) / n
    d_qp = sq - 2.0 * err * qv
    d_pq = -2.0 * err * pv
    grad = (w_qp * d_qp + w_pq * d_pq) / n
    out_params = {"radii": list(params.resolved_radii(p.spec.rank)), "alpha": params.alpha,
                  "soft_threshold_level": params.soft_threshold_level}
    return LossEval(value, grad, "CV", out_params)
