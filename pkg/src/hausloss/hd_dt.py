"""Distance-transform based Hausdorff estimator and losses.

Distances to the thresholded boundaries are treated as constants when
differentiating (the frozen-distance convention): the transform is recomputed
from the current prediction but never differentiated through.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np

from .edt import boundary_dt
from .errors import HauslossError
from .grid import as_mask, coerce_pair, require_foreground, symmetric_difference, threshold
from .lossval import LossEval, total

ALPHA_GRID = tuple(np.arange(1, 9) * 0.5)
LEVEL = 0.5


@dataclass(frozen=True)
class DtLossParams:
    alpha: float = 2.0
    sigma: Optional[float] = None
    one_sided: bool = False

    def __post_init__(self):
        if not self.alpha > 0:
            raise HauslossError(f"alpha must be positive, got {self.alpha}")
        if self.sigma is not None and not self.sigma > 0:
            raise HauslossError(f"sigma must be positive, got {self.sigma}")


def hd_dt_estimate(p, q, spacing=None) -> float:
    """Largest boundary distance found on the symmetric difference of two masks."""
    p, q = as_mask(p, spacing), as_mask(q, spacing)
    require_foreground(p, "p")
    require_foreground(q, "q")
    diff = symmetric_difference(p, q).data.astype(bool)
    if not diff.any():
        return 0.0
    d_p = boundary_dt(p).data
    d_q = boundary_dt(q).data
    return float(max(d_p[diff].max(), d_q[diff].max()))


def _weighted_sq_error(p, q, weight, family, params, flags=None) -> LossEval:
    n = p.size
    err = p - q
    value = total(err * err * weight) / n
    grad = (2.0 / n) * (q - p) * weight
    return LossEval(value, grad, family, params, flags or {})


def loss_dt_os(p, q, params: DtLossParams = None, spacing=None, d_p=None) -> LossEval:
    """Squared error weighted by the ground-truth boundary distance to the power alpha."""
    params = params or DtLossParams()
    p, q = coerce_pair(p, q, spacing)
    if d_p is None:
        p_bar = threshold(p, LEVEL)
        require_foreground(p_bar, "thresholded p")
        d_p = boundary_dt(p_bar).data
    w = np.asarray(d_p) ** params.alpha
    return _weighted_sq_error(p.data, q.data, w, "DT-OS", asdict(params))


def loss_dt(p, q, params: DtLossParams = None, spacing=None,
            d_p=None, d_q=None) -> LossEval:
    """Squared error weighted by ``d_p**alpha + d_q**alpha``.

    If the thresholded prediction is empty, ``d_q`` is undefined and the
    one-sided loss is returned instead, flagged ``one_sided_fallback``.
    Precomputed ``d_p``/``d_q`` arrays may be passed to skip the transforms.
    """
    params = params or DtLossParams()
    if params.one_sided:
        return loss_dt_os(p, q, params, spacing, d_p)
    p, q = coerce_pair(p, q, spacing)
    if d_p is None:
        p_bar = threshold(p, LEVEL)
        require_foreground(p_bar, "thresholded p")
        d_p = boundary_dt(p_bar).data
    if d_q is None:
        q_bar = threshold(q, LEVEL)
        if not q_bar.any():
            ev = loss_dt_os(p, q, params, d_p=d_p)
            return LossEval(ev.value, ev.grad, "DT", asdict(params),
                            {"one_sided_fallback": True})
        d_q = boundary_dt(q_bar).data
    w = np.asarray(d_p) ** params.alpha + np.asarray(d_q) ** params.alpha
    return _weighted_sq_error(p.data, q.data, w, "DT", asdict(params))


def loss_dt_gaussian(p, q, sigma: float, spacing=None, d_p=None) -> LossEval:
    """Squared error weighted by ``exp(-d_p**2 / (2 sigma**2))`` (emphasises the boundary)."""
    if not sigma > 0:
        raise HauslossError(f"sigma must be positive, got {sigma}")
    p, q = coerce_pair(p, q, spacing)
    if d_p is None:
        p_bar = threshold(p, LEVEL)
        require_foreground(p_bar, "thresholded p")
        d_p = boundary_dt(p_bar).data
    w = np.exp(-np.asarray(d_p) ** 2 / (2.0 * sigma ** 2))
    return _weighted_sq_error(p.data, q.data, w, "DT-Gauss", {"sigma": float(sigma)})


class DtLossEvaluator:
    """Stateful :func:`loss_dt` that caches ``d_p`` and refreshes ``d_q`` on a schedule.

    ``refresh_every=N`` recomputes ``d_q`` on every N-th call (1 means always);
    :meth:`refresh` forces a recomputation on the next call.  One evaluator
    per worker: the cache is not safe for concurrent mutation.
    """

    def __init__(self, p, params: DtLossParams = None, refresh_every: int = 1,
                 spacing=None):
        if refresh_every < 1:
            raise HauslossError("refresh_every must be >= 1")
        self.p = coerce_pair(p, p, spacing)[0]
        self.params = params or DtLossParams()
        self.refresh_every = refresh_every
        p_bar = threshold(self.p, LEVEL)
        require_foreground(p_bar, "thresholded p")
        self.d_p = boundary_dt(p_bar).data
        self._d_q = None
        self._calls = 0
        self.refreshes = 0

    def refresh(self) -> None:
        self._d_q = None

    def __call__(self, q) -> LossEval:
        p, q = coerce_pair(self.p, q)
        if self.params.one_sided:
            return loss_dt_os(p, q, self.params, d_p=self.d_p)
        if self._d_q is None or self._calls % self.refresh_every == 0:
            q_bar = threshold(q, LEVEL)
            self._d_q = boundary_dt(q_bar).data if q_bar.any() else None
            self.refreshes += 1
        self._calls += 1
        if self._d_q is None:
            ev = loss_dt_os(p, q, self.params, d_p=self.d_p)
            return LossEval(ev.value, ev.grad, "DT", asdict(self.params),
                            {"one_sided_fallback": True})
        return loss_dt(p, q, self.params, d_p=self.d_p, d_q=self._d_q)
