"""Dice loss, HD+Dice combinations, the adaptive lambda rule and gradient checks."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import BothEmpty, DegenerateBatch, HauslossError, ThresholdFlip
from .grid import ProbMap, coerce_pair
from .hd_cv import CvLossParams, loss_cv
from .hd_dt import DtLossParams, loss_dt, loss_dt_gaussian, loss_dt_os
from .hd_er import ErLossParams, loss_er
from .lossval import LossEval, total

HD_FAMILIES = ("dt", "dt-os", "dt-gauss", "er", "cv")
FAMILIES = ("dsc",) + HD_FAMILIES + ("combined",)


def dsc_loss(p, q, spacing=None) -> LossEval:
    """``1 - 2 sum(pq) / sum(p^2 + q^2)`` with its exact gradient in ``q``."""
    p, q = coerce_pair(p, q, spacing)
    pv, qv = p.data, q.data
    s = total(pv * pv) + total(qv * qv)
    if s == 0:
        raise BothEmpty("both maps are identically zero")
    i = total(pv * qv)
    value = 1.0 - 2.0 * i / s
    grad = (4.0 * i * qv - 2.0 * s * pv) / (s * s)
    return LossEval(value, grad, "DSC")


def default_params(family: str):
    return {"dt": DtLossParams(), "dt-os": DtLossParams(one_sided=True),
            "dt-gauss": DtLossParams(sigma=3.0), "er": ErLossParams(),
            "cv": CvLossParams(), "dsc": None}[family]


def hd_loss(family: str, p, q, params=None) -> LossEval:
    """Evaluate one of the HD-based loss families by tag."""
    if family not in HD_FAMILIES:
        raise HauslossError(f"unknown HD loss family {family!r}")
    params = params if params is not None else default_params(family)
    if family == "dt":
        return loss_dt(p, q, params)
    if family == "dt-os":
        return loss_dt_os(p, q, params)
    if family == "dt-gauss":
        return loss_dt_gaussian(p, q, params.sigma)
    if family == "er":
        return loss_er(p, q, params)
    return loss_cv(p, q, params)


@dataclass(frozen=True)
class LambdaState:
    """Weight of the Dice term plus the per-update record of mean terms."""

    lam: float = 1.0
    history: tuple = field(default_factory=tuple)

    def __post_init__(self):
        if not self.lam >= 0:
            raise HauslossError(f"lambda must be nonnegative, got {self.lam}")


def combine(hd_ev: LossEval, dsc_ev: LossEval, lam: float) -> LossEval:
    value = hd_ev.value + lam * dsc_ev.value
    grad = hd_ev.grad + lam * dsc_ev.grad
    flags = {"hd_family": hd_ev.family, "hd_term": hd_ev.value,
             "dsc_term": dsc_ev.value, "lambda": float(lam)}
    flags.update({k: v for k, v in hd_ev.flags.items() if k not in flags})
    return LossEval(value, grad, "combined", hd_ev.params, flags)


def combined_loss(p, q, family: str, params=None, lam=1.0) -> LossEval:
    """HD-based loss plus ``lam`` times the Dice loss.

    ``lam`` may be a number or a :class:`LambdaState`.
    """
    lam = lam.lam if isinstance(lam, LambdaState) else float(lam)
    if lam < 0:
        raise HauslossError("lambda must be nonnegative")
    p, q = coerce_pair(p, q)
    return combine(hd_loss(family, p, q, params), dsc_loss(p, q), lam)


def update_lambda_from_terms(state: LambdaState, hd_terms: Sequence[float],
                             dsc_terms: Sequence[float], strict: bool = True) -> LambdaState:
    """Set lambda to mean(hd terms) / mean(dsc terms)."""
    if len(hd_terms) == 0 or len(hd_terms) != len(dsc_terms):
        raise DegenerateBatch("batch is empty or terms are unpaired")
    mean_hd = float(np.mean(hd_terms))
    mean_dsc = float(np.mean(dsc_terms))
    if mean_dsc == 0:
        if strict:
            raise DegenerateBatch("mean Dice term is zero; lambda left unchanged")
        record = {"mean_hd": mean_hd, "mean_dsc": mean_dsc, "lambda": state.lam,
                  "degenerate": True}
        return replace(state, history=state.history + (record,))
    lam = mean_hd / mean_dsc
    record = {"mean_hd": mean_hd, "mean_dsc": mean_dsc, "lambda": lam,
              "degenerate": False}
    return LambdaState(lam, state.history + (record,))


def update_lambda(state: LambdaState, batch, family: str, params=None,
                  strict: bool = True) -> LambdaState:
    """Equalize the batch means of the HD-based and Dice terms."""
    batch = list(batch)
    if not batch:
        raise DegenerateBatch("empty batch")
    hd_terms, dsc_terms = [], []
    for p, q in batch:
        hd_terms.append(hd_loss(family, p, q, params).value)
        dsc_terms.append(dsc_loss(p, q).value)
    return update_lambda_from_terms(state, hd_terms, dsc_terms, strict)


@dataclass(frozen=True)
class GradCheckResult:
    max_rel_error: float
    n_sites: int
    n_kink_skipped: int
    worst_site: Optional[tuple]


def _flips(v: float, reach: float, level: float = 0.5) -> bool:
    return (v >= level) != (v + reach >= level) or (v >= level) != (v - reach >= level)


# fourth-order central difference: offsets (in steps) and weights (over 12 h)
_STENCIL = ((2.0, -1.0), (1.0, 8.0), (-1.0, -8.0), (-2.0, 1.0))


def gradient_check_details(lossfn: Callable, p, q, sample_sites: int = 50,
                           step: float = 1e-4, seed: int = 0, sites=None,
                           margin: float = 0.01) -> GradCheckResult:
    """Compare the analytic gradient with central differences at sampled sites.

    ``lossfn(p, q)`` must return a :class:`LossEval`.  The derivative is
    estimated with the fourth-order central stencil at ``q +- step`` and
    ``q +- 2 step``, which is exact for the polynomial (degree <= 3) surrogates
    used here.  Sites are drawn among those with ``margin < q < 1 - margin``
    whose value does not cross 0.5 within ``+-2 step``, so every thresholded
    quantity stays fixed and the check runs against the frozen surrogate.
    Explicit ``sites`` that would cross raise :class:`ThresholdFlip`.  Sites
    where the loss reports a changed ``kink_signature`` under perturbation
    are skipped and redrawn.

    The relative error at a site is ``|g - fd| / max(|g|, |fd|, floor)``
    where ``floor`` is 1e-5 of the largest analytic gradient magnitude.  The
    floor keeps sites whose true derivative is zero from dividing
    floating-point noise in the difference quotient by zero.
    """
    p, q = coerce_pair(p, q)
    base = lossfn(p, q)
    g = base.grad
    qv = q.data
    reach = 2.0 * step
    if sites is not None:
        cand = [tuple(int(c) for c in s) for s in sites]
        for s in cand:
            if _flips(float(qv[s]), reach):
                raise ThresholdFlip(f"perturbation at {s} crosses the threshold")
    else:
        ok = (qv > margin + reach) & (qv < 1 - margin - reach) & (np.abs(qv - 0.5) > reach)
        idx = np.argwhere(ok)
        if len(idx) == 0:
            raise ThresholdFlip("no site can be perturbed without crossing the threshold")
        rng = np.random.default_rng(seed)
        cand = [tuple(int(c) for c in idx[i]) for i in rng.permutation(len(idx))]
    floor = 1e-5 * float(np.abs(g).max()) + 1e-300
    sig = base.flags.get("kink_signature")
    worst, worst_site, used, skipped = 0.0, None, 0, 0
    for s in cand:
        if used >= sample_sites:
            break
        acc = 0.0
        kink = False
        for offset, weight in _STENCIL:
            qq = qv.copy()
            qq[s] += offset * step
            ev = lossfn(p, ProbMap(qq, q.spec))
            if sig is not None and ev.flags.get("kink_signature") != sig:
                kink = True
                break
            acc += weight * ev.value
        if kink:
            skipped += 1
            continue
        fd = acc / (12.0 * step)
        a = float(g[s])
        rel = abs(a - fd) / max(abs(a), abs(fd), floor)
        used += 1
        if rel > worst or worst_site is None:
            worst, worst_site = max(worst, rel), s
    return GradCheckResult(worst, used, skipped, worst_site)


def gradient_check(lossfn: Callable, p, q, sample_sites: int = 50, step: float = 1e-4,
                   seed: int = 0, sites=None, margin: float = 0.01) -> float:
    """Worst relative error of the analytic gradient; see :func:`gradient_check_details`."""
    return gradient_check_details(lossfn, p, q, sample_sites, step, seed, sites,
                                  margin).max_rel_error
