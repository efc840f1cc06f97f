"""Morphological (erosion based) Hausdorff estimator and loss.

Binary erosion uses a cross-shaped element (centre plus face neighbours).
The soft version used by the loss is a normalized stencil correlation
followed by ``f_s(x) = max(x - level, 0) / (1 - level)``, which keeps solid
plateaus at 1 so that a chain of K soft erosions behaves like K binary ones.
"""

from __future__ import annotations

import hashlib
from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np

from .errors import HauslossError
from .grid import (Grid, as_mask, check_same_spec, coerce_pair, face_offsets, shift,
                   spacing_unit, symmetric_difference)
from .kernels import KernelBank, soft_threshold
from .lossval import LossEval, total


@dataclass(frozen=True, eq=False)
class StructuringElement:
    """A centred 3x3 (2D) or 3x3x3 (3D) stencil of nonnegative weights."""

    weights: np.ndarray

    def __post_init__(self):
        w = np.array(self.weights, dtype=np.float64)
        if w.ndim not in (2, 3) or any(n != 3 for n in w.shape):
            raise HauslossError("structuring element must be 3x3 or 3x3x3")
        if (w < 0).any():
            raise HauslossError("structuring element weights must be nonnegative")
        if w[(1,) * w.ndim] <= 0:
            raise HauslossError("footprint must contain the centre")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    @property
    def rank(self) -> int:
        return self.weights.ndim

    @property
    def footprint(self) -> np.ndarray:
        return self.weights > 0

    def offsets(self):
        """(offset, weight) pairs of the nonzero stencil entries."""
        return [(tuple(int(i) - 1 for i in idx), float(self.weights[tuple(idx)]))
                for idx in np.argwhere(self.footprint)]


def cross(rank: int = 2) -> StructuringElement:
    """Centre plus face neighbours, each weighted 1/5 (2D) or 1/7 (3D)."""
    w = np.zeros((3,) * rank)
    w[(1,) * rank] = 1.0
    for off in face_offsets(rank):
        w[tuple(1 + o for o in off)] = 1.0
    return StructuringElement(w / w.sum())


def _element(elem: Optional[StructuringElement], rank: int) -> StructuringElement:
    elem = elem if elem is not None else cross(rank)
    if elem.rank != rank:
        raise HauslossError(f"element rank {elem.rank} does not match grid rank {rank}")
    return elem


def erode_binary(mask, elem: StructuringElement = None):
    """Sites whose whole footprint lies in the foreground (outside counts as background)."""
    mask = as_mask(mask)
    elem = _element(elem, mask.spec.rank)
    fg = mask.data.astype(bool)
    out = fg.copy()
    for off, _ in elem.offsets():
        out &= shift(fg, off, fill=False)
    return type(mask)(out, mask.spec)


def _correlate(field: np.ndarray, elem: StructuringElement) -> np.ndarray:
    out = np.zeros_like(field, dtype=np.float64)
    for off, w in elem.offsets():
        out += w * shift(field, off, fill=0.0)
    return out


def _correlate_adjoint(adj: np.ndarray, elem: StructuringElement) -> np.ndarray:
    out = np.zeros_like(adj, dtype=np.float64)
    for off, w in elem.offsets():
        out += w * shift(adj, tuple(-o for o in off), fill=0.0)
    return out


def erode_soft(field, elem: StructuringElement = None, level: float = 0.5) -> Grid:
    """Generalized erosion of a real-valued field (zero padded)."""
    grid = field if isinstance(field, Grid) else Grid(np.asarray(field, dtype=np.float64))
    elem = _element(elem, grid.spec.rank)
    return Grid(soft_threshold(_correlate(grid.data, elem), level), grid.spec)


def erosion_count(diff, elem: StructuringElement = None, k_cap: Optional[int] = None):
    """Number of successive binary erosions by ``elem`` (default: cross) that empty ``diff``.

    Returns ``(r, capped)``; when ``diff`` survives ``k_cap`` erosions the
    result is ``(k_cap, True)``.
    """
    mask = as_mask(diff)
    elem = _element(elem, mask.spec.rank)
    k_cap = _default_cap(mask, k_cap)
    cur = mask
    for r in range(k_cap + 1):
        if not cur.any():
            return r, False
        if r == k_cap:
            break
        cur = erode_binary(cur, elem)
    return k_cap, True


def ball_erosion_radius(diff, k_cap: Optional[int] = None):
    """Smallest integer r for which erosion by the Euclidean ball of radius r empties ``diff``.

    The erosion is a convolution with the ball footprint followed by a hard
    threshold at full coverage (outside the grid is background).  Returns
    ``(r, capped)`` like :func:`erosion_count`.
    """
    mask = as_mask(diff)
    k_cap = _default_cap(mask, k_cap)
    fg = mask.data.astype(bool)
    if not fg.any():
        return 0, False
    bank = KernelBank(mask.spec.rank, tuple(range(1, k_cap + 1)))
    for r in bank.radii:
        counts, n = bank.counts(mask.data, r)
        if not (counts[fg] == n).any():
            return int(r), False
    return k_cap, True


def _default_cap(mask, k_cap):
    return max(1, max(mask.spec.shape) // 2) if k_cap is None else int(k_cap)


def hd_er_estimate(p, q, elem: StructuringElement = None, k_cap: Optional[int] = None,
                   spacing=None) -> float:
    """Twice the smallest erosion radius that empties the symmetric difference.

    By default the radius-r element is the Euclidean ball B_r.  Passing
    ``elem`` switches to r successive erosions by that element instead (for
    the cross this is the L1 ball, which overshoots along diagonals by up to
    a factor sqrt(2)).  Reported in units of the smallest spacing; use
    :func:`ball_erosion_radius` / :func:`erosion_count` to detect capping.
    """
    p, q = as_mask(p, spacing), as_mask(q, spacing)
    spec = check_same_spec(p, q)
    diff = symmetric_difference(p, q)
    if elem is None:
        r, _ = ball_erosion_radius(diff, k_cap)
    else:
        r, _ = erosion_count(diff, elem, k_cap)
    return 2.0 * r * spacing_unit(spec)


@dataclass(frozen=True)
class ErLossParams:
    k_max: int = 10
    alpha: float = 2.0
    soft_threshold_level: float = 0.5

    def __post_init__(self):
        if self.k_max < 1:
            raise HauslossError("k_max must be >= 1")
        if not self.alpha > 0:
            raise HauslossError("alpha must be positive")
        if not 0 < self.soft_threshold_level < 1:
            raise HauslossError("soft threshold level must be in (0, 1)")


def loss_er(p, q, params: ErLossParams = None, elem: StructuringElement = None,
            spacing=None) -> LossEval:
    """Sum over k of ``k**alpha`` times the mass left after k soft erosions of ``(p-q)**2``.

    The gradient is accumulated backwards through the erosion chain.  Each
    soft threshold is piecewise linear; at the kink the zero subgradient is
    used.  ``flags['kink_signature']`` hashes the active pattern of every
    threshold so callers can tell when a perturbation crossed a kink.
    """
    params = params or ErLossParams()
    p, q = coerce_pair(p, q, spacing)
    elem = _element(elem, p.spec.rank)
    level = params.soft_threshold_level
    n = p.spec.size
    err = p.data - q.data
    e = err * err
    actives = []
    value = 0.0
    for k in range(1, params.k_max + 1):
        c = _correlate(e, elem)
        active = c > level
        e = np.where(active, (c - level) / (1.0 - level), 0.0)
        actives.append(active)
        value += k ** params.alpha * total(e)
    value /= n

    adj = np.zeros_like(e)
    for k in range(params.k_max, 0, -1):
        adj = adj + k ** params.alpha / n
        adj = _correlate_adjoint(adj * actives[k - 1] / (1.0 - level), elem)
    grad = adj * (-2.0 * err)

    digest = hashlib.sha1(np.packbits(np.stack(actives)).tobytes()).hexdigest()
    return LossEval(value, grad, "ER", asdict(params), {"kink_signature": digest})
