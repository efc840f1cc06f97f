"""Exact boundary-distance metrics and the Dice coefficient.

All distance metrics work on :class:`~hausloss.grid.BoundarySet` pairs.  The
per-site nearest distances are read off an exact distance transform of the
target set, which is O(N) rather than the O(|X||Y|) pairwise scan.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .edt import squared_edt
from .errors import BothEmpty, EmptyBoundary, HauslossError, KOutOfRange, ShapeMismatch
from .grid import BoundarySet, as_mask, as_prob, boundary, check_same_spec


def _check_sets(x: BoundarySet, y: BoundarySet) -> None:
    if x.spec.shape != y.spec.shape or x.spec.spacing != y.spec.spacing:
        raise ShapeMismatch("boundary sets live on different grids")
    if len(x) == 0 or len(y) == 0:
        raise EmptyBoundary("boundary set is empty")


def nearest_distances(x: BoundarySet, y: BoundarySet) -> np.ndarray:
    """Distance from each site of ``x`` to its nearest site of ``y`` (mm)."""
    _check_sets(x, y)
    seeds = np.zeros(y.spec.shape, dtype=bool)
    seeds[tuple(y.coords.T)] = True
    sq = squared_edt(seeds, y.spec.spacing)
    return np.sqrt(sq[tuple(x.coords.T)])


def directed_hd(x: BoundarySet, y: BoundarySet) -> float:
    """One-sided Hausdorff distance: max over x of min over y."""
    return float(nearest_distances(x, y).max())


def hausdorff(x: BoundarySet, y: BoundarySet) -> float:
    return max(directed_hd(x, y), directed_hd(y, x))


def nearest_rank(values: np.ndarray, pct: float) -> float:
    """Nearest-rank percentile (no interpolation)."""
    if not 0 < pct <= 100:
        raise HauslossError(f"percentile must be in (0, 100], got {pct}")
    values = np.sort(np.asarray(values, dtype=np.float64))
    n = len(values)
    # round away float noise before ceil so that e.g. 95% of 20 is rank 19
    rank = max(1, math.ceil(round(pct * n / 100.0, 9)))
    return float(values[min(rank, n) - 1])


def percentile_hd(x: BoundarySet, y: BoundarySet, pct: float = 95.0) -> float:
    """Percentile of the pooled nearest distances of both directions."""
    pooled = np.concatenate([nearest_distances(x, y), nearest_distances(y, x)])
    return nearest_rank(pooled, pct)


def directed_partial_hd(x: BoundarySet, y: BoundarySet, k: int) -> float:
    """K-th largest nearest distance from ``x`` to ``y``."""
    d = nearest_distances(x, y)
    if not 1 <= k <= len(d):
        raise KOutOfRange(f"k={k} outside [1, {len(d)}]")
    return float(np.sort(d)[::-1][k - 1])


def partial_hd(x: BoundarySet, y: BoundarySet, k: int) -> float:
    return max(directed_partial_hd(x, y, k), directed_partial_hd(y, x, k))


def modified_hd(x: BoundarySet, y: BoundarySet) -> float:
    return max(float(nearest_distances(x, y).mean()),
               float(nearest_distances(y, x).mean()))


def asd(x: BoundarySet, y: BoundarySet) -> float:
    """Average symmetric surface distance."""
    dxy, dyx = nearest_distances(x, y), nearest_distances(y, x)
    return float((dxy.sum() + dyx.sum()) / (len(dxy) + len(dyx)))


def dsc(p, q) -> float:
    """Soft Dice similarity 2 sum(pq) / sum(p^2 + q^2)."""
    p, q = as_prob(p), as_prob(q)
    check_same_spec(p, q)
    denom = float(np.sum(p.data ** 2) + np.sum(q.data ** 2))
    if denom == 0:
        raise BothEmpty("both maps are identically zero")
    return 2.0 * float(np.sum(p.data * q.data)) / denom


@dataclass(frozen=True)
class MetricReport:
    hd: float
    hd_directed_pq: float
    hd_directed_qp: float
    hd95: float
    hd90: float
    partial_hd: float
    partial_k: int
    modified_hd: float
    asd: float
    dsc: float

    def as_dict(self) -> dict:
        return asdict(self)


def evaluate(truth, pred, k: int = 1, spacing=None) -> MetricReport:
    """Every metric at once for a pair of binary masks.

    ``k`` is clipped to the smaller boundary size so that partial HD stays
    defined on tiny structures.
    """
    p, q = as_mask(truth, spacing), as_mask(pred, spacing)
    check_same_spec(p, q)
    x, y = boundary(p), boundary(q)
    dxy, dyx = nearest_distances(x, y), nearest_distances(y, x)
    pooled = np.concatenate([dxy, dyx])
    kk = max(1, min(k, len(dxy), len(dyx)))
    return MetricReport(
        hd=float(max(dxy.max(), dyx.max())),
        hd_directed_pq=float(dxy.max()),
        hd_directed_qp=float(dyx.max()),
        hd95=nearest_rank(pooled, 95),
        hd90=nearest_rank(pooled, 90),
        partial_hd=max(float(np.sort(dxy)[::-1][kk - 1]),
                       float(np.sort(dyx)[::-1][kk - 1])),
        partial_k=kk,
        modified_hd=max(float(dxy.mean()), float(dyx.mean())),
        asd=float((dxy.sum() + dyx.sum()) / len(pooled)),
        dsc=dsc(p, q),
    )


def exact_hd(truth, pred, spacing=None) -> float:
    """Bidirectional HD between the boundaries of two masks."""
    p, q = as_mask(truth, spacing), as_mask(pred, spacing)
    return hausdorff(boundary(p), boundary(q))
