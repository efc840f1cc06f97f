"""Exact Euclidean distance transforms on 2D/3D grids with anisotropic spacing.

The transform is separable: a 1D lower-envelope-of-parabolas pass
(Felzenszwalb & Huttenlocher) runs along every axis in turn on the squared
distances, and the square root is taken at the end.  Runtime is linear in the
number of sites per axis pass.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

from .errors import EmptySourceSet
from .grid import BoundarySet, Grid, GridSpec, as_mask, boundary, require_foreground


@njit(cache=True, nogil=True)
def _envelope_rows(rows, s):
    # rows: (m, n) squared distances, inf where unreached; updated in place
    m, n = rows.shape
    v = np.empty(n, dtype=np.int64)
    z = np.empty(n + 1, dtype=np.float64)
    f = np.empty(n, dtype=np.float64)
    s2 = s * s
    for r in range(m):
        for i in range(n):
            f[i] = rows[r, i]
        k = -1
        for q in range(n):
            fq = f[q]
            if fq == np.inf:
                continue
            if k < 0:
                k = 0
                v[0] = q
                z[0] = -np.inf
                z[1] = np.inf
                continue
            while True:
                p = v[k]
                # abscissa (index units) where parabolas rooted at p and q meet
                sect = ((fq - f[p]) + s2 * (q * q - p * p)) / (2.0 * s2 * (q - p))
                if sect <= z[k]:
                    k -= 1
                else:
                    break
            k += 1
            v[k] = q
            z[k] = sect
            z[k + 1] = np.inf
        if k < 0:
            continue
        k = 0
        for q in range(n):
            while z[k + 1] < q:
                k += 1
            d = (q - v[k]) * s
            rows[r, q] = d * d + f[v[k]]


def squared_edt(seeds: np.ndarray, spacing) -> np.ndarray:
    """Squared distance (mm^2) from every site to the nearest ``True`` site of ``seeds``.

    Sites are unreachable (``inf``) only when ``seeds`` is empty.
    """
    seeds = np.asarray(seeds, dtype=bool)
    out = np.where(seeds, 0.0, np.inf)
    for axis, s in enumerate(spacing):
        moved = np.moveaxis(out, axis, -1)
        rows = np.ascontiguousarray(moved).reshape(-1, moved.shape[-1])
        _envelope_rows(rows, float(s))
        out = np.moveaxis(rows.reshape(moved.shape), -1, axis)
    return np.ascontiguousarray(out)


@dataclass(frozen=True, eq=False)
class DistanceMap(Grid):
    """Nonnegative distances (mm) to a source set; zero exactly on the sources."""

    source: str = "set"


def edt_to_set(spec: GridSpec, sources: BoundarySet) -> DistanceMap:
    """Exact distance from every site of ``spec`` to the nearest source site."""
    if len(sources) == 0:
        raise EmptySourceSet("source set is empty")
    seeds = np.zeros(spec.shape, dtype=bool)
    seeds[tuple(sources.coords.T)] = True
    return DistanceMap(np.sqrt(squared_edt(seeds, spec.spacing)), spec, "set")


def boundary_dt(mask, spacing=None) -> DistanceMap:
    """Unsigned distance to the boundary of ``mask`` (no sign flip inside)."""
    mask = as_mask(mask, spacing)
    require_foreground(mask)
    dist = edt_to_set(mask.spec, boundary(mask))
    return DistanceMap(dist.data, mask.spec, "boundary")


def foreground_dt(mask, spacing=None) -> DistanceMap:
    """Distance to the nearest foreground site of ``mask``."""
    mask = as_mask(mask, spacing)
    require_foreground(mask)
    d = np.sqrt(squared_edt(mask.data.astype(bool), mask.spec.spacing))
    return DistanceMap(d, mask.spec, "foreground")
