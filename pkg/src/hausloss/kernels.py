"""Disk/ball stencils, their convolution counts, and the soft threshold."""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.signal import fftconvolve

from .errors import HauslossError


def soft_threshold(x, level: float = 0.5):
    """``max(x - level, 0) / (1 - level)``: zero below ``level``, 1 stays 1."""
    if not 0 < level < 1:
        raise HauslossError(f"soft threshold level must be in (0, 1), got {level}")
    return np.maximum(np.asarray(x) - level, 0.0) / (1.0 - level)


@lru_cache(maxsize=None)
def _footprint(rank: int, r: float) -> np.ndarray:
    if rank not in (2, 3):
        raise HauslossError(f"rank must be 2 or 3, got {rank}")
    if r < 0:
        raise HauslossError(f"radius must be nonnegative, got {r}")
    h = int(np.floor(r))
    axes = np.meshgrid(*([np.arange(-h, h + 1)] * rank), indexing="ij")
    fp = sum(a.astype(np.int64) ** 2 for a in axes) <= r * r
    fp.setflags(write=False)
    return fp


def make_kernel(rank: int, r: float) -> np.ndarray:
    """Weights ``1/|D_r|`` on lattice offsets with Euclidean norm <= r."""
    fp = _footprint(rank, float(r))
    return fp / fp.sum()


@dataclass(frozen=True, eq=False)
class KernelBank:
    """Precomputed disk/ball footprints for an ordered radius set."""

    rank: int
    radii: tuple

    def __post_init__(self):
        radii = tuple(float(r) for r in self.radii)
        if not radii:
            raise HauslossError("radius set is empty")
        if any(r < 1 for r in radii) or any(b <= a for a, b in zip(radii, radii[1:])):
            raise HauslossError("radii must be strictly increasing and >= 1")
        object.__setattr__(self, "radii", radii)

    def footprint(self, r: float) -> np.ndarray:
        return _footprint(self.rank, float(r))

    def kernel(self, r: float) -> np.ndarray:
        return make_kernel(self.rank, r)

    def counts(self, mask: np.ndarray, r: float):
        """Number of foreground sites inside the radius-r disk around every site, and |D_r|."""
        fp = self.footprint(r)
        counts = fftconvolve(mask.astype(np.float64), fp.astype(np.float64), mode="same")
        return np.rint(counts), int(fp.sum())
