"""Dense 2D/3D scalar fields, binary masks, probability maps and boundaries.

Masks and maps are thin immutable wrappers around numpy arrays that carry
the physical voxel spacing.  Every function in the package also accepts plain
arrays; :func:`as_mask` and :func:`as_prob` do the coercion.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence, Union

import numpy as np

from .errors import EmptyMask, HauslossError, ShapeMismatch

ArrayLike = Union[np.ndarray, Sequence]


@dataclass(frozen=True)
class GridSpec:
    """Lattice extents plus per-axis physical spacing (mm per site)."""

    shape: tuple
    spacing: tuple = None

    def __post_init__(self):
        shape = tuple(int(s) for s in self.shape)
        if len(shape) not in (2, 3):
            raise HauslossError(f"rank must be 2 or 3, got {len(shape)}")
        if any(s < 1 for s in shape):
            raise HauslossError(f"every extent must be >= 1, got {shape}")
        spacing = self.spacing
        if spacing is None:
            spacing = (1.0,) * len(shape)
        elif np.isscalar(spacing):
            spacing = (float(spacing),) * len(shape)
        spacing = tuple(float(s) for s in spacing)
        if len(spacing) != len(shape):
            raise HauslossError(
                f"spacing {spacing} does not match rank {len(shape)}")
        if not all(np.isfinite(s) and s > 0 for s in spacing):
            raise HauslossError(f"spacing must be positive, got {spacing}")
        object.__setattr__(self, "shape", shape)
        object.__setattr__(self, "spacing", spacing)

    @property
    def rank(self) -> int:
        return len(self.shape)

    @property
    def size(self) -> int:
        return int(np.prod(self.shape))

    def scaled(self, factor: float) -> "GridSpec":
        return GridSpec(self.shape, tuple(s * factor for s in self.spacing))


def _readonly(arr: np.ndarray) -> np.ndarray:
    arr = np.array(arr, copy=True, order="C")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class Grid:
    """A dense scalar field on a :class:`GridSpec` lattice."""

    data: np.ndarray
    spec: GridSpec = None

    def __post_init__(self):
        data = np.asarray(self.data)
        spec = self.spec if self.spec is not None else GridSpec(data.shape)
        if tuple(data.shape) != spec.shape:
            raise ShapeMismatch(
                f"data shape {data.shape} does not match spec {spec.shape}")
        self._validate(data)
        object.__setattr__(self, "data", _readonly(self._cast(data)))
        object.__setattr__(self, "spec", spec)

    def _cast(self, data):
        return data.astype(np.float64, copy=False)

    def _validate(self, data):
        if not np.all(np.isfinite(data)):
            raise HauslossError("grid values must be finite")

    @property
    def shape(self):
        return self.spec.shape

    @property
    def spacing(self):
        return self.spec.spacing

    def __array__(self, dtype=None, copy=None):
        return self.data if dtype is None else self.data.astype(dtype)


class BinaryMask(Grid):
    """Grid whose values are exactly 0 or 1 (stored as uint8)."""

    def _cast(self, data):
        return data.astype(np.uint8)

    def _validate(self, data):
        if data.dtype == bool:
            return
        if not np.all((data == 0) | (data == 1)):
            raise HauslossError("binary mask values must be 0 or 1")

    def any(self) -> bool:
        return bool(self.data.any())


class ProbMap(Grid):
    """Grid with values in [0, 1]."""

    def _validate(self, data):
        super()._validate(data)
        if data.size and (data.min() < 0 or data.max() > 1):
            raise HauslossError("probability values must lie in [0, 1]")


def _spec_for(x, spacing) -> GridSpec:
    if isinstance(x, Grid):
        if spacing is not None and GridSpec(x.shape, spacing) != x.spec:
            raise ShapeMismatch("explicit spacing disagrees with grid spec")
        return x.spec
    return GridSpec(np.shape(x), spacing)


def as_mask(x, spacing=None) -> BinaryMask:
    if isinstance(x, BinaryMask) and spacing is None:
        return x
    return BinaryMask(np.asarray(x), _spec_for(x, spacing))


def as_prob(x, spacing=None) -> ProbMap:
    if isinstance(x, ProbMap) and spacing is None:
        return x
    return ProbMap(np.asarray(x, dtype=np.float64), _spec_for(x, spacing))


def check_same_spec(a: Grid, b: Grid) -> GridSpec:
    if a.spec != b.spec:
        raise ShapeMismatch(f"grid specs differ: {a.spec} vs {b.spec}")
    return a.spec


def threshold(prob, level: float = 0.5) -> BinaryMask:
    """Binarize a probability map; values equal to ``level`` map to 1."""
    if not 0 < level < 1:
        raise HauslossError(f"threshold level must be in (0, 1), got {level}")
    prob = as_prob(prob)
    return BinaryMask(prob.data >= level, prob.spec)


def face_offsets(rank: int) -> list:
    """Unit offsets of the 4- (2D) or 6- (3D) neighbourhood."""
    offs = []
    for axis in range(rank):
        for step in (-1, 1):
            o = [0] * rank
            o[axis] = step
            offs.append(tuple(o))
    return offs


def shift(arr: np.ndarray, offset: Sequence[int], fill=0) -> np.ndarray:
    """``out[z] = arr[z + offset]``, with ``fill`` where ``z + offset`` leaves the grid."""
    out = np.full_like(arr, fill)
    src, dst = [], []
    for o, n in zip(offset, arr.shape):
        if abs(o) >= n:
            return out
        if o >= 0:
            src.append(slice(o, n))
            dst.append(slice(0, n - o))
        else:
            src.append(slice(0, n + o))
            dst.append(slice(-o, n))
    out[tuple(dst)] = arr[tuple(src)]
    return out


def interior(mask) -> np.ndarray:
    """Foreground sites whose face neighbours are all foreground (inside the grid)."""
    fg = as_mask(mask).data.astype(bool)
    out = fg.copy()
    for off in face_offsets(fg.ndim):
        out &= shift(fg, off, fill=False)
    return out


@dataclass(frozen=True)
class BoundarySet:
    """Integer lattice coordinates of boundary (or arbitrary) sites.

    Coordinates are kept in row-major order, one row per site.
    """

    coords: np.ndarray
    spec: GridSpec = field(compare=False)

    def __post_init__(self):
        coords = np.asarray(self.coords, dtype=np.int64)
        if coords.size == 0:
            coords = coords.reshape(0, self.spec.rank)
        if coords.ndim != 2 or coords.shape[1] != self.spec.rank:
            raise HauslossError(
                f"coordinates must have shape (n, {self.spec.rank})")
        if len(coords):
            if (coords < 0).any() or (coords >= np.array(self.spec.shape)).any():
                raise HauslossError("boundary coordinate outside the grid")
            flat = np.ravel_multi_index(coords.T, self.spec.shape)
            order = np.argsort(flat, kind="stable")
            if len(np.unique(flat)) != len(flat):
                raise HauslossError("duplicate boundary coordinates")
            coords = coords[order]
        object.__setattr__(self, "coords", _readonly(coords))

    @classmethod
    def from_points(cls, points: Iterable, spec: GridSpec) -> "BoundarySet":
        return cls(np.array(list(points), dtype=np.int64), spec)

    def __len__(self):
        return len(self.coords)

    def __eq__(self, other):
        if not isinstance(other, BoundarySet):
            return NotImplemented
        return (self.spec.shape == other.spec.shape
                and np.array_equal(self.coords, other.coords))

    def __hash__(self):
        return hash((self.spec.shape, self.coords.tobytes()))

    def to_mask(self) -> BinaryMask:
        out = np.zeros(self.spec.shape, dtype=np.uint8)
        if len(self):
            out[tuple(self.coords.T)] = 1
        return BinaryMask(out, self.spec)

    def physical(self) -> np.ndarray:
        """Coordinates scaled by spacing (mm)."""
        return self.coords * np.asarray(self.spec.spacing)


def boundary(mask, spacing=None) -> BoundarySet:
    """Foreground sites with a background face-neighbour or touching the grid edge."""
    mask = as_mask(mask, spacing)
    if not mask.any():
        raise EmptyMask("mask has no foreground site")
    fg = mask.data.astype(bool)
    edge = fg & ~interior(mask)
    return BoundarySet(np.argwhere(edge), mask.spec)


def symmetric_difference(a, b) -> BinaryMask:
    a, b = as_mask(a), as_mask(b)
    spec = check_same_spec(a, b)
    return BinaryMask(a.data ^ b.data, spec)


def complement(a) -> BinaryMask:
    a = as_mask(a)
    return BinaryMask(1 - a.data, a.spec)


def difference(a, b) -> BinaryMask:
    """Set difference ``a \\ b``."""
    a, b = as_mask(a), as_mask(b)
    spec = check_same_spec(a, b)
    return BinaryMask(a.data & (1 - b.data), spec)


def require_foreground(mask: BinaryMask, what: str = "mask") -> None:
    if not mask.any():
        raise EmptyMask(f"{what} has no foreground site")


def spacing_unit(spec: GridSpec) -> float:
    """Smallest per-axis spacing; the lattice resolution used by the coarse estimators."""
    return min(spec.spacing)


def coerce_pair(p, q, spacing: Optional[Sequence[float]] = None, kind=as_prob):
    p, q = kind(p, spacing), kind(q, spacing)
    check_same_spec(p, q)
    return p, q
