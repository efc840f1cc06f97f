"""Deterministic synthetic masks, rough segmentations of them, and soft maps.

Every random draw comes from a counter-based Philox stream keyed by
``(seed, index, purpose)``, so any corpus item can be regenerated on its own.
"""

from __future__ import annotations

import zlib
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import ndimage

from .edt import squared_edt
from .errors import ConfigError, GenerationFailed
from .grid import BinaryMask, GridSpec, ProbMap, as_mask
from .kernels import make_kernel

MAX_RETRIES = 50


def rng_for(seed: int, index: int, purpose: str) -> np.random.Generator:
    key = [int(seed) & 0xFFFFFFFF, int(index) & 0xFFFFFFFF, zlib.crc32(purpose.encode())]
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(key)))


@dataclass(frozen=True)
class Perturbation:
    """Magnitudes of the rough-segmentation model.

    ``dilate_erode_steps`` is an inclusive integer range of signed isotropic
    grow (+) / shrink (-) distances in pixels; ``translate`` an inclusive
    range of per-axis shift magnitudes.  ``outlier_prob`` adds a detached
    false-positive blob with that probability.  Each case draws a severity
    from ``severity`` that scales shift, grow and noise together, so a corpus
    mixes near-misses with gross errors.
    """

    dilate_erode_steps: tuple = (-7, 7)
    translate: tuple = (0, 8)
    boundary_noise_amp: float = 3.0
    noise_scale: float = 3.0
    outlier_prob: float = 0.0
    outlier_radius: tuple = (2.0, 5.0)
    severity: tuple = (0.0, 1.0)

    def __post_init__(self):
        s0, s1 = self.severity
        if not 0 <= s0 <= s1 <= 1:
            raise ConfigError("severity must be an increasing range in [0, 1]")
        lo, hi = self.dilate_erode_steps
        if lo > hi:
            raise ConfigError("dilate_erode_steps must be an increasing range")
        t0, t1 = self.translate
        if t0 < 0 or t1 < t0:
            raise ConfigError("translate must be a nonnegative increasing range")
        if self.boundary_noise_amp < 0 or self.noise_scale <= 0:
            raise ConfigError("noise amplitude must be >= 0 and scale > 0")
        if not 0 <= self.outlier_prob <= 1:
            raise ConfigError("outlier_prob must lie in [0, 1]")

    @property
    def is_zero(self) -> bool:
        return (tuple(self.dilate_erode_steps) == (0, 0) and tuple(self.translate) == (0, 0)
                and self.boundary_noise_amp == 0 and self.outlier_prob == 0)


@dataclass(frozen=True)
class SynthConfig:
    seed: int = 0
    rank: int = 2
    shape: tuple = (64, 64)
    n_blobs: int = 3
    blob_sigma: tuple = (4.0, 8.0)
    fg_fraction: tuple = (0.04, 0.45)
    perturbation: Perturbation = field(default_factory=Perturbation)
    smoothing_radius: float = 1.0

    def __post_init__(self):
        shape = tuple(int(s) for s in self.shape)
        if self.rank not in (2, 3) or len(shape) != self.rank:
            raise ConfigError(f"shape {shape} does not match rank {self.rank}")
        if min(shape) < 16:
            raise ConfigError("every extent must be >= 16")
        if self.n_blobs < 1:
            raise ConfigError("n_blobs must be >= 1")
        if self.smoothing_radius < 0:
            raise ConfigError("smoothing_radius must be >= 0")
        lo, hi = self.fg_fraction
        if not 0 <= lo < hi <= 1:
            raise ConfigError("fg_fraction must be an increasing range in [0, 1]")
        pert = self.perturbation
        if isinstance(pert, dict):
            unknown = set(pert) - set(Perturbation.__dataclass_fields__)
            if unknown:
                raise ConfigError(f"unknown perturbation keys: {sorted(unknown)}")
            pert = Perturbation(**{k: tuple(v) if isinstance(v, list) else v
                                   for k, v in pert.items()})
        object.__setattr__(self, "shape", shape)
        object.__setattr__(self, "perturbation", pert)

    @classmethod
    def from_dict(cls, d: dict) -> "SynthConfig":
        d = dict(d)
        for key in ("shape", "blob_sigma", "fg_fraction"):
            if key in d:
                d[key] = tuple(d[key])
        unknown = set(d) - set(cls.__dataclass_fields__)
        if unknown:
            raise ConfigError(f"unknown synth config keys: {sorted(unknown)}")
        return cls(**d)

    def to_dict(self) -> dict:
        return asdict(self)


def _bump_field(shape, centers, sigmas) -> np.ndarray:
    grids = np.meshgrid(*[np.arange(n, dtype=np.float64) for n in shape], indexing="ij")
    out = np.zeros(shape)
    for c, s in zip(centers, sigmas):
        r2 = sum((g - ci) ** 2 for g, ci in zip(grids, c))
        out += np.exp(-r2 / (2.0 * s * s))
    return out


def generate_truth(cfg: SynthConfig, index: int) -> BinaryMask:
    """A connected blob: thresholded sum of Gaussian bumps, placed away from the grid edge."""
    shape = np.array(cfg.shape, dtype=np.float64)
    lo_s, hi_s = cfg.blob_sigma
    for attempt in range(MAX_RETRIES):
        rng = rng_for(cfg.seed, index, f"truth/{attempt}")
        sigmas = rng.uniform(lo_s, hi_s, cfg.n_blobs)
        margin = 2.0 * hi_s
        centers = [rng.uniform(margin, shape - margin)]
        for s in sigmas[1:]:
            # chain each bump onto an earlier one so the union stays connected
            anchor = centers[rng.integers(len(centers))]
            direction = rng.normal(size=cfg.rank)
            direction /= np.linalg.norm(direction)
            c = anchor + direction * rng.uniform(0.5, 1.5) * s
            centers.append(np.clip(c, margin, shape - margin))
        mask = _bump_field(cfg.shape, centers, sigmas) >= 0.5
        frac = mask.mean()
        if not cfg.fg_fraction[0] <= frac <= cfg.fg_fraction[1]:
            continue
        _, n_comp = ndimage.label(mask)
        if n_comp != 1:
            continue
        return BinaryMask(mask, GridSpec(cfg.shape))
    raise GenerationFailed(f"no valid truth mask for index {index} after {MAX_RETRIES} tries")


def _shift_mask(mask: np.ndarray, offset) -> np.ndarray:
    out = np.zeros_like(mask)
    src, dst = [], []
    for o, n in zip(offset, mask.shape):
        o = int(o)
        src.append(slice(max(0, -o), n - max(0, o)))
        dst.append(slice(max(0, o), n - max(0, -o)))
    out[tuple(dst)] = mask[tuple(src)]
    return out


def signed_distance(mask: np.ndarray) -> np.ndarray:
    """Negative inside, positive outside; magnitude is the distance to the other phase."""
    mask = mask.astype(bool)
    spacing = (1.0,) * mask.ndim
    outside = np.sqrt(squared_edt(mask, spacing)) if mask.any() else np.full(mask.shape, np.inf)
    inside = np.sqrt(squared_edt(~mask, spacing)) if (~mask).any() else np.full(mask.shape, np.inf)
    return np.where(mask, -inside, outside)


def perturb(truth, cfg: SynthConfig, index: int) -> BinaryMask:
    """Rough segmentation: translate, grow or shrink, and ripple the boundary."""
    truth = as_mask(truth)
    pert = cfg.perturbation
    base = truth.data.astype(bool)
    if pert.is_zero:
        return BinaryMask(base, truth.spec)
    for attempt in range(MAX_RETRIES):
        rng = rng_for(cfg.seed, index, f"perturb/{attempt}")
        sev = rng.uniform(*pert.severity)
        t0, t1 = pert.translate
        mag = np.rint(sev * rng.integers(int(t0), int(t1) + 1, size=truth.spec.rank))
        offset = mag * rng.choice([-1, 1], size=truth.spec.rank)
        lo, hi = pert.dilate_erode_steps
        grow = round(sev * int(rng.integers(int(lo), int(hi) + 1)))
        sd = signed_distance(_shift_mask(base, offset)) - grow
        if pert.boundary_noise_amp > 0:
            noise = ndimage.gaussian_filter(rng.normal(size=truth.shape), pert.noise_scale,
                                            mode="wrap")
            noise *= sev * pert.boundary_noise_amp / max(np.abs(noise).max(), 1e-12)
            sd = sd - noise
        out = sd < 0
        if pert.outlier_prob > 0 and rng.random() < pert.outlier_prob:
            out |= _outlier(base | out, pert, rng)
        if out.any() and (out != base).any():
            return BinaryMask(out, truth.spec)
    raise GenerationFailed(f"perturbation of index {index} kept producing empty or unchanged masks")


def _outlier(occupied: np.ndarray, pert: Perturbation, rng) -> np.ndarray:
    radius = rng.uniform(*pert.outlier_radius)
    free = np.sqrt(squared_edt(occupied, (1.0,) * occupied.ndim)) > radius + 3
    sites = np.argwhere(free)
    if len(sites) == 0:
        return np.zeros_like(occupied)
    center = sites[rng.integers(len(sites))]
    seeds = np.zeros_like(occupied)
    seeds[tuple(center)] = True
    return np.sqrt(squared_edt(seeds, (1.0,) * occupied.ndim)) <= radius


def soften(mask, radius: float) -> ProbMap:
    """Blur a mask with a normalized disk kernel (zero padded)."""
    mask = as_mask(mask)
    if radius < 0:
        raise ConfigError("smoothing radius must be >= 0")
    data = mask.data.astype(np.float64)
    if radius == 0:
        return ProbMap(data, mask.spec)
    out = ndimage.correlate(data, make_kernel(mask.spec.rank, radius), mode="constant")
    return ProbMap(np.clip(out, 0.0, 1.0), mask.spec)


def corpus(cfg: SynthConfig, n: int, start: int = 0):
    """``n`` deterministic (truth, perturbed) pairs."""
    pairs = []
    for i in range(start, start + n):
        t = generate_truth(cfg, i)
        pairs.append((t, perturb(t, cfg, i)))
    return pairs


def soft_pair(cfg: SynthConfig, index: int, radius: float = 2.0):
    """Softened (truth, rough segmentation) maps for loss and gradient tests."""
    truth = generate_truth(cfg, index)
    return soften(truth, radius), soften(perturb(truth, cfg, index), radius)
