"""Brute-force oracles, random mask generators and the acceptance summary hook."""

from __future__ import annotations

import itertools

import numpy as np
import pytest
from scipy import ndimage

ACCEPTANCE = {}


def record_acceptance(number: int, passed: bool, detail: str) -> None:
    line = f"ACCEPTANCE {number:2d} {'PASS' if passed else 'FAIL'}: {detail}"
    ACCEPTANCE[number] = line
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for n in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[n])


# --- random masks -------------------------------------------------------------

def random_mask(rng, shape, density=None, smooth=None) -> np.ndarray:
    """Nonempty random mask: thresholded (optionally blurred) noise."""
    density = rng.uniform(0.05, 0.6) if density is None else density
    smooth = rng.choice([0.0, 0.0, 1.0, 2.0]) if smooth is None else smooth
    for _ in range(100):
        noise = rng.random(shape)
        if smooth:
            noise = ndimage.gaussian_filter(noise, smooth)
        mask = noise < np.quantile(noise, density)
        if mask.any():
            return mask
    mask = np.zeros(shape, dtype=bool)
    mask[tuple(rng.integers(0, n) for n in shape)] = True
    return mask


def random_shape(rng, rank, lo, hi):
    return tuple(int(rng.integers(lo, hi + 1)) for _ in range(rank))


# --- oracles ------------------------------------------------------------------

def neighbour_offsets(rank):
    out = []
    for axis in range(rank):
        for step in (-1, 1):
            o = [0] * rank
            o[axis] = step
            out.append(tuple(o))
    return out


def oracle_boundary(mask: np.ndarray) -> np.ndarray:
    """Foreground sites with a background or off-grid face neighbour, by explicit scan."""
    mask = np.asarray(mask, dtype=bool)
    out = []
    for site in itertools.product(*[range(n) for n in mask.shape]):
        if not mask[site]:
            continue
        for off in neighbour_offsets(mask.ndim):
            nb = tuple(s + o for s, o in zip(site, off))
            if any(c < 0 or c >= n for c, n in zip(nb, mask.shape)) or not mask[nb]:
                out.append(site)
                break
    return np.array(out, dtype=np.int64).reshape(-1, mask.ndim)


def pairwise(a: np.ndarray, b: np.ndarray, spacing) -> np.ndarray:
    """Full |A| x |B| Euclidean distance matrix in physical units."""
    s = np.asarray(spacing, dtype=np.float64)
    diff = (a[:, None, :] - b[None, :, :]) * s
    return np.sqrt(np.sum(diff * diff, axis=-1))


def oracle_metrics(x: np.ndarray, y: np.ndarray, spacing, k: int, pct: float = 95.0) -> dict:
    d = pairwise(x, y, spacing)
    dxy, dyx = d.min(axis=1), d.min(axis=0)
    pooled = np.sort(np.concatenate([dxy, dyx]))
    rank = int(np.ceil(pct / 100.0 * len(pooled) - 1e-9))
    return {
        "directed_xy": dxy.max(), "directed_yx": dyx.max(),
        "hausdorff": max(dxy.max(), dyx.max()),
        "percentile": pooled[max(rank, 1) - 1],
        "partial": max(np.sort(dxy)[::-1][k - 1], np.sort(dyx)[::-1][k - 1]),
        "modified": max(dxy.mean(), dyx.mean()),
        "asd": (dxy.sum() + dyx.sum()) / (len(dxy) + len(dyx)),
    }


def oracle_edt(shape, sources: np.ndarray, spacing, chunk: int = 2048) -> np.ndarray:
    """Distance from every site to the nearest source, by exhaustive minimum."""
    sites = np.argwhere(np.ones(shape, dtype=bool))
    out = np.empty(len(sites))
    for start in range(0, len(sites), chunk):
        out[start:start + chunk] = pairwise(sites[start:start + chunk], sources, spacing).min(axis=1)
    return out.reshape(shape)


def oracle_erode(mask: np.ndarray, footprint_offsets) -> np.ndarray:
    """Set definition: x survives iff x + o is an in-grid foreground site for every offset o."""
    mask = np.asarray(mask, dtype=bool)
    out = np.zeros_like(mask)
    for site in itertools.product(*[range(n) for n in mask.shape]):
        ok = True
        for off in footprint_offsets:
            nb = tuple(s + o for s, o in zip(site, off))
            if any(c < 0 or c >= n for c, n in zip(nb, mask.shape)) or not mask[nb]:
                ok = False
                break
        out[site] = ok
    return out


def ball_offsets(rank, r):
    h = int(np.floor(r))
    return [o for o in itertools.product(range(-h, h + 1), repeat=rank)
            if sum(c * c for c in o) <= r * r]


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
