"""PNG figures for the correlation and optimization reports (matplotlib, Agg backend)."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

_SAVE = {"dpi": 110, "metadata": {"Software": None}}


def correlation_scatter(rows, fits: dict, columns, path) -> None:
    """One panel per column: value versus exact HD with its least-squares line."""
    hd = np.array([r["exact_hd"] for r in rows])
    fig, axes = plt.subplots(1, len(columns), figsize=(3.2 * len(columns), 3.2),
                             squeeze=False)
    line_x = np.array([hd.min(), hd.max()])
    for ax, col in zip(axes[0], columns):
        y = np.array([r[col] for r in rows])
        f = fits[col]
        ax.scatter(hd, y, s=8, alpha=0.6)
        if np.isfinite(f["slope"]):
            ax.plot(line_x, f["slope"] * line_x + f["intercept"], color="k", lw=1)
        ax.set_title(f"{col}  r={f['pearson_r']:.3f}", fontsize=9)
        ax.set_xlabel("exact HD")
    fig.tight_layout()
    fig.savefig(path, **_SAVE)
    plt.close(fig)


def _finite_mean(values) -> float:
    """Mean over finite entries; NaN (a gap in the line) when there are none."""
    finite = [v for v in values if np.isfinite(v)]
    return float(np.mean(finite)) if finite else float("nan")


def trajectories(rows, path) -> None:
    """Mean exact HD and Dice per iteration for each loss family."""
    families = sorted({r["family"] for r in rows}, key=lambda f: (f != "dsc", f))
    fig, (ax_hd, ax_dsc) = plt.subplots(1, 2, figsize=(8, 3.2))
    for fam in families:
        sub = [r for r in rows if r["family"] == fam]
        iters = sorted({r["iteration"] for r in sub})
        hd = [_finite_mean([r["hd"] for r in sub if r["iteration"] == i]) for i in iters]
        dsc = [np.mean([r["dsc"] for r in sub if r["iteration"] == i]) for i in iters]
        ax_hd.plot(iters, hd, label=fam)
        ax_dsc.plot(iters, dsc, label=fam)
    ax_hd.set_xlabel("iteration")
    ax_hd.set_ylabel("mean exact HD")
    ax_dsc.set_xlabel("iteration")
    ax_dsc.set_ylabel("mean Dice")
    ax_dsc.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, **_SAVE)
    plt.close(fig)
