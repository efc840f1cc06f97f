"""Compare the HD estimators and losses against the exact HD over a synthetic corpus."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import ConfigError
from .hd_cv import hd_cv_estimate, loss_cv
from .hd_dt import hd_dt_estimate, loss_dt
from .hd_er import ball_erosion_radius, hd_er_estimate, loss_er
from .grid import symmetric_difference
from .metrics import evaluate
from .synth import SynthConfig, generate_truth, perturb

ESTIMATORS = ("hd_dt", "hd_cv", "hd_er")
LOSSES = ("loss_dt", "loss_cv", "loss_er")
PAIR_FIELDS = ("index", "exact_hd", "hd95", "dsc") + ESTIMATORS + ("hd_er_capped",) + LOSSES


@dataclass(frozen=True)
class CorrelateConfig:
    """Corpus and estimator settings; ``cv_radii`` defaults to 1, 2, ..., 32."""

    synth: SynthConfig = field(default_factory=SynthConfig)
    n_pairs: int = 200
    cv_radii: tuple = tuple(range(1, 33))
    er_slack: float = 2.0

    def __post_init__(self):
        synth = self.synth
        if isinstance(synth, dict):
            synth = SynthConfig.from_dict(synth)
        object.__setattr__(self, "synth", synth)
        object.__setattr__(self, "cv_radii", tuple(float(r) for r in self.cv_radii))
        if self.n_pairs < 3:
            raise ConfigError("n_pairs must be >= 3 for a correlation")

    @classmethod
    def from_dict(cls, d: dict) -> "CorrelateConfig":
        unknown = set(d) - set(cls.__dataclass_fields__)
        if unknown:
            raise ConfigError(f"unknown correlate config keys: {sorted(unknown)}")
        return cls(**d)

    def to_dict(self) -> dict:
        return asdict(self)


def pair_row(cfg: CorrelateConfig, index: int) -> dict:
    """Exact metrics, estimators and (binary-input) losses for one corpus pair."""
    truth = generate_truth(cfg.synth, index)
    pred = perturb(truth, cfg.synth, index)
    report = evaluate(truth, pred)
    p = truth.data.astype(np.float64)
    q = pred.data.astype(np.float64)
    _, capped = ball_erosion_radius(symmetric_difference(truth, pred))
    return {
        "index": index,
        "exact_hd": report.hd,
        "hd95": report.hd95,
        "dsc": report.dsc,
        "hd_dt": hd_dt_estimate(truth, pred),
        "hd_cv": hd_cv_estimate(truth, pred, radii=cfg.cv_radii),
        "hd_er": hd_er_estimate(truth, pred),
        "hd_er_capped": int(capped),
        "loss_dt": loss_dt(p, q).value,
        "loss_cv": loss_cv(p, q).value,
        "loss_er": loss_er(p, q).value,
    }


def _job(args):
    cfg, index = args
    return pair_row(cfg, index)


def pair_rows(cfg: CorrelateConfig, executor=None) -> list:
    mapper = executor.map if executor is not None else map
    return list(mapper(_job, [(cfg, i) for i in range(cfg.n_pairs)]))


def fit(x, y) -> dict:
    """Pearson r and least-squares line ``y = slope * x + intercept``."""
    x, y = np.asarray(x, dtype=np.float64), np.asarray(y, dtype=np.float64)
    if np.ptp(x) == 0 or np.ptp(y) == 0:
        return {"pearson_r": float("nan"), "slope": float("nan"), "intercept": float("nan")}
    slope, intercept = np.polyfit(x, y, 1)
    return {"pearson_r": float(np.corrcoef(x, y)[0, 1]), "slope": float(slope),
            "intercept": float(intercept)}


def summarize(rows, er_slack: float = 2.0) -> dict:
    hd = np.array([r["exact_hd"] for r in rows])
    out = {"n_pairs": len(rows), "exact_hd_min": float(hd.min()), "exact_hd_max": float(hd.max()),
           "fits": {}}
    for name in ESTIMATORS + LOSSES:
        out["fits"][name] = fit(hd, [r[name] for r in rows])
    er = np.array([r["hd_er"] for r in rows])
    out["hd_er_within_slack"] = float(np.mean(er <= hd + er_slack))
    out["hd_er_slack"] = er_slack
    out["hd_er_capped"] = int(sum(r["hd_er_capped"] for r in rows))
    return out
