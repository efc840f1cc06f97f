import math

import numpy as np
import pytest

from hausloss.correlate import PAIR_FIELDS, CorrelateConfig, fit, pair_row, pair_rows, summarize
from hausloss.errors import ConfigError
from hausloss.grid import symmetric_difference
from hausloss.hd_er import ball_erosion_radius
from hausloss.metrics import exact_hd
from hausloss.synth import SynthConfig, generate_truth, perturb


def test_fit_exact_line():
    x = np.arange(10.0)
    f = fit(x, 3 * x + 2)
    assert f["pearson_r"] == pytest.approx(1.0)
    assert f["slope"] == pytest.approx(3.0) and f["intercept"] == pytest.approx(2.0)


def test_fit_constant_is_nan():
    assert math.isnan(fit([1, 2, 3], [5, 5, 5])["pearson_r"])


def test_pair_row_fields_and_values():
    cfg = CorrelateConfig(SynthConfig(seed=1), n_pairs=3, cv_radii=range(1, 20))
    row = pair_row(cfg, 2)
    assert tuple(row) == PAIR_FIELDS
    t = generate_truth(cfg.synth, 2)
    q = perturb(t, cfg.synth, 2)
    assert row["exact_hd"] == exact_hd(t, q)
    assert row["hd_er"] == 2 * ball_erosion_radius(symmetric_difference(t, q))[0]


def test_rows_and_summary():
    cfg = CorrelateConfig(SynthConfig(seed=2), n_pairs=12)
    rows = pair_rows(cfg)
    assert [r["index"] for r in rows] == list(range(12))
    s = summarize(rows, cfg.er_slack)
    assert s["n_pairs"] == 12
    assert set(s["fits"]) == {"hd_dt", "hd_cv", "hd_er", "loss_dt", "loss_cv", "loss_er"}
    hd = np.array([r["exact_hd"] for r in rows])
    er = np.array([r["hd_er"] for r in rows])
    assert s["hd_er_within_slack"] == np.mean(er <= hd + 2.0)


def test_config_round_trip_and_validation():
    cfg = CorrelateConfig(n_pairs=10)
    assert CorrelateConfig.from_dict(cfg.to_dict()).to_dict() == cfg.to_dict()
    with pytest.raises(ConfigError):
        CorrelateConfig.from_dict({"n_pairs": 2})
    with pytest.raises(ConfigError):
        CorrelateConfig.from_dict({"bogus": 1})
