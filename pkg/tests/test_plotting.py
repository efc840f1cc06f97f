import numpy as np

from hausloss.correlate import fit
from hausloss.plotting import correlation_scatter, trajectories

PNG = b"\x89PNG\r\n\x1a\n"


def test_correlation_scatter(tmp_path):
    rows = [{"exact_hd": float(i), "hd_dt": 2.0 * i, "loss_cv": float(i % 3)} for i in range(8)]
    fits = {c: fit([r["exact_hd"] for r in rows], [r[c] for r in rows]) for c in ("hd_dt", "loss_cv")}
    correlation_scatter(rows, fits, ("hd_dt", "loss_cv"), tmp_path / "s.png")
    assert (tmp_path / "s.png").read_bytes()[:8] == PNG


def test_constant_column_has_no_line(tmp_path):
    rows = [{"exact_hd": float(i), "hd_er": 4.0} for i in range(4)]
    fits = {"hd_er": fit([r["exact_hd"] for r in rows], [r["hd_er"] for r in rows])}
    correlation_scatter(rows, fits, ("hd_er",), tmp_path / "c.png")
    assert (tmp_path / "c.png").exists()


def test_trajectories_handle_infinite_hd(tmp_path):
    rows = [{"family": f, "iteration": i, "hd": np.inf if i == 0 else 3.0 - i, "dsc": 0.5 + 0.1 * i}
            for f in ("dsc", "dt") for i in range(3)]
    trajectories(rows, tmp_path / "t.png")
    assert (tmp_path / "t.png").read_bytes()[:8] == PNG


def test_png_is_reproducible(tmp_path):
    rows = [{"exact_hd": float(i), "hd_dt": 1.5 * i} for i in range(5)]
    fits = {"hd_dt": fit([r["exact_hd"] for r in rows], [r["hd_dt"] for r in rows])}
    correlation_scatter(rows, fits, ("hd_dt",), tmp_path / "a.png")
    correlation_scatter(rows, fits, ("hd_dt",), tmp_path / "b.png")
    assert (tmp_path / "a.png").read_bytes() == (tmp_path / "b.png").read_bytes()
