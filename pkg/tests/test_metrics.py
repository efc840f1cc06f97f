import numpy as np
import pytest

from conftest import oracle_metrics, random_mask, random_shape
from hausloss.errors import BothEmpty, EmptyBoundary, HauslossError, KOutOfRange, ShapeMismatch
from hausloss.grid import BoundarySet, GridSpec, boundary
from hausloss.metrics import (asd, directed_hd, directed_partial_hd, dsc, evaluate, exact_hd,
                              hausdorff, modified_hd, nearest_rank, partial_hd, percentile_hd)

SPEC = GridSpec((10, 10))


def pts(*points, spec=SPEC):
    return BoundarySet.from_points(points, spec)


def test_three_four_five():
    assert directed_hd(pts((0, 0)), pts((3, 4))) == 5.0
    assert modified_hd(pts((0, 0)), pts((3, 4))) == 5.0


def test_identical_sets_are_zero():
    x = pts((1, 1), (2, 5), (7, 3))
    for fn in (directed_hd, hausdorff, modified_hd, asd):
        assert fn(x, x) == 0.0
    for pct in (1, 50, 95, 100):
        assert percentile_hd(x, x, pct) == 0.0


def test_asymmetry_forces_max():
    x, y = pts((0, 0)), pts((0, 0), (0, 9))
    assert directed_hd(x, y) == 0.0
    assert directed_hd(y, x) == 9.0
    assert hausdorff(x, y) == 9.0


def test_partial_second_largest():
    x = pts((0, 0), (0, 1), (0, 9))
    y = pts((0, 0), (0, 1))
    assert directed_partial_hd(x, y, 1) == 8.0
    assert directed_partial_hd(x, y, 2) == 0.0


def test_partial_k1_is_directed_max():
    x, y = pts((0, 0), (5, 5)), pts((1, 1))
    assert partial_hd(x, y, 1) == hausdorff(x, y)


def test_partial_k_out_of_range():
    with pytest.raises(KOutOfRange):
        partial_hd(pts((0, 0)), pts((1, 1)), 2)
    with pytest.raises(KOutOfRange):
        partial_hd(pts((0, 0)), pts((1, 1)), 0)


def test_asd_singletons():
    assert asd(pts((0, 0)), pts((0, 2))) == 2.0


def test_percentile_100_is_hausdorff():
    x, y = pts((0, 0), (4, 4), (9, 1)), pts((2, 2))
    assert percentile_hd(x, y, 100) == hausdorff(x, y)


def test_nearest_rank():
    v = np.arange(1, 21, dtype=float)
    assert nearest_rank(v, 95) == 19.0
    assert nearest_rank(v, 100) == 20.0
    assert nearest_rank(v, 1) == 1.0
    with pytest.raises(HauslossError):
        nearest_rank(v, 0)


def test_empty_and_mismatched_sets():
    empty = BoundarySet(np.zeros((0, 2)), SPEC)
    with pytest.raises(EmptyBoundary):
        hausdorff(empty, pts((1, 1)))
    other = BoundarySet.from_points([(0, 0)], GridSpec((10, 11)))
    with pytest.raises(ShapeMismatch):
        hausdorff(pts((0, 0)), other)


class TestDsc:
    def test_identical(self):
        m = np.zeros((4, 4))
        m[1, 1:3] = 1
        assert dsc(m, m) == 1.0

    def test_disjoint(self):
        a, b = np.zeros((3, 3)), np.zeros((3, 3))
        a[0, 0], b[2, 2] = 1, 1
        assert dsc(a, b) == 0.0

    def test_half_overlap(self):
        a, b = np.zeros((1, 4)), np.zeros((1, 4))
        a[0, :2], b[0, 1:3] = 1, 1
        assert dsc(a, b) == 0.5

    def test_both_empty(self):
        with pytest.raises(BothEmpty):
            dsc(np.zeros((2, 2)), np.zeros((2, 2)))


@pytest.mark.parametrize("rank,hi", [(2, 24), (3, 10)])
def test_all_metrics_match_pairwise_oracle(rng, rank, hi):
    for _ in range(15):
        shape = random_shape(rng, rank, 2, hi)
        spacing = tuple(rng.uniform(0.5, 2.0, size=rank))
        spec = GridSpec(shape, spacing)
        a, b = random_mask(rng, shape), random_mask(rng, shape)
        x, y = boundary(a, spacing), boundary(b, spacing)
        k = int(rng.integers(1, min(len(x), len(y)) + 1))
        ref = oracle_metrics(x.coords, y.coords, spacing, k)
        assert directed_hd(x, y) == pytest.approx(ref["directed_xy"], abs=1e-9)
        assert directed_hd(y, x) == pytest.approx(ref["directed_yx"], abs=1e-9)
        assert hausdorff(x, y) == pytest.approx(ref["hausdorff"], abs=1e-9)
        assert percentile_hd(x, y, 95) == pytest.approx(ref["percentile"], abs=1e-9)
        assert partial_hd(x, y, k) == pytest.approx(ref["partial"], abs=1e-9)
        assert modified_hd(x, y) == pytest.approx(ref["modified"], abs=1e-9)
        assert asd(x, y) == pytest.approx(ref["asd"], abs=1e-9)
        assert exact_hd(a, b, spacing) == hausdorff(x, y)
        assert spec.spacing == x.spec.spacing


def test_evaluate_report(rng):
    a, b = random_mask(rng, (20, 20)), random_mask(rng, (20, 20))
    rep = evaluate(a, b, k=3)
    x, y = boundary(a), boundary(b)
    assert rep.hd == hausdorff(x, y)
    assert rep.hd_directed_pq == directed_hd(x, y)
    assert rep.hd_directed_qp == directed_hd(y, x)
    assert rep.hd95 == percentile_hd(x, y, 95)
    assert rep.hd90 == percentile_hd(x, y, 90)
    assert rep.partial_hd == partial_hd(x, y, 3)
    assert rep.modified_hd == modified_hd(x, y)
    assert rep.asd == asd(x, y)
    assert rep.dsc == dsc(a, b)
    assert set(rep.as_dict()) >= {"hd", "hd95", "dsc"}


def test_evaluate_clips_k():
    a, b = np.zeros((5, 5)), np.zeros((5, 5))
    a[1, 1], b[3, 3] = 1, 1
    assert evaluate(a, b, k=10).partial_k == 1
