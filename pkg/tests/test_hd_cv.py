import numpy as np
import pytest
from scipy import ndimage

from conftest import oracle_edt, random_mask
from hausloss.errors import HauslossError, ShapeMismatch
from hausloss.hd_cv import (CvLossParams, KernelBank, hd_cv_estimate, loss_cv, make_kernel,
                            relaxed_difference)
from hausloss.kernels import soft_threshold
from hausloss.losses import gradient_check
from hausloss.synth import SynthConfig, soft_pair


class TestKernels:
    @pytest.mark.parametrize("rank,r,count", [(2, 1, 5), (2, 2, 13), (3, 1, 7), (2, 0, 1)])
    def test_site_counts(self, rank, r, count):
        k = make_kernel(rank, r)
        assert (k > 0).sum() == count
        assert np.allclose(k[k > 0], 1.0 / count, rtol=0, atol=1e-15)

    @pytest.mark.parametrize("rank,r", [(2, 1), (2, 2.5), (2, 7), (3, 3), (3, 1.5)])
    def test_normalized_and_symmetric(self, rank, r):
        k = make_kernel(rank, r)
        assert abs(k.sum() - 1.0) <= 1e-12
        assert np.array_equal(k, k[(slice(None, None, -1),) * rank])

    def test_unit_disk_is_cross(self):
        k = make_kernel(2, 1)
        assert np.array_equal(k > 0, [[0, 1, 0], [1, 1, 1], [0, 1, 0]])

    def test_footprint_matches_norm(self):
        fp = KernelBank(2, (3.0,)).footprint(3.0)
        ii, jj = np.meshgrid(np.arange(-3, 4), np.arange(-3, 4), indexing="ij")
        assert np.array_equal(fp, ii ** 2 + jj ** 2 <= 9)

    def test_bank_validation(self):
        for radii in ((), (2, 1), (0.5, 2), (1, 1)):
            with pytest.raises(HauslossError):
                KernelBank(2, radii)
        with pytest.raises(HauslossError):
            make_kernel(4, 1)

    def test_counts_match_correlation(self, rng):
        m = random_mask(rng, (15, 17))
        bank = KernelBank(2, (1, 2, 4))
        for r in bank.radii:
            counts, n = bank.counts(m, r)
            fp = bank.footprint(r).astype(float)
            assert n == fp.sum()
            assert np.array_equal(counts, ndimage.correlate(m.astype(float), fp, mode="constant"))

    def test_soft_threshold(self):
        assert np.array_equal(soft_threshold(np.array([0.0, 0.5, 0.75, 1.0])), [0, 0, 0.5, 1])
        with pytest.raises(HauslossError):
            soft_threshold(1.0, 0.0)


def _fp_example():
    p = np.zeros((40, 40), dtype=bool)
    p[10:21, 10:21] = True
    q = p.copy()
    q[25, 24] = True  # nearest p site is the corner (20, 20): distance sqrt(41) ~ 6.40
    return p, q


def oracle_cv(p, q, radii):
    """Largest radius below the deepest site-to-set distance of the four disk tests."""
    pad = max(radii) + 2
    pp, qp = np.pad(p, pad), np.pad(q, pad)
    inner = np.zeros(pp.shape, dtype=bool)
    inner[(slice(pad, -pad),) * p.ndim] = True
    fp, fn = (qp & ~pp)[inner], (pp & ~qp)[inner]
    if not (fp.any() or fn.any()):
        return 0.0
    unit = (1.0,) * p.ndim

    def dist_to(mask):
        src = np.argwhere(mask)
        if len(src) == 0:
            return np.full(mask.shape, np.inf)[inner]
        return oracle_edt(mask.shape, src, unit)[inner]

    depth = max(dist_to(pp)[fp].max(initial=0), dist_to(~pp)[fn].max(initial=0),
                dist_to(qp)[fn].max(initial=0), dist_to(~qp)[fp].max(initial=0))
    best = 0.0
    for r in sorted(radii):
        if not r < depth:
            break
        best = r
    return max(best, 1.0)


class TestEstimator:
    def test_identical_is_zero(self, rng):
        m = random_mask(rng, (10, 10))
        assert hd_cv_estimate(m, m, radii=range(1, 6)) == 0.0

    def test_lone_false_positive(self):
        p, q = _fp_example()
        assert hd_cv_estimate(p, q, radii=range(1, 11)) == 6.0

    def test_step_three_radii(self):
        p, q = _fp_example()
        assert hd_cv_estimate(p, q, radii=(3, 6, 9)) == 6.0
        assert hd_cv_estimate(p, q, radii=(4, 8)) == 4.0

    def test_matches_distance_oracle(self, rng):
        radii = tuple(range(1, 9))
        for _ in range(8):
            a = random_mask(rng, (20, 20), smooth=2.0)
            b = random_mask(rng, (20, 20), smooth=2.0)
            assert hd_cv_estimate(a, b, radii=radii) == oracle_cv(a, b, radii)

    def test_symmetric_and_nested_radii(self, rng):
        for _ in range(5):
            a = random_mask(rng, (24, 24), smooth=2.0)
            b = random_mask(rng, (24, 24), smooth=2.0)
            small, large = (2, 5), (1, 2, 3, 5, 8)
            assert hd_cv_estimate(a, b, small) == hd_cv_estimate(b, a, small)
            assert hd_cv_estimate(a, b, large) >= hd_cv_estimate(a, b, small)

    def test_spacing_unit(self):
        p, q = _fp_example()
        assert hd_cv_estimate(p, q, radii=range(1, 11), spacing=(0.5, 0.5)) == 3.0

    def test_shape_mismatch(self):
        with pytest.raises(ShapeMismatch):
            hd_cv_estimate(np.ones((4, 4)), np.ones((4, 5)))


class TestRelaxedDifference:
    def test_identical(self, rng):
        p = rng.random((5, 5))
        a, b = relaxed_difference(p, p)
        assert not a.data.any() and not b.data.any()

    def test_false_negative_site(self):
        a, b = relaxed_difference(np.ones((1, 1)), np.zeros((1, 1)))
        assert a.data[0, 0] == 0 and b.data[0, 0] == 1

    def test_binary_is_indicator(self, rng):
        p, q = random_mask(rng, (9, 9)), random_mask(rng, (9, 9))
        qp, pq = relaxed_difference(p.astype(float), q.astype(float))
        assert np.array_equal(qp.data, (q & ~p).astype(float))
        assert np.array_equal(pq.data, (p & ~q).astype(float))


def oracle_loss_cv(p, q, radii, alpha=2.0, level=0.5):
    pb, qb = (p >= 0.5).astype(float), (q >= 0.5).astype(float)
    sq = (p - q) ** 2
    f_qp, f_pq = sq * q, sq * p
    total = 0.0
    for r in radii:
        k = make_kernel(2, r)
        pad = k.shape[0] // 2

        def conv(x, outside):
            return ndimage.correlate(np.pad(x, pad, constant_values=outside), k,
                                     mode="constant")[pad:-pad, pad:-pad]

        fs = lambda x: np.maximum(x - level, 0) / (1 - level)  # noqa: E731
        total += r ** alpha * np.sum(fs(conv(1 - pb, 1.0)) * f_qp + fs(conv(pb, 0.0)) * f_pq
                                     + fs(conv(1 - qb, 1.0)) * f_pq + fs(conv(qb, 0.0)) * f_qp)
    return total / p.size


class TestLoss:
    def test_identical_binary_is_zero(self, rng):
        m = random_mask(rng, (12, 12)).astype(float)
        ev = loss_cv(m, m)
        assert ev.value == 0.0 and not ev.grad.any()

    def test_matches_direct_formula(self):
        p, q = soft_pair(SynthConfig(seed=5), 1)
        radii = (1.0, 3.0, 4.5)
        expected = oracle_loss_cv(p.data, q.data, radii, alpha=1.5)
        got = loss_cv(p, q, CvLossParams(radii=radii, alpha=1.5)).value
        assert got == pytest.approx(expected, rel=1e-12)

    def test_nondecreasing_as_false_positive_moves_away(self):
        p = np.zeros((40, 40))
        p[15:25, 5:15] = 1
        values = []
        for col in range(16, 36):
            q = p.copy()
            q[20, col] = 1
            values.append(loss_cv(p, q).value)
        assert all(b >= a for a, b in zip(values, values[1:]))
        assert values[-1] > values[0]

    def test_gradient_matches_finite_differences(self):
        for i in range(3):
            p, q = soft_pair(SynthConfig(seed=6), i)
            assert gradient_check(loss_cv, p, q, sample_sites=30, seed=i) <= 1e-4

    def test_default_radii_by_rank(self):
        assert CvLossParams().resolved_radii(2) == (3.0, 6.0, 9.0, 12.0, 15.0, 18.0)
        assert CvLossParams().resolved_radii(3) == (3.0, 6.0, 9.0)

    def test_param_validation(self):
        with pytest.raises(HauslossError):
            CvLossParams(radii=(3, 2))
        with pytest.raises(HauslossError):
            CvLossParams(alpha=-1)
