import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from brainalign.stats import (
    TestResult,
    ZeroVarianceError,
    betainc,
    bh_fdr,
    one_sample_ttest,
    paired_ttest,
    pearson,
    pearson_columns,
    student_t_sf,
)

# One-sided tail probabilities P(T > t), computed with mpmath.betainc at
# 40 decimal digits and frozen here.
T_SF_REFERENCE = [
    (3, 0.5, 0.3257239824240754972175),
    (3, 2, 0.06966298427942158842405),
    (3, 5, 0.007696219036651150493313),
    (5, 0.5, 0.3191494358204645033534),
    (5, 2, 0.05096973941492917812268),
    (5, 5, 0.002052357990026661210253),
    (20, 0.5, 0.3112659211405117986737),
    (20, 2, 0.02963276772328523648481),
    (20, 5, 0.00003436514289771098656745),
]


class TestStudentT:
    @pytest.mark.parametrize("dof,t,expected", T_SF_REFERENCE)
    def test_matches_high_precision_reference(self, dof, t, expected):
        assert student_t_sf(t, dof) == pytest.approx(expected, abs=1e-12)

    def test_negative_t_symmetry(self):
        for dof in (3, 5, 20):
            for t in (0.5, 2.0, 5.0):
                assert student_t_sf(-t, dof) + student_t_sf(t, dof) == pytest.approx(
                    1.0, abs=1e-14
                )

    def test_zero_is_half(self):
        assert student_t_sf(0.0, 7) == pytest.approx(0.5, abs=1e-15)

    def test_betainc_edges(self):
        assert betainc(2.0, 3.0, 0.0) == 0.0
        assert betainc(2.0, 3.0, 1.0) == 1.0
        # I_x(1,1) is the uniform CDF
        assert betainc(1.0, 1.0, 0.3) == pytest.approx(0.3, abs=1e-14)


class TestOneSampleTtest:
    def test_reference_example(self):
        # frozen from the same 40-digit reference computation
        x = [0.5, 0.6, 0.55, 0.52, 0.58, 0.61]
        res = one_sample_ttest(x, 0.0, tail="one_sided_greater")
        assert res.statistic == pytest.approx(30.983866769659336, rel=1e-12)
        assert res.p_value == pytest.approx(3.286706524364631751039e-7, abs=1e-15)
        assert res.dof == 5

    def test_symmetric_around_mu0(self):
        x = np.array([1.0, 1.0, 1.0, 1.0]) + np.array([1e-9, -1e-9, 2e-9, -2e-9])
        res = one_sample_ttest(x, 1.0, tail="one_sided_greater")
        assert abs(res.p_value - 0.5) < 0.2

    def test_minimal_n(self):
        assert isinstance(one_sample_ttest([1.0, 2.0, 3.0], 0.0), TestResult)
        with pytest.raises(ValueError):
            one_sample_ttest([1.0, 2.0], 0.0)

    def test_zero_variance(self):
        with pytest.raises(ZeroVarianceError):
            one_sample_ttest([2.0, 2.0, 2.0], 0.0)

    def test_negation_complementarity(self):
        rng = np.random.default_rng(0)
        x = rng.standard_normal(8) + 0.5
        p_pos = one_sample_ttest(x, 0.0, tail="one_sided_greater").p_value
        p_neg = one_sample_ttest(-x, 0.0, tail="one_sided_greater").p_value
        assert p_pos + p_neg == pytest.approx(1.0, abs=1e-12)


class TestPairedTtest:
    def test_identical_vectors_degenerate(self):
        x = [1.0, 2.0, 3.0, 4.0]
        with pytest.raises(ZeroVarianceError):
            paired_ttest(x, x)

    def test_constant_offset_degenerate(self):
        x = np.array([1.0, 2.0, 3.0, 4.0])
        with pytest.raises(ZeroVarianceError):
            paired_ttest(x + 0.5, x)

    def test_matches_one_sample_on_differences(self):
        rng = np.random.default_rng(1)
        x = rng.standard_normal(10)
        y = rng.standard_normal(10)
        res = paired_ttest(x, y, tail="two_sided")
        ref = one_sample_ttest(x - y, 0.0, tail="two_sided")
        assert res.statistic == pytest.approx(ref.statistic)
        assert res.p_value == pytest.approx(ref.p_value)


class TestPearson:
    def test_identity(self):
        a = np.array([1.0, 2.0, 3.0, 4.0])
        assert pearson(a, a) == pytest.approx(1.0)

    def test_negative_affine(self):
        a = np.array([1.0, 2.0, 3.0, 4.0])
        assert pearson(a, -2 * a + 7) == pytest.approx(-1.0)

    def test_direct_formula(self):
        a = np.array([1.0, 2.0, 3.0, 4.0])
        b = np.array([1.0, 2.0, 3.0, 100.0])
        da, db = a - a.mean(), b - b.mean()
        expected = (da * db).sum() / math.sqrt((da**2).sum() * (db**2).sum())
        assert pearson(a, b) == pytest.approx(expected, abs=1e-14)

    def test_constant_flagged(self):
        assert math.isnan(pearson([1.0, 1.0, 1.0], [1.0, 2.0, 3.0]))

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            pearson([1.0, 2.0, 3.0], [1.0, 2.0])

    @given(
        scale=st.floats(1e-3, 1e3),
        shift=st.floats(-100, 100),
        seed=st.integers(0, 100),
    )
    @settings(max_examples=50, deadline=None)
    def test_positive_affine_invariance(self, scale, shift, seed):
        rng = np.random.default_rng(seed)
        a = rng.standard_normal(20)
        b = rng.standard_normal(20)
        # tolerance bounded by input conditioning: values near `shift`
        # carry absolute rounding error ~shift*eps, which is ~1e-9 of the
        # spread at the worst scale/shift combination in range
        assert pearson(scale * a + shift, b) == pytest.approx(
            pearson(a, b), abs=1e-9
        )
        assert pearson(-scale * a + shift, b) == pytest.approx(
            -pearson(a, b), abs=1e-9
        )

    def test_columns_matches_scalar(self):
        rng = np.random.default_rng(2)
        A = rng.standard_normal((15, 4))
        B = rng.standard_normal((15, 4))
        cols = pearson_columns(A, B)
        for j in range(4):
            assert cols[j] == pytest.approx(pearson(A[:, j], B[:, j]), abs=1e-14)

    def test_columns_constant_flagged(self):
        A = np.ones((10, 2))
        B = np.random.default_rng(0).standard_normal((10, 2))
        assert np.isnan(pearson_columns(A, B)).all()


class TestBhFdr:
    def test_all_zero_selected(self):
        assert bh_fdr(np.zeros(5), 0.05).all()

    def test_all_one_none(self):
        assert not bh_fdr(np.ones(5), 0.05).any()

    def test_step_up_hand_computation(self):
        # thresholds k*q/n: 0.0125, 0.025, 0.0375, 0.05; 0.04 > 0.0375 so
        # the step-up stops at k=2 (cross-checked against statsmodels)
        mask = bh_fdr([0.001, 0.013, 0.04, 0.9], 0.05)
        assert mask.tolist() == [True, True, False, False]

    def test_step_up_rescues_smaller(self):
        # 0.035 <= 3*0.05/4, so the step-up takes all three smallest
        mask = bh_fdr([0.001, 0.013, 0.035, 0.9], 0.05)
        assert mask.tolist() == [True, True, True, False]

    def test_nan_never_selected(self):
        mask = bh_fdr([0.001, np.nan, 0.9], 0.05)
        assert mask.tolist() == [True, False, False]

    @given(seed=st.integers(0, 200), idx=st.integers(0, 9))
    @settings(max_examples=50, deadline=None)
    def test_monotone_in_pvalues(self, seed, idx):
        rng = np.random.default_rng(seed)
        p = rng.uniform(size=10)
        before = bh_fdr(p, 0.1)
        p2 = p.copy()
        p2[idx] = p2[idx] / 2
        after = bh_fdr(p2, 0.1)
        # lowering one p-value never deselects a previously selected index
        assert (after | ~before).all()
