import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate, special

from conftest import pairwise_auc
from scaff.dataset import view_from_masks
from scaff.errors import ConfigError, DataError, UndefinedCorrelationError
from scaff.metrics import (
    auc,
    demographic_parity,
    equal_opportunity,
    equalized_odds,
    ovr_sensitive_auc,
    pearson,
    quantile_thresholds,
    sensitive_auc,
)


def tied_scores(rng, n, levels=None):
    levels = levels or max(2, n // 4)
    return rng.integers(0, levels, size=n) / levels


class TestAuc:
    def test_perfect_separation(self):
        assert auc([0.9, 0.8, 0.2, 0.1], [1, 1, 0, 0]) == 1.0

    def test_all_tied(self):
        assert auc([0.3] * 6, [1, 0, 1, 0, 0, 1]) == 0.5

    def test_single_class_is_neutral(self):
        assert auc([0.1, 0.7, 0.3], [1, 1, 1]) == 0.5
        assert auc([0.1, 0.7, 0.3], [0, 0, 0]) == 0.5

    def test_length_mismatch(self):
        with pytest.raises(DataError):
            auc([0.1, 0.2], [1])

    def test_random_against_pairwise(self, rng):
        z = rng.random(50)
        y = rng.integers(0, 2, 50)
        assert abs(auc(z, y) - pairwise_auc(z, y)) <= 1e-12

    def test_many_ties_against_pairwise(self, rng):
        for _ in range(50):
            n = int(rng.integers(2, 120))
            z = tied_scores(rng, n)
            y = rng.integers(0, 2, n)
            assert abs(auc(z, y) - pairwise_auc(z, y)) <= 1e-12

    @settings(max_examples=60, deadline=None)
    @given(st.lists(st.tuples(st.integers(0, 6), st.booleans()), min_size=2, max_size=40))
    def test_property_pairwise(self, pairs):
        z = np.array([p[0] for p in pairs], dtype=float) / 6
        y = np.array([p[1] for p in pairs], dtype=int)
        assert abs(auc(z, y) - pairwise_auc(z, y)) <= 1e-12

    @settings(max_examples=40, deadline=None)
    @given(st.lists(st.tuples(st.integers(-20, 20), st.booleans()), min_size=2, max_size=40))
    def test_invariant_under_increasing_transform(self, pairs):
        z = np.array([p[0] for p in pairs]) / 4.0
        y = np.array([p[1] for p in pairs], dtype=int)
        assert auc(np.exp(z) * 3 + 1, y) == auc(z, y)
        assert auc(z ** 3 + z, y) == auc(z, y)


class TestSensitiveAuc:
    def test_separated_groups_either_direction(self):
        assert sensitive_auc([0.9, 0.9, 0.1, 0.1], [1, 1, 0, 0]) == 1.0
        assert sensitive_auc([0.1, 0.1, 0.9, 0.9], [1, 1, 0, 0]) == 1.0

    def test_worked_split_children(self, worked_split):
        assert sensitive_auc(worked_split["z_child"], worked_split["gender"]) == pytest.approx(0.6, abs=1e-12)
        assert sensitive_auc(worked_split["z_child"], worked_split["race"]) == pytest.approx(11 / 12, abs=1e-12)
        assert round(sensitive_auc(worked_split["z_child"], worked_split["race"]), 3) == 0.917

    def test_worked_split_ovr_max(self, worked_split):
        view = view_from_masks({"gender=f": worked_split["gender"], "race=nw": worked_split["race"]})
        best, per = ovr_sensitive_auc(worked_split["z_child"], view)
        assert best == pytest.approx(11 / 12)
        assert per["gender=f"] == pytest.approx(0.6)

    def test_single_group_max(self, rng):
        z = rng.random(30)
        mask = rng.integers(0, 2, 30)
        best, per = ovr_sensitive_auc(z, view_from_masks({"a=1": mask}))
        assert best == sensitive_auc(z, mask) == per["a=1"]

    def test_three_groups_max(self, rng):
        z = tied_scores(rng, 60)
        cats = rng.integers(0, 3, 60)
        masks = {f"c={k}": cats == k for k in range(3)}
        best, per = ovr_sensitive_auc(z, view_from_masks(masks))
        oracle = [max(pairwise_auc(z, m), 1 - pairwise_auc(z, m)) for m in masks.values()]
        assert best == pytest.approx(max(oracle), abs=1e-12)
        assert list(per.values()) == pytest.approx(oracle, abs=1e-12)

    def test_empty_view(self):
        from scaff.dataset import SensitiveView
        with pytest.raises(ConfigError):
            ovr_sensitive_auc([0.1, 0.2], SensitiveView(()))

    @settings(max_examples=60, deadline=None)
    @given(st.lists(st.tuples(st.integers(0, 4), st.booleans()), min_size=2, max_size=40))
    def test_complement_symmetry_and_range(self, pairs):
        z = np.array([p[0] for p in pairs], dtype=float)
        mask = np.array([p[1] for p in pairs], dtype=int)
        v = sensitive_auc(z, mask)
        assert v == pytest.approx(sensitive_auc(z, 1 - mask), abs=1e-15)
        assert 0.5 <= v <= 1.0

    def test_constant_scores(self, rng):
        assert sensitive_auc(np.full(20, 0.4), rng.integers(0, 2, 20)) == 0.5


class TestThresholdMetrics:
    def test_dp_total_separation(self):
        assert demographic_parity([0.9, 0.9, 0.1, 0.1], [1, 1, 0, 0], 0.5) == 1.0

    def test_dp_identical_groups(self):
        z = [0.2, 0.7, 0.2, 0.7]
        assert demographic_parity(z, [1, 1, 0, 0], 0.5) == 0.0

    def test_dp_threshold_is_inclusive(self):
        assert demographic_parity([0.5, 0.4], [1, 0], 0.5) == 1.0

    def test_dp_empty_group(self):
        assert demographic_parity([0.5, 0.4], [1, 1], 0.5) == 0.0

    def test_dp_matches_counting(self, rng):
        z = rng.random(101)
        mask = rng.integers(0, 2, 101).astype(bool)
        t = float(np.median(z))
        a = sum(1 for v, m in zip(z, mask) if m and v >= t) / mask.sum()
        b = sum(1 for v, m in zip(z, mask) if not m and v >= t) / (~mask).sum()
        assert demographic_parity(z, mask, t) == pytest.approx(abs(a - b), abs=1e-15)

    @settings(max_examples=30, deadline=None)
    @given(st.lists(st.floats(0, 1), min_size=1, max_size=15), st.floats(0, 1))
    def test_dp_zero_when_scores_match_across_groups(self, zs, t):
        z = np.array(zs + zs)
        mask = np.array([1] * len(zs) + [0] * len(zs))
        assert demographic_parity(z, mask, t) == 0.0

    def test_perfect_classifier_balanced_groups(self):
        y = np.array([1, 0, 1, 0, 1, 0, 1, 0])
        mask = np.array([1, 1, 1, 1, 0, 0, 0, 0])
        z = y.astype(float)
        assert equal_opportunity(z, mask, y, 0.5) == 0.0
        assert equalized_odds(z, mask, y, 0.5) == (0.0, 0.0)

    def test_all_positive_predictions(self, rng):
        y = rng.integers(0, 2, 40)
        y[:2] = [0, 1]
        mask = np.arange(40) % 2
        assert equalized_odds(np.ones(40), mask, y, 0.5) == (0.0, 0.0)

    def test_hand_built_eight_samples(self):
        z = np.array([0.9, 0.6, 0.3, 0.8, 0.7, 0.2, 0.4, 0.1])
        y = np.array([1, 1, 1, 0, 1, 1, 0, 0])
        s = np.array([1, 1, 1, 1, 0, 0, 0, 0])
        # S+: positives 0.9, 0.6, 0.3 -> TPR 2/3; negative 0.8 -> FPR 1
        # S-: positives 0.7, 0.2 -> TPR 1/2; negatives 0.4, 0.1 -> FPR 0
        tpr, fpr = equalized_odds(z, s, y, 0.5)
        assert tpr == pytest.approx(2 / 3 - 1 / 2)
        assert fpr == pytest.approx(1.0)

    def test_empty_cell_is_absent(self):
        z = np.array([0.9, 0.1, 0.8, 0.2])
        y = np.array([1, 1, 0, 0])
        s = np.array([1, 1, 0, 0])
        assert equal_opportunity(z, s, y, 0.5) is None
        assert equalized_odds(z, s, y, 0.5) == (None, None)


class TestQuantiles:
    def test_deciles(self):
        z = np.arange(1, 101) / 100
        q = [i / 10 for i in range(1, 10)]
        th = quantile_thresholds(z, q)
        assert th == pytest.approx(np.quantile(z, q))
        # linear interpolation between order statistics: (1 + 99 q) / 100
        assert th == pytest.approx([(1 + 99 * p) / 100 for p in q], abs=1e-12)

    def test_constant(self):
        assert quantile_thresholds(np.full(7, 0.3), [0.1, 0.5, 0.9]) == [0.3, 0.3, 0.3]

    def test_against_sort_oracle(self, rng):
        z = rng.random(57)
        q = [0.1, 0.25, 0.5, 0.9]
        srt = np.sort(z)
        oracle = []
        for p in q:
            h = (z.size - 1) * p
            lo = math.floor(h)
            oracle.append(srt[lo] + (h - lo) * (srt[min(lo + 1, z.size - 1)] - srt[lo]))
        assert quantile_thresholds(z, q) == pytest.approx(oracle, abs=1e-12)
        assert np.all(np.diff(quantile_thresholds(z, q)) >= 0)

    def test_errors(self):
        with pytest.raises(DataError):
            quantile_thresholds([], [0.5])
        with pytest.raises(ConfigError):
            quantile_thresholds([0.1, 0.2], [0.5, 0.2])
        with pytest.raises(ConfigError):
            quantile_thresholds([0.1, 0.2], [1.0])


class TestPearson:
    def test_exact_linear(self):
        x = np.arange(10.0)
        assert pearson(x, 2 * x + 1)[0] == pytest.approx(1.0)
        assert pearson(x, -x)[0] == pytest.approx(-1.0)

    @settings(max_examples=40, deadline=None)
    @given(st.floats(-10, 10).filter(lambda a: abs(a) > 1e-3), st.floats(-10, 10), st.integers(3, 20))
    def test_affine(self, a, b, n):
        x = np.linspace(0, 1, n)
        r, _ = pearson(x, a * x + b)
        assert r == pytest.approx(math.copysign(1.0, a), abs=1e-9)

    @staticmethod
    def t_tail_by_quadrature(t, df):
        c = special.gamma((df + 1) / 2) / (math.sqrt(df * math.pi) * special.gamma(df / 2))
        tail, _ = integrate.quad(lambda s: c * (1 + s * s / df) ** (-(df + 1) / 2), t, np.inf)
        return 2 * tail

    def test_p_value_n11(self):
        # build x, y with sample correlation exactly 0.602
        rng = np.random.default_rng(3)
        x = rng.normal(size=11)
        e = rng.normal(size=11)
        x = (x - x.mean()) / np.linalg.norm(x - x.mean())
        e = e - e.mean()
        e -= (e @ x) * x
        e /= np.linalg.norm(e)
        r = 0.602
        y = r * x + math.sqrt(1 - r * r) * e
        got_r, p = pearson(x, y)
        assert got_r == pytest.approx(0.602, abs=1e-12)
        t = r * math.sqrt(9 / (1 - r * r))
        assert p == pytest.approx(self.t_tail_by_quadrature(t, 9), abs=1e-8)
        assert p == pytest.approx(0.05, abs=0.001)

    def test_errors(self):
        with pytest.raises(UndefinedCorrelationError):
            pearson([1, 1, 1], [1, 2, 3])
        with pytest.raises(DataError):
            pearson([1, 2], [1, 2])
        with pytest.raises(DataError):
            pearson([1, 2, 3], [1, 2])

    def test_decoupled_columns_monte_carlo(self):
        rng = np.random.default_rng(8)
        rs, ps = [], []
        for _ in range(400):
            r, p = pearson(rng.random(11), rng.random(11))
            rs.append(abs(r))
            ps.append(p)
        assert np.mean(rs) < 0.35
        assert 0.4 < np.mean(ps) < 0.6
        # under the null the p-value is uniform
        assert np.mean(np.asarray(ps) <= 0.05) == pytest.approx(0.05, abs=0.03)
