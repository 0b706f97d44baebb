import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from scaff.criteria import (
    Kind,
    SplitCriterion,
    binary_entropy,
    discrimination,
    entropy,
    faht,
    fairness_gain,
    info_gain,
    kamiran_div,
    kamiran_sub,
    parse_criterion,
    scaff_gain,
    scaff_score,
)
from scaff.dataset import view_from_masks
from scaff.errors import ConfigError, DataError
from scaff.metrics import auc, ovr_sensitive_auc

binary_lists = st.lists(st.integers(0, 1), min_size=1, max_size=40)


class TestParse:
    @pytest.mark.parametrize("text,kind,theta", [
        ("scaff:0.5", Kind.SCAFF, 0.5),
        ("SCAFF:1", Kind.SCAFF, 1.0),
        ("auc", Kind.AUC, 0.0),
        ("kamiran-sub", Kind.KAMIRAN_SUB, 0.0),
        ("kamiran-div", Kind.KAMIRAN_DIV, 0.0),
        ("faht", Kind.FAHT, 0.0),
    ])
    def test_valid(self, text, kind, theta):
        c = parse_criterion(text)
        assert c.kind is kind and c.theta == theta

    @pytest.mark.parametrize("text", ["scaff", "scaff:1.5", "scaff:-0.1", "scaff:x", "gini", "faht:0.2", "scaff:nan"])
    def test_invalid(self, text):
        with pytest.raises(ConfigError):
            parse_criterion(text)

    def test_str_round_trip(self):
        for text in ("scaff:0.3", "scaff:0", "auc", "faht", "kamiran-div"):
            assert str(parse_criterion(text)) == text
            assert parse_criterion(str(parse_criterion(text))) == parse_criterion(text)

    def test_baseline_rejects_theta(self):
        with pytest.raises(ConfigError):
            SplitCriterion(Kind.FAHT, 0.3)


class TestEntropy:
    def test_uniform(self):
        assert entropy([1, 1, 0, 0]) == 1.0

    def test_pure(self):
        assert entropy([1, 1, 1]) == 0.0

    def test_quarter_mixture(self):
        v = entropy([1, 1, 0, 0, 0, 0, 0, 0])
        assert v == pytest.approx(-(0.25 * math.log2(0.25) + 0.75 * math.log2(0.75)), abs=1e-15)
        assert v == pytest.approx(0.8112781244591328, abs=1e-12)

    def test_empty(self):
        with pytest.raises(DataError):
            entropy([])

    @settings(max_examples=60, deadline=None)
    @given(binary_lists)
    def test_range(self, v):
        assert 0.0 <= entropy(v) <= 1.0


class TestInfoGain:
    def test_perfect(self):
        assert info_gain([1, 1, 0, 0], [[1, 1], [0, 0]]) == 1.0

    def test_proportion_preserving(self):
        assert info_gain([1, 0, 1, 0], [[1, 0], [1, 0]]) == 0.0

    def test_random_against_two_term_oracle(self, rng):
        y = rng.integers(0, 2, 20)
        left = rng.random(20) < 0.4
        a, b = y[left], y[~left]

        def h(v):
            p = v.mean()
            return 0.0 if p in (0, 1) else -(p * math.log2(p) + (1 - p) * math.log2(1 - p))

        oracle = h(y) - a.size / 20 * h(a) - b.size / 20 * h(b)
        assert info_gain(y, [a, b]) == pytest.approx(oracle, abs=1e-12)

    def test_partition_mismatch(self):
        with pytest.raises(DataError):
            info_gain([1, 0, 1], [[1], [0]])

    @settings(max_examples=80, deadline=None)
    @given(st.lists(st.tuples(st.integers(0, 1), st.booleans()), min_size=1, max_size=40))
    def test_non_negative(self, pairs):
        y = np.array([p[0] for p in pairs])
        left = np.array([p[1] for p in pairs])
        assert info_gain(y, [y[left], y[~left]]) >= -1e-12


class TestBaselineArithmetic:
    def test_kamiran_sub(self):
        assert kamiran_sub(0.5, 0.2) == pytest.approx(0.3)
        assert kamiran_sub(0.0, 0.0) == 0.0

    def test_kamiran_div(self):
        assert kamiran_div(0.4, 0.2) == pytest.approx(2.0)
        assert kamiran_div(0.4, 0.0) == pytest.approx(4e5)

    @settings(max_examples=40, deadline=None)
    @given(st.floats(0, 1), st.floats(0, 1))
    def test_random_pairs(self, a, b):
        assert kamiran_sub(a, b) == a - b
        assert kamiran_div(a, b) == a / max(b, 1e-6)

    def test_faht_cases(self):
        assert faht(0.5, 0.0) == 0.5
        assert faht(0.5, 0.2) == pytest.approx(0.1)
        assert faht(0.5, -0.1) == pytest.approx(-0.05)

    @settings(max_examples=40, deadline=None)
    @given(st.floats(0, 1), st.floats(-1, 1).filter(lambda f: f != 0.0))
    def test_faht_product_off_zero(self, ig, fg):
        assert faht(ig, fg) == ig * fg


class TestFairnessGain:
    def test_group_pure_children(self):
        # parent Disc = 1; each child contains one group only, so Disc = 0
        s = np.array([1, 1, 0, 0])
        y = np.array([1, 1, 0, 0])
        assert discrimination(y, s) == 1.0
        assert fairness_gain(s, [s[:2], s[2:]], y, [y[:2], y[2:]]) == 1.0

    def test_children_match_parent(self):
        s = np.array([1, 0, 1, 0, 1, 0, 1, 0])
        y = np.array([1, 1, 0, 0, 1, 1, 0, 0])
        assert fairness_gain(s, [s[:4], s[4:]], y, [y[:4], y[4:]]) == 0.0

    def test_hand_built_twelve_samples(self):
        s = np.array([1] * 6 + [0] * 6)
        y = np.array([1, 1, 1, 1, 0, 0, 1, 1, 0, 0, 0, 0])
        left = np.zeros(12, dtype=bool)
        left[[0, 1, 2, 3, 6]] = True
        # parent: 4/6 - 2/6 = 1/3; left: 1 - 1 = 0; right: |0 - 1/5| = 1/5
        fg = fairness_gain(s, [s[left], s[~left]], y, [y[left], y[~left]])
        assert fg == pytest.approx(1 / 3 - 7 / 12 * 1 / 5, abs=1e-15)
        assert fg == pytest.approx(13 / 60)

    def test_partition_mismatch(self):
        with pytest.raises(DataError):
            fairness_gain([1, 0, 1], [[1], [0]], [1, 0, 1], [[1], [0]])


class TestScaff:
    def test_worked_split_arithmetic(self, worked_split):
        z, y = worked_split["z_child"], worked_split["labels"]
        gender = view_from_masks({"gender=f": worked_split["gender"]})
        race = view_from_masks({"race=nw": worked_split["race"]})
        both = view_from_masks({"gender=f": worked_split["gender"], "race=nw": worked_split["race"]})
        assert auc(z, y) == pytest.approx(0.8, abs=1e-12)
        assert scaff_score(z, y, gender, 0.5) == pytest.approx(0.5 * 0.8 - 0.5 * 0.6, abs=1e-12)
        # parent scores are constant: SCAFF = 0.5 - theta = 0 at theta = 0.5
        assert scaff_score(worked_split["z_parent"], y, both, 0.5) == 0.0
        assert scaff_gain(worked_split["z_parent"], z, y, gender, 0.5) == pytest.approx(0.1, abs=1e-12)
        assert scaff_gain(worked_split["z_parent"], z, y, race, 0.5) == pytest.approx(-0.0585, abs=5e-4)
        assert scaff_gain(worked_split["z_parent"], z, y, both, 0.5) == pytest.approx(0.4 - 0.5 * 11 / 12, abs=1e-12)

    def test_theta_zero_is_auc(self, rng):
        z, y, s = rng.random(40), rng.integers(0, 2, 40), rng.integers(0, 2, 40)
        assert scaff_score(z, y, view_from_masks({"a=1": s}), 0.0) == auc(z, y)

    def test_constant_scores(self, rng):
        y, s = rng.integers(0, 2, 30), rng.integers(0, 2, 30)
        view = view_from_masks({"a=1": s})
        for theta in (0.0, 0.25, 0.7, 1.0):
            assert scaff_score(np.full(30, 0.3), y, view, theta) == pytest.approx(0.5 - theta, abs=1e-15)

    def test_identity_split(self, rng):
        z, y, s = rng.random(20), rng.integers(0, 2, 20), rng.integers(0, 2, 20)
        assert scaff_gain(z, z, y, view_from_masks({"a=1": s}), 0.4) == 0.0

    def test_length_mismatch(self):
        view = view_from_masks({"a=1": [1, 0, 1]})
        with pytest.raises(DataError):
            scaff_gain([0.1, 0.2, 0.3], [0.1, 0.2], [1, 0, 1], view, 0.5)

    def test_theta_range(self):
        view = view_from_masks({"a=1": [1, 0]})
        with pytest.raises(ConfigError):
            scaff_score([0.1, 0.2], [1, 0], view, 1.2)

    @settings(max_examples=50, deadline=None)
    @given(st.integers(0, 2 ** 31), st.integers(4, 40), st.floats(0, 1))
    def test_endpoints_and_antisymmetry(self, seed, n, theta):
        rng = np.random.default_rng(seed)
        y = rng.integers(0, 2, n)
        view = view_from_masks({"a=1": rng.integers(0, 2, n), "b=1": rng.integers(0, 2, n)})
        za = rng.integers(0, 5, n) / 4
        zb = rng.random(n)
        assert scaff_score(za, y, view, 0.0) == auc(za, y)
        assert scaff_score(za, y, view, 1.0) == -ovr_sensitive_auc(za, view)[0]
        assert scaff_gain(za, zb, y, view, theta) == -scaff_gain(zb, za, y, view, theta)

    def test_binary_entropy_edges(self):
        assert binary_entropy(0.0) == binary_entropy(1.0) == 0.0
        assert binary_entropy(0.5) == 1.0
