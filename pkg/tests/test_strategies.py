"""Scores and selectors: formula oracles, tie rules, ranking properties."""

from __future__ import annotations

import itertools
import math
from collections import Counter

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from albench.core import PoolState, PredictionBundle
from albench.errors import BundleError, ConfigError, PoolError
from albench.strategies import (
    ENSEMBLE_KINDS,
    REQUIRED_FIELDS,
    SEG_KINDS,
    STRATEGY_KINDS,
    StrategySpec,
    TIE_LOWER_INDEX,
    average_probability_maps,
    check_simplex,
    ranking_hinge,
    run_strategy,
    seg_uncertainty_score,
    select_coreset_greedy,
    select_d_score,
    select_entropy,
    select_learn_loss,
    select_random,
    select_seg_entropy,
    select_varr,
    shannon_entropy,
    validate_strategy_spec,
    variation_ratio,
)


def entropy_oracle(row: np.ndarray) -> float:
    """Plain-python Shannon entropy in nats with 0*ln(0) = 0."""
    total = 0.0
    for p in row:
        if p > 0:
            total -= float(p) * math.log(float(p))
    return total


def varr_oracle(row: np.ndarray) -> float:
    counts = Counter(int(v) for v in row)
    return 1.0 - counts.most_common(1)[0][1] / len(row)


def simplex_rows(n: int, k: int, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    z = rng.random((n, k)) + 1e-9
    return z / z.sum(axis=1, keepdims=True)


class TestScores:
    def test_entropy_uniform_is_log_k(self):
        for k in (2, 3, 5, 10):
            probs = np.full((1, k), 1.0 / k)
            assert abs(float(shannon_entropy(probs)[0]) - math.log(k)) <= 1e-12

    def test_entropy_one_hot_is_zero(self):
        probs = np.array([[1.0, 0.0, 0.0]])
        assert float(shannon_entropy(probs)[0]) == 0.0

    @given(st.integers(min_value=1, max_value=30), st.integers(min_value=2, max_value=8),
           st.integers(min_value=0, max_value=2**31 - 1))
    @settings(max_examples=60)
    def test_entropy_matches_oracle(self, n, k, seed):
        probs = simplex_rows(n, k, seed)
        got = shannon_entropy(probs)
        want = np.array([entropy_oracle(row) for row in probs])
        assert np.max(np.abs(got - want)) <= 1e-12

    @given(st.integers(min_value=1, max_value=30), st.integers(min_value=2, max_value=8),
           st.integers(min_value=0, max_value=2**31 - 1))
    @settings(max_examples=60)
    def test_entropy_bounds(self, n, k, seed):
        probs = simplex_rows(n, k, seed)
        h = shannon_entropy(probs)
        assert np.all(h >= 0.0)
        assert np.all(h <= math.log(k) + 1e-12)

    @given(
        hnp.arrays(np.int64, (7, 5), elements=st.integers(min_value=0, max_value=3)),
    )
    @settings(max_examples=60)
    def test_varr_matches_oracle(self, votes):
        got = variation_ratio(votes)
        want = np.array([varr_oracle(row) for row in votes])
        assert np.allclose(got, want, atol=0, rtol=0)
        # with T members the modal count is at least ceil(T/m) >= 1
        assert np.all(got >= 0) and np.all(got <= 1 - 1 / votes.shape[1])

    def test_varr_unanimous_is_zero(self):
        assert float(variation_ratio(np.array([[2, 2, 2, 2]]))[0]) == 0.0

    def test_hinge_case_table(self):
        # margin violated by a flat prediction on ordered losses
        assert ranking_hinge((1.0, 0.0), (0.5, 0.5), margin=1.0) == pytest.approx(1.0)
        # comfortably correct ordering with slack beyond the margin
        assert ranking_hinge((1.0, 0.0), (3.0, 0.0), margin=1.0) == 0.0
        # inverted prediction pays the full inversion plus the margin
        assert ranking_hinge((0.0, 1.0), (2.0, 0.0), margin=1.0) == pytest.approx(3.0)

    def test_hinge_sign_of_zero_is_positive(self):
        # equal losses: sign(0) = +1, so the j-favoring prediction is penalized
        assert ranking_hinge((0.3, 0.3), (0.2, 0.9), margin=1.0) == pytest.approx(1.7)
        assert ranking_hinge((0.3, 0.3), (0.9, 0.2), margin=1.0) == pytest.approx(0.3)

    @given(st.floats(-5, 5), st.floats(-5, 5), st.floats(-5, 5), st.floats(-5, 5),
           st.floats(0.01, 3))
    @settings(max_examples=100)
    def test_hinge_nonnegative_and_zero_when_satisfied(self, li, lj, si, sj, margin):
        value = ranking_hinge((li, lj), (si, sj), margin=margin)
        assert value >= 0.0
        sign = 1.0 if li - lj >= 0 else -1.0
        if sign * (si - sj) >= margin:
            assert value == 0.0

    def test_seg_score_counts_strictly_above(self):
        emap = np.array([[0.5, 0.6], [0.7, 0.2]])
        assert seg_uncertainty_score(emap, 0.5) == 2
        assert seg_uncertainty_score(emap, 0.69) == 1

    def test_average_probability_maps(self):
        member_maps = np.stack([np.full((2, 2, 3), 0.2), np.full((2, 2, 3), 0.6)])
        avg = average_probability_maps(member_maps)
        assert np.allclose(avg, 0.4)

    def test_check_simplex_tolerance(self):
        check_simplex(np.array([[0.5, 0.5 + 5e-7]]))
        with pytest.raises(BundleError):
            check_simplex(np.array([[0.5, 0.51]]))


class TestSelectors:
    def test_entropy_ranks_descending_with_lower_index_ties(self):
        probs = np.array([[0.5, 0.5], [1.0, 0.0], [0.5, 0.5]])
        pairs = select_entropy(probs, 3).pairs
        assert [i for i, _ in pairs] == [0, 2, 1]

    def test_entropy_respects_explicit_indices(self):
        probs = np.array([[0.5, 0.5], [1.0, 0.0]])
        pairs = select_entropy(probs, 2, indices=[10, 4]).pairs
        assert [i for i, _ in pairs] == [10, 4]

    def test_varr_selector(self):
        votes = np.array([[0, 0, 1], [1, 1, 1], [0, 1, 2]])
        pairs = select_varr(votes, 3).pairs
        assert [i for i, _ in pairs] == [2, 0, 1]
        assert pairs[0][1] == pytest.approx(2 / 3)

    def test_learn_loss_descending(self):
        pairs = select_learn_loss(np.array([0.1, 0.9, 0.5]), 3).pairs
        assert [i for i, _ in pairs] == [1, 2, 0]

    def test_d_score_ascending(self):
        pairs = select_d_score(np.array([0.9, 0.1, 0.5]), 3).pairs
        assert [i for i, _ in pairs] == [1, 2, 0]

    def test_seg_entropy_pixel_counts(self):
        hot = np.array([[0.6, 0.7], [0.8, 0.1]])
        cold = np.zeros((2, 2))
        pairs = select_seg_entropy([cold, hot], 0.5, 2).pairs
        assert [i for i, _ in pairs] == [1, 0]
        assert pairs[0][1] == 3.0

    def test_random_is_seeded_and_without_replacement(self):
        pool = PoolState.initial(20)
        a = select_random(pool, 8, seed=3)
        b = select_random(pool, 8, seed=3)
        c = select_random(pool, 8, seed=4)
        assert a.pairs == b.pairs
        assert a.pairs != c.pairs
        chosen = [i for i, _ in a.pairs]
        assert len(set(chosen)) == 8
        assert set(chosen) <= set(range(20))

    def test_random_overdraw_rejected(self):
        with pytest.raises(PoolError):
            select_random(PoolState.initial(3), 4, seed=0)

    def test_coreset_first_pick_is_farthest(self):
        features = np.array([[1.0, 0.0], [9.0, 0.0], [4.0, 0.0]])
        labeled = np.array([[0.0, 0.0]])
        pairs = select_coreset_greedy(features, labeled, 3).pairs
        assert [i for i, _ in pairs] == [1, 2, 0]
        assert pairs[0][1] == pytest.approx(9.0)

    def test_coreset_scores_are_dist_at_pick(self):
        features = np.array([[10.0, 0.0], [0.0, 10.0], [5.0, 5.0]])
        labeled = np.array([[0.0, 0.0]])
        pairs = select_coreset_greedy(features, labeled, 3).pairs
        # tie at distance 10 -> lower index first; later picks measured
        # against labeled + already-picked centers
        assert [i for i, _ in pairs] == [0, 1, 2]
        assert pairs[1][1] == pytest.approx(10.0)
        assert pairs[2][1] == pytest.approx(np.hypot(5, 5))

    @staticmethod
    def _kcenter_radius(points: np.ndarray, centers: np.ndarray) -> float:
        d = np.sqrt(((points[:, None, :] - centers[None, :, :]) ** 2).sum(-1))
        return float(d.min(axis=1).max())

    @given(st.integers(min_value=0, max_value=2**31 - 1),
           st.integers(min_value=4, max_value=9),
           st.integers(min_value=1, max_value=3))
    @settings(max_examples=40, deadline=None)
    def test_coreset_two_approximation(self, seed, n, k):
        rng = np.random.default_rng(seed)
        unlabeled = rng.normal(size=(n, 2))
        labeled = rng.normal(size=(2, 2))
        pairs = select_coreset_greedy(unlabeled, labeled, k).pairs
        chosen = [i for i, _ in pairs]
        greedy_centers = np.vstack([labeled, unlabeled[chosen]])
        greedy_radius = self._kcenter_radius(unlabeled, greedy_centers)
        best = math.inf
        for combo in itertools.combinations(range(n), k):
            centers = np.vstack([labeled, unlabeled[list(combo)]])
            best = min(best, self._kcenter_radius(unlabeled, centers))
        assert greedy_radius <= 2.0 * best + 1e-9

    @given(st.integers(min_value=0, max_value=2**31 - 1),
           st.integers(min_value=1, max_value=12),
           st.integers(min_value=2, max_value=5))
    @settings(max_examples=60)
    def test_rankings_are_unique_index_lists(self, seed, n, k_classes):
        probs = simplex_rows(n, k_classes, seed)
        for k in (1, min(3, n), n):
            pairs = select_entropy(probs, k).pairs
            assert len(pairs) == k
            idx = [i for i, _ in pairs]
            assert len(set(idx)) == len(idx)
            scores = [s for _, s in pairs]
            assert all(a >= b - 1e-15 for a, b in zip(scores, scores[1:]))

    def test_equal_scores_yield_ascending_indices(self):
        probs = np.full((6, 2), 0.5)
        pairs = select_entropy(probs, 6).pairs
        assert [i for i, _ in pairs] == list(range(6))
        assert select_entropy(probs, 6).tie_rule == TIE_LOWER_INDEX


class TestRunStrategy:
    def test_kind_dispatch_and_required_fields(self):
        pool = PoolState.initial(3)
        probs = np.array([[0.5, 0.5], [0.9, 0.1], [0.6, 0.4]])
        bundle = PredictionBundle(indices=(0, 1, 2), probs=probs)
        spec = StrategySpec(kind="entropy")
        ranking = run_strategy(spec, bundle, pool, 2, seed=0)
        assert [i for i, _ in ranking.pairs] == [0, 2]

    def test_missing_field_is_an_error(self):
        pool = PoolState.initial(2)
        bundle = PredictionBundle(indices=(0, 1), features=np.eye(2))
        with pytest.raises(BundleError):
            run_strategy(StrategySpec(kind="entropy"), bundle, pool, 1, seed=0)

    def test_random_needs_no_bundle(self):
        pool = PoolState.initial(4)
        ranking = run_strategy(StrategySpec(kind="random"), None, pool, 2, seed=5)
        assert len(ranking.pairs) == 2

    def test_coreset_needs_labeled_features(self):
        pool = PoolState.initial(2)
        bundle = PredictionBundle(indices=(0, 1), features=np.eye(2))
        with pytest.raises(PoolError):
            run_strategy(StrategySpec(kind="coreset"), bundle, pool, 1, seed=0)
        ranking = run_strategy(
            StrategySpec(kind="coreset"), bundle, pool, 1, seed=0,
            labeled_features=np.zeros((1, 2)),
        )
        assert len(ranking.pairs) == 1

    def test_unknown_kind_rejected(self):
        with pytest.raises(ConfigError):
            StrategySpec(kind="alchemy")


class TestSpecValidation:
    def test_kind_constants_cover_required_fields(self):
        assert set(REQUIRED_FIELDS) == set(STRATEGY_KINDS)
        assert set(ENSEMBLE_KINDS) <= set(STRATEGY_KINDS)
        assert set(SEG_KINDS) <= set(STRATEGY_KINDS)

    def test_entropy_threshold_range(self):
        validate_strategy_spec(
            StrategySpec(kind="seg_entropy", params={"entropy_threshold": math.log(3)}),
            num_classes=3,
        )
        with pytest.raises(ConfigError):
            validate_strategy_spec(
                StrategySpec(kind="seg_entropy", params={"entropy_threshold": 0.0}),
                num_classes=3,
            )
        with pytest.raises(ConfigError):
            validate_strategy_spec(
                StrategySpec(kind="seg_entropy", params={"entropy_threshold": 1.2}),
                num_classes=3,
            )

    def test_ensemble_size_and_margin_checks(self):
        with pytest.raises(ConfigError):
            validate_strategy_spec(
                StrategySpec(kind="ens_varr", params={"ensemble_size": 1}), num_classes=2
            )
        with pytest.raises(ConfigError):
            validate_strategy_spec(
                StrategySpec(kind="learn_loss", params={"hinge_margin": 0.0}), num_classes=2
            )
