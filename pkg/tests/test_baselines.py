"""Exhaustive oracle and matched-cardinality random baseline."""

import itertools

import numpy as np
import pytest

import persched as ps
from persched import BudgetError, InitializationError, InputError, Schedule, SystemModel
from persched.baselines import BaselineResult, _count_table, _draw_mask
from tests.conftest import random_stable_system


def manual_best(sys, K, eta_scalar, total=None):
    """Reference enumeration: score every feasible mask directly."""
    m = sys.n_sensors
    best = (np.inf, None)
    n_feasible = 0
    for bits in itertools.product((0, 1), repeat=K * m):
        mask = np.array(bits).reshape(K, m)
        if (mask.sum(axis=0) > eta_scalar).any():
            continue
        if total is not None and mask.sum() != total:
            continue
        n_feasible += 1
        j = ps.evaluate_schedule(sys, Schedule(mask)).J
        if j < best[0]:
            best = (j, mask)
    return best[0], best[1], n_feasible


def scalar_unstable_system():
    return SystemModel(
        A=np.array([[1.2]]), B=np.eye(1), C=np.eye(1), Q=np.eye(1), R=np.eye(1)
    )


class TestExhaustiveSearch:
    def test_matches_manual_enumeration(self, rng):
        sys = random_stable_system(rng, 3, 2)
        result = ps.exhaustive_search(sys, K=2, eta=1)
        j_ref, mask_ref, n_feasible = manual_best(sys, 2, 1)
        assert result.J == pytest.approx(j_ref, rel=1e-12)
        np.testing.assert_array_equal(result.schedule.mask, mask_ref)
        assert result.n_evaluated == n_feasible
        assert result.n_skipped == 0

    def test_total_activation_filter(self, rng):
        sys = random_stable_system(rng, 2, 2)
        result = ps.exhaustive_search(sys, K=2, eta=1, total_activations=2)
        j_ref, _, n_feasible = manual_best(sys, 2, 1, total=2)
        assert result.J == pytest.approx(j_ref, rel=1e-12)
        assert result.n_evaluated == n_feasible == 4
        assert result.schedule.total_activations == 2

    def test_beats_every_feasible_schedule(self, rng):
        sys = random_stable_system(rng, 3, 2)
        result = ps.exhaustive_search(sys, K=3, eta=2)
        for bits in itertools.product((0, 1), repeat=6):
            mask = np.array(bits).reshape(3, 2)
            if (mask.sum(axis=0) > 2).any():
                continue
            assert result.J <= ps.evaluate_schedule(sys, Schedule(mask)).J + 1e-12

    def test_tie_keeps_lexicographically_smallest(self):
        # Two interchangeable sensors on a decoupled symmetric plant: the
        # single-activation schedules score identically, and the winner must
        # be the mask whose row-major bit string sorts first.
        sys = SystemModel(
            A=0.5 * np.eye(2), B=np.eye(2), C=np.eye(2), Q=np.eye(2), R=np.eye(2)
        )
        result = ps.exhaustive_search(sys, K=1, eta=1, total_activations=1)
        np.testing.assert_array_equal(result.schedule.mask, [[0, 1]])

    def test_budget_refusal_is_upfront(self, rng):
        sys = random_stable_system(rng, 2, 2)
        with pytest.raises(BudgetError, match="budget"):
            ps.exhaustive_search(sys, K=2, eta=2, budget=10)

    def test_infeasible_total_rejected(self, rng):
        sys = random_stable_system(rng, 2, 1)
        with pytest.raises(InputError, match="feasible"):
            ps.exhaustive_search(sys, K=2, eta=1, total_activations=5)

    def test_undetectable_candidates_skipped(self):
        sys = scalar_unstable_system()
        result = ps.exhaustive_search(sys, K=2, eta=1)
        # The empty schedule leaves the unstable mode unobserved.
        assert result.n_skipped == 1
        assert result.n_evaluated == 2
        assert result.schedule.total_activations == 1

    def test_raises_when_nothing_is_estimable(self):
        sys = scalar_unstable_system()
        with pytest.raises(InitializationError, match="every feasible"):
            ps.exhaustive_search(sys, K=2, eta=1, total_activations=0)


class TestRandomBaseline:
    def test_deterministic_in_seed(self, rng):
        sys = random_stable_system(rng, 3, 2)
        a = ps.random_baseline(sys, K=3, eta=2, total_activations=3, trials=20, seed=11)
        b = ps.random_baseline(sys, K=3, eta=2, total_activations=3, trials=20, seed=11)
        assert a.values == b.values
        c = ps.random_baseline(sys, K=3, eta=2, total_activations=3, trials=20, seed=12)
        assert a.values != c.values

    def test_jobs_do_not_change_results(self, rng):
        sys = random_stable_system(rng, 3, 2)
        serial = ps.random_baseline(sys, K=3, eta=2, total_activations=3, trials=16, seed=5)
        threaded = ps.random_baseline(
            sys, K=3, eta=2, total_activations=3, trials=16, seed=5, jobs=4
        )
        assert serial.values == threaded.values

    def test_unique_feasible_mask_collapses_statistics(self, rng):
        sys = random_stable_system(rng, 2, 2)
        result = ps.random_baseline(sys, K=2, eta=2, total_activations=4, trials=8, seed=3)
        expected = ps.evaluate_schedule(sys, Schedule.all_on(2, 2)).J
        assert result.std == 0.0
        assert result.mean == pytest.approx(expected, rel=1e-12)
        assert result.min == result.max == result.values[0]

    def test_infeasible_total_rejected(self, rng):
        sys = random_stable_system(rng, 2, 1)
        with pytest.raises(InputError, match="infeasible"):
            ps.random_baseline(sys, K=2, eta=1, total_activations=3, trials=5, seed=0)

    def test_zero_trials_rejected(self, rng):
        sys = random_stable_system(rng, 2, 1)
        with pytest.raises(InputError, match="trials"):
            ps.random_baseline(sys, K=2, eta=1, total_activations=1, trials=0, seed=0)

    def test_statistics_consistent(self, rng):
        sys = random_stable_system(rng, 3, 2)
        result = ps.random_baseline(sys, K=3, eta=2, total_activations=2, trials=30, seed=9)
        arr = np.array(result.values)
        assert result.mean == pytest.approx(arr.mean())
        assert result.std == pytest.approx(arr.std())
        assert result.min == pytest.approx(arr.min())
        assert result.max == pytest.approx(arr.max())


class TestDrawUniformity:
    def test_draws_are_feasible(self):
        bounds = (2, 1)
        table = _count_table(3, bounds)
        gen = np.random.default_rng(77)
        for _ in range(200):
            mask = _draw_mask(gen, 3, bounds, total=2, table=table)
            assert mask.sum() == 2
            assert (mask.sum(axis=0) <= np.array(bounds)).all()

    def test_uniform_over_masks_not_count_splits(self):
        # With K = 3, bounds (2, 1), total 2 there are 9 masks splitting the
        # activations (1, 1) across sensors and 3 masks splitting (2, 0).
        # Uniformity over masks puts the (2, 0) split at probability 1/4; a
        # sampler uniform over splits would sit near 1/2 instead.
        bounds = (2, 1)
        table = _count_table(3, bounds)
        gen = np.random.default_rng(123)
        draws = 4000
        heavy = sum(
            _draw_mask(gen, 3, bounds, total=2, table=table)[:, 0].sum() == 2
            for _ in range(draws)
        )
        assert abs(heavy / draws - 0.25) < 0.035

    def test_all_masks_reachable(self):
        bounds = (1, 1)
        table = _count_table(2, bounds)
        gen = np.random.default_rng(5)
        seen = set()
        for _ in range(300):
            mask = _draw_mask(gen, 2, bounds, total=1, table=table)
            seen.add(tuple(mask.ravel()))
        assert len(seen) == 4


class TestCountTable:
    def test_counts_match_enumeration(self):
        K, bounds = 3, (2, 1)
        table = _count_table(K, bounds)
        for total in range(4):
            brute = 0
            for bits in itertools.product((0, 1), repeat=K * 2):
                mask = np.array(bits).reshape(K, 2)
                if (mask.sum(axis=0) <= np.array(bounds)).all() and mask.sum() == total:
                    brute += 1
            assert table[0][total] == brute


class TestBaselineResult:
    def test_from_values(self):
        result = BaselineResult.from_values([2.0, 4.0])
        assert result.mean == 3.0
        assert result.std == 1.0
        assert result.values == (2.0, 4.0)
