"""Budgets, selection strategies and the full adaptation loop."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from evidact import (
    LabelOracle,
    Pools,
    QueryStrategy,
    ScheduleConfig,
    ShiftBenchmarkConfig,
    TrainConfig,
    baseline_select,
    budget_schedule,
    duc_select,
    gen_shifted_gaussians,
    make_pools,
    run_active_da,
    select_for_strategy,
)
from evidact.active import STRATEGY_KINDS, ActiveState, _selection_epochs


class TestBudget:
    def test_even_split(self):
        assert budget_schedule(1000, 0.05, 5) == (50, (10, 10, 10, 10, 10))
        assert budget_schedule(1000, 1.0, 1) == (1000, (1000,))

    def test_remainder_on_final_step(self):
        total, sizes = budget_schedule(103, 0.05, 5)
        assert (total, sizes) == (5, (1, 1, 1, 1, 1))
        total, sizes = budget_schedule(1000, 0.052, 5)
        assert total == 52 and sizes == (10, 10, 10, 10, 12)

    def test_budget_below_steps_rejected(self):
        with pytest.raises(ValueError):
            budget_schedule(20, 0.05, 5)  # rounds to 1 sample for 5 steps

    def test_validation(self):
        with pytest.raises(ValueError):
            budget_schedule(0, 0.5, 1)
        with pytest.raises(ValueError):
            budget_schedule(100, 1.5, 1)
        with pytest.raises(ValueError):
            budget_schedule(100, 0.5, 0)


class TestDucSelect:
    def test_two_round_hand_trace(self):
        u_dis = np.array([0.9, 0.8, 0.7, 0.6, 0.5, 0.4])
        u_data = np.array([0.1, 0.2, 0.9, 0.8, 1.0, 1.0])
        # round 1 keeps indices 0..3, so the u_data=1.0 entries never compete
        assert duc_select(u_dis, u_data, kappa=2, b=2).tolist() == [2, 3]

    def test_kappa_one_is_pure_u_dis(self):
        u_dis = np.array([0.1, 0.9, 0.5, 0.7])
        u_data = np.array([1.0, 0.0, 1.0, 0.0])
        assert duc_select(u_dis, u_data, kappa=1, b=2).tolist() == [1, 3]

    def test_wide_first_round_is_pure_u_data(self):
        u_dis = np.array([0.1, 0.9, 0.5, 0.7])
        u_data = np.array([1.0, 0.0, 0.9, 0.0])
        assert duc_select(u_dis, u_data, kappa=10, b=2).tolist() == [0, 2]

    def test_ties_break_to_lower_index(self):
        u_dis = np.array([0.5, 0.5, 0.5, 0.5])
        u_data = np.array([0.2, 0.2, 0.2, 0.2])
        assert duc_select(u_dis, u_data, kappa=1, b=2).tolist() == [0, 1]

    def test_empty_pool(self):
        assert duc_select(np.array([]), np.array([]), kappa=2, b=3).size == 0

    def test_validation(self):
        with pytest.raises(ValueError):
            duc_select(np.array([1.0]), np.array([1.0, 2.0]), 1, 1)
        with pytest.raises(ValueError):
            duc_select(np.array([1.0]), np.array([1.0]), 0, 1)


class TestBaselines:
    def test_entropy_prefers_flat(self, rng):
        alpha = np.array([[1.0, 1.0], [9.0, 1.0]])
        assert baseline_select("entropy", alpha, 1, rng).tolist() == [0]

    def test_margin_prefers_smallest_gap(self, rng):
        alpha = np.array([[0.5, 0.5], [0.9, 0.1]])
        assert baseline_select("margin_bvsb", alpha, 1, rng).tolist() == [0]

    def test_random_reproducible(self):
        alpha = np.ones((30, 3))
        a = baseline_select("random", alpha, 5, np.random.default_rng(4))
        b = baseline_select("random", alpha, 5, np.random.default_rng(4))
        assert np.array_equal(a, b)
        assert np.unique(a).size == 5

    def test_unknown_kind(self, rng):
        with pytest.raises(ValueError):
            baseline_select("coreset", np.ones((3, 2)), 1, rng)

    def test_dispatch_covers_all_kinds(self, rng):
        alpha = np.exp(np.random.default_rng(1).normal(size=(40, 3)))
        for kind in STRATEGY_KINDS:
            picked = select_for_strategy(QueryStrategy(kind, kappa=3), alpha, 4, rng)
            assert picked.size == 4
            assert np.array_equal(picked, np.sort(picked))


class TestPools:
    def _datasets(self):
        return gen_shifted_gaussians(ShiftBenchmarkConfig(n_source=60, n_target=60))

    def test_oracle_bounds(self):
        oracle = LabelOracle(np.array([0, 1, 2]))
        assert oracle.query(np.array([2, 0])).tolist() == [2, 0]
        with pytest.raises(ValueError):
            oracle.query(np.array([3]))

    def test_acquire_moves_ids(self):
        src, tgt = self._datasets()
        pools = make_pools(src, tgt, total_budget=6, step_sizes=(3, 3))
        assert pools.unlabeled_features().shape[0] == 60
        pools.acquire(np.array([5, 9, 11]))
        assert pools.unlabeled_features().shape[0] == 57
        X_l, y_l = pools.labeled_target()
        assert X_l.shape[0] == 3
        assert np.array_equal(y_l, tgt.labels[[5, 9, 11]])
        assert 5 not in pools.state.unlabeled_ids

    def test_double_acquire_rejected(self):
        src, tgt = self._datasets()
        pools = make_pools(src, tgt, total_budget=4, step_sizes=(2, 2))
        pools.acquire(np.array([0, 1]))
        with pytest.raises(ValueError):
            pools.acquire(np.array([1, 2]))

    def test_state_validates_subset(self):
        state = ActiveState(
            labeled_ids=np.empty(0, dtype=np.int64),
            unlabeled_ids=np.arange(10),
            total_budget=4,
            step_sizes=(2, 2),
        )
        with pytest.raises(ValueError):
            state.mark_labeled(np.array([42]))
        with pytest.raises(ValueError):
            state.mark_labeled(np.array([1, 1]))


class TestSelectionEpochs:
    def test_even_spacing(self):
        assert _selection_epochs(60, 5) == [10, 20, 30, 40, 50]
        assert _selection_epochs(12, 3) == [3, 6, 9]

    def test_too_few_epochs(self):
        with pytest.raises(ValueError):
            _selection_epochs(3, 5)


@pytest.fixture(scope="module")
def short_run():
    src, tgt = gen_shifted_gaussians(ShiftBenchmarkConfig(n_source=120, n_target=120))
    cfg = TrainConfig(epochs=12, seed=0)
    params, report = run_active_da(
        src, tgt, cfg, QueryStrategy("duc_two_round", 10), ScheduleConfig(0.05, 2)
    )
    return params, report


class TestRunActiveDa:
    def test_budget_bookkeeping(self, short_run):
        _, report = short_run
        assert report.total_budget == 6
        assert report.step_sizes == (3, 3)
        assert report.final["n_labeled"] == 6
        picked = [i for step in report.steps for i in step["selected_ids"]]
        assert len(picked) == 6 and len(set(picked)) == 6

    def test_report_schema(self, short_run):
        _, report = short_run
        doc = report.to_dict()
        assert doc["report_version"] == 1
        assert len(doc["steps"]) == 2
        assert len(doc["loss_history"]) == 12
        for record in doc["steps"]:
            assert {"step", "epoch", "n_labeled", "selected_ids",
                    "source_accuracy", "target_accuracy"} <= set(record)

    def test_reproducible(self):
        src, tgt = gen_shifted_gaussians(ShiftBenchmarkConfig(n_source=80, n_target=80))
        cfg = TrainConfig(epochs=6, seed=3)
        kwargs = dict(strategy=QueryStrategy("random"), schedule=ScheduleConfig(0.1, 2))
        _, a = run_active_da(src, tgt, cfg, **kwargs)
        _, b = run_active_da(src, tgt, cfg, **kwargs)
        assert a.to_dict() == b.to_dict()

    def test_zero_budget_trains_without_selection(self):
        src, tgt = gen_shifted_gaussians(ShiftBenchmarkConfig(n_source=60, n_target=60))
        _, report = run_active_da(
            src, tgt, TrainConfig(epochs=4), schedule=ScheduleConfig(0.0, 5)
        )
        assert report.total_budget == 0
        assert report.steps == []
        assert report.final["n_labeled"] == 0


class TestStrategyConfig:
    def test_validation(self):
        with pytest.raises(ValueError):
            QueryStrategy("coreset")
        with pytest.raises(ValueError):
            QueryStrategy("duc_two_round", kappa=0)
        with pytest.raises(ValueError):
            ScheduleConfig(budget_fraction=1.5)
        with pytest.raises(ValueError):
            ScheduleConfig(steps=0)


@settings(max_examples=80, deadline=None)
@given(
    st.integers(min_value=1, max_value=500),
    st.integers(min_value=1, max_value=12),
    st.integers(min_value=1, max_value=20),
    st.integers(min_value=0, max_value=2**31),
)
def test_two_round_subset_property(n, b, kappa, seed):
    rng = np.random.default_rng(seed)
    u_dis = rng.normal(size=n)
    u_data = rng.normal(size=n)
    picked = duc_select(u_dis, u_data, kappa, b)
    assert picked.size == min(b, n)
    assert np.unique(picked).size == picked.size
    # every pick comes from the kappa*b highest u_dis scores
    shortlist_size = min(kappa * b, n)
    threshold = np.sort(u_dis)[-shortlist_size]
    assert (u_dis[picked] >= threshold - 1e-12).all()
