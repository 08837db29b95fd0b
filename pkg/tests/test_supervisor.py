"""Supervision loop: utility scoring, outcome statistics, strategy rotation."""

import pytest

from ricsim.policy import CmPolicy
from ricsim.ran import KpiFrame
from ricsim.supervisor import (
    StrategyStats,
    adapt,
    bad_fraction,
    build_report,
    rerank,
    score_outcome,
    utility,
    window_utility,
)


def test_bad_fraction_normalizes_each_kpi():
    assert bad_fraction("load", 0.9) == pytest.approx(0.5, abs=1e-12)
    assert bad_fraction("load", 0.7) == 0.0  # below the knee nothing is bad
    assert bad_fraction("energy", 2.0) == pytest.approx(0.625, abs=1e-12)
    assert bad_fraction("energy", 1.0) == 0.0
    assert bad_fraction("pingpong", 0.3) == 0.3
    assert bad_fraction("hof", 0.05) == 0.05


def one_cell_frame(tick=1, load=0.9, pingpong=0.1, hof=0.05, energy=1.8):
    return KpiFrame(tick, {"x": {"load": load, "pingpong": pingpong, "hof": hof, "energy": energy}})


def test_utility_sums_weighted_goodness():
    weights = {"load": 1.0, "pingpong": 1.0, "hof": 1.0, "energy": 1.0}
    # badness: load 0.5, pingpong 0.1, hof 0.05, energy 0.5 -> U = 2.85
    assert utility(one_cell_frame(), ("x",), weights) == pytest.approx(2.85, abs=1e-12)


def test_utility_is_independent_of_weight_table_insertion_order():
    frame = one_cell_frame()
    forward = {"load": 1.0, "pingpong": 0.7, "hof": 1.3, "energy": 0.15}
    backward = dict(reversed(list(forward.items())))
    assert utility(frame, ("x",), forward) == utility(frame, ("x",), backward)


def test_utility_averages_over_visible_cells_only():
    weights = {"pingpong": 1.0}
    frame = KpiFrame(1, {"x": {"pingpong": 0.2}, "y": {"pingpong": 0.4}})
    assert utility(frame, ("x", "y"), weights) == pytest.approx(0.7, abs=1e-12)
    assert utility(frame, ("x", "ghost"), weights) == pytest.approx(0.8, abs=1e-12)
    assert utility(frame, ("ghost",), weights) == 0.0


def test_window_utility_is_the_mean():
    weights = {"pingpong": 1.0}
    frames = [one_cell_frame(pingpong=0.2), one_cell_frame(pingpong=0.4)]
    assert window_utility(frames, ("x",), weights) == pytest.approx(0.7, abs=1e-12)


def test_score_outcome_compares_after_window_to_before_window():
    weights = {"pingpong": 1.0}
    frames = {
        2: one_cell_frame(2, pingpong=0.2),
        3: one_cell_frame(3, pingpong=0.2),
        4: one_cell_frame(4, pingpong=0.1),
        5: one_cell_frame(5, pingpong=0.1),
    }
    delta = score_outcome(frames, resolution_tick=3, horizon=2, scope=("x",), weights=weights)
    assert delta == pytest.approx(0.1, abs=1e-12)


def test_score_outcome_clips_at_run_start_and_needs_both_windows():
    weights = {"pingpong": 1.0}
    frames = {1: one_cell_frame(1, pingpong=0.2), 2: one_cell_frame(2, pingpong=0.2)}
    assert score_outcome(frames, 1, 3, ("x",), weights) == 0.0  # clipped before-window is frame 1
    assert score_outcome({}, 1, 3, ("x",), weights) == 0.0


def test_strategy_stats_record_rate_and_payload():
    stats = StrategyStats()
    for success in (True, False, False, True, False):
        stats.record("C2", "prioritization", success)
    assert stats.rate("C2", "prioritization") == (5, 0.4)
    assert stats.rate("C1", "cooldown") == (0, 0.0)
    assert stats.to_payload() == {
        "C2/prioritization": {"trials": 5, "successes": 2, "rate": 0.4}
    }


def losing_stats(cls="C2", strategy="prioritization", trials=10, wins=4):
    stats = StrategyStats()
    for i in range(trials):
        stats.record(cls, strategy, i < wins)
    return stats


def test_adapt_rotates_a_losing_strategy_once():
    policy = CmPolicy()  # C2 default is cooldown; set to prioritization for the test
    policy.strategies["C2"] = "prioritization"
    changes = adapt(policy, losing_stats())
    assert changes == [
        {"class": "C2", "from": "prioritization", "to": "cooldown", "trials": 10, "rate": 0.4}
    ]
    assert policy.strategies["C2"] == "cooldown"


def test_adapt_requires_enough_trials_and_a_losing_record():
    few = CmPolicy()
    few.strategies["C2"] = "prioritization"
    assert adapt(few, losing_stats(trials=9, wins=0)) == []
    winning = CmPolicy()
    winning.strategies["C2"] = "prioritization"
    assert adapt(winning, losing_stats(trials=10, wins=5)) == []  # rate 0.5 is not < 0.5


def test_adapt_rotation_wraps_around():
    policy = CmPolicy()
    policy.strategies["C1"] = "limitation"
    changes = adapt(policy, losing_stats(cls="C1", strategy="limitation", trials=10, wins=0))
    assert changes[0]["to"] == "prioritization"


def test_rerank_orders_apps_by_mean_outcome_worst_first():
    policy = CmPolicy(priorities={"a": 5, "b": 5})
    new = rerank(policy, {"a": (-1.0, 2), "b": (1.0, 2)})
    assert new == {"a": 1, "b": 2}
    policy.priorities = new
    assert rerank(policy, {"a": (-1.0, 2), "b": (1.0, 2)}) is None  # nothing changes


def test_build_report_recounts_from_the_log():
    entries = [
        {"tick": 1, "seq": 0, "kind": "kpi-frame", "payload": {"values": {"x": {"pingpong": 0.2}}}},
        {
            "tick": 1,
            "seq": 1,
            "kind": "conflict-detected",
            "payload": {"ric_id": "R1", "class": "C1", "conflict_id": "cf-1"},
        },
        {
            "tick": 1,
            "seq": 2,
            "kind": "decision-rejected",
            "payload": {"ric_id": "R1", "verdict": "rejected-conflict"},
        },
        {
            "tick": 1,
            "seq": 3,
            "kind": "decision-gated",
            "payload": {"ric_id": "R1", "verdict": "accepted"},
        },
        {
            "tick": 2,
            "seq": 4,
            "kind": "outcome-recorded",
            "payload": {"ric_id": "R1", "class": "C1", "strategy": "prioritization", "success": True},
        },
    ]
    report = build_report(entries, (1, 2), ["R1"], {"R1": "digest"}, {"pingpong": 1.0})
    ric = report["rics"]["R1"]
    assert ric["conflicts"] == {"C1": 1, "C2": 0, "C3": 0, "C4": 0, "C5": 0}
    assert ric["verdicts"] == {"rejected-conflict": 1, "accepted": 1}
    assert ric["strategy_stats"] == {
        "C1/prioritization": {"trials": 1, "successes": 1, "rate": 1.0}
    }
    assert ric["policy_digest"] == "digest"
    assert report["interval"] == [1, 2]
    assert report["utility_trajectory"] == [[1, pytest.approx(0.8, abs=1e-12)]]
    assert "viability_estimates" not in report
