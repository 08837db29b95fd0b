"""Detection primitives for the five conflict classes."""

import itertools

from ricsim.detect import (
    ImplicitState,
    attribute_implicit,
    detect_cross_loop,
    detect_direct,
    detect_indirect,
    effect_signs,
    materialize_virtuals,
    update_implicit,
)
from ricsim.ran import Target, Topology
from ricsim.records import Decision, PolicyConstraint


def two_cells() -> Topology:
    return Topology(cells=("x", "y"), neighbors={"x": ("y",), "y": ("x",)})


def D(did, app, target_key, value, tick=5, origin=None, delivery=None, previous=None):
    return Decision(
        decision_id=did,
        app_id=app,
        ric_id="R1",
        target=Target.parse(target_key),
        value=value,
        tick=tick,
        previous=previous,
        origin_ric=origin,
        delivery_tick=delivery,
    )


def make_id():
    counter = itertools.count(1)
    return lambda: f"cf-{next(counter):05d}"


def at_zero(_decision) -> float:
    return 0.0


# -- direct (C1/C4) -----------------------------------------------------------


def test_contested_target_with_distinct_values_is_direct_conflict():
    pool = [D("d-1", "a", "cio:x:y", 1.0), D("d-2", "b", "cio:x:y", 0.5)]
    records = detect_direct(pool, make_id(), "R1", 5)
    assert len(records) == 1
    r = records[0]
    assert r.conflict_class == "C1"
    assert r.implicated == ("d-1", "d-2")
    assert r.scope == ("x", "y")
    assert r.evidence["target"] == "cio:x:y"
    assert r.evidence["values"] == {"d-1": 1.0, "d-2": 0.5}


def test_single_app_never_conflicts_with_itself():
    pool = [D("d-1", "a", "cio:x:y", 1.0), D("d-2", "a", "cio:x:y", -1.0)]
    assert detect_direct(pool, make_id(), "R1", 5) == []


def test_identical_values_are_not_a_conflict():
    pool = [D("d-1", "a", "cio:x:y", 1.0), D("d-2", "b", "cio:x:y", 1.0)]
    assert detect_direct(pool, make_id(), "R1", 5) == []


def test_group_semantics_implicate_every_writer_of_a_contested_target():
    # the app-pair and the value-pair need not be the same pair
    pool = [
        D("d-1", "a", "cio:x:y", 1.0),
        D("d-2", "a", "cio:x:y", 0.5),
        D("d-3", "b", "cio:x:y", 1.0),
    ]
    records = detect_direct(pool, make_id(), "R1", 5)
    assert len(records) == 1 and records[0].implicated == ("d-1", "d-2", "d-3")


def test_remote_member_upgrades_direct_conflict_to_inter_ric():
    pool = [
        D("d-1", "a", "cio:x:y", 1.0),
        D("d-9", "peer", "cio:x:y", -1.0, origin="R2", delivery=5),
    ]
    records = detect_direct(pool, make_id(), "R1", 5)
    assert [r.conflict_class for r in records] == ["C4"]


# -- signed effects and indirect (C2/C4) ------------------------------------------


def test_effect_signs_multiply_edge_sign_by_change_direction():
    topo = two_cells()
    up = effect_signs(D("d-1", "a", "cio:x:y", 1.0), topo, at_zero)
    assert up == {
        ("x", "load"): -1,
        ("y", "load"): +1,
        ("x", "pingpong"): +1,
        ("y", "pingpong"): +1,
    }
    down = effect_signs(D("d-2", "a", "cio:x:y", -1.0), topo, at_zero)
    assert down == {k: -v for k, v in up.items()}


def test_zero_delta_decisions_have_no_effects():
    assert effect_signs(D("d-1", "a", "cio:x:y", 0.0), two_cells(), at_zero) == {}


def test_opposing_shared_effects_are_an_indirect_conflict():
    topo = two_cells()
    pool = [D("d-1", "a", "cio:x:y", 1.0), D("d-2", "b", "cio:y:x", 1.0)]
    records = detect_indirect(pool, topo, at_zero, make_id(), "R1", 5)
    assert len(records) == 1
    r = records[0]
    assert r.conflict_class == "C2"
    assert r.implicated == ("d-1", "d-2")
    assert r.scope == ("x", "y")  # both load effects oppose
    shared = {(s["cell"], s["kpi"]) for s in r.evidence["shared"]}
    assert shared == {("x", "load"), ("y", "load")}


def test_aligned_effects_are_not_a_conflict():
    topo = two_cells()
    # both push load out of x and into y
    pool = [D("d-1", "a", "cio:x:y", 1.0), D("d-2", "b", "tx_power:y", 41.0, previous=40.0)]
    assert detect_indirect(pool, topo, at_zero_tx, make_id(), "R1", 5) == []


def at_zero_tx(decision) -> float:
    return 40.0 if decision.target.param == "tx_power" else 0.0


def test_indirect_excludes_same_app_and_same_target_pairs():
    topo = two_cells()
    same_app = [D("d-1", "a", "cio:x:y", 1.0), D("d-2", "a", "cio:y:x", 1.0)]
    assert detect_indirect(same_app, topo, at_zero, make_id(), "R1", 5) == []
    same_target = [D("d-1", "a", "cio:x:y", 1.0), D("d-2", "b", "cio:x:y", -1.0)]
    assert detect_indirect(same_target, topo, at_zero, make_id(), "R1", 5) == []


def test_indirect_ignores_zero_delta_counterparties():
    topo = two_cells()
    pool = [D("d-1", "a", "cio:x:y", 1.0), D("d-2", "b", "cio:y:x", 0.0)]
    assert detect_indirect(pool, topo, at_zero, make_id(), "R1", 5) == []


def test_remote_member_upgrades_indirect_conflict_to_inter_ric():
    topo = two_cells()
    pool = [
        D("d-1", "a", "cio:x:y", 1.0),
        D("d-9", "peer", "cio:y:x", 1.0, origin="R2", delivery=5),
    ]
    records = detect_indirect(pool, topo, at_zero, make_id(), "R1", 5)
    assert [r.conflict_class for r in records] == ["C4"]


# -- cross-loop (C5) ------------------------------------------------------------


def floor_constraint(cid="pc-1", cell="x", bound=36.0, from_tick=1, to_tick=None):
    return PolicyConstraint(cid, (cell,), "tx_power", "min", bound, 1, from_tick, to_tick)


def test_violating_decision_is_cross_loop_conflict():
    record = detect_cross_loop(D("d-1", "a", "tx_power:x", 34.0), [floor_constraint()], make_id(), 5)
    assert record is not None and record.conflict_class == "C5"
    assert record.implicated == ("d-1",)
    assert record.evidence == {"constraints": ["pc-1"], "requested": 34.0}


def test_compliant_inactive_or_out_of_scope_decisions_pass():
    mk = make_id()
    assert detect_cross_loop(D("d-1", "a", "tx_power:x", 36.0), [floor_constraint()], mk, 5) is None
    future = floor_constraint(from_tick=9)
    assert detect_cross_loop(D("d-1", "a", "tx_power:x", 30.0), [future], mk, 5) is None
    other_cell = floor_constraint(cell="y")
    assert detect_cross_loop(D("d-1", "a", "tx_power:x", 30.0), [other_cell], mk, 5) is None
    other_param = D("d-1", "a", "cio:x:y", 1.0)
    assert detect_cross_loop(other_param, [floor_constraint()], mk, 5) is None


def test_multiple_hits_are_listed_sorted():
    constraints = [floor_constraint("pc-9"), floor_constraint("pc-2", bound=38.0)]
    record = detect_cross_loop(D("d-1", "a", "tx_power:x", 30.0), constraints, make_id(), 5)
    assert record.evidence["constraints"] == ["pc-2", "pc-9"]


# -- virtual decisions from peer reports ---------------------------------------------


def peer_report(publish_tick=9):
    return {
        "origin": "R2",
        "publish_tick": publish_tick,
        "actuated": [
            {
                "decision_id": "d-77",
                "app_id": "peer",
                "target": "cio:x:y",
                "value": 1.5,
                "previous": 1.0,
                "tick": publish_tick,
            },
            {
                "decision_id": "d-78",
                "app_id": "peer",
                "target": "cio:q:r",
                "value": 1.0,
                "previous": 0.0,
                "tick": publish_tick,
            },
        ],
    }


def test_virtuals_are_windowed_on_delivery_tick_and_boundary_filtered():
    out = materialize_virtuals([(10, peer_report())], frozenset({"x"}), 1, 10)
    assert len(out) == 1  # cio:q:r does not touch the boundary
    v = out[0]
    assert v.decision_id == "d-77" and v.remote
    assert v.origin_ric == "R2" and v.delivery_tick == 10
    assert v.previous == 1.0 and v.tick == 9 and v.window_tick() == 10


def test_virtuals_outside_the_window_are_dropped():
    assert materialize_virtuals([(9, peer_report())], frozenset({"x"}), 1, 10) == []
    assert len(materialize_virtuals([(9, peer_report())], frozenset({"x"}), 3, 10)) == 1
    assert materialize_virtuals([(7, peer_report())], frozenset({"x"}), 3, 10) == []


# -- implicit degradation streaks (C3) ---------------------------------------------


def test_streak_must_persist_before_firing_once():
    state = ImplicitState()
    baselines = {("x", "load"): 0.5}
    degraded = {("x", "load"): 0.7}
    assert update_implicit(state, degraded, baselines, 0.1, 2) == []
    assert update_implicit(state, degraded, baselines, 0.1, 2) == [("x", "load", 0.7 - 0.5)]
    # suppressed while the degradation stays active
    assert update_implicit(state, degraded, baselines, 0.1, 2) == []


def test_recovery_resets_streak_and_allows_refire():
    state = ImplicitState()
    baselines = {("x", "load"): 0.5}
    degraded = {("x", "load"): 0.7}
    healthy = {("x", "load"): 0.5}
    update_implicit(state, degraded, baselines, 0.1, 2)
    update_implicit(state, degraded, baselines, 0.1, 2)
    update_implicit(state, healthy, baselines, 0.1, 2)  # clears the active flag
    assert update_implicit(state, degraded, baselines, 0.1, 2) == []
    assert len(update_implicit(state, degraded, baselines, 0.1, 2)) == 1


def test_degradation_threshold_is_strict():
    state = ImplicitState()
    baselines = {("x", "load"): 0.0}
    at_delta = {("x", "load"): 0.5}
    assert update_implicit(state, at_delta, baselines, 0.5, 1) == []
    assert state.streaks[("x", "load")] == 0


def test_attribution_matches_dependency_edges_within_lookback():
    topo = two_cells()
    recent = [
        D("d-1", "a", "cio:x:y", 1.0, tick=4),  # (y, load, +1) edge -> candidate
        D("d-2", "b", "ttt:y", 128.0, tick=4),  # ttt edges do not touch load
        D("d-3", "c", "cio:x:y", 1.0, tick=10),  # current tick: excluded
        D("d-4", "e", "cio:x:y", 1.0, tick=1),  # before the lookback window
    ]
    hits = attribute_implicit("y", "load", recent, topo, lookback=8, tick=10)
    assert [d.decision_id for d in hits] == ["d-1"]
    # the window lower bound is inclusive
    hits = attribute_implicit("y", "load", recent, topo, lookback=9, tick=10)
    assert [d.decision_id for d in hits] == ["d-4", "d-1"]
