"""Metrics computed from synthetic event logs with hand-checked values."""

import csv
import io

import pytest

from helpers import scripted, two_cell_doc
from ricsim.metrics import (
    CompareError,
    compare_metrics,
    detection_metrics,
    metrics_to_csv,
    network_metrics,
    resolution_metrics,
    scenario_digest,
)
from ricsim.scenario import load_scenario


def entry(at: int, kind: str, **payload) -> dict:
    return {"tick": at, "seq": 0, "kind": kind, "payload": payload}


# -- scenario digest ----------------------------------------------------------


def test_digest_ignores_seed_and_avoidance_switch():
    base = two_cell_doc()
    reseeded = two_cell_doc(seed=99)
    posthoc = two_cell_doc(cm={"detection": {"delta": 5.0}, "policy": {"conflict_avoidance": False}})
    assert scenario_digest(load_scenario(base)) == scenario_digest(load_scenario(reseeded))
    assert scenario_digest(load_scenario(base)) == scenario_digest(load_scenario(posthoc))
    longer = two_cell_doc(ticks=21)
    assert scenario_digest(load_scenario(base)) != scenario_digest(load_scenario(longer))


# -- detection metrics --------------------------------------------------------


def gt_doc(**over) -> dict:
    return two_cell_doc(
        ticks=12,
        apps=[scripted("s1", rank=1, writable=["cio:x:y"]), scripted("s2", rank=2, writable=["cio:x:y"])],
        injections=[
            {"id": "i1", "tick": 5, "app": "s1", "target": "cio:x:y", "value": 1.0},
            {"id": "i2", "tick": 5, "app": "s2", "target": "cio:x:y", "value": -1.0},
        ],
        ground_truth=[
            {"id": "g1", "conflict_class": "C1", "window": [5, 6], "injections": ["i1", "i2"]},
            {"id": "g2", "conflict_class": "C4", "window": [7, 8], "injections": ["i1"]},
        ],
        **over,
    )


def synthetic_log() -> list[dict]:
    return [
        entry(5, "decision-submitted", decision_id="d-1", tick=5, injection_id="i1"),
        entry(5, "decision-submitted", decision_id="d-2", tick=5, injection_id="i2"),
        entry(6, "decision-submitted", decision_id="d-3", tick=6),
        # matches g1 one tick after the injections were submitted
        entry(6, "conflict-detected", conflict_id="cf-1", **{"class": "C1"}, implicated=["d-1", "d-2"]),
        # wrong class/window for anything seeded: a false positive
        entry(9, "conflict-detected", conflict_id="cf-2", **{"class": "C2"}, implicated=["d-3"]),
        # heuristic class: excluded from FP by default
        entry(9, "conflict-detected", conflict_id="cf-3", **{"class": "C3"}, implicated=[]),
    ]


def test_detection_matching_latency_and_rates():
    m = detection_metrics(synthetic_log(), load_scenario(gt_doc()))
    assert (m["tp"], m["fp"], m["fn"]) == (1, 1, 1)
    assert m["fp_rate"] == 0.5 and m["fn_rate"] == 0.5
    assert m["latency_mean"] == 1.0
    assert m["detections_total"] == 3
    assert m["c3_excluded_from_fp"] == 1
    assert m["per_class"]["C1"] == {
        "tp": 1, "fp": 0, "fn": 0, "fp_rate": 0.0, "fn_rate": 0.0, "latency_mean": 1.0,
    }
    assert m["per_class"]["C4"]["fn"] == 1
    assert m["per_class"]["C2"]["fp"] == 1


def test_c3_counts_as_fp_when_opted_in():
    doc = gt_doc(metrics={"count_c3_fp": True})
    m = detection_metrics(synthetic_log(), load_scenario(doc))
    assert m["fp"] == 2
    assert m["c3_excluded_from_fp"] == 0
    assert m["per_class"]["C3"]["fp"] == 1


def test_detection_requires_implicated_coverage():
    # detection misses one seeded decision -> not a match -> fn
    log = synthetic_log()
    log[3]["payload"]["implicated"] = ["d-1"]
    m = detection_metrics(log, load_scenario(gt_doc()))
    assert m["per_class"]["C1"]["fn"] == 1
    assert m["fp"] == 2  # the C1 record now counts as spurious


def test_each_detection_matches_at_most_one_truth():
    # two identical truths, one detection: second truth stays unmatched
    doc = gt_doc()
    doc["ground_truth"].append(
        {"id": "g3", "conflict_class": "C1", "window": [5, 6], "injections": ["i1", "i2"]}
    )
    m = detection_metrics(synthetic_log(), load_scenario(doc))
    assert m["per_class"]["C1"]["tp"] == 1
    assert m["per_class"]["C1"]["fn"] == 1


# -- resolution metrics -------------------------------------------------------


def test_resolution_counters_and_time_to_resolve():
    log = [
        entry(3, "decision-gated", verdict="accepted"),
        entry(3, "decision-gated", verdict="modified"),
        entry(4, "decision-rejected", verdict="rejected-conflict"),
        entry(4, "conflict-detected", conflict_id="cf-1"),
        entry(6, "resolution-applied", conflict_id="cf-1", strategy="prioritization"),
        entry(7, "resolution-applied", conflict_id="cf-9", strategy="rollback"),
    ]
    m = resolution_metrics(log)
    assert m["verdicts"] == {"accepted": 1, "modified": 1, "rejected-conflict": 1}
    assert m["resolutions"] == 2
    assert m["rollbacks"] == 1
    assert m["time_to_resolve_mean"] == 2.0


# -- network metrics ----------------------------------------------------------


def test_network_means_utility_and_oscillation():
    frames = [
        entry(1, "kpi-frame", values={"x": {"load": 0.9}, "y": {"load": 0.7}}, offered={}),
        entry(2, "kpi-frame", values={"x": {"load": 0.9}, "y": {"load": 0.7}}, offered={}),
    ]
    acts = [
        entry(1, "decision-actuated", target="cio:x:y", value=0.5, previous=0.0),
        entry(1, "decision-actuated", target="cio:x:y", value=0.5, previous=0.5),  # no-op
        entry(2, "decision-actuated", target="cio:x:y", value=0.0, previous=0.5),
        entry(2, "decision-actuated", target="cio:x:y", value=0.5, previous=0.0),
        entry(2, "decision-actuated", target="tx_power:x", value=39.0, previous=40.0),
    ]
    m = network_metrics(frames + acts, weights={"load": 1.0})
    assert m["ticks"] == 2
    assert m["kpi_means"]["load"] == pytest.approx(0.8)
    # badness: x -> (0.9-0.8)/0.2 = 0.5, y -> 0
    assert m["kpi_badness_means"]["load"] == pytest.approx(0.25)
    assert m["per_cell_means"]["x"]["load"] == pytest.approx(0.9)
    # utility per frame: mean(1-0.5, 1-0) = 0.75
    assert m["utility_trajectory"] == [[1, 0.75], [2, 0.75]]
    assert m["utility_mean"] == pytest.approx(0.75)
    # signed deltas on cio:x:y: +0.5, -0.5, +0.5 -> two direction flips
    assert m["flips_total"] == 2
    assert m["oscillation_per_100"]["cio:x:y"] == pytest.approx(100.0)
    assert m["oscillation_per_100"]["tx_power:x"] == 0.0


# -- CSV flattening -----------------------------------------------------------


def test_csv_flattens_scalars_and_skips_lists():
    doc = {
        "scenario": {"name": "x", "ticks": 5},
        "network": {"utility_mean": 0.125, "utility_trajectory": [[1, 0.5]]},
        "flag": True,
    }
    rows = list(csv.reader(io.StringIO(metrics_to_csv(doc))))
    assert rows[0] == ["metric", "value"]
    table = dict(rows[1:])
    assert table["scenario.name"] == "x"
    assert table["scenario.ticks"] == "5"
    assert table["network.utility_mean"] == "0.125"
    assert table["flag"] == "True"
    assert not any(k.startswith("network.utility_trajectory") for k in table)


# -- run comparison -----------------------------------------------------------


def fake_metrics(cm: str, *, digest="d1", seed=0, badness=None, util=0.5, osc=None) -> dict:
    return {
        "scenario": {"name": "n", "digest": digest, "seed": seed, "ticks": 10, "cm": cm},
        "detection": {"tp": 1, "fp": 0, "fn": 0, "fp_rate": 0.0, "fn_rate": 0.0},
        "network": {
            "kpi_badness_means": badness
            or {"load": 0.2, "pingpong": 0.2, "hof": 0.2, "energy": 0.2},
            "utility_mean": util,
            "oscillation_per_100": osc or {},
            "flips_total": 4,
        },
    }


def test_compare_builds_trade_off_table():
    a = fake_metrics("off", osc={"cio:x:y": 50.0})
    b = fake_metrics(
        "on",
        badness={"load": 0.3, "pingpong": 0.1, "hof": 0.2, "energy": 0.2},
        util=0.6,
        osc={"cio:x:y": 10.0, "ttt:x": 5.0},
    )
    cmp = compare_metrics(a, b)
    assert cmp["cm"] == {"a": "off", "b": "on"}
    assert cmp["utility_mean"]["delta"] == pytest.approx(0.1)
    verdicts = {row["kpi"]: row["verdict"] for row in cmp["trade_off"]}
    assert verdicts == {
        "load": "deteriorated",
        "pingpong": "improved",
        "hof": "unchanged",
        "energy": "unchanged",
    }
    assert cmp["deteriorated"] == ["load"]
    assert cmp["improved"] == ["pingpong"]
    assert cmp["oscillation_per_100"] == {
        "cio:x:y": {"a": 50.0, "b": 10.0},
        "ttt:x": {"a": 0.0, "b": 5.0},
    }
    assert cmp["detection"]["a"]["tp"] == 1


def test_compare_rejects_mismatched_runs():
    with pytest.raises(CompareError, match="digest differs"):
        compare_metrics(fake_metrics("off"), fake_metrics("on", digest="other"))
    with pytest.raises(CompareError, match="seed differs"):
        compare_metrics(fake_metrics("off"), fake_metrics("on", seed=3))
