"""Run metrics computed from the raw event log.

Detection metrics match seeded ground-truth conflicts against detected
records: a record matches iff the class is equal, the detection tick falls
inside the expected window, and the implicated set covers the seeded
decisions. Unmatched records are false positives (implicit/C3 records are
excluded from FP by default — they are heuristic and reported separately);
unmatched ground truths are false negatives. Rates use the 0-by-convention
rule on empty denominators, and the report says so.

Oscillation counts direction flips per target from actuated value deltas;
rollback restores are not decisions and do not contribute.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
from collections import defaultdict

from ricsim.scenario import ScenarioConfig
from ricsim.supervisor import bad_fraction, utility
from ricsim.ran import KpiFrame

KPI_NAMES = ("load", "pingpong", "hof", "energy")


def scenario_digest(scenario: ScenarioConfig) -> str:
    """Content hash for run comparability. The seed and the CM on/off switch
    are excluded: the seed is checked separately and the switch is exactly
    what an A/B comparison varies."""
    raw = scenario.model_dump(mode="json")
    raw.pop("seed")
    raw["cm"]["policy"].pop("conflict_avoidance")
    blob = json.dumps(raw, sort_keys=True)
    return hashlib.sha256(blob.encode()).hexdigest()


def _mean(xs: list[float]) -> float:
    return sum(xs) / len(xs) if xs else 0.0


def detection_metrics(entries: list[dict], scenario: ScenarioConfig) -> dict:
    injection_to_decision: dict[str, str] = {}
    submit_tick: dict[str, int] = {}
    for e in entries:
        if e["kind"] != "decision-submitted":
            continue
        p = e["payload"]
        submit_tick[p["decision_id"]] = p["tick"]
        if "injection_id" in p:
            injection_to_decision[p["injection_id"]] = p["decision_id"]

    detections = [e for e in entries if e["kind"] == "conflict-detected"]
    matched: set[int] = set()
    per_class: dict[str, dict] = defaultdict(lambda: {"tp": 0, "fp": 0, "fn": 0, "latencies": []})
    latencies: list[float] = []
    tp = fn = 0
    for gt in sorted(scenario.ground_truth, key=lambda g: g.id):
        seeded = {injection_to_decision.get(i) for i in gt.injections}
        lo, hi = gt.window
        hit = None
        for idx, e in enumerate(detections):
            if idx in matched:
                continue
            p = e["payload"]
            if p["class"] != gt.conflict_class:
                continue
            if not (lo <= e["tick"] <= hi):
                continue
            if not seeded <= set(p["implicated"]):
                continue
            hit = idx
            break
        if hit is None:
            fn += 1
            per_class[gt.conflict_class]["fn"] += 1
            continue
        matched.add(hit)
        tp += 1
        per_class[gt.conflict_class]["tp"] += 1
        e = detections[hit]
        first = min(
            (submit_tick[d] for d in e["payload"]["implicated"] if d in submit_tick),
            default=e["tick"],
        )
        latency = e["tick"] - first
        latencies.append(latency)
        per_class[gt.conflict_class]["latencies"].append(latency)

    fp = 0
    c3_unmatched = 0
    for idx, e in enumerate(detections):
        if idx in matched:
            continue
        cls = e["payload"]["class"]
        if cls == "C3" and not scenario.metrics.count_c3_fp:
            c3_unmatched += 1
            continue
        fp += 1
        per_class[cls]["fp"] += 1

    def rate(a: int, b: int) -> float:
        return a / (a + b) if (a + b) else 0.0

    per_class_out = {}
    for cls in sorted(per_class):
        c = per_class[cls]
        per_class_out[cls] = {
            "tp": c["tp"],
            "fp": c["fp"],
            "fn": c["fn"],
            "fp_rate": rate(c["fp"], c["tp"]),
            "fn_rate": rate(c["fn"], c["tp"]),
            "latency_mean": _mean(c["latencies"]),
        }
    return {
        "tp": tp,
        "fp": fp,
        "fn": fn,
        "fp_rate": rate(fp, tp),
        "fn_rate": rate(fn, tp),
        "latency_mean": _mean(latencies),
        "per_class": per_class_out,
        "c3_excluded_from_fp": c3_unmatched if not scenario.metrics.count_c3_fp else 0,
        "detections_total": len(detections),
        "convention": "rates are 0 when the denominator is empty",
    }


def resolution_metrics(entries: list[dict]) -> dict:
    verdicts: dict[str, int] = defaultdict(int)
    detected_at: dict[str, int] = {}
    times: list[int] = []
    rollbacks = 0
    resolutions = 0
    for e in entries:
        kind, p = e["kind"], e["payload"]
        if kind in ("decision-gated", "decision-rejected"):
            verdicts[p["verdict"]] += 1
        elif kind == "conflict-detected":
            detected_at[p["conflict_id"]] = e["tick"]
        elif kind == "resolution-applied":
            resolutions += 1
            if p["strategy"] == "rollback":
                rollbacks += 1
            if p["conflict_id"] in detected_at:
                times.append(e["tick"] - detected_at[p["conflict_id"]])
    return {
        "verdicts": dict(sorted(verdicts.items())),
        "resolutions": resolutions,
        "rollbacks": rollbacks,
        "time_to_resolve_mean": _mean([float(x) for x in times]),
    }


def network_metrics(entries: list[dict], weights: dict[str, float]) -> dict:
    kpi_values: dict[str, list[float]] = {k: [] for k in KPI_NAMES}
    badness: dict[str, list[float]] = {k: [] for k in KPI_NAMES}
    per_cell: dict[str, dict[str, list[float]]] = defaultdict(lambda: {k: [] for k in KPI_NAMES})
    trajectory: list[list] = []
    actuations: dict[str, list[float]] = defaultdict(list)
    ticks = 0
    for e in entries:
        if e["kind"] == "kpi-frame":
            ticks = max(ticks, e["tick"])
            values = e["payload"]["values"]
            for cell, kpis in values.items():
                for kpi, v in kpis.items():
                    kpi_values[kpi].append(v)
                    badness[kpi].append(bad_fraction(kpi, v))
                    per_cell[cell][kpi].append(v)
            frame = KpiFrame(e["tick"], values)
            trajectory.append([e["tick"], utility(frame, tuple(sorted(values)), weights)])
        elif e["kind"] == "decision-actuated":
            p = e["payload"]
            actuations[p["target"]].append(p["value"] - p["previous"])
    oscillation: dict[str, float] = {}
    flips_total = 0
    for target in sorted(actuations):
        deltas = [d for d in actuations[target] if d != 0.0]
        flips = sum(
            1 for a, b in zip(deltas, deltas[1:]) if (a > 0) != (b > 0)
        )
        flips_total += flips
        oscillation[target] = flips * 100.0 / ticks if ticks else 0.0
    return {
        "kpi_means": {k: _mean(v) for k, v in kpi_values.items()},
        "kpi_badness_means": {k: _mean(v) for k, v in badness.items()},
        "per_cell_means": {
            cell: {k: _mean(v) for k, v in kpis.items()} for cell, kpis in sorted(per_cell.items())
        },
        "utility_mean": _mean([u for _, u in trajectory]),
        "utility_trajectory": trajectory,
        "oscillation_per_100": oscillation,
        "flips_total": flips_total,
        "ticks": ticks,
    }


def compute_metrics(entries: list[dict], scenario: ScenarioConfig, cm: str) -> dict:
    weights = scenario.cm.policy.kpi_weights
    return {
        "scenario": {
            "name": scenario.name,
            "digest": scenario_digest(scenario),
            "seed": scenario.seed,
            "ticks": scenario.ticks,
            "cm": cm,
        },
        "detection": detection_metrics(entries, scenario),
        "resolution": resolution_metrics(entries),
        "network": network_metrics(entries, weights),
    }


def _flatten(prefix: str, value, rows: list[tuple[str, str]]) -> None:
    if isinstance(value, dict):
        for k in value:
            _flatten(f"{prefix}.{k}" if prefix else str(k), value[k], rows)
    elif isinstance(value, (list, tuple)):
        return  # trajectories and tables live in the JSON document only
    else:
        rows.append((prefix, repr(value) if isinstance(value, float) else str(value)))


def metrics_to_csv(metrics: dict) -> str:
    rows: list[tuple[str, str]] = []
    _flatten("", metrics, rows)
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(["metric", "value"])
    writer.writerows(rows)
    return buf.getvalue()


class CompareError(ValueError):
    pass


def compare_metrics(a: dict, b: dict) -> dict:
    """Per-metric deltas and a KPI trade-off table for two runs of the same
    scenario and seed (CM configuration may differ)."""
    for key in ("seed", "digest"):
        if a["scenario"][key] != b["scenario"][key]:
            raise CompareError(
                f"runs are not comparable: scenario {key} differs "
                f"({a['scenario'][key]!r} vs {b['scenario'][key]!r})"
            )
    trade_off = []
    for kpi in KPI_NAMES:
        av = a["network"]["kpi_badness_means"][kpi]
        bv = b["network"]["kpi_badness_means"][kpi]
        delta = bv - av
        verdict = "unchanged" if delta == 0 else ("improved" if delta < 0 else "deteriorated")
        trade_off.append({"kpi": kpi, "a": av, "b": bv, "delta": delta, "verdict": verdict})
    oscillation = {}
    targets = set(a["network"]["oscillation_per_100"]) | set(b["network"]["oscillation_per_100"])
    for target in sorted(targets):
        oscillation[target] = {
            "a": a["network"]["oscillation_per_100"].get(target, 0.0),
            "b": b["network"]["oscillation_per_100"].get(target, 0.0),
        }
    return {
        "scenario": {k: a["scenario"][k] for k in ("name", "digest", "seed", "ticks")},
        "cm": {"a": a["scenario"]["cm"], "b": b["scenario"]["cm"]},
        "utility_mean": {
            "a": a["network"]["utility_mean"],
            "b": b["network"]["utility_mean"],
            "delta": b["network"]["utility_mean"] - a["network"]["utility_mean"],
        },
        "trade_off": trade_off,
        "deteriorated": [row["kpi"] for row in trade_off if row["verdict"] == "deteriorated"],
        "improved": [row["kpi"] for row in trade_off if row["verdict"] == "improved"],
        "oscillation_per_100": oscillation,
        "flips_total": {
            "a": a["network"]["flips_total"],
            "b": b["network"]["flips_total"],
        },
        "detection": {
            "a": {k: a["detection"][k] for k in ("tp", "fp", "fn", "fp_rate", "fn_rate")},
            "b": {k: b["detection"][k] for k in ("tp", "fp", "fn", "fp_rate", "fn_rate")},
        },
    }
