"""Experiment orchestration: full runs, candidate assessment, run
comparison, and log-derived report reconciliation.

Each entry point returns artifact files as strings keyed by filename so
callers (service, CLI) can write them byte-for-byte; two runs of the same
scenario and seed produce identical bytes.
"""

from __future__ import annotations

import json
from collections import defaultdict

from ricsim.engine import Simulation, SimulationError
from ricsim.eventlog import parse_jsonl
from ricsim.metrics import compare_metrics, compute_metrics, metrics_to_csv
from ricsim.scenario import AppSpec, ScenarioConfig, ScenarioError
from ricsim.supervisor import build_report, utility
from ricsim.ran import KpiFrame


def _dump(doc: dict) -> str:
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def apply_overrides(scenario: ScenarioConfig, cm: str | None, seed: int | None) -> ScenarioConfig:
    if cm is None and seed is None:
        return scenario
    raw = scenario.model_dump(mode="json")
    if cm is not None:
        raw["cm"]["policy"]["conflict_avoidance"] = cm == "on"
    if seed is not None:
        raw["seed"] = seed
    return ScenarioConfig.model_validate(raw)


def _viability(sim: Simulation) -> dict:
    out = {}
    for ric in sim.rics.values():
        for app_id, (total, n) in sorted(ric.app_delta.items()):
            if n:
                out[app_id] = {"mean_delta_u": total / n, "decisions": n}
    return out


def _cm_report(sim: Simulation, scenario: ScenarioConfig) -> dict:
    return build_report(
        sim.log.entries,
        (1, scenario.ticks),
        sorted(sim.rics),
        {ric_id: ric.policy.digest() for ric_id, ric in sorted(sim.rics.items())},
        scenario.cm.policy.kpi_weights,
        viability=_viability(sim),
    )


def run_experiment(scenario: ScenarioConfig, cm: str | None = None, seed: int | None = None) -> dict:
    sc = apply_overrides(scenario, cm, seed)
    sim = Simulation(sc)
    sim.run_all()
    cm_flag = "on" if sc.cm.policy.conflict_avoidance else "off"
    metrics = compute_metrics(sim.log.entries, sc, cm_flag)
    files = {
        "events.jsonl": sim.log.to_jsonl(),
        "metrics.json": _dump(metrics),
        "metrics.csv": metrics_to_csv(metrics),
        "cm_report.json": _dump(_cm_report(sim, sc)),
    }
    summary = {
        "name": sc.name,
        "seed": sc.seed,
        "cm": cm_flag,
        "ticks": sc.ticks,
        "conflicts": metrics["detection"]["detections_total"],
        "utility_mean": metrics["network"]["utility_mean"],
    }
    return {"files": files, "metrics": metrics, "summary": summary}


def _candidate_spec(scenario: ScenarioConfig, candidate: str) -> AppSpec:
    for spec in scenario.candidates:
        if spec.id == candidate:
            return spec
    raise ScenarioError(f"unknown candidate app {candidate!r}")


def _mean_utility(sim: Simulation, weights: dict[str, float]) -> float:
    cells = sim.topology.cells
    values = [utility(frame, cells, weights) for _, frame in sorted(sim.frames.items())]
    return sum(values) / len(values) if values else 0.0


def _candidate_conflicts(sim: Simulation, candidate: str) -> tuple[dict, list[str]]:
    app_of: dict[str, str] = {}
    for e in sim.log.of_kind("decision-submitted"):
        app_of[e["payload"]["decision_id"]] = e["payload"]["app_id"]
    by_class: dict[str, int] = defaultdict(int)
    counterparties: set[str] = set()
    for e in sim.log.of_kind("conflict-detected"):
        p = e["payload"]
        apps = {app_of.get(d, "?") for d in p["implicated"]}
        if candidate not in apps:
            continue
        by_class[p["class"]] += 1
        counterparties |= apps - {candidate}
    return dict(sorted(by_class.items())), sorted(counterparties)


def assess_app(scenario: ScenarioConfig, candidate: str) -> dict:
    """Dry-run a candidate app against a snapshot pair: one baseline clone,
    one clone with the candidate installed. The source simulation is never
    advanced."""
    spec = _candidate_spec(scenario, candidate)
    source = Simulation(scenario)
    baseline = source.snapshot()
    trial = source.snapshot()
    trial.add_app(spec)
    baseline.run_all()
    trial.run_all()
    if source.tick != 0:
        raise SimulationError("assessment must not advance the source simulation")

    weights = scenario.cm.policy.kpi_weights
    u_base = _mean_utility(baseline, weights)
    u_trial = _mean_utility(trial, weights)
    delta_u = u_trial - u_base
    conflicts, counterparties = _candidate_conflicts(trial, candidate)

    thresholds = scenario.assessment
    if delta_u < thresholds.reject_below:
        recommendation = "reject"
        rule = f"delta_u < {thresholds.reject_below}"
    elif conflicts and delta_u < thresholds.deploy_above:
        recommendation = "reconfigure"
        rule = f"conflicts found and {thresholds.reject_below} <= delta_u < {thresholds.deploy_above}"
    else:
        recommendation = "deploy"
        rule = "no disqualifying conflicts or utility loss"
    assessment = {
        "candidate": candidate,
        "scenario": scenario.name,
        "seed": scenario.seed,
        "baseline_utility": u_base,
        "trial_utility": u_trial,
        "delta_u": delta_u,
        "conflicts": conflicts,
        "counterparties": counterparties,
        "recommendation": recommendation,
        "rule": rule,
    }
    return {"files": {"assessment.json": _dump(assessment)}, "assessment": assessment}


def compare_runs(metrics_a: dict, metrics_b: dict) -> dict:
    comparison = compare_metrics(metrics_a, metrics_b)
    return {"files": {"compare.json": _dump(comparison)}, "comparison": comparison}


def rebuild_report(events_jsonl: str, existing: dict | None = None) -> dict:
    """Recompute the CM report purely from a serialized event log and check
    it against a previously written report if one is supplied. Viability
    estimates live only in simulator memory, so they are carried over
    verbatim and exempt from reconciliation."""
    entries = parse_jsonl(events_jsonl)
    loaded = [e for e in entries if e["kind"] == "scenario-loaded"]
    if not loaded:
        raise ScenarioError("event log has no scenario-loaded entry")
    config = loaded[0]["payload"]["effective_config"]
    weights = config["cm"]["policy"]["kpi_weights"]
    ric_ids = sorted(r["id"] for r in config["topology"]["rics"])
    last_tick = max((e["tick"] for e in entries), default=0)
    digests: dict[str, str] = {r: "" for r in ric_ids}
    for e in entries:  # last published digest per RIC wins
        if e["kind"] == "report-published" and e["payload"]["origin"] in digests:
            digests[e["payload"]["origin"]] = e["payload"]["policy_digest"]
    report = build_report(
        entries,
        (1, max(1, last_tick)),
        ric_ids,
        digests,
        weights,
        viability=(existing or {}).get("viability_estimates"),
    )
    mismatches: list[str] = []
    if existing:
        for key in ("interval", "weights", "utility_trajectory"):
            if existing.get(key) != report.get(key):
                mismatches.append(key)
        for ric_id in ric_ids:
            old = existing.get("rics", {}).get(ric_id, {})
            new = report["rics"][ric_id]
            for key in ("conflicts", "verdicts", "strategy_stats"):
                if old.get(key) != new[key]:
                    mismatches.append(f"rics.{ric_id}.{key}")
    return {"report": report, "mismatches": mismatches, "reconciled": not mismatches}
