"""Supervision and adaptation loop: outcome tracking, policy steering, reports.

Every resolution is scored H ticks later by comparing weighted "badness"
utility over the conflict's scope cells: ΔU = U(after window) − U(before
window), success when ΔU ≥ 0 (a resolution that merely prevents damage
counts). Per-(class, strategy) success statistics feed a rotation rule at
adaptation-period boundaries; per-app mean ΔU optionally rebuilds the
priority table when dynamic priorities are enabled.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from ricsim.policy import ROTATION, CmPolicy
from ricsim.ran import KpiFrame

_BAD_SPAN = {"load": 0.2, "energy": 1.6}


def bad_fraction(kpi: str, value: float) -> float:
    """Normalize a KPI observation into a [0, ~1] badness fraction."""
    if kpi == "load":
        return max(0.0, value - 0.8) / _BAD_SPAN["load"]
    if kpi == "energy":
        return (value - 1.0) / _BAD_SPAN["energy"]
    return value  # pingpong / hof are already rates


def utility(frame: KpiFrame, cells: tuple[str, ...], weights: dict[str, float]) -> float:
    """Σ_k w_k · (1 − bad_k), averaged over the given cells."""
    usable = [c for c in cells if c in frame.values]
    if not usable:
        return 0.0
    total = 0.0
    for cell in usable:
        # fixed summation order keeps the result identical no matter how the
        # weights table was built (config object vs parsed report)
        for kpi in sorted(weights):
            total += weights[kpi] * (1.0 - bad_fraction(kpi, frame.values[cell][kpi]))
    return total / len(usable)


def window_utility(frames: list[KpiFrame], cells: tuple[str, ...], weights: dict[str, float]) -> float:
    return sum(utility(f, cells, weights) for f in frames) / len(frames)


@dataclass
class StrategyStats:
    counts: dict[tuple[str, str], list[int]] = field(default_factory=dict)  # [trials, successes]

    def record(self, conflict_class: str, strategy: str, success: bool) -> None:
        slot = self.counts.setdefault((conflict_class, strategy), [0, 0])
        slot[0] += 1
        slot[1] += int(success)

    def rate(self, conflict_class: str, strategy: str) -> tuple[int, float]:
        trials, wins = self.counts.get((conflict_class, strategy), [0, 0])
        return trials, (wins / trials if trials else 0.0)

    def to_payload(self) -> dict:
        return {
            f"{cls}/{strat}": {"trials": t, "successes": s, "rate": (s / t if t else 0.0)}
            for (cls, strat), (t, s) in sorted(self.counts.items())
        }


def score_outcome(
    frames_by_tick: dict[int, KpiFrame],
    resolution_tick: int,
    horizon: int,
    scope: tuple[str, ...],
    weights: dict[str, float],
) -> float:
    """ΔU over the horizon windows around a resolution. The frame at the
    resolution tick itself predates actuation, so it anchors the before
    window; windows clip at the start of the run."""
    before = [
        frames_by_tick[t]
        for t in range(max(1, resolution_tick - horizon + 1), resolution_tick + 1)
        if t in frames_by_tick
    ]
    after = [
        frames_by_tick[t]
        for t in range(resolution_tick + 1, resolution_tick + horizon + 1)
        if t in frames_by_tick
    ]
    if not before or not after:
        return 0.0
    return window_utility(after, scope, weights) - window_utility(before, scope, weights)


def adapt(policy: CmPolicy, stats: StrategyStats) -> list[dict]:
    """Rotate the strategy of any conflict class whose current strategy has
    enough trials and a losing record. Returns the change descriptions."""
    changes: list[dict] = []
    for cls in ("C1", "C2", "C4"):
        current = policy.strategy_for(cls)
        trials, rate = stats.rate(cls, current)
        if trials >= policy.adaptation_min_trials and rate < policy.adaptation_rate_floor:
            nxt = ROTATION[(ROTATION.index(current) + 1) % len(ROTATION)]
            policy.strategies[cls] = nxt
            changes.append(
                {"class": cls, "from": current, "to": nxt, "trials": trials, "rate": rate}
            )
    return changes


def rerank(policy: CmPolicy, app_delta: dict[str, tuple[float, int]]) -> dict[str, int] | None:
    """Dynamic priorities: rank-order apps by mean per-decision ΔU (worst
    mean gets rank 1). Apps without outcome data keep their current rank.
    Returns the new table, or None when nothing would change."""
    scored = sorted(
        ((total / n, app) for app, (total, n) in app_delta.items() if n > 0),
    )
    new = dict(policy.priorities)
    for position, (_, app) in enumerate(scored, start=1):
        new[app] = position
    return None if new == policy.priorities else new


def build_report(
    entries: list[dict],
    interval: tuple[int, int],
    ric_ids: list[str],
    policy_digests: dict[str, str],
    weights: dict[str, float],
    viability: dict[str, dict] | None = None,
) -> dict:
    """Assemble a CM activity report for [interval[0], interval[1]] from raw
    event-log entries. Counts are recomputed from the log, never cached, so
    a report always reconciles with the log by construction."""
    lo, hi = interval
    window = [e for e in entries if lo <= e["tick"] <= hi]
    rics: dict[str, dict] = {
        r: {
            "conflicts": {c: 0 for c in ("C1", "C2", "C3", "C4", "C5")},
            "verdicts": {},
            "strategy_stats": {},
            "policy_digest": policy_digests.get(r, ""),
        }
        for r in ric_ids
    }
    stats: dict[str, StrategyStats] = {r: StrategyStats() for r in ric_ids}
    utility_trajectory: list[list] = []
    for e in window:
        kind, p = e["kind"], e["payload"]
        if kind == "conflict-detected" and p["ric_id"] in rics:
            rics[p["ric_id"]]["conflicts"][p["class"]] += 1
        elif kind == "decision-gated" and p["ric_id"] in rics:
            v = rics[p["ric_id"]]["verdicts"]
            v[p["verdict"]] = v.get(p["verdict"], 0) + 1
        elif kind == "decision-rejected" and p["ric_id"] in rics:
            v = rics[p["ric_id"]]["verdicts"]
            v[p["verdict"]] = v.get(p["verdict"], 0) + 1
        elif kind == "outcome-recorded" and p["ric_id"] in rics:
            stats[p["ric_id"]].record(p["class"], p["strategy"], p["success"])
        elif kind == "kpi-frame":
            frame = KpiFrame(e["tick"], p["values"])
            utility_trajectory.append(
                [e["tick"], utility(frame, tuple(sorted(p["values"])), weights)]
            )
    for r in ric_ids:
        rics[r]["strategy_stats"] = stats[r].to_payload()
    report = {
        "interval": [lo, hi],
        "rics": rics,
        "utility_trajectory": utility_trajectory,
        "weights": dict(sorted(weights.items())),
    }
    if viability is not None:
        report["viability_estimates"] = viability
    return report
