"""Conflict detection across the five conflict classes.

C1: same target, same window, differing requested values.
C2: different targets whose signed effects on some shared KPI oppose.
C3: post-hoc KPI degradation vs an EWMA baseline, attributed to recently
    actuated decisions through the dependency graph.
C4: a C1/C2 pattern in which at least one side is a remote decision
    reconstructed from a peer RIC's delivered activity report.
C5: a decision violating an active, delivered policy constraint.

All functions are pure: the tick pipeline supplies the candidate pools and
owns dedup across ticks. Within a window, decisions from a single app never
conflict with themselves; a conflict needs at least two distinct apps.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterable

from ricsim.ran import Target, Topology, dependency_edges
from ricsim.records import ConflictRecord, Decision, PolicyConstraint


def _sign(x: float) -> int:
    return (x > 0) - (x < 0)


def sort_key(d: Decision) -> tuple:
    return (d.window_tick(), d.tick, d.decision_id)


def detect_direct(
    pool: list[Decision],
    make_id: Callable[[], str],
    ric_id: str,
    tick: int,
) -> list[ConflictRecord]:
    """C1/C4 grouping: one record per target contested by ≥2 apps with
    non-identical values. Groups containing a remote entry are C4."""
    by_target: dict[str, list[Decision]] = {}
    for d in sorted(pool, key=sort_key):
        by_target.setdefault(d.target.key, []).append(d)
    records: list[ConflictRecord] = []
    for key in sorted(by_target):
        group = by_target[key]
        if len({d.app_id for d in group}) < 2:
            continue
        if len({d.value for d in group}) < 2:
            continue  # identical-value duplicates are not conflicts
        cls = "C4" if any(d.remote for d in group) else "C1"
        records.append(
            ConflictRecord(
                conflict_id=make_id(),
                conflict_class=cls,
                ric_id=ric_id,
                tick=tick,
                implicated=tuple(sorted(d.decision_id for d in group)),
                scope=tuple(sorted(set(group[0].target.cells))),
                evidence={
                    "target": key,
                    "values": {d.decision_id: d.value for d in sorted(group, key=sort_key)},
                },
            )
        )
    return records


def effect_signs(
    d: Decision,
    topology: Topology,
    current_of: Callable[[Decision], float],
) -> dict[tuple[str, str], int]:
    """Signed (cell, kpi) effects of a decision: dependency edge sign times
    the sign of the requested change. Zero-delta decisions have no effects."""
    delta = _sign(d.value - current_of(d))
    if delta == 0:
        return {}
    return {
        (cell, kpi): sign * delta
        for cell, kpi, sign in dependency_edges(d.target, topology)
    }


def detect_indirect(
    pool: list[Decision],
    topology: Topology,
    current_of: Callable[[Decision], float],
    make_id: Callable[[], str],
    ric_id: str,
    tick: int,
) -> list[ConflictRecord]:
    """C2/C4 pairing: one record per pair of decisions on different targets
    with opposing signed effects on at least one shared (cell, kpi)."""
    entries = sorted(pool, key=sort_key)
    effects = [effect_signs(d, topology, current_of) for d in entries]
    records: list[ConflictRecord] = []
    for a_idx in range(len(entries)):
        for b_idx in range(a_idx + 1, len(entries)):
            a, b = entries[a_idx], entries[b_idx]
            if a.app_id == b.app_id or a.target.key == b.target.key:
                continue
            opposed = sorted(
                (cell, kpi)
                for (cell, kpi), s in effects[a_idx].items()
                if effects[b_idx].get((cell, kpi), 0) == -s
            )
            if not opposed:
                continue
            cls = "C4" if (a.remote or b.remote) else "C2"
            records.append(
                ConflictRecord(
                    conflict_id=make_id(),
                    conflict_class=cls,
                    ric_id=ric_id,
                    tick=tick,
                    implicated=tuple(sorted((a.decision_id, b.decision_id))),
                    scope=tuple(sorted({cell for cell, _ in opposed})),
                    evidence={
                        "shared": [
                            {
                                "cell": cell,
                                "kpi": kpi,
                                "signs": {
                                    a.decision_id: effects[a_idx][(cell, kpi)],
                                    b.decision_id: effects[b_idx][(cell, kpi)],
                                },
                            }
                            for cell, kpi in opposed
                        ]
                    },
                )
            )
    return records


def detect_cross_loop(
    decision: Decision,
    constraints: Iterable[PolicyConstraint],
    make_id: Callable[[], str],
    tick: int,
) -> ConflictRecord | None:
    """C5 iff the requested value violates any delivered constraint active at
    this tick whose scope covers the decision's primary cell and parameter."""
    hits = [
        c
        for c in constraints
        if c.active(tick)
        and c.param == decision.target.param
        and decision.target.cell in c.scope_cells
        and c.violated_by(decision.value)
    ]
    if not hits:
        return None
    hits.sort(key=lambda c: c.constraint_id)
    return ConflictRecord(
        conflict_id=make_id(),
        conflict_class="C5",
        ric_id=decision.ric_id,
        tick=tick,
        implicated=(decision.decision_id,),
        scope=tuple(sorted(set(decision.target.cells))),
        evidence={
            "constraints": [c.constraint_id for c in hits],
            "requested": decision.value,
        },
    )


def materialize_virtuals(
    reports: list[tuple[int, dict]],
    boundary: frozenset[str],
    window: int,
    tick: int,
) -> list[Decision]:
    """Virtual decisions from delivered peer reports: remote actuations whose
    target touches this RIC's boundary set, still inside the detection window
    (windowed on the delivery tick, not the remote actuation tick)."""
    out: list[Decision] = []
    for delivered, report in reports:
        if not (tick - window < delivered <= tick):
            continue
        for entry in report["actuated"]:
            target = Target.parse(entry["target"])
            if not boundary.intersection(target.cells):
                continue
            out.append(
                Decision(
                    decision_id=entry["decision_id"],
                    app_id=entry["app_id"],
                    ric_id=report["origin"],
                    target=target,
                    value=entry["value"],
                    tick=entry["tick"],
                    previous=entry["previous"],
                    origin_ric=report["origin"],
                    delivery_tick=delivered,
                )
            )
    return out


@dataclass
class ImplicitState:
    """Per-(cell, kpi) degradation streaks and active set for C3 dedup."""

    streaks: dict[tuple[str, str], int] = field(default_factory=dict)
    active: set[tuple[str, str]] = field(default_factory=set)


def update_implicit(
    state: ImplicitState,
    observed: dict[tuple[str, str], float],
    baselines: dict[tuple[str, str], float],
    delta: float,
    persistence: int,
) -> list[tuple[str, str, float]]:
    """Advance degradation streaks one tick; return (cell, kpi, magnitude)
    for degradations that just reached the persistence window. Re-emission
    for the same (cell, kpi) is suppressed until the degradation clears."""
    fresh: list[tuple[str, str, float]] = []
    for key in sorted(observed):
        diff = observed[key] - baselines.get(key, observed[key])
        if diff > delta:
            state.streaks[key] = state.streaks.get(key, 0) + 1
            if state.streaks[key] >= persistence and key not in state.active:
                state.active.add(key)
                fresh.append((key[0], key[1], diff))
        else:
            state.streaks[key] = 0
            state.active.discard(key)
    return fresh


def attribute_implicit(
    cell: str,
    kpi: str,
    recent: list[Decision],
    topology: Topology,
    lookback: int,
    tick: int,
) -> list[Decision]:
    """Decisions actuated in the last `lookback` ticks whose dependency edges
    touch the degraded (cell, kpi)."""
    hits = []
    for d in recent:
        if not (tick - lookback <= d.tick < tick):
            continue
        if any(c == cell and k == kpi for c, k, _ in dependency_edges(d.target, topology)):
            hits.append(d)
    return sorted(hits, key=sort_key)
