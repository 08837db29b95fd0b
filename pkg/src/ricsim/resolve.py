"""Conflict resolution strategies and gate arbitration helpers.

Every C1/C2/C4 conflict resolves to exactly one surviving decision
(single-writer); the strategies differ in what else happens: prioritization
just rejects the losers, cooldown additionally blocks the losing
(app, target) pairs for T ticks, and limitation restrains even the winner
to a one-grid-step move from the current value. Cross-loop (C5) conflicts
are not arbitrated: the non-real-time policy always dominates and the
violating value is projected onto the constraint-satisfying set.
"""

from __future__ import annotations

import math
from typing import Callable, Sequence

from ricsim.policy import CmPolicy
from ricsim.ran import PARAM_SPECS, Target
from ricsim.records import ConflictRecord, CooldownEntry, Decision, PolicyConstraint, ResolutionAction


def choose_winner(members: Sequence[Decision], policy: CmPolicy) -> Decision:
    """Highest rank wins; ties break toward the earlier submission tick,
    then the lexicographically smaller app id."""
    return min(members, key=lambda d: (-policy.rank(d.app_id), d.tick, d.app_id))


def apply_limitation(decision: Decision, policy: CmPolicy) -> float:
    """Pre-filter: clamp the requested value into the (app, param) limitation
    range, then snap onto the parameter grid toward the nearest in-range
    point. Returns the admissible value (may equal the request)."""
    lo, hi = policy.range_for(decision.app_id, decision.target.param)
    return decision.target.spec.snap(decision.value, lo, hi)


def _split(record: ConflictRecord, members: Sequence[Decision], policy: CmPolicy):
    winner = choose_winner(members, policy)
    losers = [d for d in members if d.decision_id != winner.decision_id]
    return winner, losers


def apply_prioritization(
    record: ConflictRecord,
    members: Sequence[Decision],
    policy: CmPolicy,
    tick: int,
    make_id: Callable[[], str],
) -> tuple[ResolutionAction, Decision]:
    winner, losers = _split(record, members, policy)
    action = ResolutionAction(
        action_id=make_id(),
        conflict_id=record.conflict_id,
        conflict_class=record.conflict_class,
        ric_id=record.ric_id,
        tick=tick,
        strategy="prioritization",
        accepted=(winner.decision_id,),
        rejected=tuple(sorted(d.decision_id for d in losers)),
        detail={"winner_app": winner.app_id, "winner_rank": policy.rank(winner.app_id)},
    )
    return action, winner


def apply_cooldown(
    record: ConflictRecord,
    members: Sequence[Decision],
    policy: CmPolicy,
    tick: int,
    make_id: Callable[[], str],
) -> tuple[ResolutionAction, Decision, list[CooldownEntry]]:
    winner, losers = _split(record, members, policy)
    ticks = policy.cooldown_ticks.get(record.conflict_class, 20)
    entries = [
        CooldownEntry(
            app_id=d.app_id,
            target_key=d.target.key,
            created=tick,
            expiry=tick + ticks,
            conflict_id=record.conflict_id,
        )
        for d in sorted(losers, key=lambda d: (d.app_id, d.target.key))
    ]
    action = ResolutionAction(
        action_id=make_id(),
        conflict_id=record.conflict_id,
        conflict_class=record.conflict_class,
        ric_id=record.ric_id,
        tick=tick,
        strategy="cooldown",
        accepted=(winner.decision_id,),
        rejected=tuple(sorted(d.decision_id for d in losers)),
        detail={
            "winner_app": winner.app_id,
            "cooldowns": [
                {"app_id": e.app_id, "target": e.target_key, "expiry": e.expiry} for e in entries
            ],
        },
    )
    return action, winner, entries


def tighten_bounds(param: str, current: float) -> tuple[float, float]:
    """One-grid-step interval around the current value."""
    grid = PARAM_SPECS[param].grid
    below = [g for g in grid if g < current]
    above = [g for g in grid if g > current]
    return (below[-1] if below else current, above[0] if above else current)


def apply_limitation_strategy(
    record: ConflictRecord,
    members: Sequence[Decision],
    policy: CmPolicy,
    current_of: Callable[[Decision], float],
    tick: int,
    make_id: Callable[[], str],
) -> tuple[ResolutionAction, Decision, float]:
    """Single-writer limitation: the priority winner survives but its value
    is restrained to one grid step from the target's current value (still
    inside the winner's limitation range); everyone else is rejected."""
    winner, losers = _split(record, members, policy)
    cur = current_of(winner)
    step_lo, step_hi = tighten_bounds(winner.target.param, cur)
    rng_lo, rng_hi = policy.range_for(winner.app_id, winner.target.param)
    value = winner.target.spec.snap(winner.value, max(step_lo, rng_lo), min(step_hi, rng_hi))
    if math.isnan(value):  # degenerate range: fall back to holding position
        value = cur
    action = ResolutionAction(
        action_id=make_id(),
        conflict_id=record.conflict_id,
        conflict_class=record.conflict_class,
        ric_id=record.ric_id,
        tick=tick,
        strategy="limitation",
        accepted=(winner.decision_id,),
        rejected=tuple(sorted(d.decision_id for d in losers)),
        modified={winner.decision_id: value} if value != winner.value else {},
        detail={"winner_app": winner.app_id, "bounds": [max(step_lo, rng_lo), min(step_hi, rng_hi)]},
    )
    return action, winner, value


def resolve_cross_loop(
    record: ConflictRecord,
    decision: Decision,
    constraints: Sequence[PolicyConstraint],
    policy: CmPolicy,
    tick: int,
    make_id: Callable[[], str],
) -> tuple[ResolutionAction, float | None]:
    """Project the violating value onto the constraint-satisfying set. A
    `fixed` constraint pins the value outright; min/max push it to the bound.
    Returns (action, admissible value) — value None means rejection because
    the projection leaves the parameter grid or the app's limitation range."""
    hits = sorted(
        (c for c in constraints if c.constraint_id in record.evidence["constraints"]),
        key=lambda c: (c.kind != "fixed", c.constraint_id),
    )
    value = decision.value
    for c in hits:
        value = c.project(value)
    spec = decision.target.spec
    lo, hi = policy.range_for(decision.app_id, decision.target.param)
    ok = spec.in_domain(value) and lo <= value <= hi
    ok = ok and all(not c.violated_by(value) for c in hits)
    action = ResolutionAction(
        action_id=make_id(),
        conflict_id=record.conflict_id,
        conflict_class="C5",
        ric_id=record.ric_id,
        tick=tick,
        strategy="projection",
        accepted=(decision.decision_id,) if ok else (),
        rejected=() if ok else (decision.decision_id,),
        modified={decision.decision_id: value} if ok and value != decision.value else {},
        detail={"constraints": list(record.evidence["constraints"]), "projected": value},
    )
    return action, (value if ok else None)


def pipeline_head(order: Sequence[str], since: int, tick: int) -> str | None:
    """App allowed to submit during critical-pipeline mode at this tick; the
    head advances one position per tick, wrapping around the order."""
    if not order:
        return None
    return order[(tick - since) % len(order)]
