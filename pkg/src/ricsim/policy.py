"""Conflict-mitigation policy: the knob set shared by gate, supervisor and
operator updates.

A policy update arriving from the operator is staged by the fabric and
applied atomically at the next tick boundary; ``apply_update`` validates the
change set against parameter domains first and rejects it wholesale when any
field is malformed, so a RIC never runs with a half-applied policy.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field, replace

from ricsim.ran import PARAM_SPECS
from ricsim.records import STRATEGIES

ROTATION = ("prioritization", "cooldown", "limitation")  # adaptation order


@dataclass
class CmPolicy:
    priorities: dict[str, int] = field(default_factory=dict)  # app id -> rank
    strategies: dict[str, str] = field(
        default_factory=lambda: {"C1": "prioritization", "C2": "cooldown", "C4": "prioritization"}
    )
    cooldown_ticks: dict[str, int] = field(
        default_factory=lambda: {"C1": 20, "C2": 20, "C4": 20}
    )
    # (app id, param kind) -> inclusive admissible range
    limitation_ranges: dict[tuple[str, str], tuple[float, float]] = field(default_factory=dict)
    kpi_weights: dict[str, float] = field(
        default_factory=lambda: {"load": 1.0, "pingpong": 1.0, "hof": 1.0, "energy": 1.0}
    )
    conflict_avoidance: bool = True
    dynamic_priorities: bool = False
    pipeline_order: tuple[str, ...] = ()
    adaptation_period: int = 50
    adaptation_min_trials: int = 10
    adaptation_rate_floor: float = 0.5
    outcome_horizon: int = 10

    def rank(self, app_id: str) -> int:
        return self.priorities.get(app_id, 0)

    def range_for(self, app_id: str, param_kind: str) -> tuple[float, float]:
        spec = PARAM_SPECS[param_kind]
        return self.limitation_ranges.get((app_id, param_kind), (spec.lo, spec.hi))

    def strategy_for(self, conflict_class: str) -> str:
        return self.strategies.get(conflict_class, "prioritization")

    def digest(self) -> str:
        blob = json.dumps(
            {
                "priorities": dict(sorted(self.priorities.items())),
                "strategies": dict(sorted(self.strategies.items())),
                "cooldowns": dict(sorted(self.cooldown_ticks.items())),
                "ranges": {f"{a}/{p}": list(r) for (a, p), r in sorted(self.limitation_ranges.items())},
                "weights": dict(sorted(self.kpi_weights.items())),
                "avoidance": self.conflict_avoidance,
                "dynamic": self.dynamic_priorities,
                "pipeline": list(self.pipeline_order),
                "adaptation": [
                    self.adaptation_period,
                    self.adaptation_min_trials,
                    self.adaptation_rate_floor,
                    self.outcome_horizon,
                ],
            },
            sort_keys=True,
        )
        return hashlib.sha256(blob.encode()).hexdigest()[:12]


class PolicyUpdateError(ValueError):
    pass


def validate_update(changes: dict) -> None:
    """Raise PolicyUpdateError when any field of an operator change set is
    malformed. Unknown fields are rejected too."""
    allowed = {
        "priorities",
        "strategies",
        "cooldown_ticks",
        "limitation_ranges",
        "kpi_weights",
        "conflict_avoidance",
        "dynamic_priorities",
        "pipeline_order",
        "adaptation_period",
    }
    for key in changes:
        if key not in allowed:
            raise PolicyUpdateError(f"unknown policy field {key!r}")
    for app, rank in changes.get("priorities", {}).items():
        if not isinstance(rank, int) or rank < 0:
            raise PolicyUpdateError(f"priority for {app!r} must be a non-negative integer")
    for cls, strat in changes.get("strategies", {}).items():
        if cls not in ("C1", "C2", "C4"):
            raise PolicyUpdateError(f"no strategy slot for class {cls!r}")
        if strat not in STRATEGIES:
            raise PolicyUpdateError(f"unknown strategy {strat!r}")
    for cls, ticks in changes.get("cooldown_ticks", {}).items():
        if cls not in ("C1", "C2", "C4") or not isinstance(ticks, int) or ticks < 1:
            raise PolicyUpdateError(f"cooldown for {cls!r} must be a positive integer")
    for key, rng in changes.get("limitation_ranges", {}).items():
        app, _, kind = key.partition("/")
        spec = PARAM_SPECS.get(kind)
        if spec is None or not app:
            raise PolicyUpdateError(f"malformed range key {key!r}")
        lo, hi = rng
        if not (spec.lo <= lo <= hi <= spec.hi):
            raise PolicyUpdateError(f"range {rng} for {key!r} outside parameter domain")
    for kpi, w in changes.get("kpi_weights", {}).items():
        if kpi not in ("load", "pingpong", "hof", "energy") or w < 0:
            raise PolicyUpdateError(f"bad weight {kpi!r}={w!r}")
    if "adaptation_period" in changes:
        p = changes["adaptation_period"]
        if not isinstance(p, int) or p < 1:
            raise PolicyUpdateError("adaptation_period must be a positive integer")


def apply_update(policy: CmPolicy, changes: dict) -> CmPolicy:
    """Return a new policy with the validated change set merged in."""
    validate_update(changes)
    new = replace(
        policy,
        priorities=dict(policy.priorities),
        strategies=dict(policy.strategies),
        cooldown_ticks=dict(policy.cooldown_ticks),
        limitation_ranges=dict(policy.limitation_ranges),
        kpi_weights=dict(policy.kpi_weights),
    )
    new.priorities.update(changes.get("priorities", {}))
    new.strategies.update(changes.get("strategies", {}))
    new.cooldown_ticks.update(changes.get("cooldown_ticks", {}))
    for key, rng in changes.get("limitation_ranges", {}).items():
        app, _, kind = key.partition("/")
        new.limitation_ranges[(app, kind)] = (float(rng[0]), float(rng[1]))
    new.kpi_weights.update(changes.get("kpi_weights", {}))
    if "conflict_avoidance" in changes:
        new.conflict_avoidance = bool(changes["conflict_avoidance"])
    if "dynamic_priorities" in changes:
        new.dynamic_priorities = bool(changes["dynamic_priorities"])
    if "pipeline_order" in changes:
        new.pipeline_order = tuple(changes["pipeline_order"])
    if "adaptation_period" in changes:
        new.adaptation_period = changes["adaptation_period"]
    return new
