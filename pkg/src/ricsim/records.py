"""Record types shared by the control-plane components."""

from __future__ import annotations

from dataclasses import dataclass, field

from ricsim.ran import Target

CONFLICT_CLASSES = ("C1", "C2", "C3", "C4", "C5")
STRATEGIES = ("prioritization", "cooldown", "limitation")


@dataclass
class Decision:
    """One control write requested by an application."""

    decision_id: str
    app_id: str
    ric_id: str
    target: Target
    value: float
    tick: int  # submission tick
    previous: float | None = None  # filled at actuation
    # inter-RIC context: set when this entry was reconstructed from a peer's
    # activity report rather than submitted locally
    origin_ric: str | None = None
    delivery_tick: int | None = None

    @property
    def remote(self) -> bool:
        return self.origin_ric is not None

    def window_tick(self) -> int:
        """Tick at which this entry becomes visible to the local detector."""
        return self.delivery_tick if self.delivery_tick is not None else self.tick

    def to_payload(self) -> dict:
        p = {
            "decision_id": self.decision_id,
            "app_id": self.app_id,
            "ric_id": self.ric_id,
            "target": self.target.key,
            "value": self.value,
            "tick": self.tick,
        }
        if self.remote:
            p["origin_ric"] = self.origin_ric
            p["delivery_tick"] = self.delivery_tick
        return p


@dataclass
class ConflictRecord:
    conflict_id: str
    conflict_class: str  # C1..C5
    ric_id: str
    tick: int  # detection tick
    implicated: tuple[str, ...]  # decision ids, sorted
    scope: tuple[str, ...]  # cells, sorted
    evidence: dict
    low_confidence: bool = False

    def to_payload(self) -> dict:
        p = {
            "conflict_id": self.conflict_id,
            "class": self.conflict_class,
            "ric_id": self.ric_id,
            "implicated": list(self.implicated),
            "scope": list(self.scope),
            "evidence": self.evidence,
        }
        if self.low_confidence:
            p["low_confidence"] = True
        return p


@dataclass
class ResolutionAction:
    action_id: str
    conflict_id: str
    conflict_class: str
    ric_id: str
    tick: int
    strategy: str  # prioritization | cooldown | limitation | projection | rollback
    accepted: tuple[str, ...]  # decision ids left standing
    rejected: tuple[str, ...]
    modified: dict[str, float] = field(default_factory=dict)  # decision id -> new value
    detail: dict = field(default_factory=dict)

    def to_payload(self) -> dict:
        return {
            "action_id": self.action_id,
            "conflict_id": self.conflict_id,
            "class": self.conflict_class,
            "ric_id": self.ric_id,
            "strategy": self.strategy,
            "accepted": list(self.accepted),
            "rejected": list(self.rejected),
            "modified": dict(sorted(self.modified.items())),
            "detail": self.detail,
        }


@dataclass
class CooldownEntry:
    app_id: str
    target_key: str
    created: int
    expiry: int  # first tick at which the pair is eligible again
    conflict_id: str

    def blocks(self, app_id: str, target_key: str, tick: int) -> bool:
        return (
            app_id == self.app_id
            and target_key == self.target_key
            and self.created < tick < self.expiry
        )


@dataclass
class Alert:
    alert_id: str
    ric_id: str
    cell: str
    kpi: str
    severity: str  # degraded | critical
    raised_tick: int
    value: float


@dataclass
class PolicyConstraint:
    """A1-style operating bound issued by the non-real-time controller."""

    constraint_id: str
    scope_cells: tuple[str, ...]
    param: str  # parameter kind
    kind: str  # min | max | fixed
    bound: float
    issued_tick: int
    from_tick: int
    to_tick: int | None = None  # None = open-ended

    def active(self, tick: int) -> bool:
        return tick >= self.from_tick and (self.to_tick is None or tick <= self.to_tick)

    def violated_by(self, value: float) -> bool:
        if self.kind == "min":
            return value < self.bound
        if self.kind == "max":
            return value > self.bound
        return value != self.bound

    def project(self, value: float) -> float:
        if self.kind == "min":
            return max(value, self.bound)
        if self.kind == "max":
            return min(value, self.bound)
        return self.bound

    def to_payload(self) -> dict:
        return {
            "constraint_id": self.constraint_id,
            "scope": list(self.scope_cells),
            "param": self.param,
            "kind": self.kind,
            "bound": self.bound,
            "from_tick": self.from_tick,
            "to_tick": self.to_tick,
        }
