"""Per-RIC performance monitoring: EWMA baselines and KPI alerts.

One Monitor instance per near-RT RIC ingests that RIC's restricted KPI
frames. The baseline store is shared with implicit-conflict detection so
monitoring and detection never disagree about what "normal" looks like.
Alerts are per (cell, kpi), severity degraded or critical, with hysteresis
and a persistence requirement on clearing to prevent flapping: an alert
clears only after the observation stays at or below threshold − hysteresis
for `clear_persistence` consecutive ticks.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Callable

from ricsim.ran import KpiFrame
from ricsim.records import Alert

DEGRADED_DEFAULTS = {"pingpong": 0.2, "hof": 0.15, "load": 0.95}
CRITICAL_DEFAULTS = {"pingpong": 0.35, "hof": 0.3}


@dataclass
class PmonConfig:
    alpha: float = 0.2
    degraded: dict[str, float] = field(default_factory=lambda: dict(DEGRADED_DEFAULTS))
    critical: dict[str, float] = field(default_factory=lambda: dict(CRITICAL_DEFAULTS))
    hysteresis: float = 0.02
    clear_persistence: int = 3
    history: int = 64


@dataclass
class AlertChange:
    kind: str  # raised | escalated | cleared
    alert: Alert


@dataclass
class Monitor:
    config: PmonConfig
    ric_id: str = ""
    baselines: dict[tuple[str, str], float] = field(default_factory=dict)
    history: deque = field(default_factory=deque)
    alerts: dict[tuple[str, str], Alert] = field(default_factory=dict)
    _recovery: dict[tuple[str, str], int] = field(default_factory=dict)

    def ingest(self, frame: KpiFrame) -> None:
        a = self.config.alpha
        for cell in frame.values:
            for kpi, obs in frame.values[cell].items():
                key = (cell, kpi)
                if key not in self.baselines:
                    self.baselines[key] = obs
                else:
                    self.baselines[key] += a * (obs - self.baselines[key])
        self.history.append(frame)
        while len(self.history) > self.config.history:
            self.history.popleft()

    def _threshold(self, kpi: str, severity: str) -> float:
        table = self.config.critical if severity == "critical" else self.config.degraded
        return table[kpi]

    def evaluate(self, tick: int, make_id: Callable[[], str]) -> list[AlertChange]:
        """Raise, escalate or clear alerts against the latest ingested frame.
        At most one alert is active per (cell, kpi) at any time."""
        frame: KpiFrame = self.history[-1]
        changes: list[AlertChange] = []
        for cell in sorted(frame.values):
            for kpi in sorted(frame.values[cell]):
                value = frame.values[cell][kpi]
                key = (cell, kpi)
                active = self.alerts.get(key)
                if active is None:
                    severity = None
                    if kpi in self.config.critical and value > self.config.critical[kpi]:
                        severity = "critical"
                    elif kpi in self.config.degraded and value > self.config.degraded[kpi]:
                        severity = "degraded"
                    if severity:
                        alert = Alert(make_id(), self.ric_id, cell, kpi, severity, tick, value)
                        self.alerts[key] = alert
                        self._recovery[key] = 0
                        changes.append(AlertChange("raised", alert))
                    continue
                if (
                    active.severity == "degraded"
                    and kpi in self.config.critical
                    and value > self.config.critical[kpi]
                ):
                    active.severity = "critical"
                    active.value = value
                    self._recovery[key] = 0
                    changes.append(AlertChange("escalated", active))
                    continue
                clear_at = self._threshold(kpi, active.severity) - self.config.hysteresis
                if value <= clear_at:
                    self._recovery[key] = self._recovery.get(key, 0) + 1
                    if self._recovery[key] >= self.config.clear_persistence:
                        del self.alerts[key]
                        del self._recovery[key]
                        changes.append(AlertChange("cleared", active))
                else:
                    self._recovery[key] = 0
        return changes

    def critical_active(self) -> bool:
        return any(a.severity == "critical" for a in self.alerts.values())

    def active_payload(self) -> list[dict]:
        return [
            {
                "alert_id": a.alert_id,
                "cell": a.cell,
                "kpi": a.kpi,
                "severity": a.severity,
                "raised_tick": a.raised_tick,
            }
            for _, a in sorted(self.alerts.items())
        ]
