"""Deterministic tick engine: the multi-RIC control-plane simulation.

Each tick runs a fixed 7-phase pipeline:

  0. staged operator policy updates apply (tick-boundary atomicity)
  1. KPI synthesis from current parameters and offered traffic
  2. per-RIC monitoring: baselines, alerts, critical-pipeline coupling
  3. non-RT activity: due deliveries, rApp constraint issuance, operator
     policy updates entering the fabric
  4. app decision making (+ scenario-scripted injections)
  5. per-RIC gate: pipeline/cooldown/limitation filters, cross-loop
     projection, conflict detection, per-class resolution, verdicts
  6. actuation (and post-hoc rollbacks when avoidance is off)
  7. activity-report publication, outcome scoring, adaptation

Randomness exists only in optional traffic noise; with noise 0 the RNG is
never drawn from. Snapshots are plain deep copies: an independent twin
whose divergence never touches the original.
"""

from __future__ import annotations

import copy
import math
import random
from dataclasses import dataclass, field

from ricsim import detect, resolve
from ricsim.apps import (
    BEHAVIOR_KINDS,
    AppDescriptor,
    CoverageApp,
    EsApp,
    MlbApp,
    MroApp,
    derive_writable,
    issue_policy,
)
from ricsim.eventlog import EventLog
from ricsim.pmon import Monitor, PmonConfig
from ricsim.policy import CmPolicy, PolicyUpdateError, apply_update
from ricsim.ran import (
    KpiFrame,
    ParamStore,
    RanCoefficients,
    Target,
    Topology,
    dependency_edges,
    step_kpis,
)
from ricsim.records import (
    ConflictRecord,
    CooldownEntry,
    Decision,
    PolicyConstraint,
    ResolutionAction,
)
from ricsim.scenario import AppSpec, ScenarioConfig
from ricsim.supervisor import StrategyStats, adapt, rerank, score_outcome


class SimulationError(ValueError):
    pass


@dataclass
class RicState:
    ric_id: str
    owned: frozenset[str]
    boundary: frozenset[str]
    apps: list[AppDescriptor] = field(default_factory=list)
    behaviors: dict[str, object] = field(default_factory=dict)
    policy: CmPolicy = field(default_factory=CmPolicy)
    pipeline_order: tuple[str, ...] = ()
    staged_updates: list[dict] = field(default_factory=list)
    monitor: Monitor = None
    implicit: detect.ImplicitState = field(default_factory=detect.ImplicitState)
    cooldowns: list[CooldownEntry] = field(default_factory=list)
    constraints: list[tuple[int, PolicyConstraint]] = field(default_factory=list)
    delivered_reports: list[tuple[int, dict]] = field(default_factory=list)
    recent_actuated: list[Decision] = field(default_factory=list)
    seen_conflicts: set = field(default_factory=set)
    stats: StrategyStats = field(default_factory=StrategyStats)
    pipeline_since: int | None = None
    pending_outcomes: list[tuple[int, object, tuple[str, ...]]] = field(default_factory=list)
    decision_outcomes: list[tuple[int, Decision]] = field(default_factory=list)
    app_delta: dict[str, tuple[float, int]] = field(default_factory=dict)
    unreported_conflicts: list[tuple[str, str]] = field(default_factory=list)

    def active_constraints(self, tick: int) -> list[PolicyConstraint]:
        return [c for dt, c in self.constraints if dt <= tick and c.active(tick)]


class Simulation:
    """One simulated control plane. Build from a validated scenario, then
    `step()`/`run()`; `snapshot()` yields an isolated digital twin."""

    def __init__(self, scenario: ScenarioConfig):
        self.scenario = scenario
        self.topology: Topology = scenario.build_topology()
        self.coeff = RanCoefficients(**scenario.coefficients.model_dump())
        self.params = ParamStore.initial(
            self.topology,
            cio=scenario.initial.default_cio,
            tx_power=scenario.initial.default_tx_power,
            ttt=scenario.initial.default_ttt,
        )
        for pair, value in sorted(scenario.initial.cio.items()):
            i, _, j = pair.partition(":")
            self.params.set(Target("cio", (i, j)), value)
        for cell, value in sorted(scenario.initial.tx_power.items()):
            self.params.set(Target("tx_power", (cell,)), value)
        for cell, value in sorted(scenario.initial.ttt.items()):
            self.params.set(Target("ttt", (cell,)), value)

        self.rng = random.Random(scenario.seed)
        self.log = EventLog()
        self.tick = 0
        self.frames: dict[int, KpiFrame] = {}
        self.hub_in_flight: list[dict] = []
        self.issued_constraints: list[PolicyConstraint] = []
        self._counters: dict[str, int] = {}

        ranks = {a.id: a.rank for a in list(scenario.apps) + list(scenario.candidates)}
        if scenario.cm.policy.priorities:
            ranks.update(scenario.cm.policy.priorities)
        self._global_ranks = ranks

        self.rics: dict[str, RicState] = {}
        for ric_spec in sorted(scenario.topology.rics, key=lambda r: r.id):
            self.rics[ric_spec.id] = RicState(
                ric_id=ric_spec.id,
                owned=scenario.owned_cells(ric_spec.id),
                boundary=scenario.boundary_cells(ric_spec.id),
                monitor=Monitor(PmonConfig(
                    alpha=scenario.cm.detection.alpha,
                    degraded=dict(scenario.cm.pmon.degraded),
                    critical=dict(scenario.cm.pmon.critical),
                    hysteresis=scenario.cm.pmon.hysteresis,
                    clear_persistence=scenario.cm.pmon.clear_persistence,
                    history=scenario.cm.pmon.history,
                ), ric_id=ric_spec.id),
            )
        self.rapps: list[tuple[AppDescriptor, CoverageApp]] = []
        for app_spec in scenario.apps:
            self._install_app(app_spec)
        for ric in self.rics.values():
            self._configure_policy(ric)

        self._injections: dict[int, list] = {}
        for inj in scenario.injections:
            self._injections.setdefault(inj.tick, []).append(inj)
        self._mno_updates: dict[int, list[dict]] = {}
        for upd in scenario.mno_updates:
            self._mno_updates.setdefault(upd.tick, []).append(upd.changes)

        self.log.append(0, "scenario-loaded", {
            "name": scenario.name,
            "seed": scenario.seed,
            "effective_config": scenario.model_dump(mode="json"),
        })

    # -- construction helpers ---------------------------------------------

    def _make_id(self, prefix: str) -> str:
        n = self._counters.get(prefix, 0) + 1
        self._counters[prefix] = n
        return f"{prefix}-{n:05d}"

    def _install_app(self, spec: AppSpec) -> None:
        behavior_cls = BEHAVIOR_KINDS[spec.type]
        th = spec.thresholds
        if spec.type == "mlb":
            behavior = MlbApp(load_high=th.load_high, neighbor_low=th.neighbor_low)
        elif spec.type == "mro":
            behavior = MroApp(pingpong_high=th.pingpong_high, hof_high=th.hof_high)
        elif spec.type == "es":
            behavior = EsApp(load_low=th.load_low)
        elif spec.type == "coverage":
            behavior = CoverageApp(cells=tuple(self.scenario.coverage_critical), floor=th.floor)
        else:
            behavior = behavior_cls()
        if spec.type == "coverage":
            desc = AppDescriptor(spec.id, "rApp", self.scenario.non_rt_id, spec.rank, frozenset())
            self.rapps.append((desc, behavior))
            self.rapps.sort(key=lambda pair: pair[0].app_id)
            return
        ric = self.rics[spec.ric]
        writable = (
            frozenset(spec.writable)
            if spec.writable is not None
            else derive_writable(spec.type, ric.owned, self.topology)
        )
        if spec.type == "scripted" and spec.writable is None:
            writable = frozenset(
                key for key in self.params.values if Target.parse(key).cell in ric.owned
            )
        desc = AppDescriptor(spec.id, "xApp", spec.ric, spec.rank, writable)
        ric.apps.append(desc)
        ric.apps.sort(key=lambda a: a.app_id)
        ric.behaviors[spec.id] = behavior

    def _configure_policy(self, ric: RicState) -> None:
        spec = self.scenario.cm.policy
        ric.policy = CmPolicy(
            priorities=dict(self._global_ranks),
            strategies=dict(spec.strategies),
            cooldown_ticks=dict(spec.cooldown_ticks),
            limitation_ranges={
                (app, kind): (float(lo), float(hi))
                for app, table in spec.limitation_ranges.items()
                for kind, (lo, hi) in table.items()
            },
            kpi_weights=dict(spec.kpi_weights),
            conflict_avoidance=spec.conflict_avoidance,
            dynamic_priorities=spec.dynamic_priorities,
            adaptation_period=spec.adaptation.period,
            adaptation_min_trials=spec.adaptation.min_trials,
            adaptation_rate_floor=spec.adaptation.rate_floor,
            outcome_horizon=spec.adaptation.horizon,
        )
        local = [a.app_id for a in ric.apps]
        if spec.pipeline_order is not None:
            order = tuple(a for a in spec.pipeline_order if a in local)
        else:
            order = tuple(sorted(local, key=lambda a: (-ric.policy.rank(a), a)))
        ric.pipeline_order = order
        ric.policy.pipeline_order = order

    # -- public API ---------------------------------------------------------

    def snapshot(self) -> "Simulation":
        return copy.deepcopy(self)

    def add_app(self, spec: AppSpec) -> None:
        existing = {a.app_id for r in self.rics.values() for a in r.apps}
        existing |= {d.app_id for d, _ in self.rapps}
        if spec.id in existing:
            raise SimulationError(f"app id {spec.id!r} already installed")
        self._install_app(spec)
        self._global_ranks[spec.id] = spec.rank
        for ric in self.rics.values():
            ric.policy.priorities.setdefault(spec.id, spec.rank)
            if spec.type != "coverage" and spec.ric == ric.ric_id:
                if spec.id not in ric.pipeline_order:
                    order = tuple(
                        sorted(
                            [a.app_id for a in ric.apps],
                            key=lambda a: (-ric.policy.rank(a), a),
                        )
                    ) if self.scenario.cm.policy.pipeline_order is None else ric.pipeline_order
                    ric.pipeline_order = order
                    ric.policy.pipeline_order = order

    def run(self, until: int) -> None:
        if until < self.tick:
            raise SimulationError(f"cannot run backwards: at tick {self.tick}, asked {until}")
        while self.tick < until:
            self.step()

    def run_all(self) -> None:
        self.run(self.scenario.ticks)

    def step(self) -> None:
        self.tick += 1
        t = self.tick
        self._phase0_apply_staged(t)
        frame = self._phase1_synthesis(t)
        self._phase2_monitoring(t)
        self._phase3_nonrt(t, frame)
        batches = self._phase4_decisions(t, frame)
        plans: dict[str, list[Decision]] = {}
        rollbacks: dict[str, list[ConflictRecord]] = {}
        for ric_id in sorted(self.rics):
            plans[ric_id], rollbacks[ric_id] = self._phase5_gate(t, self.rics[ric_id], batches[ric_id])
        self._phase6_actuate(t, plans, rollbacks)
        self._phase7_publish_supervise(t)

    # -- phases -------------------------------------------------------------

    def _phase0_apply_staged(self, t: int) -> None:
        for ric_id in sorted(self.rics):
            ric = self.rics[ric_id]
            for changes in ric.staged_updates:
                try:
                    ric.policy = apply_update(ric.policy, changes)
                except PolicyUpdateError as exc:
                    self.log.append(t, "policy-updated", {
                        "ric_id": ric_id, "trigger": "mno-update", "status": "rejected",
                        "changes": changes, "error": str(exc),
                    })
                    continue
                if "pipeline_order" in changes:
                    local = {a.app_id for a in ric.apps}
                    ric.pipeline_order = tuple(a for a in changes["pipeline_order"] if a in local)
                    ric.policy.pipeline_order = ric.pipeline_order
                self.log.append(t, "policy-updated", {
                    "ric_id": ric_id, "trigger": "mno-update", "status": "applied",
                    "changes": changes, "digest": ric.policy.digest(),
                })
            ric.staged_updates.clear()

    def _phase1_synthesis(self, t: int) -> KpiFrame:
        offered = {}
        for cell in self.topology.cells:
            base = self.scenario.offered(cell, t)
            if self.scenario.noise > 0:
                base += self.rng.uniform(-self.scenario.noise, self.scenario.noise)
                base = min(max(base, 0.0), 1.5)
            offered[cell] = base
        frame, clamps = step_kpis(self.topology, self.coeff, self.params, offered, t)
        self.frames[t] = frame
        self.log.append(t, "kpi-frame", {
            "values": {c: dict(sorted(frame.values[c].items())) for c in sorted(frame.values)},
            "offered": dict(sorted(offered.items())),
        })
        for clamp in clamps:
            self.log.append(t, "clamp-event", clamp)
        return frame

    def _phase2_monitoring(self, t: int) -> None:
        frame = self.frames[t]
        for ric_id in sorted(self.rics):
            ric = self.rics[ric_id]
            ric.monitor.ingest(frame.restrict(ric.owned))
            for change in ric.monitor.evaluate(t, lambda: self._make_id("al")):
                a = change.alert
                payload = {
                    "alert_id": a.alert_id, "ric_id": ric_id, "cell": a.cell, "kpi": a.kpi,
                    "severity": a.severity, "value": a.value, "raised_tick": a.raised_tick,
                }
                if change.kind == "cleared":
                    payload["cleared_tick"] = t
                    self.log.append(t, "alert-cleared", payload)
                else:
                    payload["escalated"] = change.kind == "escalated"
                    self.log.append(t, "alert-raised", payload)
            critical = ric.monitor.critical_active()
            if critical and ric.pipeline_since is None:
                ric.pipeline_since = t
                self.log.append(t, "pipeline-mode", {"ric_id": ric_id, "status": "entered"})
            elif not critical and ric.pipeline_since is not None:
                ric.pipeline_since = None
                self.log.append(t, "pipeline-mode", {"ric_id": ric_id, "status": "exited"})

    def _deliver(self, t: int, item: dict) -> None:
        kind, ric_id = item["kind"], item["to"]
        ric = self.rics[ric_id]
        if kind == "report":
            ric.delivered_reports.append((t, item["payload"]))
            window = self.scenario.cm.detection.window
            ric.delivered_reports = [
                (dt, rep) for dt, rep in ric.delivered_reports if dt > t - window - 1
            ]
            self.log.append(t, "report-delivered", {
                "to": ric_id, "origin": item["payload"]["origin"],
                "publish_tick": item["payload"]["publish_tick"],
                "actuated": item["payload"]["actuated"],
            })
        elif kind == "constraint":
            constraint: PolicyConstraint = item["payload"]
            ric.constraints.append((t, constraint))
            self.log.append(t, "constraint-delivered", {
                "to": ric_id, "delivery_tick": t, **constraint.to_payload(),
            })
        elif kind == "policy-update":
            ric.staged_updates.append(item["payload"])
            self.log.append(t, "policy-updated", {
                "ric_id": ric_id, "trigger": "mno-update", "status": "delivered",
                "changes": item["payload"],
            })

    def _phase3_nonrt(self, t: int, frame: KpiFrame) -> None:
        due = [item for item in self.hub_in_flight if item["due"] == t]
        self.hub_in_flight = [item for item in self.hub_in_flight if item["due"] > t]
        for item in due:  # enqueue order is deterministic
            self._deliver(t, item)

        for changes in self._mno_updates.get(t, []):
            self.log.append(t, "policy-updated", {
                "trigger": "mno-update", "status": "issued", "changes": changes,
            })
            for ric_id in sorted(self.rics):
                item = {"due": t + self.scenario.delay, "kind": "policy-update",
                        "to": ric_id, "payload": changes}
                if self.scenario.delay == 0:
                    self._deliver(t, item)
                else:
                    self.hub_in_flight.append(item)

        for desc, rapp in self.rapps:
            fresh = issue_policy(rapp, self.issued_constraints, t, lambda: self._make_id("pc"))
            for constraint in fresh:
                spec = Target(constraint.param, ("x",)).spec
                bad = None
                if not spec.in_domain(constraint.bound):
                    bad = f"bound {constraint.bound} outside {constraint.param} domain"
                elif any(c not in self.topology.cells for c in constraint.scope_cells):
                    bad = "unknown scope cell"
                payload = {"rapp": desc.app_id, **constraint.to_payload()}
                if bad:
                    payload["status"] = "rejected"
                    payload["error"] = bad
                    self.log.append(t, "constraint-issued", payload)
                    continue
                payload["status"] = "issued"
                self.issued_constraints.append(constraint)
                self.log.append(t, "constraint-issued", payload)
                scope = set(constraint.scope_cells)
                for ric_id in sorted(self.rics):
                    if not scope & self.rics[ric_id].owned:
                        continue
                    item = {"due": t + self.scenario.delay, "kind": "constraint",
                            "to": ric_id, "payload": constraint}
                    if self.scenario.delay == 0:
                        self._deliver(t, item)
                    else:
                        self.hub_in_flight.append(item)

    def _phase4_decisions(self, t: int, frame: KpiFrame) -> dict[str, list[Decision]]:
        batches: dict[str, list[Decision]] = {r: [] for r in self.rics}
        for ric_id in sorted(self.rics):
            ric = self.rics[ric_id]
            proposed: dict[tuple[str, str], tuple[float, str | None]] = {}
            local_frame = frame.restrict(ric.owned)
            for desc in ric.apps:
                behavior = ric.behaviors[desc.app_id]
                for prop in behavior.decide(local_frame, self.params, self.topology, ric.owned):
                    if prop.target.key not in desc.writable:
                        continue  # apps never write outside their declared set
                    proposed.setdefault((desc.app_id, prop.target.key), (prop.value, None))
            for inj in self._injections.get(t, []):
                app = next((a for r in self.rics.values() for a in r.apps if a.app_id == inj.app), None)
                if app is None or app.ric_id != ric_id:
                    continue
                proposed[(inj.app, inj.target)] = (inj.value, inj.id)
            for (app_id, target_key) in sorted(proposed):
                value, injection_id = proposed[(app_id, target_key)]
                d = Decision(
                    decision_id=self._make_id("d"),
                    app_id=app_id,
                    ric_id=ric_id,
                    target=Target.parse(target_key),
                    value=value,
                    tick=t,
                )
                batches[ric_id].append(d)
                payload = d.to_payload()
                if injection_id is not None:
                    payload["injection_id"] = injection_id
                self.log.append(t, "decision-submitted", payload)
        return batches

    # -- phase 5: the gate ----------------------------------------------------

    def _phase5_gate(
        self, t: int, ric: RicState, batch: list[Decision]
    ) -> tuple[list[Decision], list[ConflictRecord]]:
        policy = ric.policy
        window = self.scenario.cm.detection.window
        verdicts: dict[str, dict] = {}
        original = {d.decision_id: d.value for d in batch}
        ric.cooldowns = [e for e in ric.cooldowns if e.expiry > t]

        live = list(batch)
        if policy.conflict_avoidance:
            # pipeline filter
            if ric.pipeline_since is not None:
                head = resolve.pipeline_head(ric.pipeline_order, ric.pipeline_since, t)
                for d in live:
                    if d.app_id != head:
                        verdicts[d.decision_id] = {"verdict": "rejected-pipeline", "head": head}
                live = [d for d in live if d.decision_id not in verdicts]
            # cooldown filter
            for d in live:
                hit = next(
                    (e for e in ric.cooldowns if e.blocks(d.app_id, d.target.key, t)), None
                )
                if hit is not None:
                    verdicts[d.decision_id] = {
                        "verdict": "rejected-cooldown",
                        "conflict_id": hit.conflict_id,
                        "expiry": hit.expiry,
                    }
            live = [d for d in live if d.decision_id not in verdicts]
            # limitation pre-filter
            for d in live:
                admissible = resolve.apply_limitation(d, policy)
                if math.isnan(admissible):
                    verdicts[d.decision_id] = {
                        "verdict": "rejected-limitation",
                        "reason": "empty limitation range",
                    }
                else:
                    d.value = admissible
            live = [d for d in live if d.decision_id not in verdicts]

        # cross-loop checks: detection runs in both modes, the non-RT policy
        # is enforced (projection) only under conflict avoidance
        active = ric.active_constraints(t)
        for d in live:
            record = detect.detect_cross_loop(d, active, lambda: self._make_id("cf"), t)
            if record is None:
                continue
            self._log_conflict(t, ric, record)
            if not policy.conflict_avoidance:
                continue
            action, value = resolve.resolve_cross_loop(
                record, d, active, policy, t, lambda: self._make_id("ra")
            )
            self.log.append(t, "resolution-applied", action.to_payload())
            ric.pending_outcomes.append((t + policy.outcome_horizon, action, record.scope))
            if value is None:
                verdicts[d.decision_id] = {
                    "verdict": "rejected-constraint",
                    "conflict_id": record.conflict_id,
                }
            else:
                d.value = value
        live = [d for d in live if d.decision_id not in verdicts]

        # detection pool: current batch + recent local context + remote virtuals
        context = [d for d in ric.recent_actuated if t - window < d.tick < t]
        virtuals = detect.materialize_virtuals(ric.delivered_reports, ric.boundary, window, t)
        pool = live + context + virtuals
        records = self._detect_intra_inter(t, ric, pool)

        if policy.conflict_avoidance:
            rejected_ids: set[str] = set()
            live_ids = {d.decision_id for d in live}
            for record in records:
                members = [d for d in pool if d.decision_id in record.implicated]
                alive = [
                    d for d in members
                    if d.decision_id not in rejected_ids
                    and (d.decision_id in live_ids or d.remote or d.tick < t)
                ]
                action = self._resolve_record(t, ric, record, alive)
                if action is None:
                    continue
                self.log.append(t, "resolution-applied", action.to_payload())
                ric.pending_outcomes.append((t + policy.outcome_horizon, action, record.scope))
                for d in live:
                    if d.decision_id in action.rejected:
                        rejected_ids.add(d.decision_id)
                        verdicts[d.decision_id] = {
                            "verdict": "rejected-conflict",
                            "conflict_id": record.conflict_id,
                            "strategy": action.strategy,
                        }
                    elif d.decision_id in action.modified:
                        d.value = action.modified[d.decision_id]
            live = [d for d in live if d.decision_id not in verdicts]

        rollback_records = self._detect_implicit(t, ric)

        if not policy.conflict_avoidance:
            # post-hoc mode: everything actuates; domain legality still holds
            for d in live:
                d.value = d.target.spec.snap(d.value)

        plan = list(live)
        for d in batch:
            if d.decision_id in verdicts:
                payload = {**d.to_payload(), **verdicts[d.decision_id]}
                payload["value"] = original[d.decision_id]
                self.log.append(t, "decision-rejected", payload)
            else:
                verdict = "modified" if d.value != original[d.decision_id] else "accepted"
                payload = d.to_payload()
                payload.update({
                    "verdict": verdict,
                    "original": original[d.decision_id],
                    "mode": "conflict-avoidance" if policy.conflict_avoidance else "post-hoc",
                })
                self.log.append(t, "decision-gated", payload)
        return plan, (rollback_records if not policy.conflict_avoidance else [])

    def _detect_intra_inter(self, t: int, ric: RicState, pool: list[Decision]) -> list[ConflictRecord]:
        def current_of(d: Decision) -> float:
            if d.previous is not None:
                return d.previous
            return self.params.values[d.target.key]

        found = detect.detect_direct(pool, lambda: self._make_id("cf"), ric.ric_id, t)
        found += detect.detect_indirect(
            pool, self.topology, current_of, lambda: self._make_id("cf"), ric.ric_id, t
        )
        kept = []
        for record in found:
            key = (record.conflict_class, frozenset(record.implicated))
            if key in ric.seen_conflicts:
                continue
            ric.seen_conflicts.add(key)
            self._log_conflict(t, ric, record)
            kept.append(record)
        return kept

    def _detect_implicit(self, t: int, ric: RicState) -> list[ConflictRecord]:
        cfg = self.scenario.cm.detection
        frame = self.frames[t]
        observed = {
            (cell, kpi): frame.values[cell][kpi]
            for cell in sorted(ric.owned)
            for kpi in sorted(frame.values[cell])
        }
        fresh = detect.update_implicit(
            ric.implicit, observed, ric.monitor.baselines, cfg.delta, cfg.persistence
        )
        records = []
        for cell, kpi, magnitude in fresh:
            implicated = detect.attribute_implicit(
                cell, kpi, ric.recent_actuated, self.topology, cfg.lookback, t
            )
            record = ConflictRecord(
                conflict_id=self._make_id("cf"),
                conflict_class="C3",
                ric_id=ric.ric_id,
                tick=t,
                implicated=tuple(sorted(d.decision_id for d in implicated)),
                scope=(cell,),
                evidence={
                    "cell": cell, "kpi": kpi, "magnitude": magnitude,
                    "lookback": cfg.lookback,
                },
                low_confidence=not implicated,
            )
            self._log_conflict(t, ric, record)
            records.append(record)
        return records

    def _resolve_record(self, t: int, ric: RicState, record: ConflictRecord, alive: list[Decision]):
        if not alive:
            return None
        policy = ric.policy

        def current_of(d: Decision) -> float:
            if d.previous is not None:
                return d.previous
            return self.params.values[d.target.key]

        strategy = policy.strategy_for(record.conflict_class)
        if len(alive) == 1:
            return ResolutionAction(
                action_id=self._make_id("ra"),
                conflict_id=record.conflict_id,
                conflict_class=record.conflict_class,
                ric_id=ric.ric_id,
                tick=t,
                strategy=strategy,
                accepted=(alive[0].decision_id,),
                rejected=(),
                detail={"note": "counterparties already resolved this tick"},
            )
        if strategy == "cooldown":
            action, winner, entries = resolve.apply_cooldown(
                record, alive, policy, t, lambda: self._make_id("ra")
            )
            ric.cooldowns.extend(entries)
        elif strategy == "limitation":
            action, winner, value = resolve.apply_limitation_strategy(
                record, alive, policy, current_of, t, lambda: self._make_id("ra")
            )
            if winner.remote or winner.tick < t:
                action.modified = {}
        else:
            action, winner = resolve.apply_prioritization(
                record, alive, policy, t, lambda: self._make_id("ra")
            )
        return action

    def _log_conflict(self, t: int, ric: RicState, record: ConflictRecord) -> None:
        self.log.append(t, "conflict-detected", record.to_payload())
        ric.unreported_conflicts.append((record.conflict_id, record.conflict_class))

    # -- phases 6 & 7 ---------------------------------------------------------

    def _phase6_actuate(self, t: int, plans: dict[str, list[Decision]], rollbacks) -> None:
        window = self.scenario.cm.detection.window
        lookback = self.scenario.cm.detection.lookback
        self._actuated_now: dict[str, list[Decision]] = {r: [] for r in self.rics}
        for ric_id in sorted(self.rics):
            ric = self.rics[ric_id]
            for d in plans[ric_id]:
                d.previous = self.params.set(d.target, d.value)
                self.log.append(t, "decision-actuated", {
                    **d.to_payload(), "previous": d.previous,
                })
                ric.recent_actuated.append(d)
                ric.decision_outcomes.append((t + ric.policy.outcome_horizon, d))
                self._actuated_now[ric_id].append(d)
            horizon = max(window, lookback) + 2
            ric.recent_actuated = [x for x in ric.recent_actuated if x.tick > t - horizon]
        # post-hoc rollbacks: restore each target to its value before the
        # earliest implicated decision; overrides same-tick writes
        for ric_id in sorted(self.rics):
            ric = self.rics[ric_id]
            for record in rollbacks[ric_id]:
                implicated = [
                    d for d in ric.recent_actuated if d.decision_id in record.implicated
                ]
                if not implicated:
                    continue
                restored: dict[str, float] = {}
                by_target: dict[str, list[Decision]] = {}
                for d in implicated:
                    by_target.setdefault(d.target.key, []).append(d)
                for key in sorted(by_target):
                    earliest = min(by_target[key], key=lambda d: (d.tick, d.decision_id))
                    self.params.set(earliest.target, earliest.previous)
                    restored[key] = earliest.previous
                action = ResolutionAction(
                    action_id=self._make_id("ra"),
                    conflict_id=record.conflict_id,
                    conflict_class="C3",
                    ric_id=ric_id,
                    tick=t,
                    strategy="rollback",
                    accepted=(),
                    rejected=tuple(sorted(record.implicated)),
                    detail={"restored": restored},
                )
                self.log.append(t, "resolution-applied", action.to_payload())
                ric.pending_outcomes.append(
                    (t + ric.policy.outcome_horizon, action, record.scope)
                )

    def _phase7_publish_supervise(self, t: int) -> None:
        zero_delay_receivers: list[str] = []
        for ric_id in sorted(self.rics):
            ric = self.rics[ric_id]
            report = {
                "origin": ric_id,
                "publish_tick": t,
                "actuated": [
                    {
                        "decision_id": d.decision_id, "app_id": d.app_id,
                        "target": d.target.key, "value": d.value,
                        "previous": d.previous, "tick": d.tick,
                    }
                    for d in self._actuated_now[ric_id]
                ],
                "conflicts": [
                    {"conflict_id": cid, "class": cls} for cid, cls in ric.unreported_conflicts
                ],
                "alerts": ric.monitor.active_payload(),
                "policy_digest": ric.policy.digest(),
            }
            ric.unreported_conflicts = []
            self.log.append(t, "report-published", report)
            for peer_id in sorted(self.rics):
                if peer_id == ric_id:
                    continue
                item = {"due": t + self.scenario.delay, "kind": "report",
                        "to": peer_id, "payload": report}
                if self.scenario.delay == 0:
                    self._deliver(t, item)
                    zero_delay_receivers.append(peer_id)
                else:
                    self.hub_in_flight.append(item)

        # zero-delay deliveries land after this tick's gate; run a same-tick
        # inter-RIC detection pass so D=0 conflicts are still caught at t
        window = self.scenario.cm.detection.window
        for ric_id in sorted(set(zero_delay_receivers)):
            ric = self.rics[ric_id]
            virtuals = detect.materialize_virtuals(ric.delivered_reports, ric.boundary, window, t)
            locals_ = [d for d in ric.recent_actuated if t - window < d.tick <= t]
            if virtuals:
                self._detect_intra_inter(t, ric, locals_ + virtuals)

        for ric_id in sorted(self.rics):
            ric = self.rics[ric_id]
            self._score_outcomes(t, ric)
            if t % ric.policy.adaptation_period == 0:
                for change in adapt(ric.policy, ric.stats):
                    self.log.append(t, "policy-updated", {
                        "ric_id": ric_id, "trigger": "adaptation", **change,
                        "digest": ric.policy.digest(),
                    })
                if ric.policy.dynamic_priorities:
                    new = rerank(ric.policy, ric.app_delta)
                    if new is not None:
                        ric.policy.priorities = new
                        self.log.append(t, "policy-updated", {
                            "ric_id": ric_id, "trigger": "dynamic-priorities",
                            "priorities": dict(sorted(new.items())),
                            "digest": ric.policy.digest(),
                        })

    def _score_outcomes(self, t: int, ric: RicState) -> None:
        due = [(d, a, s) for d, a, s in ric.pending_outcomes if d == t]
        ric.pending_outcomes = [(d, a, s) for d, a, s in ric.pending_outcomes if d != t]
        for _, action, scope in due:
            delta = score_outcome(
                self.frames, action.tick, ric.policy.outcome_horizon, scope,
                ric.policy.kpi_weights,
            )
            success = delta >= 0
            ric.stats.record(action.conflict_class, action.strategy, success)
            self.log.append(t, "outcome-recorded", {
                "ric_id": ric.ric_id,
                "conflict_id": action.conflict_id,
                "action_id": action.action_id,
                "class": action.conflict_class,
                "strategy": action.strategy,
                "resolution_tick": action.tick,
                "delta_u": delta,
                "success": success,
            })
        due_decisions = [(d, dec) for d, dec in ric.decision_outcomes if d == t]
        ric.decision_outcomes = [(d, dec) for d, dec in ric.decision_outcomes if d != t]
        for _, decision in due_decisions:
            cells = tuple(sorted({
                cell for cell, _, _ in dependency_edges(decision.target, self.topology)
            }))
            delta = score_outcome(
                self.frames, decision.tick, ric.policy.outcome_horizon, cells,
                ric.policy.kpi_weights,
            )
            total, n = ric.app_delta.get(decision.app_id, (0.0, 0))
            ric.app_delta[decision.app_id] = (total + delta, n + 1)
