"""Scenario configuration: a single versioned JSON document, strictly validated.

Unknown fields are rejected; every default is filled in at load time so the
effective configuration can be echoed to the event log verbatim. Validation
errors name the offending field and constraint.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Literal, Union

from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from ricsim.ran import PARAM_SPECS, Target, Topology

CONFLICT_CLASS = Literal["C1", "C2", "C3", "C4", "C5"]


class ScenarioError(ValueError):
    """Scenario file failed validation; message names field and constraint."""


class _Model(BaseModel):
    model_config = ConfigDict(extra="forbid")


class TrafficStep(_Model):
    from_tick: int = Field(0, ge=0)
    value: float = Field(..., ge=0.0, le=1.5)


class CellSpec(_Model):
    id: str
    neighbors: list[str]


class RicSpec(_Model):
    id: str
    cells: list[str]
    boundary: list[str] | None = None  # default: cells adjacent across segments


class TopologySpec(_Model):
    cells: list[CellSpec]
    rics: list[RicSpec]


class CoefficientsSpec(_Model):
    kappa: float = 0.05
    mu: float = 0.02
    pingpong_base: float = 0.02
    pingpong_couple: float = 0.03
    pingpong_ttt: float = 0.05
    hof_base: float = 0.02
    hof_overload: float = 0.5
    hof_ttt: float = 0.08
    overload_knee: float = 0.8
    energy_base: float = 1.0
    energy_slope: float = 0.1


class ThresholdsSpec(_Model):
    load_high: float = 0.8
    neighbor_low: float = 0.5
    pingpong_high: float = 0.15
    hof_high: float = 0.1
    load_low: float = 0.3
    floor: float = 36.0


class AppSpec(_Model):
    id: str
    type: Literal["mlb", "mro", "es", "coverage", "scripted"]
    ric: str | None = None  # required for xApps; must be absent for coverage
    rank: int = Field(0, ge=0)
    thresholds: ThresholdsSpec = ThresholdsSpec()
    writable: list[str] | None = None  # scripted apps: explicit target keys


class InitialParamsSpec(_Model):
    default_cio: float = 0.0
    default_tx_power: float = 40.0
    default_ttt: float = 256.0
    cio: dict[str, float] = Field(default_factory=dict)  # "i:j" -> dB
    tx_power: dict[str, float] = Field(default_factory=dict)
    ttt: dict[str, float] = Field(default_factory=dict)


class DetectionSpec(_Model):
    window: int = Field(1, ge=1)
    alpha: float = Field(0.2, gt=0.0, le=1.0)
    delta: float = Field(0.1, gt=0.0)
    persistence: int = Field(3, ge=1)
    lookback: int = Field(10, ge=1)


class PmonSpec(_Model):
    degraded: dict[str, float] = Field(
        default_factory=lambda: {"pingpong": 0.2, "hof": 0.15, "load": 0.95}
    )
    critical: dict[str, float] = Field(default_factory=lambda: {"pingpong": 0.35, "hof": 0.3})
    hysteresis: float = Field(0.02, ge=0.0)
    clear_persistence: int = Field(3, ge=1)
    history: int = Field(64, ge=4)


class AdaptationSpec(_Model):
    period: int = Field(50, ge=1)
    min_trials: int = Field(10, ge=1)
    rate_floor: float = Field(0.5, ge=0.0, le=1.0)
    horizon: int = Field(10, ge=1)


class PolicySpec(_Model):
    priorities: dict[str, int] | None = None  # default: app ranks
    strategies: dict[str, str] = Field(
        default_factory=lambda: {"C1": "prioritization", "C2": "cooldown", "C4": "prioritization"}
    )
    cooldown_ticks: dict[str, int] = Field(
        default_factory=lambda: {"C1": 20, "C2": 20, "C4": 20}
    )
    limitation_ranges: dict[str, dict[str, tuple[float, float]]] = Field(default_factory=dict)
    kpi_weights: dict[str, float] = Field(
        default_factory=lambda: {"load": 1.0, "pingpong": 1.0, "hof": 1.0, "energy": 1.0}
    )
    conflict_avoidance: bool = True
    dynamic_priorities: bool = False
    pipeline_order: list[str] | None = None  # default: per-RIC rank order
    adaptation: AdaptationSpec = AdaptationSpec()


class CmSpec(_Model):
    policy: PolicySpec = PolicySpec()
    detection: DetectionSpec = DetectionSpec()
    pmon: PmonSpec = PmonSpec()


class InjectionSpec(_Model):
    id: str
    tick: int = Field(..., ge=1)
    app: str
    target: str
    value: float


class MnoUpdateSpec(_Model):
    tick: int = Field(..., ge=1)
    changes: dict


class GroundTruthSpec(_Model):
    id: str
    conflict_class: CONFLICT_CLASS
    window: tuple[int, int]
    injections: list[str] = Field(..., min_length=1)


class AssessmentSpec(_Model):
    reject_below: float = -0.05
    deploy_above: float = 0.01


class MetricsSpec(_Model):
    count_c3_fp: bool = False


class ScenarioConfig(_Model):
    schema_version: Literal[1]
    name: str
    seed: int = 0
    ticks: int = Field(..., ge=1, le=100_000)
    delay: int = Field(5, ge=0)
    non_rt_id: str = "non-rt"
    topology: TopologySpec
    traffic_default: float = Field(0.5, ge=0.0, le=1.5)
    traffic: dict[str, Union[float, list[TrafficStep]]] = Field(default_factory=dict)
    noise: float = Field(0.0, ge=0.0)
    coefficients: CoefficientsSpec = CoefficientsSpec()
    initial: InitialParamsSpec = InitialParamsSpec()
    apps: list[AppSpec] = Field(default_factory=list)
    candidates: list[AppSpec] = Field(default_factory=list)
    coverage_critical: list[str] = Field(default_factory=list)
    cm: CmSpec = CmSpec()
    injections: list[InjectionSpec] = Field(default_factory=list)
    mno_updates: list[MnoUpdateSpec] = Field(default_factory=list)
    ground_truth: list[GroundTruthSpec] = Field(default_factory=list)
    assessment: AssessmentSpec = AssessmentSpec()
    metrics: MetricsSpec = MetricsSpec()

    # -- derived views ----------------------------------------------------

    def build_topology(self) -> Topology:
        return Topology(
            cells=tuple(c.id for c in self.topology.cells),
            neighbors={c.id: tuple(sorted(c.neighbors)) for c in self.topology.cells},
        )

    def owned_cells(self, ric_id: str) -> frozenset[str]:
        for ric in self.topology.rics:
            if ric.id == ric_id:
                return frozenset(ric.cells)
        raise KeyError(ric_id)

    def boundary_cells(self, ric_id: str) -> frozenset[str]:
        spec = next(r for r in self.topology.rics if r.id == ric_id)
        if spec.boundary is not None:
            return frozenset(spec.boundary)
        owned = self.owned_cells(ric_id)
        nbrs = {c.id: c.neighbors for c in self.topology.cells}
        return frozenset(c for c in owned if any(j not in owned for j in nbrs[c]))

    def offered(self, cell: str, tick: int) -> float:
        profile = self.traffic.get(cell)
        if profile is None:
            return self.traffic_default
        if isinstance(profile, (int, float)):
            return float(profile)
        value = self.traffic_default
        for step in profile:
            if step.from_tick <= tick:
                value = step.value
        return value

    def app_ids(self) -> list[str]:
        return [a.id for a in self.apps]

    # -- cross-field validation -------------------------------------------

    @model_validator(mode="after")
    def _check(self) -> "ScenarioConfig":
        cells = [c.id for c in self.topology.cells]
        if len(set(cells)) != len(cells):
            raise ValueError("topology.cells: duplicate cell ids")
        cellset = set(cells)
        nbrs = {c.id: set(c.neighbors) for c in self.topology.cells}
        for c in self.topology.cells:
            for j in c.neighbors:
                if j not in cellset:
                    raise ValueError(f"topology.cells[{c.id}].neighbors: unknown cell {j!r}")
                if j == c.id:
                    raise ValueError(f"topology.cells[{c.id}].neighbors: self-loop")
                if c.id not in nbrs[j]:
                    raise ValueError(
                        f"topology.cells: neighbor relation must be symmetric ({c.id}->{j})"
                    )
        if not self.topology.rics:
            raise ValueError("topology.rics: at least one near-RT RIC required")
        seen: set[str] = set()
        for ric in self.topology.rics:
            if ric.id == self.non_rt_id:
                raise ValueError(f"topology.rics[{ric.id}]: id collides with non_rt_id")
            for cell in ric.cells:
                if cell not in cellset:
                    raise ValueError(f"topology.rics[{ric.id}].cells: unknown cell {cell!r}")
                if cell in seen:
                    raise ValueError(f"topology.rics: cell {cell!r} owned by two RICs")
                seen.add(cell)
            if ric.boundary is not None:
                for cell in ric.boundary:
                    if cell not in ric.cells:
                        raise ValueError(
                            f"topology.rics[{ric.id}].boundary: {cell!r} not owned by this RIC"
                        )
        if seen != cellset:
            raise ValueError(f"topology.rics: cells not covered: {sorted(cellset - seen)}")

        for cell in self.traffic:
            if cell not in cellset:
                raise ValueError(f"traffic: unknown cell {cell!r}")
        for cell in self.coverage_critical:
            if cell not in cellset:
                raise ValueError(f"coverage_critical: unknown cell {cell!r}")

        self._check_params(cellset, nbrs)
        app_index = self._check_apps()
        self._check_policy(app_index)
        self._check_injections(app_index, nbrs)
        return self

    def _check_params(self, cellset: set[str], nbrs: dict[str, set[str]]) -> None:
        defaults = (
            ("cio", self.initial.default_cio),
            ("tx_power", self.initial.default_tx_power),
            ("ttt", self.initial.default_ttt),
        )
        for kind, value in defaults:
            if not PARAM_SPECS[kind].in_domain(value):
                raise ValueError(f"initial.default_{kind}: {value} outside domain")
        for pair, value in self.initial.cio.items():
            i, _, j = pair.partition(":")
            if i not in cellset or j not in nbrs.get(i, set()):
                raise ValueError(f"initial.cio[{pair}]: not a neighbor pair")
            if not PARAM_SPECS["cio"].in_domain(value):
                raise ValueError(f"initial.cio[{pair}]: {value} outside domain")
        for kind, table in (("tx_power", self.initial.tx_power), ("ttt", self.initial.ttt)):
            for cell, value in table.items():
                if cell not in cellset:
                    raise ValueError(f"initial.{kind}[{cell}]: unknown cell")
                if not PARAM_SPECS[kind].in_domain(value):
                    raise ValueError(f"initial.{kind}[{cell}]: {value} outside domain")

    def _check_apps(self) -> dict[str, AppSpec]:
        ric_ids = {r.id for r in self.topology.rics}
        index: dict[str, AppSpec] = {}
        for app in list(self.apps) + list(self.candidates):
            if app.id in index:
                raise ValueError(f"apps: duplicate app id {app.id!r}")
            index[app.id] = app
            if app.type == "coverage":
                if app.ric not in (None, self.non_rt_id):
                    raise ValueError(f"apps[{app.id}]: coverage rApp is hosted by the non-RT RIC")
            else:
                if app.ric not in ric_ids:
                    raise ValueError(f"apps[{app.id}]: unknown or missing ric {app.ric!r}")
            if app.writable is not None:
                if app.type != "scripted":
                    raise ValueError(f"apps[{app.id}]: writable is only for scripted apps")
                owned = self.owned_cells(app.ric)
                for key in app.writable:
                    try:
                        target = Target.parse(key)
                    except ValueError as exc:
                        raise ValueError(f"apps[{app.id}].writable: {exc}") from exc
                    if target.cell not in owned:
                        raise ValueError(
                            f"apps[{app.id}].writable: {key} primary cell not owned by {app.ric}"
                        )
        return index

    def _check_policy(self, apps: dict[str, AppSpec]) -> None:
        pol = self.cm.policy
        for app_id in pol.priorities or {}:
            if app_id not in apps:
                raise ValueError(f"cm.policy.priorities: unknown app {app_id!r}")
        for cls in list(pol.strategies) + list(pol.cooldown_ticks):
            if cls not in ("C1", "C2", "C4"):
                raise ValueError(f"cm.policy: no strategy/cooldown slot for class {cls!r}")
        for cls, strat in pol.strategies.items():
            if strat not in ("prioritization", "cooldown", "limitation"):
                raise ValueError(f"cm.policy.strategies[{cls}]: unknown strategy {strat!r}")
        for cls, ticks in pol.cooldown_ticks.items():
            if ticks < 1:
                raise ValueError(f"cm.policy.cooldown_ticks[{cls}]: must be ≥ 1")
        for app_id, table in pol.limitation_ranges.items():
            if app_id not in apps:
                raise ValueError(f"cm.policy.limitation_ranges: unknown app {app_id!r}")
            for kind, (lo, hi) in table.items():
                spec = PARAM_SPECS.get(kind)
                if spec is None:
                    raise ValueError(f"cm.policy.limitation_ranges[{app_id}]: unknown kind {kind!r}")
                if not (spec.lo <= lo <= hi <= spec.hi):
                    raise ValueError(
                        f"cm.policy.limitation_ranges[{app_id}][{kind}]: [{lo}, {hi}] outside domain"
                    )
        for kpi, w in pol.kpi_weights.items():
            if kpi not in ("load", "pingpong", "hof", "energy"):
                raise ValueError(f"cm.policy.kpi_weights: unknown KPI {kpi!r}")
            if w < 0:
                raise ValueError(f"cm.policy.kpi_weights[{kpi}]: must be ≥ 0")
        for app_id in pol.pipeline_order or []:
            if app_id not in apps:
                raise ValueError(f"cm.policy.pipeline_order: unknown app {app_id!r}")

    def _check_injections(self, apps: dict[str, AppSpec], nbrs: dict[str, set[str]]) -> None:
        seen: set[str] = set()
        for inj in self.injections:
            if inj.id in seen:
                raise ValueError(f"injections: duplicate id {inj.id!r}")
            seen.add(inj.id)
            if inj.tick > self.ticks:
                raise ValueError(f"injections[{inj.id}]: tick {inj.tick} beyond run length")
            app = apps.get(inj.app)
            if app is None:
                raise ValueError(f"injections[{inj.id}]: unknown app {inj.app!r}")
            try:
                target = Target.parse(inj.target)
            except ValueError as exc:
                raise ValueError(f"injections[{inj.id}]: {exc}") from exc
            if target.param == "cio":
                i, j = target.cells
                if j not in nbrs.get(i, set()):
                    raise ValueError(f"injections[{inj.id}]: {inj.target} is not a neighbor pair")
            if app.writable is not None:
                if inj.target not in app.writable:
                    raise ValueError(
                        f"injections[{inj.id}]: target {inj.target} not writable by {inj.app}"
                    )
            else:
                kinds = {
                    "mlb": ("cio",),
                    "mro": ("cio", "ttt"),
                    "es": ("tx_power",),
                    "coverage": (),
                    "scripted": ("cio", "tx_power", "ttt"),
                }[app.type]
                if target.param not in kinds:
                    raise ValueError(
                        f"injections[{inj.id}]: {app.type} app cannot write {target.param}"
                    )
                if app.ric is not None and target.cell not in self.owned_cells(app.ric):
                    raise ValueError(
                        f"injections[{inj.id}]: {inj.target} primary cell not owned by {app.ric}"
                    )
        for gt in self.ground_truth:
            for inj_id in gt.injections:
                if inj_id not in seen:
                    raise ValueError(f"ground_truth[{gt.id}]: unknown injection {inj_id!r}")
            lo, hi = gt.window
            if not (1 <= lo <= hi <= self.ticks):
                raise ValueError(f"ground_truth[{gt.id}]: window {gt.window} outside run")


def load_scenario(source: str | Path | dict) -> ScenarioConfig:
    """Parse and validate a scenario from a file path or a pre-parsed dict."""
    if isinstance(source, dict):
        raw = source
    else:
        path = Path(source)
        try:
            raw = json.loads(path.read_text())
        except OSError as exc:
            raise ScenarioError(f"cannot read scenario: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ScenarioError(f"scenario is not valid JSON: {exc}") from exc
    try:
        return ScenarioConfig.model_validate(raw)
    except ValidationError as exc:
        lines = []
        for err in exc.errors():
            where = ".".join(str(p) for p in err["loc"]) or "<root>"
            lines.append(f"{where}: {err['msg']}")
        raise ScenarioError("scenario validation failed: " + "; ".join(lines)) from exc
