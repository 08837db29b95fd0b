"""Built-in RAN control applications.

Four rule-based agents deliberately configured to step on each other: a
load balancer and a mobility-robustness optimizer that fight over handover
offsets, an energy saver that lowers transmit power, and a coverage rApp
that issues floor policies the energy saver will violate. Rules are pure:
the same frame and tick always produce the same proposals.

Apps observe only the KPI frames of their host RIC's cells (restricted
frames); rules that scan neighbors silently skip cells outside that view.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from ricsim.ran import KpiFrame, ParamStore, Target, Topology, TTT_GRID
from ricsim.records import PolicyConstraint

XAPP = "xApp"
RAPP = "rApp"


@dataclass(frozen=True)
class AppDescriptor:
    app_id: str
    kind: str  # xApp | rApp
    ric_id: str  # hosting near-RT RIC, or the non-RT RIC id for rApps
    rank: int
    writable: frozenset[str]  # target keys
    kpi_interests: tuple[str, ...] = ()


@dataclass
class Proposal:
    target: Target
    value: float


def _visible_neighbors(cell: str, topology: Topology, frame: KpiFrame) -> list[str]:
    return [j for j in topology.neighbors[cell] if j in frame.values]


@dataclass
class MlbApp:
    """Mobility load balancing: shed traffic from overloaded cells by raising
    the handover offset toward the least-loaded neighbor."""

    load_high: float = 0.8
    neighbor_low: float = 0.5
    step: float = 0.5

    def decide(self, frame: KpiFrame, params: ParamStore, topology: Topology, owned: frozenset[str]) -> list[Proposal]:
        out: list[Proposal] = []
        for i in sorted(owned):
            if frame.of(i, "load") <= self.load_high:
                continue
            nbrs = _visible_neighbors(i, topology, frame)
            if not nbrs:
                continue
            j = min(nbrs, key=lambda n: (frame.of(n, "load"), n))
            if frame.of(j, "load") >= self.neighbor_low:
                continue
            t = Target("cio", (i, j))
            out.append(Proposal(t, t.spec.snap(params.cio(i, j) + self.step)))
        return out


@dataclass
class MroApp:
    """Mobility robustness: damp ping-pong by lowering the worst mutual
    offset pair, and damp handover failures by shortening time-to-trigger."""

    pingpong_high: float = 0.15
    hof_high: float = 0.1

    def decide(self, frame: KpiFrame, params: ParamStore, topology: Topology, owned: frozenset[str]) -> list[Proposal]:
        out: list[Proposal] = []
        for i in sorted(owned):
            if frame.of(i, "pingpong") > self.pingpong_high:
                nbrs = _visible_neighbors(i, topology, frame)
                if nbrs:
                    j = max(nbrs, key=lambda n: (params.cio(i, n) + params.cio(n, i), n))
                    t = Target("cio", (i, j))
                    out.append(Proposal(t, t.spec.snap(params.cio(i, j) - 0.5)))
            if frame.of(i, "hof") > self.hof_high:
                lower = [g for g in TTT_GRID if g < params.ttt(i)]
                if lower:
                    out.append(Proposal(Target("ttt", (i,)), lower[-1]))
        return out


@dataclass
class EsApp:
    """Energy saving: walk transmit power down on underloaded cells."""

    load_low: float = 0.3
    step: float = 1.0

    def decide(self, frame: KpiFrame, params: ParamStore, topology: Topology, owned: frozenset[str]) -> list[Proposal]:
        out: list[Proposal] = []
        for i in sorted(owned):
            if frame.of(i, "load") < self.load_low:
                t = Target("tx_power", (i,))
                out.append(Proposal(t, t.spec.snap(params.tx(i) - self.step)))
        return out


@dataclass
class CoverageApp:
    """Non-RT coverage guard: keeps transmit power at or above a floor on
    cells flagged coverage-critical. Emits policy constraints, not decisions."""

    cells: tuple[str, ...] = ()
    floor: float = 36.0

    def decide(self, frame: KpiFrame, params: ParamStore, topology: Topology, owned: frozenset[str]) -> list[Proposal]:
        return []

    def wanted_constraints(self) -> list[tuple[str, str, str, float]]:
        """(cell, param kind, bound kind, bound) tuples this rApp insists on."""
        return [(c, "tx_power", "min", self.floor) for c in self.cells]


@dataclass
class ScriptedApp:
    """Emits nothing by itself; the scenario injects decisions in its name."""

    def decide(self, frame: KpiFrame, params: ParamStore, topology: Topology, owned: frozenset[str]) -> list[Proposal]:
        return []


BEHAVIOR_KINDS = {
    "mlb": MlbApp,
    "mro": MroApp,
    "es": EsApp,
    "coverage": CoverageApp,
    "scripted": ScriptedApp,
}


def derive_writable(app_type: str, owned: frozenset[str], topology: Topology) -> frozenset[str]:
    """Default writable target set per built-in app type."""
    cio = {f"cio:{i}:{j}" for i in owned for j in topology.neighbors[i]}
    if app_type == "mlb":
        return frozenset(cio)
    if app_type == "mro":
        return frozenset(cio | {f"ttt:{i}" for i in owned})
    if app_type == "es":
        return frozenset(f"tx_power:{i}" for i in owned)
    return frozenset()


def issue_policy(
    rapp: CoverageApp,
    existing: list[PolicyConstraint],
    tick: int,
    make_id,
) -> list[PolicyConstraint]:
    """Constraints the coverage rApp wants issued now, minus those already
    active with identical scope/param/kind/bound (idempotence)."""
    out: list[PolicyConstraint] = []
    for cell, param, kind, bound in rapp.wanted_constraints():
        dup = any(
            c.scope_cells == (cell,)
            and c.param == param
            and c.kind == kind
            and c.bound == bound
            and c.active(tick)
            for c in existing
        )
        if not dup:
            out.append(
                PolicyConstraint(
                    constraint_id=make_id(),
                    scope_cells=(cell,),
                    param=param,
                    kind=kind,
                    bound=bound,
                    issued_tick=tick,
                    from_tick=tick,
                )
            )
    return out
