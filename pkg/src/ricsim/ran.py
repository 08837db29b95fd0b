"""Cell topology, tunable parameters and the closed-form KPI model.

The network is a set of cells with a directed neighbor relation. Three
parameter families are tunable: per-neighbor-pair handover offsets (cio),
per-cell transmit power (tx_power) and per-cell time-to-trigger (ttt).
KPIs (load, pingpong, hof, energy) are synthesized each tick from the
current parameter values and the offered traffic via closed-form
expressions, so every experiment is exactly reproducible.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

CIO_GRID = tuple(x / 2.0 for x in range(-12, 13))  # -6.0 .. +6.0 dB, 0.5 steps
TX_GRID = tuple(float(x) for x in range(30, 47))  # 30 .. 46 dBm, 1 dB steps
TTT_GRID = (40.0, 80.0, 128.0, 256.0, 512.0)  # ms

KPI_NAMES = ("load", "pingpong", "hof", "energy")
PARAM_KINDS = ("cio", "tx_power", "ttt")


@dataclass(frozen=True)
class ParameterSpec:
    """Admissible value set for one parameter kind."""

    kind: str
    lo: float
    hi: float
    grid: tuple[float, ...]

    def in_domain(self, value: float) -> bool:
        return value in self.grid

    def snap(self, value: float, lo: float | None = None, hi: float | None = None) -> float:
        """Clamp ``value`` into ``[lo, hi]`` (default: full domain), then move it
        to the nearest in-range grid point. Ties resolve toward the lower point.
        Returns ``nan`` when the range contains no grid point at all."""
        lo = self.lo if lo is None else max(lo, self.lo)
        hi = self.hi if hi is None else min(hi, self.hi)
        candidates = [g for g in self.grid if lo <= g <= hi]
        if not candidates:
            return math.nan
        clamped = min(max(value, lo), hi)
        return min(candidates, key=lambda g: (abs(g - clamped), g))


PARAM_SPECS: dict[str, ParameterSpec] = {
    "cio": ParameterSpec("cio", -6.0, 6.0, CIO_GRID),
    "tx_power": ParameterSpec("tx_power", 30.0, 46.0, TX_GRID),
    "ttt": ParameterSpec("ttt", 40.0, 512.0, TTT_GRID),
}


@dataclass(frozen=True, order=True)
class Target:
    """A concrete writable parameter instance.

    ``cells`` is ``(i, j)`` for cio (source, neighbor) and ``(i,)`` for the
    per-cell kinds. The string form ``kind:cells...`` is used in logs,
    scenario files and metric keys.
    """

    param: str
    cells: tuple[str, ...]

    @property
    def key(self) -> str:
        return ":".join((self.param, *self.cells))

    @property
    def cell(self) -> str:
        """Primary (source) cell: the one whose parameter is being written."""
        return self.cells[0]

    @property
    def spec(self) -> ParameterSpec:
        return PARAM_SPECS[self.param]

    @staticmethod
    def parse(key: str) -> "Target":
        parts = key.split(":")
        if parts[0] not in PARAM_SPECS:
            raise ValueError(f"unknown parameter kind {parts[0]!r}")
        want = 3 if parts[0] == "cio" else 2
        if len(parts) != want:
            raise ValueError(f"malformed target key {key!r}")
        return Target(parts[0], tuple(parts[1:]))


@dataclass(frozen=True)
class Topology:
    """Immutable cell graph. ``neighbors`` holds sorted per-cell tuples."""

    cells: tuple[str, ...]
    neighbors: dict[str, tuple[str, ...]]

    def neighbor_pairs(self) -> list[tuple[str, str]]:
        return [(i, j) for i in self.cells for j in self.neighbors[i]]

    def validate(self) -> None:
        if len(set(self.cells)) != len(self.cells):
            raise ValueError("duplicate cell ids")
        for i, js in self.neighbors.items():
            if i not in self.cells:
                raise ValueError(f"neighbor entry for unknown cell {i!r}")
            for j in js:
                if j not in self.cells:
                    raise ValueError(f"cell {i!r} lists unknown neighbor {j!r}")
                if j == i:
                    raise ValueError(f"cell {i!r} lists itself as neighbor")


@dataclass(frozen=True)
class RanCoefficients:
    """Coefficients of the closed-form KPI expressions (scenario-tunable)."""

    kappa: float = 0.05  # cio -> traffic shift gain
    mu: float = 0.02  # tx imbalance -> load gain
    pingpong_base: float = 0.02
    pingpong_couple: float = 0.03  # mutual-positive-cio gain
    pingpong_ttt: float = 0.05  # ttt damping
    hof_base: float = 0.02
    hof_overload: float = 0.5
    hof_ttt: float = 0.08
    overload_knee: float = 0.8
    energy_base: float = 1.0
    energy_slope: float = 0.1  # per dBm above 30


@dataclass
class ParamStore:
    """Current parameter values, keyed by target key."""

    values: dict[str, float] = field(default_factory=dict)

    @staticmethod
    def initial(topology: Topology, cio: float = 0.0, tx_power: float = 40.0, ttt: float = 256.0) -> "ParamStore":
        vals: dict[str, float] = {}
        for i, j in topology.neighbor_pairs():
            vals[f"cio:{i}:{j}"] = cio
        for c in topology.cells:
            vals[f"tx_power:{c}"] = tx_power
            vals[f"ttt:{c}"] = ttt
        return ParamStore(vals)

    def get(self, target: Target) -> float:
        return self.values[target.key]

    def set(self, target: Target, value: float) -> float:
        """Apply a write, returning the previous value. The value must be a
        member of the parameter's admissible grid and the target must exist."""
        if target.key not in self.values:
            raise KeyError(f"unknown target {target.key}")
        if not target.spec.in_domain(value):
            raise ValueError(f"value {value} outside domain of {target.param}")
        prev = self.values[target.key]
        self.values[target.key] = value
        return prev

    def cio(self, i: str, j: str) -> float:
        return self.values[f"cio:{i}:{j}"]

    def tx(self, c: str) -> float:
        return self.values[f"tx_power:{c}"]

    def ttt(self, c: str) -> float:
        return self.values[f"ttt:{c}"]


def clamp01(x: float) -> float:
    return min(max(x, 0.0), 1.0)


@dataclass(frozen=True)
class KpiFrame:
    """KPI values for every cell at one tick: ``values[cell][kpi]``."""

    tick: int
    values: dict[str, dict[str, float]]

    def of(self, cell: str, kpi: str) -> float:
        return self.values[cell][kpi]

    def restrict(self, cells: frozenset[str]) -> "KpiFrame":
        return KpiFrame(self.tick, {c: v for c, v in self.values.items() if c in cells})


def step_kpis(
    topology: Topology,
    coeff: RanCoefficients,
    params: ParamStore,
    offered: dict[str, float],
    tick: int,
) -> tuple[KpiFrame, list[dict]]:
    """Synthesize one KPI frame from current parameters and offered traffic.

    Returns the frame plus a list of clamp diagnostics (cell, kpi, raw value)
    for every KPI whose closed-form value fell outside [0, 1].

    Load moves between neighbors in two ways: positive cio on the i->j edge
    sheds traffic from i to j (proportional to i's offered traffic), and a
    transmit-power advantage of i over its neighbors attracts traffic to i.
    The shed amounts are antisymmetric by construction, so total pre-clamp
    load over any closed neighborhood is conserved when tx powers are equal.
    """
    clamps: list[dict] = []
    values: dict[str, dict[str, float]] = {}

    shift: dict[tuple[str, str], float] = {}
    for i, j in topology.neighbor_pairs():
        shift[(i, j)] = coeff.kappa * params.cio(i, j) * offered[i]

    def record(cell: str, kpi: str, raw: float) -> float:
        clamped = clamp01(raw)
        if clamped != raw:
            clamps.append({"cell": cell, "kpi": kpi, "raw": raw, "clamped": clamped})
        return clamped

    loads: dict[str, float] = {}
    for i in topology.cells:
        shed = sum(shift[(i, j)] for j in topology.neighbors[i])
        gained = sum(shift[(j, i)] for j in topology.neighbors[i])
        pull = sum(
            (params.tx(i) - params.tx(j)) / 16.0 * offered[i] for j in topology.neighbors[i]
        )
        raw = offered[i] - shed + gained + coeff.mu * pull
        loads[i] = record(i, "load", raw)

    for i in topology.cells:
        nbrs = topology.neighbors[i]
        if nbrs:
            couple = sum(max(0.0, params.cio(i, j) + params.cio(j, i)) for j in nbrs) / len(nbrs)
        else:
            couple = 0.0
        ttt_frac = params.ttt(i) / 512.0
        pp = record(
            i,
            "pingpong",
            coeff.pingpong_base + coeff.pingpong_couple * couple - coeff.pingpong_ttt * ttt_frac,
        )
        hof = record(
            i,
            "hof",
            coeff.hof_base
            + coeff.hof_overload * max(0.0, loads[i] - coeff.overload_knee)
            + coeff.hof_ttt * ttt_frac,
        )
        energy = coeff.energy_base + coeff.energy_slope * (params.tx(i) - 30.0)
        values[i] = {"load": loads[i], "pingpong": pp, "hof": hof, "energy": energy}

    return KpiFrame(tick, values), clamps


def dependency_edges(target: Target, topology: Topology) -> tuple[tuple[str, str, int], ...]:
    """Signed first-order influence edges of one parameter target.

    Each edge is ``(cell, kpi, sign)`` where sign is the direction of the
    KPI's response to an increase of the parameter (+1 up, -1 down).
    """
    edges: list[tuple[str, str, int]] = []
    if target.param == "cio":
        i, j = target.cells
        edges.append((i, "load", -1))  # sheds traffic away from i
        edges.append((j, "load", +1))
        edges.append((i, "pingpong", +1))  # raising offsets invites ping-pong
        edges.append((j, "pingpong", +1))
    elif target.param == "tx_power":
        i = target.cell
        edges.append((i, "energy", +1))
        edges.append((i, "load", +1))  # stronger signal attracts traffic
        for j in topology.neighbors[i]:
            edges.append((j, "load", -1))
    elif target.param == "ttt":
        i = target.cell
        edges.append((i, "pingpong", -1))  # longer trigger damps ping-pong
        edges.append((i, "hof", +1))  # but delays necessary handovers
    else:  # pragma: no cover - Target.parse rejects unknown kinds
        raise ValueError(f"unknown parameter kind {target.param}")
    return tuple(edges)


def dependency_graph(topology: Topology) -> dict[str, tuple[tuple[str, str, int], ...]]:
    """Edges for every concrete target in the topology, keyed by target key."""
    graph: dict[str, tuple[tuple[str, str, int], ...]] = {}
    for i, j in topology.neighbor_pairs():
        t = Target("cio", (i, j))
        graph[t.key] = dependency_edges(t, topology)
    for c in topology.cells:
        for kind in ("tx_power", "ttt"):
            t = Target(kind, (c,))
            graph[t.key] = dependency_edges(t, topology)
    return graph
