"""Append-only structured event log.

Every observable action in a run is appended here with a (tick, seq) stamp;
seq is a monotonically increasing global counter, so the log totally orders
events within a tick. Serialization is canonical JSON lines (sorted keys,
no whitespace), which makes equal runs byte-identical.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

KINDS = (
    "scenario-loaded",
    "kpi-frame",
    "clamp-event",
    "alert-raised",
    "alert-cleared",
    "pipeline-mode",
    "decision-submitted",
    "decision-gated",
    "decision-rejected",
    "decision-actuated",
    "conflict-detected",
    "resolution-applied",
    "policy-updated",
    "report-published",
    "report-delivered",
    "constraint-issued",
    "constraint-delivered",
    "outcome-recorded",
)


@dataclass
class EventLog:
    entries: list[dict] = field(default_factory=list)
    _seq: int = 0

    def append(self, tick: int, kind: str, payload: dict) -> dict:
        if kind not in KINDS:
            raise ValueError(f"unknown event kind {kind!r}")
        entry = {"tick": tick, "seq": self._seq, "kind": kind, "payload": payload}
        self._seq += 1
        self.entries.append(entry)
        return entry

    def of_kind(self, *kinds: str) -> list[dict]:
        return [e for e in self.entries if e["kind"] in kinds]

    def to_jsonl(self) -> str:
        return "".join(
            json.dumps(e, sort_keys=True, separators=(",", ":")) + "\n" for e in self.entries
        )


def parse_jsonl(text: str) -> list[dict]:
    return [json.loads(line) for line in text.splitlines() if line.strip()]
