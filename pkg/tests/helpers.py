"""Shared test utilities: bundled-scenario loading, tiny scenario builders,
and event-log convenience filters."""

from __future__ import annotations

import json
from importlib import resources

from ricsim.eventlog import parse_jsonl
from ricsim.scenario import ScenarioConfig, load_scenario


def bundled_dict(name: str) -> dict:
    path = resources.files("ricsim").joinpath("scenarios", f"{name}.json")
    return json.loads(path.read_text(encoding="utf-8"))


def bundled_scenario(name: str) -> ScenarioConfig:
    return load_scenario(bundled_dict(name))


def scripted(app_id: str, *, rank: int, writable: list[str], ric: str = "R1") -> dict:
    return {"id": app_id, "type": "scripted", "ric": ric, "rank": rank, "writable": writable}


def two_cell_doc(
    name: str = "two-cell",
    ticks: int = 20,
    apps: list[dict] | None = None,
    injections: list[dict] | None = None,
    cm: dict | None = None,
    **top,
) -> dict:
    """Minimal single-RIC scenario: cells x and y, mutual neighbors.

    Implicit (C3) detection is effectively disabled by default (delta=5.0) so
    tests exercising other conflict classes read a quiet log.
    """
    doc = {
        "schema_version": 1,
        "name": name,
        "ticks": ticks,
        "topology": {
            "cells": [{"id": "x", "neighbors": ["y"]}, {"id": "y", "neighbors": ["x"]}],
            "rics": [{"id": "R1", "cells": ["x", "y"]}],
        },
        "traffic_default": 0.5,
        "apps": list(apps or []),
        "injections": list(injections or []),
        "cm": cm if cm is not None else {"detection": {"delta": 5.0}},
    }
    doc.update(top)
    return doc


def events(result: dict) -> list[dict]:
    """Parse the events.jsonl artifact of a run_experiment result."""
    return parse_jsonl(result["files"]["events.jsonl"])


def of_kind(entries: list[dict], *kinds: str) -> list[dict]:
    return [e for e in entries if e["kind"] in kinds]
