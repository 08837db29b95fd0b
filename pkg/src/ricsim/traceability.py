"""Challenge-to-module traceability matrix.

The authoritative mapping is the packaged JSON file ``ricsim/data/
traceability.json``; the markdown page under ``docs/`` is generated from it
and never edited by hand. Validation takes the caller's inventory of real
test ids and module names and fails on any dangling reference, so the
matrix cannot silently rot as the code evolves.
"""

from __future__ import annotations

import json
from importlib import resources

ROW_FIELDS = ("id", "challenge", "modules", "tests", "covered")


class TraceabilityError(ValueError):
    """The mapping is malformed or references something that does not exist."""


def load_mapping() -> dict:
    path = resources.files("ricsim").joinpath("data", "traceability.json")
    return json.loads(path.read_text(encoding="utf-8"))


def validate_mapping(mapping: dict, known_tests: set[str], known_modules: set[str]) -> None:
    rows = mapping.get("rows", [])
    if not rows:
        raise TraceabilityError("mapping has no rows")
    referenced: set[str] = set()
    seen_ids: set[str] = set()
    for row in rows:
        for field in ROW_FIELDS:
            if field not in row:
                raise TraceabilityError(f"row {row.get('id', '?')!r} is missing field {field!r}")
        if row["id"] in seen_ids:
            raise TraceabilityError(f"duplicate row id {row['id']!r}")
        seen_ids.add(row["id"])
        if not row["modules"] or not row["tests"]:
            raise TraceabilityError(f"row {row['id']!r} must name modules and tests")
        for module in row["modules"]:
            if module not in known_modules:
                raise TraceabilityError(f"row {row['id']!r} references unknown module {module!r}")
            referenced.add(module)
        for test_id in row["tests"]:
            if test_id not in known_tests:
                raise TraceabilityError(f"row {row['id']!r} references unknown test {test_id!r}")
    orphans = known_modules - referenced
    if orphans:
        raise TraceabilityError(f"modules not covered by any row: {sorted(orphans)}")


def generate_traceability(mapping: dict | None = None) -> str:
    """Render the matrix as markdown. Generation is the only source of the
    docs page; regenerating over a hand-edited copy is always correct."""
    if mapping is None:
        mapping = load_mapping()
    lines = [
        "# Challenge-to-module traceability",
        "",
        "Generated from `src/ricsim/data/traceability.json` by",
        "`ricsim.traceability.generate_traceability`. Do not edit by hand;",
        "`tests/test_traceability.py` fails if this page or the mapping drifts",
        "from the actual test and module inventory.",
        "",
    ]
    for row in mapping["rows"]:
        lines.append(f"## {row['id']}")
        lines.append("")
        lines.append(row["challenge"])
        lines.append("")
        lines.append("Addressed by: " + ", ".join(f"`{m}`" for m in row["modules"]))
        lines.append("")
        lines.append("Exercised by:")
        lines.append("")
        for test_id in row["tests"]:
            lines.append(f"- `{test_id}`")
        lines.append("")
        lines.append(f"Covered: {'yes' if row['covered'] else 'no'}")
        lines.append("")
    return "\n".join(lines)
