"""Command-line client for the simulator service.

By default commands talk to an in-process copy of the HTTP service, so no
server needs to be running; pass --server to target a remote instance
instead. Scenario arguments accept either a JSON file path or the name of
a bundled scenario (see `ricsim scenarios`).
"""

from __future__ import annotations

import asyncio
import json
import sys
from importlib import resources
from pathlib import Path

import click
import httpx


async def _post_in_process(url: str, payload: dict) -> httpx.Response:
    from ricsim.service import app

    transport = httpx.ASGITransport(app=app)
    async with httpx.AsyncClient(transport=transport, base_url="http://ricsim.internal") as client:
        return await client.post(url, json=payload)


def _bundled() -> dict[str, str]:
    out = {}
    for entry in resources.files("ricsim").joinpath("scenarios").iterdir():
        if entry.name.endswith(".json"):
            out[entry.name[: -len(".json")]] = entry.read_text()
    return out


def _load_scenario_arg(value: str) -> dict:
    path = Path(value)
    if path.exists():
        text = path.read_text()
    else:
        text = _bundled().get(value)
        if text is None:
            raise click.UsageError(
                f"scenario {value!r} is neither a file nor a bundled scenario "
                f"(bundled: {', '.join(sorted(_bundled()))})"
            )
    try:
        return json.loads(text)
    except json.JSONDecodeError as err:
        raise click.UsageError(f"scenario {value!r} is not valid JSON: {err}")


def _post(server: str | None, url: str, payload: dict) -> dict:
    if server:
        with httpx.Client(base_url=server, timeout=300.0) as client:
            response = client.post(url, json=payload)
    else:
        response = asyncio.run(_post_in_process(url, payload))
    if response.status_code != 200:
        try:
            detail = response.json().get("detail", response.text)
        except ValueError:
            detail = response.text
        click.echo(f"error: {detail}", err=True)
        sys.exit(2)
    return response.json()


def _write_files(out_dir: str, files: dict[str, str]) -> None:
    target = Path(out_dir)
    target.mkdir(parents=True, exist_ok=True)
    for name, content in files.items():
        (target / name).write_bytes(content.encode("utf-8"))


@click.group()
@click.option("--server", default=None, metavar="URL", help="Remote service URL (default: in-process).")
@click.pass_context
def main(ctx: click.Context, server: str | None) -> None:
    """Multi-RIC control-plane simulator with conflict mitigation."""
    ctx.obj = server


@main.command()
@click.option("--scenario", required=True, help="Scenario file path or bundled scenario name.")
@click.option("--cm", type=click.Choice(["on", "off"]), default=None, help="Override conflict avoidance.")
@click.option("--seed", type=int, default=None, help="Override the scenario seed.")
@click.option("--out", required=True, type=click.Path(file_okay=False), help="Output directory.")
@click.pass_obj
def run(server: str | None, scenario: str, cm: str | None, seed: int | None, out: str) -> None:
    """Run a scenario and write events.jsonl, metrics.csv/json, cm_report.json."""
    payload = {"scenario": _load_scenario_arg(scenario), "cm": cm, "seed": seed}
    result = _post(server, "/experiments/run", payload)
    _write_files(out, result["files"])
    s = result["summary"]
    click.echo(
        f"{s['name']}: {s['ticks']} ticks, seed {s['seed']}, cm {s['cm']}, "
        f"{s['conflicts']} conflicts detected, mean utility {s['utility_mean']:.4f}"
    )
    click.echo(f"wrote {', '.join(sorted(result['files']))} to {out}")


@main.command()
@click.option("--scenario", required=True, help="Scenario file path or bundled scenario name.")
@click.option("--candidate", required=True, metavar="APP-ID", help="Candidate app id from the scenario.")
@click.option("--out", required=True, type=click.Path(file_okay=False), help="Output directory.")
@click.pass_obj
def assess(server: str | None, scenario: str, candidate: str, out: str) -> None:
    """Dry-run a candidate app on a snapshot and write assessment.json."""
    payload = {"scenario": _load_scenario_arg(scenario), "candidate": candidate}
    result = _post(server, "/experiments/assess", payload)
    _write_files(out, result["files"])
    a = result["assessment"]
    conflicts = ", ".join(f"{k}={v}" for k, v in a["conflicts"].items()) or "none"
    click.echo(f"candidate {a['candidate']}: delta_u {a['delta_u']:+.4f}, conflicts: {conflicts}")
    click.echo(f"recommendation: {a['recommendation']} ({a['rule']})")


def _read_metrics(run_dir: str) -> dict:
    path = Path(run_dir) / "metrics.json"
    if not path.exists():
        raise click.UsageError(f"{run_dir} has no metrics.json (not a run output directory?)")
    return json.loads(path.read_text())


@main.command()
@click.argument("dir_a", type=click.Path(exists=True, file_okay=False))
@click.argument("dir_b", type=click.Path(exists=True, file_okay=False))
@click.option("--out", required=True, type=click.Path(file_okay=False), help="Output directory.")
@click.pass_obj
def compare(server: str | None, dir_a: str, dir_b: str, out: str) -> None:
    """Compare two run directories (same scenario and seed) and write compare.json."""
    payload = {"metrics_a": _read_metrics(dir_a), "metrics_b": _read_metrics(dir_b)}
    result = _post(server, "/experiments/compare", payload)
    _write_files(out, result["files"])
    c = result["comparison"]
    u = c["utility_mean"]
    click.echo(f"utility mean: {u['a']:.4f} -> {u['b']:.4f} (delta {u['delta']:+.4f})")
    for row in c["trade_off"]:
        click.echo(f"  {row['kpi']:>8}: {row['a']:.4f} -> {row['b']:.4f}  {row['verdict']}")
    flips = c["flips_total"]
    click.echo(f"direction flips: {flips['a']} -> {flips['b']}")


@main.command()
@click.argument("run_dir", type=click.Path(exists=True, file_okay=False))
@click.pass_obj
def report(server: str | None, run_dir: str) -> None:
    """Rebuild the CM report from a run's event log and audit it against
    the written cm_report.json; exits nonzero on mismatch."""
    events_path = Path(run_dir) / "events.jsonl"
    if not events_path.exists():
        raise click.UsageError(f"{run_dir} has no events.jsonl")
    existing = None
    report_path = Path(run_dir) / "cm_report.json"
    if report_path.exists():
        existing = json.loads(report_path.read_text())
    payload = {"events_jsonl": events_path.read_text(), "cm_report": existing}
    result = _post(server, "/experiments/report", payload)
    doc = result["report"]
    lo, hi = doc["interval"]
    click.echo(f"interval: ticks {lo}..{hi}")
    for ric_id, section in doc["rics"].items():
        conflicts = ", ".join(f"{k}={v}" for k, v in section["conflicts"].items()) or "none"
        click.echo(f"  {ric_id}: conflicts {conflicts}")
        for key, stat in section["strategy_stats"].items():
            click.echo(
                f"    {key}: {stat['successes']}/{stat['trials']} successful (rate {stat['rate']:.2f})"
            )
    if existing is None:
        click.echo("no cm_report.json present; nothing to reconcile")
    elif result["reconciled"]:
        click.echo("reconciled with cm_report.json")
    else:
        click.echo(f"MISMATCH in: {', '.join(result['mismatches'])}", err=True)
        sys.exit(1)


@main.command()
def scenarios() -> None:
    """List bundled scenarios."""
    for name in sorted(_bundled()):
        click.echo(name)


@main.command()
def schema() -> None:
    """Print the scenario JSON schema."""
    from ricsim.scenario import ScenarioConfig

    click.echo(json.dumps(ScenarioConfig.model_json_schema(), indent=2, sort_keys=True))


@main.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8000, show_default=True, type=int)
def serve(host: str, port: int) -> None:
    """Start the HTTP service."""
    import uvicorn

    from ricsim.service import app

    uvicorn.run(app, host=host, port=port)


if __name__ == "__main__":
    main()
