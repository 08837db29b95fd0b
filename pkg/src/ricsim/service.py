"""HTTP facade over the simulator and evaluation harness.

Artifact files are returned as complete strings keyed by filename so the
client can write them verbatim; the service never touches the filesystem.
Invalid scenarios and incomparable runs come back as 422 with the
validation message in the detail field.
"""

from __future__ import annotations

from typing import Literal

from fastapi import FastAPI, HTTPException
from pydantic import BaseModel, ConfigDict

from ricsim import __version__
from ricsim.engine import SimulationError
from ricsim.experiment import assess_app, compare_runs, rebuild_report, run_experiment
from ricsim.metrics import CompareError
from ricsim.scenario import ScenarioConfig, ScenarioError, load_scenario


class RunRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    scenario: dict
    cm: Literal["on", "off"] | None = None
    seed: int | None = None


class RunResponse(BaseModel):
    files: dict[str, str]
    summary: dict


class AssessRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    scenario: dict
    candidate: str


class AssessResponse(BaseModel):
    files: dict[str, str]
    assessment: dict


class CompareRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    metrics_a: dict
    metrics_b: dict


class CompareResponse(BaseModel):
    files: dict[str, str]
    comparison: dict


class ReportRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    events_jsonl: str
    cm_report: dict | None = None


class ReportResponse(BaseModel):
    report: dict
    reconciled: bool
    mismatches: list[str]


app = FastAPI(title="ricsim", version=__version__)


def _scenario(raw: dict) -> ScenarioConfig:
    try:
        return load_scenario(raw)
    except ScenarioError as err:
        raise HTTPException(status_code=422, detail=str(err)) from err


@app.get("/healthz")
def healthz() -> dict:
    return {"status": "ok", "version": __version__}


@app.get("/scenario/schema")
def scenario_schema() -> dict:
    return ScenarioConfig.model_json_schema()


@app.post("/experiments/run", response_model=RunResponse)
def experiments_run(req: RunRequest) -> RunResponse:
    scenario = _scenario(req.scenario)
    try:
        result = run_experiment(scenario, cm=req.cm, seed=req.seed)
    except (ScenarioError, SimulationError) as err:
        raise HTTPException(status_code=422, detail=str(err)) from err
    return RunResponse(files=result["files"], summary=result["summary"])


@app.post("/experiments/assess", response_model=AssessResponse)
def experiments_assess(req: AssessRequest) -> AssessResponse:
    scenario = _scenario(req.scenario)
    try:
        result = assess_app(scenario, req.candidate)
    except (ScenarioError, SimulationError) as err:
        raise HTTPException(status_code=422, detail=str(err)) from err
    return AssessResponse(files=result["files"], assessment=result["assessment"])


@app.post("/experiments/compare", response_model=CompareResponse)
def experiments_compare(req: CompareRequest) -> CompareResponse:
    try:
        result = compare_runs(req.metrics_a, req.metrics_b)
    except (CompareError, KeyError) as err:
        raise HTTPException(status_code=422, detail=f"incomparable runs: {err}") from err
    return CompareResponse(files=result["files"], comparison=result["comparison"])


@app.post("/experiments/report", response_model=ReportResponse)
def experiments_report(req: ReportRequest) -> ReportResponse:
    try:
        result = rebuild_report(req.events_jsonl, existing=req.cm_report)
    except (ScenarioError, ValueError) as err:
        raise HTTPException(status_code=422, detail=str(err)) from err
    return ReportResponse(
        report=result["report"],
        reconciled=result["reconciled"],
        mismatches=result["mismatches"],
    )
