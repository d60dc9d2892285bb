"""FastAPI application: REST endpoints for batch work, websocket for teleoperation.

Wire protocol on /ws/teleop (newline-delimited JSON, one message per frame):
  server -> client: {"type":"state", "t":..., "p":[...], "v":[...], "x_vd":[...],
                     "F":[...], "E":..., "h_min":..., "case":"C3",
                     "ledger_margin":..., "beta_extra":..., "feasible":true,
                     "config":{...}}
  client -> server: {"type":"stylus","disp_cm":[...]}    (1 cm -> 2 m/s)
                    {"type":"param","name":"k_v","value":2.0}
                    {"type":"mode","controller":"jcf"}
                    {"type":"reset"}
Unknown inbound message types get a {"type":"warning",...} frame and are
otherwise ignored.
"""

from __future__ import annotations

import json
from contextlib import asynccontextmanager
from dataclasses import asdict

import asyncio

from fastapi import FastAPI, HTTPException, WebSocket, WebSocketDisconnect

from .. import __version__
from ..errors import ContractError, ScenarioError
from ..harness import compare, run, sweep, trace_from_csv, trace_summary, trace_to_csv
from ..oracle import run_jcf_oracle_suite
from ..scenario import BUILTIN_SCENARIOS, Scenario, builtin_scenario, scenario_from_tree, teleop_2d
from .live import LiveSession
from .models import (
    CompareRequest,
    CompareResponse,
    HealthResponse,
    OracleCheckRequest,
    OracleCheckResponse,
    RunRequest,
    RunResponse,
    ScenarioListResponse,
    SweepRequest,
    SweepResponse,
    TraceSummaryModel,
)


def _resolve_scenario(name: str | None, tree: dict | None) -> Scenario:
    if (name is None) == (tree is None):
        raise HTTPException(status_code=422, detail="provide exactly one of 'name' or 'scenario'")
    try:
        if name is not None:
            return builtin_scenario(name)
        return scenario_from_tree(tree)
    except (ScenarioError, ContractError) as exc:
        raise HTTPException(status_code=422, detail=str(exc)) from exc


def create_app(scenario: Scenario | None = None, realtime: bool = True) -> FastAPI:
    """Build the service; `scenario` configures the live teleoperation session."""
    session = LiveSession(scenario if scenario is not None else teleop_2d(), realtime=realtime)

    @asynccontextmanager
    async def lifespan(app: FastAPI):
        yield
        session.stop()

    app = FastAPI(title="hsa-teleop", version=__version__, lifespan=lifespan)
    app.state.session = session

    @app.get("/healthz", response_model=HealthResponse)
    def healthz() -> HealthResponse:
        return HealthResponse(status="ok", version=__version__)

    @app.get("/scenarios", response_model=ScenarioListResponse)
    def scenarios() -> ScenarioListResponse:
        return ScenarioListResponse(builtin=sorted(BUILTIN_SCENARIOS))

    @app.post("/run", response_model=RunResponse)
    def run_endpoint(req: RunRequest) -> RunResponse:
        sc = _resolve_scenario(req.name, req.scenario)
        rows = run(sc)
        return RunResponse(
            name=sc.name,
            trace_csv=trace_to_csv(rows),
            sidecar=sc.to_dict(),
            summary=TraceSummaryModel(**asdict(trace_summary(rows))),
        )

    @app.post("/compare", response_model=CompareResponse)
    def compare_endpoint(req: CompareRequest) -> CompareResponse:
        try:
            trace_a = trace_from_csv(req.trace_csv_a)
            trace_b = trace_from_csv(req.trace_csv_b)
            report = compare(trace_a, trace_b, window_s=req.window_s)
        except ContractError as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from exc
        return CompareResponse(
            a=TraceSummaryModel(**asdict(report.a)),
            b=TraceSummaryModel(**asdict(report.b)),
            trajectory_dev_max=report.trajectory_dev_max,
            trajectory_dev_mean=report.trajectory_dev_mean,
            envelope_a=list(report.envelope_a),
            envelope_b=list(report.envelope_b),
            window_s=report.window_s,
        )

    @app.post("/sweep", response_model=SweepResponse)
    def sweep_endpoint(req: SweepRequest) -> SweepResponse:
        sc = _resolve_scenario(req.name, req.scenario)
        try:
            traces = sweep(sc, req.param, req.values)
        except ScenarioError as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from exc
        return SweepResponse(
            param=req.param,
            summaries={
                str(value): TraceSummaryModel(**asdict(trace_summary(rows)))
                for value, rows in traces.items()
            },
        )

    @app.post("/oracle-check", response_model=OracleCheckResponse)
    def oracle_endpoint(req: OracleCheckRequest) -> OracleCheckResponse:
        report = run_jcf_oracle_suite(n=req.n, seed=req.seed)
        return OracleCheckResponse(
            instances=report.instances,
            max_cost_gap=report.max_cost_gap,
            max_point_dist=report.max_point_dist,
            max_kkt_residual=report.max_kkt_residual,
            ok=report.ok,
        )

    @app.websocket("/ws/teleop")
    async def teleop_ws(ws: WebSocket) -> None:
        await ws.accept()
        cid, q = session.attach(asyncio.get_running_loop())

        async def produce() -> None:
            while True:
                snap = await q.get()
                await ws.send_text(json.dumps(snap) + "\n")

        async def consume() -> None:
            while True:
                text = await ws.receive_text()
                for line in text.splitlines():
                    line = line.strip()
                    if not line:
                        continue
                    try:
                        msg = json.loads(line)
                    except json.JSONDecodeError:
                        await ws.send_text(
                            json.dumps({"type": "warning", "message": "malformed JSON"}) + "\n"
                        )
                        continue
                    reply = session.submit(msg)
                    if reply is not None:
                        await ws.send_text(json.dumps(reply) + "\n")

        tasks = [asyncio.create_task(produce()), asyncio.create_task(consume())]
        try:
            done, pending = await asyncio.wait(tasks, return_when=asyncio.FIRST_COMPLETED)
            for task in pending:
                task.cancel()
            for task in done:
                exc = task.exception()
                if exc is not None and not isinstance(exc, WebSocketDisconnect):
                    raise exc
        except WebSocketDisconnect:
            pass
        finally:
            for task in tasks:
                task.cancel()
            session.detach(cid)

    return app
