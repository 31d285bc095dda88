"""HTTP/JSON facade over a running world: governance, telemetry, thresholds,
treasury, analytics, and explicit time control for stepped operation.

Caller identity is the X-Actor header carrying an account name or 0x address.
That is simulator-grade authentication, not production auth. Contract revert
reasons surface verbatim in error payloads so clients can show them.
"""

from __future__ import annotations

import threading
import time
from bisect import bisect_left
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from fastapi import Body, FastAPI, Header, HTTPException, Query, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse

from . import analytics
from .ledger import LedgerError, Receipt, Revert
from .scenario import ScenarioError, load_config, parse_actions, run_timeline
from .world import World


@dataclass
class ApiConfig:
    host: str = "127.0.0.1"
    port: int = 8321
    live: bool = False
    speedup: float = 60.0           # simulated seconds per wall second in live mode
    history_retention: int = 20_000  # readings kept queryable
    frontend_dir: Optional[str] = None

    def __post_init__(self) -> None:
        if not 0 < self.port < 65536:
            raise ScenarioError(f"invalid port {self.port}")
        if self.history_retention < 1:
            raise ScenarioError("history retention must be >= 1")


class TelemetryLog:
    """Ordered, timestamp-indexed view over the world's readings with a
    retention cap; ranges are [from, to)."""

    def __init__(self, readings: list, retention: int):
        self._readings = readings
        self.retention = retention

    def query(self, frm: int, to: int) -> list:
        if frm > to:
            raise LedgerError(f"inverted range [{frm}, {to})")
        window = self._readings[-self.retention:]
        ts = [r.ts for r in window]
        return window[bisect_left(ts, frm):bisect_left(ts, to)]

    def latest(self):
        return self._readings[-1] if self._readings else None


class AnalyticsState:
    def __init__(self) -> None:
        self.dataset = None
        self.summaries: list = []
        self.windows: list = []
        self.recommendations: list = []
        self.narrative = ""

    def ingest(self, dataset, hook: Optional[str]) -> None:
        self.dataset = dataset
        self.summaries = analytics.summarize(dataset) if dataset.n_rows else []
        try:
            self.windows = analytics.detect_idle_energy(dataset) \
                if dataset.n_rows else []
        except analytics.AnalyticsError:
            # dataset lacks occupancy/power channels; summaries still stand
            self.windows = []
        self.recommendations = analytics.recommend(dataset, self.windows)
        self.narrative = analytics.narrate(self.summaries, self.recommendations,
                                           hook=hook)


def create_app(world: World, config: Optional[ApiConfig] = None) -> FastAPI:
    config = config or ApiConfig()
    app = FastAPI(title="govtwin", version="0.1.0")
    app.add_middleware(CORSMiddleware, allow_origins=["*"], allow_methods=["*"],
                       allow_headers=["*"])
    lock = threading.RLock()
    telemetry = TelemetryLog(world.telemetry, config.history_retention)
    analytics_state = AnalyticsState()
    app.state.world = world
    app.state.lock = lock

    @app.exception_handler(HTTPException)
    async def _http_handler(_req: Request, exc: HTTPException):
        # keep the error contract flat: 4xx bodies are {error, reason}
        if isinstance(exc.detail, dict) and "error" in exc.detail:
            return JSONResponse(status_code=exc.status_code, content=exc.detail)
        return JSONResponse(status_code=exc.status_code,
                            content={"error": "http", "reason": str(exc.detail)})

    @app.exception_handler(Revert)
    async def _revert_handler(_req: Request, exc: Revert):
        return JSONResponse(status_code=400,
                            content={"error": "revert", "reason": exc.reason})

    @app.exception_handler(LedgerError)
    async def _ledger_handler(_req: Request, exc: LedgerError):
        return JSONResponse(status_code=400,
                            content={"error": "invalid", "reason": str(exc)})

    @app.exception_handler(analytics.AnalyticsError)
    async def _analytics_handler(_req: Request, exc: analytics.AnalyticsError):
        return JSONResponse(status_code=400,
                            content={"error": "invalid", "reason": str(exc)})

    def actor_address(x_actor: Optional[str]):
        if not x_actor:
            raise HTTPException(400, detail={"error": "missing_actor",
                                             "reason": "X-Actor header required"})
        return world.resolve_actor(x_actor)

    def checked(receipt: Receipt) -> Receipt:
        if not receipt.ok:
            raise Revert(receipt.revert_reason or "reverted")
        return receipt

    # -- telemetry -------------------------------------------------------------

    @app.get("/telemetry/current")
    def telemetry_current():
        with lock:
            reading = telemetry.latest()
            if reading is None:
                raise HTTPException(404, detail={"error": "no_data",
                                                 "reason": "no readings yet"})
            return reading.to_json_dict(world.sim.devices)

    @app.get("/telemetry/history")
    def telemetry_history(frm: int = Query(0, alias="from"),
                          to: int = Query(2**62)):
        with lock:
            rows = telemetry.query(frm, to)
            return {"count": len(rows), "readings": [r.to_json_dict() for r in rows]}

    # -- governance ------------------------------------------------------------

    @app.get("/governance/proposals")
    def list_proposals():
        with lock:
            return {"proposals": [world.proposal_summary(pid)
                                  for pid in world.governor.proposals]}

    @app.post("/governance/proposals")
    def create_proposal(payload: dict = Body(...),
                        x_actor: Optional[str] = Header(None)):
        with lock:
            sender = actor_address(x_actor)
            try:
                actions = parse_actions(payload["actions"])
                description = payload["description"]
            except (KeyError, ScenarioError) as exc:
                raise HTTPException(400, detail={"error": "bad_request",
                                                 "reason": str(exc)}) from None
            receipt = checked(world.propose(sender, actions, description))
            return {"proposal_id": "0x" + receipt.result.hex()}

    def _pid(proposal_id: str) -> bytes:
        try:
            return bytes.fromhex(proposal_id.removeprefix("0x"))
        except ValueError:
            raise HTTPException(400, detail={"error": "bad_request",
                                             "reason": "malformed proposal id"}) from None

    @app.get("/governance/proposals/{proposal_id}")
    def get_proposal(proposal_id: str):
        with lock:
            pid = _pid(proposal_id)
            if pid not in world.governor.proposals:
                raise HTTPException(404, detail={"error": "not_found",
                                                 "reason": "unknown proposal"})
            return world.proposal_summary(pid)

    @app.post("/governance/proposals/{proposal_id}/vote")
    def vote(proposal_id: str, payload: dict = Body(...),
             x_actor: Optional[str] = Header(None)):
        with lock:
            sender = actor_address(x_actor)
            receipt = checked(world.execute(sender, "governor", "cast_vote",
                                            (_pid(proposal_id), int(payload["support"]))))
            return {"weight": str(receipt.result)}

    @app.post("/governance/proposals/{proposal_id}/queue")
    def queue_proposal(proposal_id: str, x_actor: Optional[str] = Header(None)):
        with lock:
            sender = actor_address(x_actor)
            receipt = checked(world.execute(sender, "governor", "queue",
                                            (_pid(proposal_id),)))
            return {"eta": receipt.result}

    @app.post("/governance/proposals/{proposal_id}/execute")
    def execute_proposal(proposal_id: str, x_actor: Optional[str] = Header(None)):
        with lock:
            sender = actor_address(x_actor)
            checked(world.execute(sender, "governor", "execute", (_pid(proposal_id),)))
            return {"status": "executed"}

    @app.get("/governance/members")
    def members():
        with lock:
            return {"members": world.member_summaries()}

    @app.post("/governance/members")
    def manage_member(payload: dict = Body(...),
                      x_actor: Optional[str] = Header(None)):
        with lock:
            sender = actor_address(x_actor)
            action = payload.get("action", "add")
            if action not in ("add", "remove"):
                raise HTTPException(400, detail={"error": "bad_request",
                                                 "reason": f"unknown action {action!r}"})
            member = world.resolve_actor(payload["member"])
            checked(world.execute(sender, "governor", f"{action}_member", (member,)))
            return {"status": "ok", "members": world.member_summaries()}

    # -- treasury / accounts ------------------------------------------------------

    @app.get("/treasury")
    def treasury():
        with lock:
            return world.treasury_summary()

    @app.post("/treasury/transfer")
    def treasury_transfer(payload: dict = Body(...),
                          x_actor: Optional[str] = Header(None)):
        with lock:
            sender = actor_address(x_actor)
            source = payload.get("source", "governor")
            if source not in ("governor", "timelock"):
                raise HTTPException(400, detail={"error": "bad_request",
                                                 "reason": f"unknown source {source!r}"})
            wei = int(payload["wei"]) if "wei" in payload else \
                int(float(payload["eth"]) * 10**18)
            to = world.resolve_actor(payload["to"])
            checked(world.execute(sender, source, "send_ether", (to, wei)))
            return {"status": "ok", "treasury": world.treasury_summary()}

    @app.get("/accounts")
    def accounts():
        with lock:
            rows = []
            for name, address in world.account_names.items():
                rows.append({
                    "name": name,
                    "address": address.hex,
                    "eth": world.ledger.balance(address) / 10**18,
                    "tokens": world.token.balance_of(address) / 10**18,
                    "votes_tokens": world.token.votes(address) / 10**18,
                    "is_member": world.governor.is_member.get(address, False),
                })
            return {"accounts": rows}

    @app.get("/timelock/operations")
    def timelock_operations():
        with lock:
            now = world.ledger.timestamp
            return {"min_delay": world.timelock.config.min_delay, "operations": [
                {
                    "op_id": "0x" + op.op_id.hex(),
                    "eta": op.eta,
                    "state": op.state(now).value,
                    "actions": len(op.actions),
                }
                for op in world.timelock.operations.values()
            ]}

    # -- thresholds / automation -----------------------------------------------------

    @app.get("/thresholds")
    def thresholds():
        with lock:
            return dict(world.thresholds.values)

    @app.get("/automation/actions")
    def automation_actions(limit: int = 200):
        with lock:
            entries = world.action_log[-limit:]
            return {"count": len(entries),
                    "actions": [e.to_json_dict() for e in entries]}

    # -- analytics ----------------------------------------------------------------------

    @app.post("/analytics/upload")
    async def analytics_upload(request: Request):
        body = (await request.body()).decode("utf-8")
        with lock:
            dataset = analytics.parse_csv(body)
            analytics_state.ingest(dataset, world.config.narrate_hook)
            return {"rows": dataset.n_rows,
                    "channels": sorted(dataset.channels),
                    "idle_windows": len(analytics_state.windows)}

    def _require_dataset():
        if analytics_state.dataset is None:
            raise HTTPException(404, detail={"error": "no_data",
                                             "reason": "upload a CSV first"})

    @app.get("/analytics/summary")
    def analytics_summary():
        with lock:
            _require_dataset()
            return {"summaries": [s.to_json_dict() for s in analytics_state.summaries]}

    @app.get("/analytics/recommendations")
    def analytics_recommendations():
        with lock:
            _require_dataset()
            return {
                "recommendations": [r.to_json_dict()
                                    for r in analytics_state.recommendations],
                "idle_windows": [w.to_json_dict() for w in analytics_state.windows],
                "narrative": analytics_state.narrative,
            }

    @app.get("/analytics/plots/{name}")
    def analytics_plot(name: str):
        with lock:
            _require_dataset()
            channels = [c for c in name.split(",") if c]
            spec = analytics.plot_spec(analytics_state.dataset, channels,
                                       analytics_state.windows)
            return spec.to_json_dict()

    # -- time control / snapshot -----------------------------------------------------------

    MAX_ADVANCE = 1_000_000  # keeps one request from monopolizing the loop

    @app.post("/advance")
    def advance(blocks: int = 0, ticks: int = 0):
        with lock:
            if blocks < 0 or ticks < 0:
                raise HTTPException(400, detail={"error": "bad_request",
                                                 "reason": "counts must be nonnegative"})
            if blocks > MAX_ADVANCE or ticks > MAX_ADVANCE:
                raise HTTPException(400, detail={
                    "error": "bad_request",
                    "reason": f"advance capped at {MAX_ADVANCE} per request"})
            world.advance_blocks(blocks)
            world.advance_ticks(ticks)
            return {"block_height": world.ledger.height,
                    "tick": world.sim.tick_index,
                    "timestamp": world.ledger.timestamp}

    @app.get("/snapshot")
    def snapshot():
        with lock:
            return world.snapshot()

    frontend = config.frontend_dir or "frontend/dist"
    if Path(frontend).is_dir():
        from fastapi.staticfiles import StaticFiles

        app.mount("/app", StaticFiles(directory=frontend, html=True), name="app")

    if config.live:
        _start_live_clock(app, world, lock, config)
    return app


def _start_live_clock(app: FastAPI, world: World, lock: threading.RLock,
                      config: ApiConfig) -> None:
    interval = world.sim.params.seconds_per_tick / config.speedup

    def loop() -> None:
        while True:
            time.sleep(interval)
            with lock:
                world.advance_ticks(1)

    thread = threading.Thread(target=loop, name="govtwin-clock", daemon=True)
    app.state.clock_thread = thread
    thread.start()


def serve_scenario(scenario_ref: str, config: ApiConfig,
                   out_dir: Optional[str] = None,
                   seed_override: Optional[int] = None) -> None:
    """Run the scenario timeline, then serve the resulting world. With an
    out_dir, the timeline's logs and report are written first (a separate,
    deterministic run) so headless artifacts exist even in serve mode."""
    import uvicorn

    if out_dir is not None:
        from .scenario import run_scenario

        run_scenario(scenario_ref, out_dir=out_dir, seed_override=seed_override)
    world_config = load_config(scenario_ref, seed_override)
    world = World(world_config)
    run_timeline(world)
    app = create_app(world, config)
    uvicorn.run(app, host=config.host, port=config.port, log_level="warning")
