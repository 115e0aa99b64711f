"""Service surface: create sessions, submit prompts, stream telemetry.

The gateway adds no mission behavior: it funnels every mutation to the
session's single executor thread and fans telemetry out read-only, so a
mission run here produces the same MissionLog as the CLI with the same
provider fixture. One active session per world file keeps runs deterministic.
"""

from __future__ import annotations

import asyncio
import itertools
import threading
from pathlib import Path
from typing import Any, Literal

from fastapi import FastAPI, HTTPException, WebSocket, WebSocketDisconnect
from fastapi.responses import PlainTextResponse
from pydantic import BaseModel, Field

from .agent import Pose
from .errors import Busy, Conflict, ProviderUnavailable
from .llm import HttpProvider, ModelConfig, ScriptedProvider
from .mission import LlmMissionRunner, MissionSpec, load_missions, run_direct

TELEMETRY_POLL_S = 0.02


class MissionInfo(BaseModel):
    id: str
    start: list[float]
    goal: list[float]
    allowed_strategy: str
    call_limit: int
    goal_tolerance: float
    height_bound: float | None = None
    prompt_constraints: list[str] = Field(default_factory=list)


class CreateSessionRequest(BaseModel):
    mission_id: str
    mode: Literal["direct", "llm"]
    provider: Literal["scripted", "http"] = "scripted"
    fixture: str | None = None
    base_url: str | None = None
    model_name: str | None = None
    temperature: float = 0.0
    max_tokens: int = 1024
    provider_delay_s: float = 0.0  # simulated provider latency; sim time ignores it


class PoseModel(BaseModel):
    position: list[float]
    yaw: float
    roll: float
    pitch: float


class TelemetryFrame(BaseModel):
    seq: int
    sim_time: float
    pose: PoseModel
    last_call: str | None = None
    calls_used: int = 0
    accrued_cost: float = 0.0
    collision_count: int = 0


class SessionInfo(BaseModel):
    session_id: str
    mission_id: str
    mode: str
    state: Literal["idle", "awaiting_llm", "executing", "finished"]
    sim_time: float
    pose: PoseModel
    calls_used: int
    call_limit: int
    accrued_cost: float
    collision_count: int
    final_status: str | None = None


class PromptRequest(BaseModel):
    text: str


class PromptResult(BaseModel):
    accepted: bool
    state: str


class SessionRuntime:
    """Holds one session's executor state and its telemetry frame buffer."""

    def __init__(self, session_id: str, mission: MissionSpec, mode: str,
                 provider: Any, config: ModelConfig | None) -> None:
        self.session_id = session_id
        self.mission = mission
        self.mode = mode
        self.state = "idle"
        self.final_status: str | None = None
        self.log = None
        self.error: str | None = None
        self._lock = threading.Lock()
        self._frames: list[TelemetryFrame] = []
        self._last_call: str | None = None
        self._live_pose = Pose(position=tuple(mission.start))
        self._sim_time = 0.0
        self._collision_calls = 0
        self._thread: threading.Thread | None = None
        self.runner: LlmMissionRunner | None = None
        if mode == "llm":
            self.runner = LlmMissionRunner(
                mission, provider, config=config, observer=self._observe
            )
        self._emit(0.0, self._live_pose)

    # --- telemetry -------------------------------------------------------

    def counters(self) -> tuple[int, float, int]:
        if self.runner is not None:
            budget = self.runner.budget
            return budget.calls_used, budget.accrued_cost, self._collision_calls
        return 0, 0.0, self._collision_calls

    def _emit(self, sim_time: float, pose: Pose) -> None:
        calls_used, cost, collision_count = self.counters()
        with self._lock:
            frame = TelemetryFrame(
                seq=len(self._frames),
                sim_time=sim_time,
                pose=PoseModel(**pose.to_dict()),
                last_call=self._last_call,
                calls_used=calls_used,
                accrued_cost=cost,
                collision_count=collision_count,
            )
            self._frames.append(frame)

    def _observe(self, kind: str, payload: Any) -> None:
        if kind == "sample":
            t, pose = payload
            self._live_pose = pose
            self._sim_time = max(self._sim_time, t)
            self._emit(t, pose)
        elif kind == "call":
            self.state = "executing"
            self._last_call = payload.name
            self._sim_time = max(self._sim_time, payload.sim_time)
            result = payload.result
            if isinstance(result, dict) and result.get("collisions"):
                self._collision_calls += 1
            self._emit(payload.sim_time, self._live_pose)

    def frames(self, start: int = 0) -> list[TelemetryFrame]:
        with self._lock:
            return self._frames[start:]

    # --- execution --------------------------------------------------------

    @property
    def busy(self) -> bool:
        return self.state in ("awaiting_llm", "executing")

    def current_pose(self) -> Pose:
        return self._live_pose

    def sim_time(self) -> float:
        return self._sim_time

    def _begin(self, state: str) -> None:
        """Atomically claim the executor; mutations are single-writer."""
        with self._lock:
            if self.busy:
                raise Busy("session is mid-execution")
            if self.state == "finished":
                reason = (
                    "budget_exhausted"
                    if self.final_status == "budget_exhausted"
                    else "finished"
                )
                raise Conflict(reason)
            self.state = state

    def submit_prompt(self, text: str) -> None:
        assert self.runner is not None
        self._begin("awaiting_llm")

        def work() -> None:
            try:
                outcome = self.runner.submit(text)
                if outcome == "finished":
                    self.log = self.runner.finalize()
                    self.final_status = self.log.final_status
                    self.state = "finished"
                else:
                    self.state = "idle"
            except Exception as exc:  # surfaced via session status
                self.error = str(exc)
                self.final_status = "halted"
                self.state = "finished"

        self._thread = threading.Thread(target=work, daemon=True)
        self._thread.start()

    def run_direct(self) -> None:
        self._begin("executing")

        def work() -> None:
            try:
                log = run_direct(self.mission, observer=self._observe)
                self.log = log
                self.final_status = log.final_status
            except Exception as exc:
                self.error = str(exc)
                self.final_status = "halted"
            finally:
                self.state = "finished"

        self._thread = threading.Thread(target=work, daemon=True)
        self._thread.start()

    def wait(self, timeout: float = 30.0) -> None:
        if self._thread is not None:
            self._thread.join(timeout)


def _mission_info(spec: MissionSpec) -> MissionInfo:
    return MissionInfo(
        id=spec.id,
        start=list(spec.start),
        goal=list(spec.goal),
        allowed_strategy=spec.allowed_strategy,
        call_limit=spec.call_limit,
        goal_tolerance=spec.goal_tolerance,
        height_bound=spec.height_bound,
        prompt_constraints=list(spec.prompt_constraints),
    )


def create_app(missions_dir: str | Path, console_dir: str | Path | None = None) -> FastAPI:
    app = FastAPI(title="gridpilot gateway", version="0.1.0")
    missions = load_missions(missions_dir)
    sessions: dict[str, SessionRuntime] = {}
    registry_lock = threading.Lock()
    ids = itertools.count(1)

    def get_session(session_id: str) -> SessionRuntime:
        runtime = sessions.get(session_id)
        if runtime is None:
            raise HTTPException(status_code=404, detail={"reason": "session not found"})
        return runtime

    def session_info(runtime: SessionRuntime) -> SessionInfo:
        calls_used, cost, collision_count = runtime.counters()
        return SessionInfo(
            session_id=runtime.session_id,
            mission_id=runtime.mission.id,
            mode=runtime.mode,
            state=runtime.state,
            sim_time=runtime.sim_time(),
            pose=PoseModel(**runtime.current_pose().to_dict()),
            calls_used=calls_used,
            call_limit=runtime.mission.call_limit,
            accrued_cost=cost,
            collision_count=collision_count,
            final_status=runtime.final_status,
        )

    @app.get("/health")
    def health() -> dict:
        return {"status": "ok"}

    @app.get("/missions", response_model=list[MissionInfo])
    def list_missions() -> list[MissionInfo]:
        return [_mission_info(m) for m in missions.values()]

    @app.get("/tools")
    def list_tools() -> dict:
        """The registered control-function schemas as a JSON document."""
        from .streams import export_tool_schemas

        return export_tool_schemas()

    @app.get("/missions/{mission_id}/world")
    def mission_world(mission_id: str) -> dict:
        if mission_id not in missions:
            raise HTTPException(status_code=404, detail={"reason": "mission not found"})
        return missions[mission_id].load_world().to_dict()

    @app.post("/sessions", response_model=SessionInfo, status_code=201)
    def create_session(req: CreateSessionRequest) -> SessionInfo:
        mission = missions.get(req.mission_id)
        if mission is None:
            raise HTTPException(status_code=404, detail={"reason": "mission not found"})
        world_key = str(mission.world_path)
        with registry_lock:
            for other in sessions.values():
                if str(other.mission.world_path) == world_key and other.state != "finished":
                    raise HTTPException(
                        status_code=409,
                        detail={"reason": f"world already held by session {other.session_id}"},
                    )
            provider = None
            config = None
            if req.mode == "llm":
                if req.provider == "scripted":
                    if not req.fixture:
                        raise HTTPException(
                            status_code=422,
                            detail={"reason": "scripted provider needs a fixture path"},
                        )
                    try:
                        provider = ScriptedProvider.from_file(
                            req.fixture, delay_s=req.provider_delay_s
                        )
                    except ProviderUnavailable as exc:
                        raise HTTPException(status_code=422, detail={"reason": str(exc)})
                else:
                    if not req.base_url:
                        raise HTTPException(
                            status_code=422,
                            detail={"reason": "http provider needs a base_url"},
                        )
                    provider = HttpProvider(req.base_url)
                if req.model_name:
                    config = ModelConfig(
                        model_name=req.model_name,
                        temperature=req.temperature,
                        max_tokens=req.max_tokens,
                    )
            session_id = f"s{next(ids)}"
            runtime = SessionRuntime(session_id, mission, req.mode, provider, config)
            sessions[session_id] = runtime
        return session_info(runtime)

    @app.get("/sessions/{session_id}", response_model=SessionInfo)
    def get_status(session_id: str) -> SessionInfo:
        return session_info(get_session(session_id))

    @app.post("/sessions/{session_id}/prompt", response_model=PromptResult, status_code=202)
    def submit_prompt(session_id: str, req: PromptRequest) -> PromptResult:
        runtime = get_session(session_id)
        if runtime.mode != "llm":
            raise HTTPException(
                status_code=409, detail={"reason": "direct sessions take no prompts"}
            )
        try:
            runtime.submit_prompt(req.text)
        except Busy:
            raise HTTPException(status_code=409, detail={"reason": "busy"})
        except Conflict as exc:
            raise HTTPException(status_code=409, detail={"reason": str(exc)})
        return PromptResult(accepted=True, state=runtime.state)

    @app.post("/sessions/{session_id}/run", response_model=PromptResult, status_code=202)
    def run_session(session_id: str) -> PromptResult:
        runtime = get_session(session_id)
        if runtime.mode != "direct":
            raise HTTPException(
                status_code=409, detail={"reason": "llm sessions run via prompts"}
            )
        try:
            runtime.run_direct()
        except (Busy, Conflict):
            raise HTTPException(status_code=409, detail={"reason": "busy or finished"})
        return PromptResult(accepted=True, state=runtime.state)

    @app.get("/sessions/{session_id}/log", response_class=PlainTextResponse)
    def fetch_log(session_id: str) -> str:
        runtime = get_session(session_id)
        if runtime.log is None:
            raise HTTPException(status_code=409, detail={"reason": "mission not finished"})
        return runtime.log.to_ndjson()

    @app.get("/sessions/{session_id}/transcript")
    def fetch_transcript(session_id: str) -> list[dict]:
        """The conversation so far (llm mode), for the operator console."""
        runtime = get_session(session_id)
        if runtime.runner is None:
            return []
        return [turn.to_dict() for turn in list(runtime.runner.history)]

    @app.websocket("/sessions/{session_id}/telemetry")
    async def telemetry(ws: WebSocket, session_id: str) -> None:
        await ws.accept()
        runtime = sessions.get(session_id)
        if runtime is None:
            await ws.send_json({"type": "error", "reason": "session not found"})
            await ws.close()
            return
        sent = 0
        snapshot = runtime.frames()
        sent = len(snapshot)
        try:
            await ws.send_json(
                {
                    "type": "snapshot",
                    "state": runtime.state,
                    "mission_id": runtime.mission.id,
                    "frames": [f.model_dump() for f in snapshot],
                }
            )
            while True:
                fresh = runtime.frames(sent)
                for frame in fresh:
                    await ws.send_json({"type": "frame", "frame": frame.model_dump()})
                sent += len(fresh)
                if runtime.state == "finished" and not runtime.frames(sent):
                    await ws.send_json(
                        {"type": "finished", "status": runtime.final_status}
                    )
                    break
                await asyncio.sleep(TELEMETRY_POLL_S)
        except WebSocketDisconnect:
            return
        await ws.close()

    if console_dir is not None and Path(console_dir).is_dir():
        from fastapi.staticfiles import StaticFiles

        app.mount("/console", StaticFiles(directory=str(console_dir), html=True), name="console")

    app.state.sessions = sessions
    app.state.missions = missions
    return app
