"""Mission definitions and the two execution loops: direct control (the
scripted baseline) and full model control, with replayable logging, the
motion-only simulation clock, and metric evaluation.

Simulation time advances only while the agent moves; model and network
latency contribute zero simulated time. Every run produces a MissionLog that
replays field-for-field against a fresh world.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Any, Callable, Sequence

from .agent import AgentLimits, Pose, VelocityCommand
from .errors import (
    BudgetExceeded,
    GridPilotError,
    MalformedLog,
    MalformedToolCall,
    MissionFileInvalid,
    PlanningFailed,
    ReplayDivergence,
)
from .llm import (
    DEFAULT_COMPLETION_MARKER,
    DEFAULT_PRICE_TABLE,
    ApiBudget,
    ChatTurn,
    ModelConfig,
    Provider,
    build_system_prompt,
    complete,
    kickoff_prompt,
)
from .planner import DEFAULT_ARC_STEP, DEFAULT_MARGIN, plan_straight
from .streams import (
    DEFAULT_SAMPLE_DT,
    STREAM_SCHEMAS,
    MotionEvent,
    StreamRecord,
    StreamSession,
    plan_maneuver_calls,
)
from .world import (
    Cube,
    Obstacle,
    Sphere,
    Vec3,
    World,
    collision_check,
    load_world,
    world_from_dict,
)

MISSION_SCHEMA = "gridpilot.mission/v1"
LOG_SCHEMA = "gridpilot.log/v1"

DEFAULT_GOAL_TOLERANCE = 0.5
DEFAULT_SIM_TIMEOUT = 600.0

Observer = Callable[[str, Any], None]


@dataclass(frozen=True)
class MissionSpec:
    id: str
    start: Vec3
    goal: Vec3
    world_path: Path | None = None
    world_inline: dict | None = None
    allowed_strategy: str = "any"  # any | altitude-only | circumnavigate
    prompt_constraints: tuple[str, ...] = ()
    call_limit: int = 10
    goal_tolerance: float = DEFAULT_GOAL_TOLERANCE
    height_bound: float | None = None
    sim_timeout: float = DEFAULT_SIM_TIMEOUT

    def __post_init__(self) -> None:
        if tuple(self.start) == tuple(self.goal):
            raise MissionFileInvalid(f"mission {self.id!r}: start equals goal")
        if self.call_limit < 1:
            raise MissionFileInvalid(f"mission {self.id!r}: call_limit must be >= 1")
        if self.allowed_strategy not in ("any", "altitude-only", "circumnavigate"):
            raise MissionFileInvalid(
                f"mission {self.id!r}: unknown strategy constraint {self.allowed_strategy!r}"
            )
        if self.world_path is None and self.world_inline is None:
            raise MissionFileInvalid(f"mission {self.id!r}: no world reference")

    def load_world(self) -> World:
        if self.world_inline is not None:
            return world_from_dict(self.world_inline)
        assert self.world_path is not None
        return load_world(self.world_path)


def load_mission(path: str | Path) -> MissionSpec:
    """Parse a mission file and validate it against its world."""
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except OSError as exc:
        raise MissionFileInvalid(f"cannot read mission file {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise MissionFileInvalid(f"mission file {path} is not valid JSON: {exc}") from exc
    if not isinstance(data, dict) or data.get("schema") != MISSION_SCHEMA:
        raise MissionFileInvalid(f"mission file {path}: unsupported schema")
    try:
        spec = MissionSpec(
            id=str(data["id"]),
            start=tuple(float(v) for v in data["start"]),
            goal=tuple(float(v) for v in data["goal"]),
            world_path=(path.parent / data["world"]).resolve(),
            allowed_strategy=data.get("allowed_strategy", "any"),
            prompt_constraints=tuple(data.get("prompt_constraints", ())),
            call_limit=int(data.get("call_limit", 10)),
            goal_tolerance=float(data.get("goal_tolerance", DEFAULT_GOAL_TOLERANCE)),
            height_bound=(
                float(data["height_bound"]) if data.get("height_bound") is not None else None
            ),
            sim_timeout=float(data.get("sim_timeout", DEFAULT_SIM_TIMEOUT)),
        )
    except MissionFileInvalid:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise MissionFileInvalid(f"mission file {path} invalid: {exc}") from exc
    world = spec.load_world()
    for label, point in (("start", spec.start), ("goal", spec.goal)):
        if not world.extent.contains(point):
            raise MissionFileInvalid(
                f"mission {spec.id!r}: {label} {point} outside the world extent"
            )
    return spec


def load_missions(directory: str | Path) -> dict[str, MissionSpec]:
    """All mission files in a directory, keyed by mission id."""
    missions: dict[str, MissionSpec] = {}
    for path in sorted(Path(directory).glob("*.json")):
        try:
            head = json.loads(path.read_text())
        except (OSError, json.JSONDecodeError):
            continue
        if isinstance(head, dict) and head.get("schema") == MISSION_SCHEMA:
            spec = load_mission(path)
            missions[spec.id] = spec
    return missions


@dataclass(frozen=True)
class HarnessParams:
    """Session parameters that shape plans; persisted so replay re-plans
    identically."""

    max_h_speed: float = 2.0
    max_v_speed: float = 1.0
    attitude_limit: float = math.pi / 6
    margin: float = DEFAULT_MARGIN
    arc_step: float = DEFAULT_ARC_STEP
    sample_dt: float = DEFAULT_SAMPLE_DT

    def limits(self) -> AgentLimits:
        return AgentLimits(
            max_h_speed=self.max_h_speed,
            max_v_speed=self.max_v_speed,
            attitude_limit=self.attitude_limit,
        )

    def to_dict(self) -> dict:
        return {
            "max_h_speed": self.max_h_speed,
            "max_v_speed": self.max_v_speed,
            "attitude_limit": self.attitude_limit,
            "margin": self.margin,
            "arc_step": self.arc_step,
            "sample_dt": self.sample_dt,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "HarnessParams":
        return cls(**data)


@dataclass
class MissionLog:
    mission_id: str
    mode: str  # "direct" | "llm"
    world: dict
    start: Vec3
    goal: Vec3
    goal_tolerance: float
    height_bound: float | None
    harness: HarnessParams
    records: list[StreamRecord]
    samples: list[tuple[float, Pose]]
    collisions: list[MotionEvent]
    clearance_events: list[MotionEvent]
    calls_used: int
    budget: dict | None
    transcript: list[ChatTurn] | None
    final_status: str  # reached | halted | budget_exhausted
    sim_duration: float

    def final_pose(self) -> Pose:
        return self.samples[-1][1]

    def to_ndjson(self) -> str:
        lines = [
            json.dumps(
                {
                    "type": "header",
                    "schema": LOG_SCHEMA,
                    "mission_id": self.mission_id,
                    "mode": self.mode,
                    "world": self.world,
                    "start": list(self.start),
                    "goal": list(self.goal),
                    "goal_tolerance": self.goal_tolerance,
                    "height_bound": self.height_bound,
                    "harness": self.harness.to_dict(),
                },
                sort_keys=True,
            )
        ]
        for rec in self.records:
            lines.append(json.dumps({"type": "call", **rec.to_dict()}, sort_keys=True))
        for t, pose in self.samples:
            lines.append(
                json.dumps({"type": "sample", "t": t, "pose": pose.to_dict()}, sort_keys=True)
            )
        for ev in self.collisions:
            lines.append(json.dumps({"type": "collision", **ev.to_dict()}, sort_keys=True))
        for ev in self.clearance_events:
            lines.append(json.dumps({"type": "clearance", **ev.to_dict()}, sort_keys=True))
        lines.append(
            json.dumps(
                {
                    "type": "final",
                    "status": self.final_status,
                    "calls_used": self.calls_used,
                    "sim_duration": self.sim_duration,
                    "budget": self.budget,
                    "transcript": (
                        [t.to_dict() for t in self.transcript]
                        if self.transcript is not None
                        else None
                    ),
                },
                sort_keys=True,
            )
        )
        return "\n".join(lines) + "\n"

    @classmethod
    def from_ndjson(cls, text: str) -> "MissionLog":
        header = None
        final = None
        records: list[StreamRecord] = []
        samples: list[tuple[float, Pose]] = []
        collisions: list[MotionEvent] = []
        clearance: list[MotionEvent] = []
        for i, line in enumerate(text.splitlines()):
            if not line.strip():
                continue
            try:
                data = json.loads(line)
            except json.JSONDecodeError as exc:
                raise MalformedLog(f"log line {i + 1} is not valid JSON: {exc}") from exc
            kind = data.get("type")
            if kind == "header":
                if data.get("schema") != LOG_SCHEMA:
                    raise MalformedLog(f"unsupported log schema {data.get('schema')!r}")
                header = data
            elif kind == "call":
                records.append(StreamRecord.from_dict(data))
            elif kind == "sample":
                samples.append((data["t"], Pose.from_dict(data["pose"])))
            elif kind == "collision":
                collisions.append(MotionEvent.from_dict(data))
            elif kind == "clearance":
                clearance.append(MotionEvent.from_dict(data))
            elif kind == "final":
                final = data
            else:
                raise MalformedLog(f"log line {i + 1}: unknown record type {kind!r}")
        if header is None or final is None:
            raise MalformedLog("log is missing its header or final record")
        try:
            return cls(
                mission_id=header["mission_id"],
                mode=header["mode"],
                world=header["world"],
                start=tuple(header["start"]),
                goal=tuple(header["goal"]),
                goal_tolerance=header["goal_tolerance"],
                height_bound=header.get("height_bound"),
                harness=HarnessParams.from_dict(header["harness"]),
                records=records,
                samples=samples,
                collisions=collisions,
                clearance_events=clearance,
                calls_used=final["calls_used"],
                budget=final.get("budget"),
                transcript=(
                    [ChatTurn.from_dict(t) for t in final["transcript"]]
                    if final.get("transcript") is not None
                    else None
                ),
                final_status=final["status"],
                sim_duration=final["sim_duration"],
            )
        except (KeyError, TypeError) as exc:
            raise MalformedLog(f"log fields invalid: {exc}") from exc

    @classmethod
    def load(cls, path: str | Path) -> "MissionLog":
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise MalformedLog(f"cannot read log {path}: {exc}") from exc
        return cls.from_ndjson(text)

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_ndjson())


def _distance(a: Sequence[float], b: Sequence[float]) -> float:
    return math.sqrt(sum((a[i] - b[i]) ** 2 for i in range(3)))


def _make_session(
    mission: MissionSpec, harness: HarnessParams, observer: Observer | None
) -> StreamSession:
    return StreamSession(
        missions={mission.id: mission},
        limits=harness.limits(),
        margin=harness.margin,
        arc_step=harness.arc_step,
        sample_dt=harness.sample_dt,
        observer=observer,
    )


def _finish_log(
    session: StreamSession,
    mission: MissionSpec,
    mode: str,
    harness: HarnessParams,
    status: str,
    calls_used: int = 0,
    budget: dict | None = None,
    transcript: list[ChatTurn] | None = None,
) -> MissionLog:
    session.finish()
    world = session.world if session.world is not None else mission.load_world()
    return MissionLog(
        mission_id=mission.id,
        mode=mode,
        world=world.to_dict(),
        start=tuple(mission.start),
        goal=tuple(mission.goal),
        goal_tolerance=mission.goal_tolerance,
        height_bound=mission.height_bound,
        harness=harness,
        records=list(session.records),
        samples=list(session.samples),
        collisions=list(session.collisions),
        clearance_events=list(session.clearance_events),
        calls_used=calls_used,
        budget=budget,
        transcript=transcript,
        final_status=status,
        sim_duration=session.sim_time,
    )


# --- direct control ---------------------------------------------------------

def _segment_blocks_cube(a: Vec3, b: Vec3, cube: Cube) -> float | None:
    """Entry parameter where the segment meets the cube solid, or None."""
    t0, t1 = 0.0, 1.0
    for i in range(3):
        d = b[i] - a[i]
        lo, hi = cube.lo[i], cube.hi[i]
        if abs(d) < 1e-15:
            if a[i] < lo or a[i] > hi:
                return None
            continue
        ta, tb = (lo - a[i]) / d, (hi - a[i]) / d
        if ta > tb:
            ta, tb = tb, ta
        t0, t1 = max(t0, ta), min(t1, tb)
        if t0 > t1:
            return None
    return t0


def _segment_blocks_sphere(a: Vec3, b: Vec3, sphere: Sphere, standoff: float) -> float | None:
    """Entry parameter where the 2D track first comes strictly inside the
    stand-off circle, or None. A vertical offset that keeps the whole segment
    at least the stand-off away in 3D clears the obstacle outright."""
    dz_min = min(abs(a[2] - sphere.center[2]), abs(b[2] - sphere.center[2]))
    if min(a[2], b[2]) <= sphere.center[2] <= max(a[2], b[2]):
        dz_min = 0.0
    if dz_min >= standoff:
        return None
    ax, ay = a[0], a[1]
    dx, dy = b[0] - ax, b[1] - ay
    cx, cy = sphere.center[0], sphere.center[1]
    seg_sq = dx * dx + dy * dy
    if seg_sq == 0:
        inside = math.hypot(ax - cx, ay - cy) < standoff - 1e-9
        return 0.0 if inside else None
    t_closest = max(0.0, min(1.0, ((cx - ax) * dx + (cy - ay) * dy) / seg_sq))
    px, py = ax + t_closest * dx, ay + t_closest * dy
    if math.hypot(px - cx, py - cy) >= standoff - 1e-9:
        return None
    fx, fy = ax - cx, ay - cy
    b_coef = 2 * (fx * dx + fy * dy)
    c_coef = fx * fx + fy * fy - standoff * standoff
    disc = b_coef * b_coef - 4 * seg_sq * c_coef
    root = math.sqrt(max(disc, 0.0))
    t_in = (-b_coef - root) / (2 * seg_sq)
    return max(t_in, 0.0)


def _first_blocker(
    world: World, position: Vec3, goal: Vec3, margin: float
) -> Obstacle | None:
    """The obstacle the straight track meets first, or None when clear."""
    best: tuple[float, str, Obstacle] | None = None
    for obs in world.obstacles:
        if isinstance(obs.shape, Cube):
            t = _segment_blocks_cube(position, goal, obs.shape)
        else:
            t = _segment_blocks_sphere(
                position, goal, obs.shape, obs.shape.radius + obs.clearance + margin
            )
        if t is None:
            continue
        key = (t, obs.id, obs)
        if best is None or key[:2] < best[:2]:
            best = key
    return best[2] if best else None


def _strategy_for(mission: MissionSpec, obstacle: Obstacle) -> str:
    if mission.allowed_strategy == "altitude-only":
        return "altitude"
    if mission.allowed_strategy == "circumnavigate":
        return "circumnavigate"
    return "turn" if isinstance(obstacle.shape, Cube) else "circumnavigate"


def run_direct(
    mission: MissionSpec,
    harness: HarnessParams | None = None,
    observer: Observer | None = None,
) -> MissionLog:
    """Fly a mission under direct control: the canonical stream sequence with
    planner output, no model in the loop."""
    harness = harness or HarnessParams()
    session = _make_session(mission, harness, observer)
    session.start_mission(mission.id)
    session.get_mission_coordinates()
    session.sense_environment()
    world = session.world
    assert world is not None
    goal = tuple(mission.goal)
    limits = harness.limits()

    status = "halted"
    for _ in range(64):  # generous bound; each pass either avoids or finishes
        session.get_agent_position()
        assert session.pose is not None
        position = session.pose.position
        if _distance(position, goal) <= mission.goal_tolerance:
            status = "reached"
            break
        if session.sim_time > mission.sim_timeout:
            break
        blocker = _first_blocker(world, position, goal, harness.margin)
        try:
            if blocker is None:
                plan = plan_straight(
                    position, goal, limits.max_h_speed, world.extent, limits
                )
                for a, b in zip(plan.waypoints, plan.waypoints[1:]):
                    delta = (b[0] - a[0], b[1] - a[1], b[2] - a[2])
                    dist = math.sqrt(sum(d * d for d in delta))
                    if dist <= 1e-9:
                        continue
                    leg_t = max(
                        math.hypot(delta[0], delta[1]) / limits.max_h_speed,
                        abs(delta[2]) / limits.max_v_speed,
                    )
                    session.move_agent(
                        VelocityCommand(
                            vx=delta[0] / leg_t,
                            vy=delta[1] / leg_t,
                            vz=delta[2] / leg_t,
                            duration=leg_t,
                        )
                    )
            else:
                plan_data = session.avoid_obstacle(blocker.id, _strategy_for(mission, blocker))
                for call in plan_maneuver_calls(plan_data):
                    session.execute_agent_maneuver(
                        call["vx"], call["vy"], call["vz"], call["quantum"]
                    )
        except GridPilotError as exc:
            raise PlanningFailed(f"mission {mission.id}: {exc}") from exc
    else:
        raise PlanningFailed(f"mission {mission.id}: no progress after repeated avoidance")
    return _finish_log(session, mission, "direct", harness, status)


# --- model control -----------------------------------------------------------

class LlmMissionRunner:
    """Resumable model-control loop over one mission session.

    Each submitted prompt runs the tool-call loop until the provider yields a
    turn with no tool calls; a turn carrying the completion marker (or an
    exhausted budget) finishes the mission.
    """

    def __init__(
        self,
        mission: MissionSpec,
        provider: Provider,
        config: ModelConfig | None = None,
        harness: HarnessParams | None = None,
        observer: Observer | None = None,
        completion_marker: str = DEFAULT_COMPLETION_MARKER,
        price_table: dict | None = None,
    ) -> None:
        self.mission = mission
        self.provider = provider
        self.harness = harness or HarnessParams()
        self.completion_marker = completion_marker
        world = mission.load_world()
        config = config or ModelConfig()
        if not config.system_prompt:
            config = replace(
                config,
                system_prompt=build_system_prompt(
                    mission, mission.prompt_constraints, world=world
                ),
            )
        self.config = config
        table = dict(price_table) if price_table is not None else dict(DEFAULT_PRICE_TABLE)
        table.setdefault(config.model_name, (0.0, 0.0))
        self.budget = ApiBudget(call_limit=mission.call_limit, price_table=table)
        self.session = _make_session(mission, self.harness, observer)
        self.history: list[ChatTurn] = [ChatTurn(role="system", content=config.system_prompt)]
        self.outcome: str | None = None  # reached | halted | budget_exhausted

    @property
    def finished(self) -> bool:
        return self.outcome is not None

    def _goal_reached(self) -> bool:
        if self.session.pose is None:
            return False
        return (
            _distance(self.session.pose.position, tuple(self.mission.goal))
            <= self.mission.goal_tolerance
        )

    def submit(self, text: str) -> str:
        """Run the loop for one operator prompt. Returns "finished" when the
        mission ended, else "turn_complete" (idle, awaiting the next prompt)."""
        if self.finished:
            raise BudgetExceeded("mission already finished")
        self.history.append(ChatTurn(role="user", content=text))
        malformed_streak = 0
        while True:
            try:
                turn, self.budget = complete(
                    self.provider, self.history, STREAM_SCHEMAS, self.config, self.budget
                )
            except BudgetExceeded:
                self.outcome = "budget_exhausted"
                return "finished"
            except MalformedToolCall as exc:
                if getattr(exc, "budget", None) is not None:
                    self.budget = exc.budget
                malformed_streak += 1
                if malformed_streak >= 2:
                    self.outcome = "halted"
                    return "finished"
                self.history.append(
                    ChatTurn(
                        role="user",
                        content=f"Tool call rejected: {exc}. Issue a corrected call.",
                    )
                )
                continue
            malformed_streak = 0
            self.history.append(turn)
            if not turn.tool_calls:
                if self.completion_marker in turn.content:
                    self.outcome = "reached" if self._goal_reached() else "halted"
                    return "finished"
                return "turn_complete"
            for call in turn.tool_calls:
                try:
                    result: Any = self.session.dispatch(call.name, call.arguments)
                except GridPilotError as exc:
                    result = {"error": type(exc).__name__, "message": str(exc)}
                self.history.append(
                    ChatTurn(
                        role="tool",
                        content=json.dumps(result, sort_keys=True),
                        tool_call_id=call.id,
                    )
                )

    def finalize(self) -> MissionLog:
        status = self.outcome or "halted"
        return _finish_log(
            self.session,
            self.mission,
            "llm",
            self.harness,
            status,
            calls_used=self.budget.calls_used,
            budget=self.budget.to_dict(),
            transcript=list(self.history),
        )


def run_llm(
    mission: MissionSpec,
    provider: Provider,
    config: ModelConfig | None = None,
    harness: HarnessParams | None = None,
    observer: Observer | None = None,
    initial_prompt: str | None = None,
) -> MissionLog:
    """Fly a mission under model control with a single kickoff prompt."""
    runner = LlmMissionRunner(mission, provider, config, harness, observer)
    runner.submit(initial_prompt if initial_prompt is not None else kickoff_prompt(mission))
    return runner.finalize()


# --- metrics ------------------------------------------------------------------

@dataclass(frozen=True)
class MissionMetrics:
    reached: bool
    path_length: float
    net_collisions: int
    min_sphere_clearance: float | None
    calls_used: int
    sim_duration: float


def evaluate(log: MissionLog) -> MissionMetrics:
    """Metrics recomputed solely from the log, re-running the continuous
    collision oracle over the sampled trajectory."""
    world = world_from_dict(log.world)
    if not log.samples:
        return MissionMetrics(
            reached=False,
            path_length=0.0,
            net_collisions=0,
            min_sphere_clearance=None,
            calls_used=log.calls_used,
            sim_duration=log.sim_duration,
        )
    points = [pose.position for _, pose in log.samples]
    path_length = sum(_distance(a, b) for a, b in zip(points, points[1:]))
    net_collisions = 0
    for a, b in zip(points, points[1:]):
        if collision_check(world.obstacles, (a, b)).collisions:
            net_collisions += 1
    sphere_centers = [
        o.shape.center for o in world.obstacles if isinstance(o.shape, Sphere)
    ]
    min_clearance: float | None = None
    if sphere_centers:
        min_clearance = min(
            _distance(p, c) for p in points for c in sphere_centers
        )
    reached = _distance(points[-1], tuple(log.goal)) <= log.goal_tolerance
    return MissionMetrics(
        reached=reached,
        path_length=path_length,
        net_collisions=net_collisions,
        min_sphere_clearance=min_clearance,
        calls_used=log.calls_used,
        sim_duration=log.sim_duration,
    )


# --- replay -------------------------------------------------------------------

def replay(log: MissionLog) -> MissionLog:
    """Re-execute the recorded stream calls against a fresh world and verify
    the outcome matches the input log field-for-field. Mode, transcript, and
    budget carry over verbatim; they are records of the original run, not
    re-derived."""
    mission = MissionSpec(
        id=log.mission_id,
        start=tuple(log.start),
        goal=tuple(log.goal),
        world_inline=log.world,
        goal_tolerance=log.goal_tolerance,
        height_bound=log.height_bound,
    )
    session = _make_session(mission, log.harness, None)
    try:
        for record in log.records:
            if record.direction.sense != "downstream":
                continue
            session.dispatch(record.name, record.args or {})
    except GridPilotError as exc:
        raise ReplayDivergence(f"recorded call failed on replay: {exc}") from exc
    replayed = _finish_log(
        session,
        mission,
        log.mode,
        log.harness,
        log.final_status,
        calls_used=log.calls_used,
        budget=log.budget,
        transcript=list(log.transcript) if log.transcript is not None else None,
    )
    if replayed != log:
        for fname in (
            "records",
            "samples",
            "collisions",
            "clearance_events",
            "sim_duration",
            "world",
        ):
            if getattr(replayed, fname) != getattr(log, fname):
                raise ReplayDivergence(f"replay diverged in field {fname!r}")
        raise ReplayDivergence("replay diverged from the recorded log")
    return replayed
