"""The interaction-stream registry: eight named, schema-described control
functions callable by the direct controller or by the model through tool
calls.

Each invocation is logged as a downstream record (the command sinking from
the model layer through control into the simulated environment, layers
1 -> 2 -> 3) followed by an upstream record (the observation rising back,
layers 3 -> 2 -> 1). Collisions are recorded, never fatal: the success
metric is zero net collisions in the log, so the harness measures rather
than prevents by fiat.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Any, Mapping

from .agent import AgentLimits, Pose, VelocityCommand, step
from .errors import (
    ArgsInvalid,
    EnvironmentNotSensed,
    InvalidQuantum,
    MissionAlreadyActive,
    MissionNotFound,
    NoActiveMission,
    StrategyInfeasible,
)
from .planner import (
    DEFAULT_ARC_STEP,
    DEFAULT_MARGIN,
    QUANTA,
    ManeuverPlan,
    plan_altitude_bypass,
    plan_circumnavigation,
    plan_turn_bypass,
)
from .world import Cube, Sphere, World, collision_check

if TYPE_CHECKING:
    from .mission import MissionSpec

DOWNSTREAM = (1, 2, 3)
UPSTREAM = (3, 2, 1)

DEFAULT_SAMPLE_DT = 0.5

TOOLS_SCHEMA = "gridpilot.tools/v1"


@dataclass(frozen=True)
class StreamDirection:
    sense: str  # "downstream" | "upstream"
    order: tuple[int, int, int]

    def to_dict(self) -> dict:
        return {"sense": self.sense, "order": list(self.order)}

    @classmethod
    def from_dict(cls, data: dict) -> "StreamDirection":
        return cls(sense=data["sense"], order=tuple(data["order"]))


DIR_DOWN = StreamDirection(sense="downstream", order=DOWNSTREAM)
DIR_UP = StreamDirection(sense="upstream", order=UPSTREAM)


@dataclass(frozen=True)
class StreamRecord:
    call_id: int
    sim_time: float
    name: str
    args: dict | None
    result: Any
    direction: StreamDirection
    parent_call_id: int | None = None

    def to_dict(self) -> dict:
        return {
            "call_id": self.call_id,
            "sim_time": self.sim_time,
            "name": self.name,
            "args": self.args,
            "result": self.result,
            "direction": self.direction.to_dict(),
            "parent_call_id": self.parent_call_id,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "StreamRecord":
        return cls(
            call_id=data["call_id"],
            sim_time=data["sim_time"],
            name=data["name"],
            args=data["args"],
            result=data["result"],
            direction=StreamDirection.from_dict(data["direction"]),
            parent_call_id=data.get("parent_call_id"),
        )


@dataclass(frozen=True)
class MotionEvent:
    """A collision or clearance contact recorded for one motion call."""

    call_id: int
    obstacle_ids: tuple[str, ...]
    t_start: float
    t_end: float

    def to_dict(self) -> dict:
        return {
            "call_id": self.call_id,
            "obstacle_ids": list(self.obstacle_ids),
            "t_start": self.t_start,
            "t_end": self.t_end,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "MotionEvent":
        return cls(
            call_id=data["call_id"],
            obstacle_ids=tuple(data["obstacle_ids"]),
            t_start=data["t_start"],
            t_end=data["t_end"],
        )


# --- tool schemas ----------------------------------------------------------

@dataclass(frozen=True)
class ParamSpec:
    name: str
    type: str  # "number" | "string"
    description: str
    required: bool = True
    enum: tuple | None = None


@dataclass(frozen=True)
class ToolSchema:
    name: str
    description: str
    params: tuple[ParamSpec, ...] = ()

    def to_tool_json(self) -> dict:
        properties = {}
        required = []
        for p in self.params:
            prop: dict[str, Any] = {"type": p.type, "description": p.description}
            if p.enum is not None:
                prop["enum"] = list(p.enum)
            properties[p.name] = prop
            if p.required:
                required.append(p.name)
        return {
            "type": "function",
            "function": {
                "name": self.name,
                "description": self.description,
                "parameters": {
                    "type": "object",
                    "properties": properties,
                    "required": required,
                },
            },
        }

    @classmethod
    def from_tool_json(cls, data: dict) -> "ToolSchema":
        fn = data["function"]
        params = []
        required = set(fn["parameters"].get("required", []))
        for name, prop in fn["parameters"].get("properties", {}).items():
            params.append(
                ParamSpec(
                    name=name,
                    type=prop["type"],
                    description=prop.get("description", ""),
                    required=name in required,
                    enum=tuple(prop["enum"]) if "enum" in prop else None,
                )
            )
        return cls(name=fn["name"], description=fn.get("description", ""), params=tuple(params))

    def validate_args(self, args: dict) -> None:
        """Raise ArgsInvalid naming the offending field."""
        if not isinstance(args, dict):
            raise ArgsInvalid(f"{self.name}: arguments must be an object")
        known = {p.name for p in self.params}
        for key in args:
            if key not in known:
                raise ArgsInvalid(f"{self.name}: unknown field {key!r}")
        for p in self.params:
            if p.name not in args:
                if p.required:
                    raise ArgsInvalid(f"{self.name}: missing required field {p.name!r}")
                continue
            value = args[p.name]
            if p.type == "number":
                if isinstance(value, bool) or not isinstance(value, (int, float)):
                    raise ArgsInvalid(f"{self.name}: field {p.name!r} must be a number")
            elif p.type == "string":
                if not isinstance(value, str):
                    raise ArgsInvalid(f"{self.name}: field {p.name!r} must be a string")
            if p.enum is not None and value not in p.enum:
                raise ArgsInvalid(
                    f"{self.name}: field {p.name!r} must be one of {list(p.enum)}"
                )


def _velocity_params() -> tuple[ParamSpec, ...]:
    return (
        ParamSpec("vx", "number", "velocity along x in m/s"),
        ParamSpec("vy", "number", "velocity along y in m/s"),
        ParamSpec("vz", "number", "velocity along z in m/s"),
    )


STREAM_SCHEMAS: tuple[ToolSchema, ...] = (
    ToolSchema(
        name="startMission",
        description="Open the mission session and register the available control functions.",
        params=(ParamSpec("mission_id", "string", "identifier of the mission to fly"),),
    ),
    ToolSchema(
        name="getMissionCoordinates",
        description="Report the active mission's start and goal coordinates.",
    ),
    ToolSchema(
        name="senseEnvironment",
        description=(
            "Load the pre-mapped world as a 2.5D occupancy heightmap and report "
            "its extent, resolution, obstacle count, and grid digest."
        ),
    ),
    ToolSchema(
        name="getAgentPosition",
        description=(
            "Report the agent pose, its grid cell, and the 3x3 occupancy "
            "neighborhood at the agent's altitude; 1 marks an obstacle cell, "
            "0 a free cell."
        ),
    ),
    ToolSchema(
        name="moveAgent",
        description=(
            "Fly a velocity command for a duration; the simulated actuators "
            "derive roll, pitch, and yaw from the commanded velocity."
        ),
        params=_velocity_params()
        + (ParamSpec("duration", "number", "how long to hold the command, in seconds"),),
    ),
    ToolSchema(
        name="avoidObstacle",
        description=(
            "Plan an avoidance path around the named obstacle and return the "
            "waypoints plus the executeAgentManeuver sub-calls that fly it."
        ),
        params=(
            ParamSpec("obstacle_id", "string", "identifier of the obstacle to avoid"),
            ParamSpec(
                "strategy",
                "string",
                "avoidance maneuver to use",
                enum=("turn", "altitude", "circumnavigate"),
            ),
        ),
    ),
    ToolSchema(
        name="getObstacleDimensions",
        description="Report the named obstacle's shape, dimensions, and clearance stand-off.",
        params=(ParamSpec("obstacle_id", "string", "identifier of the obstacle"),),
    ),
    ToolSchema(
        name="executeAgentManeuver",
        description=(
            "Fly one avoidance sub-step: a velocity command lasting exactly one "
            "admissible control quantum of 0.5 or 3 seconds."
        ),
        params=_velocity_params()
        + (ParamSpec("quantum", "number", "sub-call duration in seconds", enum=(0.5, 3.0)),),
    ),
)

STREAM_NAMES: tuple[str, ...] = tuple(s.name for s in STREAM_SCHEMAS)

_SCHEMA_BY_NAME = {s.name: s for s in STREAM_SCHEMAS}


def schema_for(name: str) -> ToolSchema:
    if name not in _SCHEMA_BY_NAME:
        raise ArgsInvalid(f"unknown stream {name!r}")
    return _SCHEMA_BY_NAME[name]


def export_tool_schemas() -> dict:
    """The registry as a JSON document, for the model bridge and for docs."""
    return {"schema": TOOLS_SCHEMA, "tools": [s.to_tool_json() for s in STREAM_SCHEMAS]}


def parse_tool_schemas(data: dict) -> tuple[ToolSchema, ...]:
    if data.get("schema") != TOOLS_SCHEMA:
        raise ArgsInvalid(f"unsupported tools schema {data.get('schema')!r}")
    return tuple(ToolSchema.from_tool_json(t) for t in data["tools"])


# --- ordering validation ----------------------------------------------------

@dataclass(frozen=True)
class OrderingReport:
    ok: bool
    call_id: int | None = None
    reason: str | None = None


def validate_ordering(records: list[StreamRecord]) -> OrderingReport:
    """Check the layer ordering contract over a stream log.

    Every invocation must appear as a downstream record whose layer order is
    exactly 1,2,3 followed by its upstream record ordered exactly 3,2,1, with
    monotone call ids and nondecreasing sim time.
    """
    if len(records) % 2 != 0:
        last = records[-1]
        return OrderingReport(False, last.call_id, "unpaired stream record")
    prev_call_id = -1
    prev_time = -math.inf
    for i in range(0, len(records), 2):
        down, up = records[i], records[i + 1]
        if down.direction.sense != "downstream":
            return OrderingReport(False, down.call_id, "expected a downstream record")
        if down.direction.order != DOWNSTREAM:
            return OrderingReport(
                False, down.call_id, f"downstream burst ordered {down.direction.order}"
            )
        if up.direction.sense != "upstream":
            return OrderingReport(False, up.call_id, "expected an upstream record")
        if up.direction.order != UPSTREAM:
            return OrderingReport(
                False, up.call_id, f"upstream burst ordered {up.direction.order}"
            )
        if up.call_id != down.call_id or up.name != down.name:
            return OrderingReport(False, up.call_id, "upstream record does not match its call")
        if down.call_id <= prev_call_id:
            return OrderingReport(False, down.call_id, "call ids must increase")
        prev_call_id = down.call_id
        for rec in (down, up):
            if rec.sim_time < prev_time - 1e-12:
                return OrderingReport(False, rec.call_id, "sim_time decreased")
            prev_time = rec.sim_time
    return OrderingReport(True)


# --- the session ------------------------------------------------------------

def _pose_dict(pose: Pose) -> dict:
    return pose.to_dict()


@dataclass
class StreamSession:
    """One mission run's stream endpoint. Calls execute strictly sequentially;
    the registry itself is shared read-only.

    An optional observer receives (kind, payload) events, ("sample",
    (t, Pose)) and ("call", StreamRecord), for live telemetry; it plays no
    part in the logged state.
    """

    missions: Mapping[str, "MissionSpec"]
    limits: AgentLimits = field(default_factory=AgentLimits)
    margin: float = DEFAULT_MARGIN
    arc_step: float = DEFAULT_ARC_STEP
    sample_dt: float = DEFAULT_SAMPLE_DT
    observer: Any = None

    mission: "MissionSpec | None" = None
    world: World | None = None
    pose: Pose | None = None
    sim_time: float = 0.0
    records: list[StreamRecord] = field(default_factory=list)
    samples: list[tuple[float, Pose]] = field(default_factory=list)
    collisions: list[MotionEvent] = field(default_factory=list)
    clearance_events: list[MotionEvent] = field(default_factory=list)

    _next_call_id: int = 0
    _active: bool = False
    _used: bool = False
    _last_avoid_id: int | None = None

    def _notify(self, kind: str, payload: Any) -> None:
        if self.observer is not None:
            self.observer(kind, payload)

    def _add_sample(self, t: float, pose: Pose) -> None:
        self.samples.append((t, pose))
        self._notify("sample", (t, pose))

    @property
    def active(self) -> bool:
        return self._active

    def _require_active(self) -> None:
        if not self._active:
            raise NoActiveMission("no mission session is open")

    def _require_world(self) -> World:
        self._require_active()
        if self.world is None:
            raise EnvironmentNotSensed("senseEnvironment has not been called")
        return self.world

    def _log(self, name: str, args: dict | None, result: Any, parent: int | None,
             t_down: float) -> None:
        call_id = self._next_call_id
        self._next_call_id += 1
        self.records.append(
            StreamRecord(call_id, t_down, name, args, None, DIR_DOWN, parent)
        )
        up = StreamRecord(call_id, self.sim_time, name, None, result, DIR_UP, parent)
        self.records.append(up)
        if name == "avoidObstacle":
            self._last_avoid_id = call_id
        self._notify("call", up)

    # --- the eight streams ---------------------------------------------

    def start_mission(self, mission_id: str) -> dict:
        if self._active or self._used:
            raise MissionAlreadyActive("a mission session is already open")
        if mission_id not in self.missions:
            raise MissionNotFound(f"no mission {mission_id!r}")
        self.mission = self.missions[mission_id]
        self.pose = Pose(position=tuple(self.mission.start))
        self._active = True
        self._used = True
        self._add_sample(self.sim_time, self.pose)
        result = {"streams": list(STREAM_NAMES)}
        self._log("startMission", {"mission_id": mission_id}, result, None, self.sim_time)
        return result

    def get_mission_coordinates(self) -> dict:
        self._require_active()
        assert self.mission is not None
        result = {"start": list(self.mission.start), "goal": list(self.mission.goal)}
        self._log("getMissionCoordinates", {}, result, None, self.sim_time)
        return result

    def sense_environment(self) -> dict:
        self._require_active()
        assert self.mission is not None
        self.world = self.mission.load_world()
        ext = self.world.extent
        result = {
            "extent": {
                "x_min": ext.x_min,
                "x_max": ext.x_max,
                "y_min": ext.y_min,
                "y_max": ext.y_max,
                "z_ceiling": ext.z_ceiling,
            },
            "resolution": self.world.resolution,
            "digest": self.world.grid.digest(),
            "obstacle_count": len(self.world.obstacles),
        }
        self._log("senseEnvironment", {}, result, None, self.sim_time)
        return result

    def get_agent_position(self) -> dict:
        world = self._require_world()
        assert self.pose is not None
        grid = world.grid
        x, y, z = self.pose.position
        ix, iy = grid.index_of(x, y)
        neighborhood = []
        for dy in (1, 0, -1):  # north row first
            row = []
            for dx in (-1, 0, 1):
                jx, jy = ix + dx, iy + dy
                if 0 <= jx < grid.nx and 0 <= jy < grid.ny:
                    cell = grid.cells[jy][jx]
                    row.append(1 if cell.occupancy and z <= cell.height else 0)
                else:
                    row.append(0)
            neighborhood.append(row)
        result = {
            "pose": _pose_dict(self.pose),
            "cell": [ix, iy],
            "neighborhood": neighborhood,
        }
        self._log("getAgentPosition", {}, result, None, self.sim_time)
        return result

    def _fly(self, name: str, cmd: VelocityCommand, parent: int | None) -> dict:
        world = self._require_world()
        assert self.pose is not None
        cmd.check(self.limits)
        t0 = self.sim_time
        start_pose = self.pose
        a = start_pose.position
        end_pose = step(start_pose, cmd, cmd.duration, self.limits)
        b = end_pose.position
        report = collision_check(world.obstacles, (a, b))
        t1 = t0 + cmd.duration
        # Sample the swept segment every sample_dt plus the endpoint.
        elapsed = 0.0
        while elapsed + self.sample_dt < cmd.duration - 1e-12:
            elapsed += self.sample_dt
            pose_k = step(start_pose, cmd, elapsed, self.limits)
            self._add_sample(t0 + elapsed, pose_k)
        self._add_sample(t1, end_pose)
        self.pose = end_pose
        self.sim_time = t1
        call_id = self._next_call_id
        if report.collisions:
            self.collisions.append(MotionEvent(call_id, report.collisions, t0, t1))
        if report.clearance_violations:
            self.clearance_events.append(
                MotionEvent(call_id, report.clearance_violations, t0, t1)
            )
        result = {
            "pose": _pose_dict(end_pose),
            "sim_time": t1,
            "collisions": list(report.collisions),
            "clearance_violations": list(report.clearance_violations),
        }
        args = {"vx": cmd.vx, "vy": cmd.vy, "vz": cmd.vz}
        if name == "moveAgent":
            args["duration"] = cmd.duration
        else:
            args["quantum"] = cmd.duration
        self._log(name, args, result, parent, t0)
        return result

    def move_agent(self, cmd: VelocityCommand) -> dict:
        return self._fly("moveAgent", cmd, None)

    def execute_agent_maneuver(self, vx: float, vy: float, vz: float, quantum: float) -> dict:
        if quantum not in QUANTA:
            raise InvalidQuantum(f"quantum must be one of {QUANTA}, got {quantum}")
        cmd = VelocityCommand(vx=vx, vy=vy, vz=vz, duration=quantum)
        return self._fly("executeAgentManeuver", cmd, self._last_avoid_id)

    def avoid_obstacle(self, obstacle_id: str, strategy: str) -> dict:
        world = self._require_world()
        assert self.mission is not None and self.pose is not None
        obs = world.obstacle(obstacle_id)
        goal = tuple(self.mission.goal)
        position = self.pose.position
        if strategy == "turn":
            if not isinstance(obs.shape, Cube):
                raise StrategyInfeasible("turn bypass needs a box-shaped obstacle")
            plan = plan_turn_bypass(
                position, goal, obs.shape,
                margin=self.margin, extent=world.extent, limits=self.limits,
            )
        elif strategy == "altitude":
            bound = self.mission.height_bound
            if bound is None:
                raise StrategyInfeasible(
                    "altitude bypass needs a stated height bound in the mission"
                )
            plan = plan_altitude_bypass(
                position, goal, bound,
                margin=self.margin, ascent_speed=self.limits.max_v_speed,
                z_ceiling=world.extent.z_ceiling, limits=self.limits,
            )
        elif strategy == "circumnavigate":
            if not isinstance(obs.shape, Sphere):
                raise StrategyInfeasible("circumnavigation needs a spherical obstacle")
            plan = plan_circumnavigation(
                position, goal, obs.shape,
                clearance=obs.clearance + self.margin,
                arc_step=self.arc_step, extent=world.extent, limits=self.limits,
            )
        else:
            raise ArgsInvalid(f"unknown strategy {strategy!r}")
        result = plan.to_dict()
        self._log(
            "avoidObstacle", {"obstacle_id": obstacle_id, "strategy": strategy},
            result, None, self.sim_time,
        )
        return result

    def get_obstacle_dimensions(self, obstacle_id: str) -> dict:
        world = self._require_world()
        obs = world.obstacle(obstacle_id)
        if isinstance(obs.shape, Cube):
            result = {
                "shape": "cube",
                "center": list(obs.shape.center),
                "edge_lengths": list(obs.shape.edge_lengths),
                "clearance": obs.clearance,
            }
        else:
            result = {
                "shape": "sphere",
                "center": list(obs.shape.center),
                "radius": obs.shape.radius,
                "clearance": obs.clearance,
            }
        self._log(
            "getObstacleDimensions", {"obstacle_id": obstacle_id}, result, None, self.sim_time
        )
        return result

    def finish(self) -> None:
        self._active = False

    # --- tool-call dispatch ----------------------------------------------

    def dispatch(self, name: str, args: dict) -> Any:
        """Execute a named stream from schema-validated arguments."""
        schema_for(name).validate_args(args)
        if name == "startMission":
            return self.start_mission(args["mission_id"])
        if name == "getMissionCoordinates":
            return self.get_mission_coordinates()
        if name == "senseEnvironment":
            return self.sense_environment()
        if name == "getAgentPosition":
            return self.get_agent_position()
        if name == "moveAgent":
            cmd = VelocityCommand(
                vx=float(args["vx"]), vy=float(args["vy"]), vz=float(args["vz"]),
                duration=float(args["duration"]),
            )
            return self.move_agent(cmd)
        if name == "avoidObstacle":
            return self.avoid_obstacle(args["obstacle_id"], args["strategy"])
        if name == "getObstacleDimensions":
            return self.get_obstacle_dimensions(args["obstacle_id"])
        if name == "executeAgentManeuver":
            return self.execute_agent_maneuver(
                float(args["vx"]), float(args["vy"]), float(args["vz"]), args["quantum"]
            )
        raise ArgsInvalid(f"unknown stream {name!r}")


def plan_maneuver_calls(plan: ManeuverPlan | dict) -> list[dict]:
    """The executeAgentManeuver argument dicts that fly a plan."""
    if isinstance(plan, ManeuverPlan):
        calls = [{"velocity": list(v), "quantum": q} for v, q in plan.maneuver_calls]
    else:
        calls = list(plan["maneuver_calls"])
    return [
        {"vx": c["velocity"][0], "vy": c["velocity"][1], "vz": c["velocity"][2],
         "quantum": c["quantum"]}
        for c in calls
    ]
