"""Session lifecycle, the eight control functions, layer ordering, and
schema round-trips."""

import dataclasses
import json

import pytest

from gridpilot.agent import VelocityCommand
from gridpilot.errors import (
    EnvironmentNotSensed,
    InvalidQuantum,
    LimitExceeded,
    MissionAlreadyActive,
    MissionNotFound,
    NoActiveMission,
    ObstacleNotFound,
    WorldFileInvalid,
)
from gridpilot.mission import MissionSpec, load_mission
from gridpilot.streams import (
    DOWNSTREAM,
    STREAM_NAMES,
    STREAM_SCHEMAS,
    StreamDirection,
    StreamSession,
    export_tool_schemas,
    parse_tool_schemas,
    schema_for,
    validate_ordering,
)


@pytest.fixture()
def mission(missions_dir):
    return load_mission(missions_dir / "mission-1.json")


@pytest.fixture()
def mission2(missions_dir):
    return load_mission(missions_dir / "mission-2.json")


@pytest.fixture()
def mission3(missions_dir):
    return load_mission(missions_dir / "mission-3.json")


def make_session(*missions):
    return StreamSession(missions={m.id: m for m in missions})


def started(mission, sense=True):
    session = make_session(mission)
    session.start_mission(mission.id)
    if sense:
        session.sense_environment()
    return session


def test_start_mission_returns_the_eight_streams(mission):
    session = make_session(mission)
    result = session.start_mission("mission-1")
    assert result["streams"] == list(STREAM_NAMES)
    assert len(result["streams"]) == 8
    assert "avoidObstacle" in result["streams"]


def test_start_unknown_mission(mission):
    session = make_session(mission)
    with pytest.raises(MissionNotFound):
        session.start_mission("mission-99")


def test_double_start_rejected(mission):
    session = started(mission, sense=False)
    with pytest.raises(MissionAlreadyActive):
        session.start_mission("mission-1")


def test_coordinates_passthrough(mission):
    session = started(mission, sense=False)
    coords = session.get_mission_coordinates()
    assert coords == {"start": [1.0, 10.0, 1.0], "goal": [19.0, 10.0, 1.0]}


def test_no_stream_succeeds_without_a_session(mission):
    session = make_session(mission)
    with pytest.raises(NoActiveMission):
        session.get_mission_coordinates()
    with pytest.raises(NoActiveMission):
        session.sense_environment()
    with pytest.raises(NoActiveMission):
        session.get_agent_position()
    with pytest.raises(NoActiveMission):
        session.move_agent(VelocityCommand(1, 0, 0, duration=1))


def test_sense_environment_digest_is_stable(mission):
    env1 = started(mission, sense=False).sense_environment()
    env2 = started(mission, sense=False).sense_environment()
    assert env1 == env2
    assert env1["obstacle_count"] == 1


def test_sense_environment_invalid_world(tmp_path):
    bad_world = tmp_path / "broken.json"
    bad_world.write_text("{")
    spec = MissionSpec(id="m", start=(0, 0, 1), goal=(1, 1, 1), world_path=bad_world)
    session = StreamSession(missions={"m": spec})
    session.start_mission("m")
    with pytest.raises(WorldFileInvalid):
        session.sense_environment()


def test_position_requires_sensed_environment(mission):
    session = started(mission, sense=False)
    with pytest.raises(EnvironmentNotSensed):
        session.get_agent_position()


def test_neighborhood_sees_the_cube_to_the_east(mission):
    session = started(mission)
    # One cell west of the footprint: cell (8, 9) center (8.5, 9.5).
    session.pose = dataclasses.replace(session.pose, position=(8.5, 9.5, 1.0))
    info = session.get_agent_position()
    assert info["cell"] == [8, 9]
    east_column = [row[2] for row in info["neighborhood"]]
    assert east_column == [1, 1, 0]
    assert all(row[0] == 0 for row in info["neighborhood"])


def test_neighborhood_open_space_and_above_bound(mission):
    session = started(mission)
    session.pose = dataclasses.replace(session.pose, position=(3.5, 3.5, 1.0))
    info = session.get_agent_position()
    assert info["neighborhood"] == [[0, 0, 0], [0, 0, 0], [0, 0, 0]]
    session.pose = dataclasses.replace(session.pose, position=(10.0, 10.0, 6.0))
    info = session.get_agent_position()
    assert info["neighborhood"] == [[0, 0, 0], [0, 0, 0], [0, 0, 0]]


def test_move_agent_uniform(mission):
    session = started(mission)
    session.pose = dataclasses.replace(session.pose, position=(1.0, 1.0, 1.0))
    result = session.move_agent(VelocityCommand(2, 0, 0, duration=3))
    assert result["pose"]["position"] == [7.0, 1.0, 1.0]
    assert session.sim_time == 3.0


def test_move_agent_limit_exceeded_leaves_state(mission):
    session = started(mission)
    before_pose = session.pose
    before_records = len(session.records)
    with pytest.raises(LimitExceeded):
        session.move_agent(VelocityCommand(5, 0, 0, duration=1))
    assert session.pose == before_pose
    assert len(session.records) == before_records
    assert session.sim_time == 0.0


def test_collision_recorded_not_fatal(mission):
    session = started(mission)
    # Straight through the cube: pose still advances, collision logged.
    result = session.move_agent(VelocityCommand(2, 0, 0, duration=9))
    assert result["pose"]["position"] == [19.0, 10.0, 1.0]
    assert result["collisions"] == ["cube-1"]
    assert len(session.collisions) == 1
    assert session.collisions[0].obstacle_ids == ("cube-1",)


def test_avoid_obstacle_turn_constant_altitude(mission):
    session = started(mission)
    plan = session.avoid_obstacle("cube-1", "turn")
    assert plan["strategy"] == "turn"
    assert {wp[2] for wp in plan["waypoints"]} == {1.0}


def test_avoid_obstacle_altitude_clears_bound(mission2):
    session = started(mission2)
    plan = session.avoid_obstacle("cube-1", "altitude")
    assert max(wp[2] for wp in plan["waypoints"]) == pytest.approx(5.5)


def test_avoid_obstacle_circumnavigate_standoff(mission3):
    session = started(mission3)
    plan = session.avoid_obstacle("sphere-1", "circumnavigate")
    for wp in plan["waypoints"][1:]:
        dist = ((wp[0] - 10) ** 2 + (wp[1] - 10) ** 2) ** 0.5
        assert dist >= 1.5 + 0.5 - 1e-9


def test_avoid_unknown_obstacle(mission):
    session = started(mission)
    with pytest.raises(ObstacleNotFound):
        session.avoid_obstacle("nope", "turn")


def test_obstacle_dimensions_passthrough(mission, mission3):
    session = started(mission)
    dims = session.get_obstacle_dimensions("cube-1")
    assert dims == {
        "shape": "cube",
        "center": [10.0, 10.0, 2.5],
        "edge_lengths": [2.0, 2.0, 5.0],
        "clearance": 0.3,
    }
    session3 = started(mission3)
    dims3 = session3.get_obstacle_dimensions("sphere-1")
    assert dims3["radius"] == 1.5
    assert dims3["clearance"] == 0.5
    with pytest.raises(ObstacleNotFound):
        session.get_obstacle_dimensions("missing")


def test_maneuver_quantum_contract(mission):
    session = started(mission)
    result = session.execute_agent_maneuver(0, 0, 1, 0.5)
    assert result["pose"]["position"][2] == pytest.approx(1.5)
    with pytest.raises(InvalidQuantum):
        session.execute_agent_maneuver(0, 0, 1, 1.7)


def test_nine_half_second_ascents_clear_five_meters(mission):
    session = started(mission)
    for _ in range(9):
        session.execute_agent_maneuver(0, 0, 1, 0.5)
    assert session.pose.position[2] == pytest.approx(5.5)
    assert session.sim_time == pytest.approx(4.5)


def test_maneuver_equals_move_with_quantum_duration(mission):
    s1 = started(mission)
    s2 = started(mission)
    r1 = s1.execute_agent_maneuver(1.5, 0.5, -0.25, 3.0)
    r2 = s2.move_agent(VelocityCommand(1.5, 0.5, -0.25, duration=3.0))
    assert r1["pose"] == r2["pose"]
    assert s1.sim_time == s2.sim_time


def test_maneuver_tagged_with_enclosing_avoid(mission):
    session = started(mission)
    session.avoid_obstacle("cube-1", "turn")
    avoid_id = session.records[-1].call_id
    session.execute_agent_maneuver(1, 0, 0, 0.5)
    assert session.records[-1].parent_call_id == avoid_id


def test_ordering_valid_on_real_session(mission):
    session = started(mission)
    session.get_mission_coordinates()
    session.move_agent(VelocityCommand(1, 0, 0, duration=2))
    report = validate_ordering(session.records)
    assert report.ok


def test_ordering_rejects_scrambled_layers(mission):
    session = started(mission)
    records = list(session.records)
    bad = dataclasses.replace(
        records[0], direction=StreamDirection(sense="downstream", order=(2, 1, 3))
    )
    records[0] = bad
    report = validate_ordering(records)
    assert not report.ok
    assert report.call_id == bad.call_id


def test_ordering_empty_log_ok():
    assert validate_ordering([]).ok


def test_tool_schema_roundtrip():
    doc = export_tool_schemas()
    parsed = parse_tool_schemas(json.loads(json.dumps(doc)))
    assert parsed == STREAM_SCHEMAS


def test_logged_args_validate_against_schemas(mission):
    session = started(mission)
    session.get_mission_coordinates()
    session.get_agent_position()
    session.move_agent(VelocityCommand(2, 0, 0, duration=1))
    session.execute_agent_maneuver(0, 0, 1, 0.5)
    session.avoid_obstacle("cube-1", "turn")
    session.get_obstacle_dimensions("cube-1")
    for record in session.records:
        if record.direction.order == DOWNSTREAM:
            schema_for(record.name).validate_args(record.args)
