"""Mission execution in both modes, metrics, and replay."""

import dataclasses
import math

import pytest

from gridpilot.errors import MissionFileInvalid, ReplayDivergence
from gridpilot.llm import ScriptedProvider, dump_transcript
from gridpilot.mission import (
    MissionLog,
    MissionSpec,
    evaluate,
    load_mission,
    load_missions,
    replay,
    run_direct,
    run_llm,
)
from gridpilot.streams import validate_ordering


@pytest.fixture(scope="module")
def missions(missions_dir):
    return load_missions(missions_dir)


@pytest.fixture(scope="module")
def direct_logs(missions):
    return {mid: run_direct(missions[mid]) for mid in missions}


def provider_for(fixtures_dir, name):
    return ScriptedProvider.from_file(fixtures_dir / f"{name}.json")


# --- direct mode -------------------------------------------------------------


def test_mission_1_direct_reaches_with_zero_collisions(direct_logs):
    log = direct_logs["mission-1"]
    metrics = evaluate(log)
    assert log.final_status == "reached"
    assert metrics.reached
    assert metrics.net_collisions == 0
    assert not log.collisions


def test_mission_1_direct_constant_altitude(direct_logs):
    zs = [pose.position[2] for _, pose in direct_logs["mission-1"].samples]
    assert all(abs(z - 1.0) <= 0.01 for z in zs)


def test_mission_2_direct_altitude_signature(direct_logs):
    log = direct_logs["mission-2"]
    assert log.final_status == "reached"
    max_z = max(pose.position[2] for _, pose in log.samples)
    assert max_z > 5.0
    for _, pose in log.samples:
        assert abs(pose.position[1] - 10.0) <= 0.01  # straight ground track y=10


def test_mission_3_direct_clearance(direct_logs):
    metrics = evaluate(direct_logs["mission-3"])
    assert metrics.net_collisions == 0
    assert metrics.min_sphere_clearance >= 2.0


def test_start_equals_goal_rejected_at_load():
    with pytest.raises(MissionFileInvalid):
        MissionSpec(
            id="bad", start=(1, 1, 1), goal=(1, 1, 1), world_inline={"schema": "x"}
        )


def test_mission_outside_extent_rejected(tmp_path, worlds_dir):
    mission_file = tmp_path / "far.json"
    mission_file.write_text(
        '{"schema": "gridpilot.mission/v1", "id": "far", '
        f'"world": "{worlds_dir / "world-1.json"}", '
        '"start": [1, 1, 1], "goal": [99, 1, 1]}'
    )
    with pytest.raises(MissionFileInvalid):
        load_mission(mission_file)


def test_clock_purity(direct_logs):
    for log in direct_logs.values():
        motion = sum(
            rec.args.get("duration", rec.args.get("quantum", 0.0))
            for rec in log.records
            if rec.direction.sense == "downstream"
            and rec.name in ("moveAgent", "executeAgentManeuver")
        )
        assert log.sim_duration == pytest.approx(motion)
        times = [t for t, _ in log.samples]
        assert times == sorted(times)


def test_trajectory_continuity(direct_logs):
    # Consecutive samples never move faster than the combined speed bounds.
    bound_rate = 2.0 + 1.0  # max_h_speed + max_v_speed
    for log in direct_logs.values():
        for (t0, p0), (t1, p1) in zip(log.samples, log.samples[1:]):
            dist = math.dist(p0.position, p1.position)
            assert dist <= bound_rate * (t1 - t0) + 1e-9


# --- llm mode ----------------------------------------------------------------


def test_mission_1_llm_reaches_under_budget(missions, fixtures_dir, direct_logs):
    log = run_llm(missions["mission-1"], provider_for(fixtures_dir, "mission-1"))
    assert log.final_status == "reached"
    assert log.calls_used < 10
    direct_final = direct_logs["mission-1"].final_pose().position
    llm_final = log.final_pose().position
    assert math.dist(direct_final, llm_final) <= missions["mission-1"].goal_tolerance


def test_mode_equivalence_all_missions(missions, fixtures_dir, direct_logs):
    for mid in ("mission-1", "mission-2", "mission-3"):
        log = run_llm(missions[mid], provider_for(fixtures_dir, mid))
        assert log.final_status == "reached", mid
        direct_final = direct_logs[mid].final_pose().position
        assert math.dist(log.final_pose().position, direct_final) <= missions[
            mid
        ].goal_tolerance


def test_complex_mission_llm_fixture(missions, fixtures_dir):
    log = run_llm(missions["mission-complex"], provider_for(fixtures_dir, "mission-complex"))
    assert log.final_status == "reached"
    assert log.calls_used <= missions["mission-complex"].call_limit
    assert evaluate(log).net_collisions == 0


def test_llm_transcript_deterministic(missions, fixtures_dir):
    runs = [
        dump_transcript(
            run_llm(missions["mission-2"], provider_for(fixtures_dir, "mission-2")).transcript
        )
        for _ in range(2)
    ]
    assert runs[0] == runs[1]


def test_provider_that_immediately_declares_done(missions):
    provider = ScriptedProvider([{"response": {"content": "MISSION COMPLETE"}}])
    log = run_llm(missions["mission-1"], provider)
    assert log.final_status == "halted"
    assert evaluate(log).path_length == 0.0
    assert not evaluate(log).reached


def test_malformed_call_retried_once_then_succeeds(missions, fixtures_dir):
    log = run_llm(missions["mission-1"], provider_for(fixtures_dir, "mission-1-retry"))
    assert log.final_status == "reached"
    error_turns = [
        t for t in log.transcript if t.role == "user" and "Tool call rejected" in t.content
    ]
    assert len(error_turns) == 1


def test_two_consecutive_malformed_calls_halt(missions):
    bad_call = {"tool_calls": [{"name": "moveAgent", "arguments": {"vx": 1}}]}
    provider = ScriptedProvider(
        [{"response": bad_call}, {"response": bad_call}]
    )
    log = run_llm(missions["mission-1"], provider)
    assert log.final_status == "halted"
    assert log.calls_used == 2


def test_budget_exhaustion_preserves_log(missions, fixtures_dir):
    mission = dataclasses.replace(missions["mission-1"], call_limit=3)
    log = run_llm(mission, provider_for(fixtures_dir, "budget-overrun"))
    assert log.final_status == "budget_exhausted"
    assert log.calls_used == 3
    assert log.records  # the calls that did run are all logged
    assert validate_ordering(log.records).ok


def test_budget_ceiling_in_every_log(missions, fixtures_dir):
    for mid in ("mission-1", "mission-2", "mission-3"):
        log = run_llm(missions[mid], provider_for(fixtures_dir, mid))
        assert log.calls_used <= missions[mid].call_limit


def test_llm_errors_returned_as_tool_results(missions):
    # A premature getAgentPosition produces an error result, not a crash.
    provider = ScriptedProvider(
        [
            {"response": {"tool_calls": [{"name": "getAgentPosition", "arguments": {}}]}},
            {"response": {"content": "MISSION COMPLETE"}},
        ]
    )
    log = run_llm(missions["mission-1"], provider)
    tool_turns = [t for t in log.transcript if t.role == "tool"]
    assert any("NoActiveMission" in t.content for t in tool_turns)


# --- metrics and replay --------------------------------------------------------


def test_evaluate_cross_mode_metrics(missions, fixtures_dir, direct_logs):
    d = evaluate(direct_logs["mission-1"])
    l = evaluate(run_llm(missions["mission-1"], provider_for(fixtures_dir, "mission-1")))
    assert d.net_collisions == l.net_collisions == 0
    assert abs(d.path_length - l.path_length) <= 2.0 * 0.5  # one quantum of path
    assert d.reached and l.reached


def test_replay_direct_logs_equal(direct_logs):
    for mid, log in direct_logs.items():
        replayed = replay(log)
        assert replayed == log, mid


def test_replay_fixed_point(direct_logs):
    once = replay(direct_logs["mission-1"])
    assert replay(once) == once


def test_replay_llm_log_without_provider(missions, fixtures_dir):
    log = run_llm(missions["mission-2"], provider_for(fixtures_dir, "mission-2"))
    replayed = replay(log)  # no provider anywhere in sight
    assert replayed == log
    assert replayed.transcript == log.transcript


def test_replay_rejects_reordered_log(direct_logs):
    log = direct_logs["mission-1"]
    scrambled = dataclasses.replace(log)
    scrambled.records = list(log.records)
    # Swap the first two invocations (two records each).
    scrambled.records[0:2], scrambled.records[2:4] = (
        log.records[2:4],
        log.records[0:2],
    )
    with pytest.raises(ReplayDivergence):
        replay(scrambled)


def test_replay_detects_tampered_motion(direct_logs):
    log = direct_logs["mission-1"]
    tampered = dataclasses.replace(log)
    tampered.samples = list(log.samples)
    t, pose = tampered.samples[-1]
    tampered.samples[-1] = (t, dataclasses.replace(pose, position=(0.0, 0.0, 9.0)))
    with pytest.raises(ReplayDivergence):
        replay(tampered)


def test_log_ndjson_roundtrip(direct_logs, tmp_path):
    log = direct_logs["mission-3"]
    path = tmp_path / "m3.ndjson"
    log.save(path)
    assert MissionLog.load(path) == log


def test_ordering_valid_on_all_generated_logs(missions, fixtures_dir, direct_logs):
    for log in direct_logs.values():
        assert validate_ordering(log.records).ok
    for mid in ("mission-1", "mission-2", "mission-3"):
        log = run_llm(missions[mid], provider_for(fixtures_dir, mid))
        assert validate_ordering(log.records).ok


def test_load_missions_discovers_all(missions):
    assert set(missions) == {"mission-1", "mission-2", "mission-3", "mission-complex"}
