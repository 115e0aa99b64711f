#!/usr/bin/env python3
"""Regenerate the shipped scripted-provider fixtures from direct-mode runs.

The planners are deterministic, so freezing their maneuver sub-calls into
fixture files keeps the scripted missions exactly aligned with the direct
baseline. Rerun after changing worlds, missions, or planner defaults:

    python3 scripts/gen_fixtures.py
"""

import json
import sys
from pathlib import Path

REPO = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(REPO / "src"))

from gridpilot.mission import load_mission, run_direct  # noqa: E402

FIXTURE_SCHEMA = "gridpilot.fixture/v1"


def mission_fixture(mission_id: str) -> dict:
    mission = load_mission(REPO / "missions" / f"{mission_id}.json")
    log = run_direct(mission)
    downstream = [r for r in log.records if r.direction.sense == "downstream"]

    steps = [
        {
            "match": {"contains": mission.id},
            "response": {
                "tool_calls": [
                    {"name": "startMission", "arguments": {"mission_id": mission.id}}
                ]
            },
        },
        {
            "response": {
                "tool_calls": [
                    {"name": "getMissionCoordinates", "arguments": {}},
                    {"name": "senseEnvironment", "arguments": {}},
                ]
            }
        },
        {"response": {"tool_calls": [{"name": "getAgentPosition", "arguments": {}}]}},
    ]

    pending_maneuvers: list[dict] = []

    def flush_maneuvers() -> None:
        if pending_maneuvers:
            steps.append({"response": {"tool_calls": list(pending_maneuvers)}})
            pending_maneuvers.clear()

    for record in downstream:
        if record.name in (
            "startMission",
            "getMissionCoordinates",
            "senseEnvironment",
            "getAgentPosition",
        ):
            continue
        if record.name == "executeAgentManeuver":
            pending_maneuvers.append(
                {"name": "executeAgentManeuver", "arguments": record.args}
            )
            continue
        flush_maneuvers()
        steps.append(
            {"response": {"tool_calls": [{"name": record.name, "arguments": record.args}]}}
        )
    flush_maneuvers()
    steps.append({"response": {"content": "MISSION COMPLETE"}})
    return {"schema": FIXTURE_SCHEMA, "steps": steps}


def retry_fixture(base: dict) -> dict:
    """Mission-1 fixture with one malformed call injected, then the normal
    continuation: exercises the single-retry contract."""
    steps = list(base["steps"])
    malformed = {
        "response": {
            "tool_calls": [
                {"name": "moveAgent", "arguments": {"vx": 1.0, "vy": 0.0, "vz": 0.0}}
            ]
        }
    }
    return {"schema": FIXTURE_SCHEMA, "steps": steps[:3] + [malformed] + steps[3:]}


def budget_overrun_fixture(mission_id: str) -> dict:
    """Five well-formed turns; run with call_limit 3 to exercise exhaustion."""
    steps = [
        {
            "response": {
                "tool_calls": [
                    {"name": "startMission", "arguments": {"mission_id": mission_id}}
                ]
            }
        },
        {
            "response": {
                "tool_calls": [
                    {"name": "getMissionCoordinates", "arguments": {}},
                    {"name": "senseEnvironment", "arguments": {}},
                ]
            }
        },
        {"response": {"tool_calls": [{"name": "getAgentPosition", "arguments": {}}]}},
        {"response": {"tool_calls": [{"name": "getAgentPosition", "arguments": {}}]}},
        {"response": {"content": "MISSION COMPLETE"}},
    ]
    return {"schema": FIXTURE_SCHEMA, "steps": steps}


def main() -> None:
    out_dir = REPO / "fixtures"
    out_dir.mkdir(exist_ok=True)
    fixtures: dict[str, dict] = {}
    for mission_id in ("mission-1", "mission-2", "mission-3", "mission-complex"):
        fixtures[mission_id] = mission_fixture(mission_id)
    fixtures["mission-1-retry"] = retry_fixture(fixtures["mission-1"])
    fixtures["budget-overrun"] = budget_overrun_fixture("mission-1")
    for name, doc in fixtures.items():
        path = out_dir / f"{name}.json"
        path.write_text(json.dumps(doc, indent=2) + "\n")
        print(f"wrote {path} ({len(doc['steps'])} steps)")


if __name__ == "__main__":
    main()
