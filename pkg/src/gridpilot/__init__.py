"""Deterministic UAV mission harness: a gridded 2.5D world, avoidance
planners, a tool-calling model bridge, mission runners with replayable logs,
and a gateway service for live operation."""

__version__ = "0.1.0"
