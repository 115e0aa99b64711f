"""Kinematic UAV model: velocity commands integrate into pose changes.

First-order kinematics only; the control granularity is half-second to
three-second velocity commands, which straight-line integration represents
faithfully. Attitude (roll/pitch) is derived from the commanded velocity for
logs and display; it never feeds back into the dynamics.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Sequence

from .errors import LimitExceeded
from .world import Vec3

DEFAULT_WAYPOINT_TOLERANCE = 0.05


@dataclass(frozen=True)
class AgentLimits:
    max_h_speed: float = 2.0
    max_v_speed: float = 1.0  # ascent/descent speed bound
    attitude_limit: float = math.pi / 6

    def __post_init__(self) -> None:
        if self.max_h_speed <= 0 or self.max_v_speed <= 0 or self.attitude_limit <= 0:
            raise ValueError("agent limits must be positive")


@dataclass(frozen=True)
class Pose:
    position: Vec3
    yaw: float = 0.0
    roll: float = 0.0
    pitch: float = 0.0

    def to_dict(self) -> dict:
        return {
            "position": list(self.position),
            "yaw": self.yaw,
            "roll": self.roll,
            "pitch": self.pitch,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Pose":
        return cls(
            position=tuple(data["position"]),
            yaw=data["yaw"],
            roll=data["roll"],
            pitch=data["pitch"],
        )


@dataclass(frozen=True)
class VelocityCommand:
    vx: float
    vy: float
    vz: float
    duration: float

    def __post_init__(self) -> None:
        if self.duration <= 0:
            raise ValueError("command duration must be positive")

    @property
    def h_speed(self) -> float:
        return math.hypot(self.vx, self.vy)

    def check(self, limits: AgentLimits) -> None:
        if self.h_speed > limits.max_h_speed + 1e-9:
            raise LimitExceeded(
                f"horizontal speed {self.h_speed:.3f} exceeds {limits.max_h_speed}"
            )
        if abs(self.vz) > limits.max_v_speed + 1e-9:
            raise LimitExceeded(
                f"vertical speed {abs(self.vz):.3f} exceeds {limits.max_v_speed}"
            )


def step(pose: Pose, cmd: VelocityCommand, dt: float, limits: AgentLimits) -> Pose:
    """Advance the pose by cmd for min(dt, cmd.duration) seconds.

    Yaw tracks the horizontal velocity direction; roll and pitch tilt
    proportionally to the commanded y/x velocity fraction of the horizontal
    speed limit, capped at the attitude limit.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    cmd.check(limits)
    t = min(dt, cmd.duration)
    x, y, z = pose.position
    position = (x + cmd.vx * t, y + cmd.vy * t, z + cmd.vz * t)
    if cmd.h_speed > 0:
        yaw = math.atan2(cmd.vy, cmd.vx)
        lim = limits.attitude_limit
        roll = max(-lim, min(lim, lim * cmd.vy / limits.max_h_speed))
        pitch = max(-lim, min(lim, lim * cmd.vx / limits.max_h_speed))
    else:
        yaw, roll, pitch = pose.yaw, 0.0, 0.0
    return Pose(position=position, yaw=yaw, roll=roll, pitch=pitch)


def _leg_duration(delta: Vec3, limits: AgentLimits) -> float:
    """Shortest time to fly a straight leg with both speed bounds honored."""
    h = math.hypot(delta[0], delta[1])
    v = abs(delta[2])
    return max(h / limits.max_h_speed, v / limits.max_v_speed)


def follow_waypoints(
    pose: Pose,
    waypoints: Sequence[Vec3],
    limits: AgentLimits,
    dt: float,
    tolerance: float = DEFAULT_WAYPOINT_TOLERANCE,
) -> list[tuple[float, Pose]]:
    """Sample a piecewise-straight trajectory through the waypoints.

    Samples are spaced dt apart along each leg, with an extra sample at the
    leg end when the leg time is not a multiple of dt, so every waypoint is
    visited within tolerance (exactly, here). Returns (time, Pose) pairs
    starting with the initial pose at t=0.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    if not waypoints:
        raise ValueError("waypoints must be non-empty")
    samples: list[tuple[float, Pose]] = [(0.0, pose)]
    now = 0.0
    current = pose
    for wp in waypoints:
        delta = (
            wp[0] - current.position[0],
            wp[1] - current.position[1],
            wp[2] - current.position[2],
        )
        dist = math.sqrt(sum(d * d for d in delta))
        if dist <= tolerance:
            continue
        leg_t = _leg_duration(delta, limits)
        cmd = VelocityCommand(
            vx=delta[0] / leg_t, vy=delta[1] / leg_t, vz=delta[2] / leg_t, duration=leg_t
        )
        elapsed = 0.0
        while elapsed + dt < leg_t - 1e-12:
            elapsed += dt
            current = step(current, replace(cmd, duration=dt), dt, limits)
            samples.append((now + elapsed, current))
        remainder = leg_t - elapsed
        if remainder > 1e-12:
            current = step(current, replace(cmd, duration=remainder), remainder, limits)
            samples.append((now + leg_t, current))
        now += leg_t
    return samples
