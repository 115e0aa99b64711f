"""Deterministic avoidance planning for the three supported maneuvers, plus
straight-line legs. These plans are the direct-control baseline and the
reference the model-chosen maneuvers are judged against.

Every plan decomposes into maneuver sub-calls of admissible duration quanta
(0.5 s or 3.0 s). A leg whose time does not fit the quanta exactly gets a
final 0.5 s sub-call at reduced speed so the waypoint is hit exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .agent import DEFAULT_WAYPOINT_TOLERANCE, AgentLimits
from .errors import (
    BoundNotAboveStart,
    CeilingExceeded,
    LimitExceeded,
    OutOfBounds,
    StrategyInfeasible,
    StrategyUnnecessary,
)
from .world import Cube, Sphere, Vec3, WorldExtent

QUANTA = (0.5, 3.0)
DEFAULT_MARGIN = 0.5
DEFAULT_ARC_STEP = math.pi / 16

Strategy = str  # "turn" | "altitude" | "circumnavigate" | "straight"


@dataclass(frozen=True)
class ManeuverPlan:
    strategy: Strategy
    waypoints: tuple[Vec3, ...]
    maneuver_calls: tuple[tuple[Vec3, float], ...]
    rationale: str

    def to_dict(self) -> dict:
        return {
            "strategy": self.strategy,
            "waypoints": [list(w) for w in self.waypoints],
            "maneuver_calls": [
                {"velocity": list(v), "quantum": q} for v, q in self.maneuver_calls
            ],
            "rationale": self.rationale,
        }


def decompose_leg(
    delta: Vec3,
    limits: AgentLimits,
    h_speed: float | None = None,
    tolerance: float = DEFAULT_WAYPOINT_TOLERANCE,
) -> list[tuple[Vec3, float]]:
    """Split one straight displacement into quantum-duration velocity calls.

    Greedy 3 s quanta first, then 0.5 s quanta; a sub-quantum remainder is
    flown as one 0.5 s call at reduced speed, or dropped when the leftover
    distance is within the waypoint tolerance.
    """
    h_speed = limits.max_h_speed if h_speed is None else h_speed
    if h_speed <= 0 or h_speed > limits.max_h_speed + 1e-9:
        raise LimitExceeded(f"cruise speed {h_speed} outside (0, {limits.max_h_speed}]")
    dist = math.sqrt(sum(d * d for d in delta))
    if dist <= tolerance:
        return []
    h = math.hypot(delta[0], delta[1])
    v = abs(delta[2])
    leg_t = max(h / h_speed, v / limits.max_v_speed)
    velocity = (delta[0] / leg_t, delta[1] / leg_t, delta[2] / leg_t)
    n3 = int(leg_t / 3.0 + 1e-12)
    rem = leg_t - 3.0 * n3
    n05 = int(rem / 0.5 + 1e-12)
    frac = rem - 0.5 * n05
    calls: list[tuple[Vec3, float]] = [(velocity, 3.0)] * n3 + [(velocity, 0.5)] * n05
    if frac * dist / leg_t > tolerance:
        scale = frac / 0.5
        calls.append(((velocity[0] * scale, velocity[1] * scale, velocity[2] * scale), 0.5))
    return calls


def _decompose_legs(
    waypoints: list[Vec3], limits: AgentLimits, h_speed: float | None
) -> tuple[tuple[Vec3, float], ...]:
    calls: list[tuple[Vec3, float]] = []
    for a, b in zip(waypoints, waypoints[1:]):
        calls.extend(decompose_leg((b[0] - a[0], b[1] - a[1], b[2] - a[2]), limits, h_speed))
    return tuple(calls)


def plan_straight(
    start: Vec3,
    goal: Vec3,
    speed: float,
    extent: WorldExtent,
    limits: AgentLimits | None = None,
) -> ManeuverPlan:
    """Two-waypoint plan from start to goal at a fixed cruise speed."""
    limits = limits or AgentLimits()
    for p in (start, goal):
        if not extent.contains(p):
            raise OutOfBounds(f"point {p} outside world extent")
    return ManeuverPlan(
        strategy="straight",
        waypoints=(start, goal),
        maneuver_calls=_decompose_legs([start, goal], limits, speed),
        rationale=f"straight leg to {goal} at {speed} m/s",
    )


# --- 2D helpers for footprint geometry ------------------------------------

def _seg_rect_interval(
    a: tuple[float, float],
    b: tuple[float, float],
    lo: tuple[float, float],
    hi: tuple[float, float],
) -> tuple[float, float] | None:
    """Closed param interval [t0, t1] where segment a-b overlaps the rect."""
    t0, t1 = 0.0, 1.0
    for i in range(2):
        d = b[i] - a[i]
        if abs(d) < 1e-15:
            if a[i] < lo[i] or a[i] > hi[i]:
                return None
            continue
        ta = (lo[i] - a[i]) / d
        tb = (hi[i] - a[i]) / d
        if ta > tb:
            ta, tb = tb, ta
        t0 = max(t0, ta)
        t1 = min(t1, tb)
        if t0 > t1:
            return None
    return t0, t1


def _seg_hits_rect_interior(
    a: tuple[float, float],
    b: tuple[float, float],
    lo: tuple[float, float],
    hi: tuple[float, float],
) -> bool:
    """True when the segment passes through the rect's open interior
    (running along the boundary does not count)."""
    span = _seg_rect_interval(a, b, lo, hi)
    if span is None or span[1] - span[0] < 1e-12:
        return False
    tm = (span[0] + span[1]) / 2
    px, py = a[0] + tm * (b[0] - a[0]), a[1] + tm * (b[1] - a[1])
    return lo[0] < px < hi[0] and lo[1] < py < hi[1]


def _boundary_room(p: tuple[float, float], extent: WorldExtent) -> float:
    return min(
        p[0] - extent.x_min, extent.x_max - p[0], p[1] - extent.y_min, extent.y_max - p[1]
    )


def plan_turn_bypass(
    start: Vec3,
    goal: Vec3,
    cube: Cube,
    margin: float = DEFAULT_MARGIN,
    extent: WorldExtent | None = None,
    limits: AgentLimits | None = None,
    h_speed: float | None = None,
) -> ManeuverPlan:
    """Constant-altitude rectangular detour around the cube footprint
    inflated by margin, on the side with more room (tie: left of travel)."""
    limits = limits or AgentLimits()
    a2, b2 = (start[0], start[1]), (goal[0], goal[1])
    lo3, hi3 = cube.lo, cube.hi
    if _seg_rect_interval(a2, b2, (lo3[0], lo3[1]), (hi3[0], hi3[1])) is None:
        raise StrategyUnnecessary("straight path does not cross the cube footprint")

    lo = (lo3[0] - margin, lo3[1] - margin)
    hi = (hi3[0] + margin, hi3[1] + margin)
    span = _seg_rect_interval(a2, b2, lo, hi)
    if span is None:
        # Footprint was crossed but the inflated rect was not: margin is
        # degenerate; fall back to the footprint interval.
        span = _seg_rect_interval(a2, b2, (lo3[0], lo3[1]), (hi3[0], hi3[1]))
        assert span is not None
    t_in = max(span[0], 0.0)
    t_out = min(span[1], 1.0)
    z = start[2]
    entry = (a2[0] + t_in * (b2[0] - a2[0]), a2[1] + t_in * (b2[1] - a2[1]))
    exit_ = (a2[0] + t_out * (b2[0] - a2[0]), a2[1] + t_out * (b2[1] - a2[1]))

    dx, dy = b2[0] - a2[0], b2[1] - a2[1]
    corners = [(lo[0], lo[1]), (hi[0], lo[1]), (lo[0], hi[1]), (hi[0], hi[1])]
    left = [c for c in corners if dx * (c[1] - a2[1]) - dy * (c[0] - a2[0]) >= 0]
    right = [c for c in corners if dx * (c[1] - a2[1]) - dy * (c[0] - a2[0]) < 0]

    def detour_via(side_corners: list[tuple[float, float]]) -> list[tuple[float, float]] | None:
        if extent is not None:
            if any(not extent.contains_xy(c[0], c[1]) for c in side_corners):
                return None
        # Order the side's corners along the travel direction.
        ordered = sorted(side_corners, key=lambda c: dx * (c[0] - a2[0]) + dy * (c[1] - a2[1]))
        path = [entry] + ordered + [exit_]
        for p, q in zip(path, path[1:]):
            if _seg_hits_rect_interior(p, q, lo, hi):
                return None
        return path

    candidates: list[tuple[float, int, list[tuple[float, float]]]] = []
    for rank, side in enumerate((left, right)):  # rank 0 = left of travel
        if not side:
            continue
        path = detour_via(side)
        if path is None:
            continue
        room = min(_boundary_room(c, extent) for c in side) if extent else 0.0
        candidates.append((room, rank, path))
    if not candidates:
        raise StrategyInfeasible("no side of the inflated footprint fits inside the world")
    # Most room wins; on a tie the smaller rank (left of travel) wins.
    candidates.sort(key=lambda item: (-item[0], item[1]))
    path2d = candidates[0][2]

    waypoints: list[Vec3] = [start]
    for p in path2d:
        wp = (p[0], p[1], z)
        if wp != waypoints[-1]:
            waypoints.append(wp)
    return ManeuverPlan(
        strategy="turn",
        waypoints=tuple(waypoints),
        maneuver_calls=_decompose_legs(waypoints, limits, h_speed),
        rationale=(
            f"constant-altitude detour around the footprint inflated by {margin} m, "
            "rejoining the direct line past the obstacle"
        ),
    )


def _round_up_to_quantum(duration: float) -> float:
    """Smallest sum of admissible quanta that is >= duration."""
    steps = math.ceil(duration / 0.5 - 1e-12)
    return max(steps, 0) * 0.5


def plan_altitude_bypass(
    start: Vec3,
    goal: Vec3,
    height_bound: float,
    margin: float = DEFAULT_MARGIN,
    ascent_speed: float = 1.0,
    z_ceiling: float | None = None,
    limits: AgentLimits | None = None,
    h_speed: float | None = None,
) -> ManeuverPlan:
    """Climb above a stated height bound, traverse, and descend to the goal.

    The climb duration is (bound + margin - start.z) / ascent_speed rounded
    up to a quantum-decomposable value; overshoot is safe, undershoot is not.
    The plan deliberately takes no obstacle geometry: the bound supplied in
    the mission constraints stands in for map queries, so the ground track
    is exactly the straight start-goal line.
    """
    limits = limits or AgentLimits()
    if ascent_speed <= 0 or ascent_speed > limits.max_v_speed + 1e-9:
        raise LimitExceeded(f"ascent speed {ascent_speed} outside (0, {limits.max_v_speed}]")
    target = height_bound + margin
    if start[2] >= target:
        cruise_z = start[2]
        ascent_t = 0.0
    else:
        if height_bound <= start[2]:
            raise BoundNotAboveStart(
                f"height bound {height_bound} is not above start altitude {start[2]}"
            )
        ascent_t = _round_up_to_quantum((target - start[2]) / ascent_speed)
        cruise_z = start[2] + ascent_t * ascent_speed
    if z_ceiling is not None and (target > z_ceiling or cruise_z > z_ceiling):
        raise CeilingExceeded(f"cruise altitude {cruise_z} exceeds ceiling {z_ceiling}")

    waypoints: list[Vec3] = [start]
    if ascent_t > 0:
        waypoints.append((start[0], start[1], cruise_z))
    top_of_goal = (goal[0], goal[1], cruise_z)
    if top_of_goal != waypoints[-1]:
        waypoints.append(top_of_goal)
    if goal[2] != cruise_z:
        waypoints.append(goal)
    return ManeuverPlan(
        strategy="altitude",
        waypoints=tuple(waypoints),
        maneuver_calls=_decompose_legs(waypoints, limits, h_speed),
        rationale=(
            f"climb {ascent_t} s at {ascent_speed} m/s to cruise at {cruise_z} m, "
            f"clearing the stated {height_bound} m bound plus {margin} m margin"
        ),
    )


def plan_circumnavigation(
    start: Vec3,
    goal: Vec3,
    sphere: Sphere,
    clearance: float,
    arc_step: float = DEFAULT_ARC_STEP,
    extent: WorldExtent | None = None,
    limits: AgentLimits | None = None,
    h_speed: float | None = None,
) -> ManeuverPlan:
    """Leave the direct line where it meets the sphere's stand-off circle,
    follow the shorter sampled arc around it at constant altitude, and rejoin
    the line on the far side. Ties between arc directions break
    counterclockwise."""
    limits = limits or AgentLimits()
    if arc_step <= 0 or arc_step >= math.pi:
        raise ValueError("arc_step must be in (0, pi)")
    R = sphere.radius + clearance
    cx, cy = sphere.center[0], sphere.center[1]
    ax, ay = start[0], start[1]
    dx, dy = goal[0] - ax, goal[1] - ay
    seg_len_sq = dx * dx + dy * dy
    if seg_len_sq == 0:
        raise StrategyUnnecessary("start and goal coincide")
    # Distance from the 2D segment to the center.
    t_closest = max(0.0, min(1.0, ((cx - ax) * dx + (cy - ay) * dy) / seg_len_sq))
    px, py = ax + t_closest * dx, ay + t_closest * dy
    closest = math.hypot(px - cx, py - cy)
    if closest >= R:
        raise StrategyUnnecessary(
            f"path stays {closest:.3f} m from the center, outside the {R:.3f} m stand-off"
        )

    # Line/circle intersection parameters.
    fx, fy = ax - cx, ay - cy
    a_coef = seg_len_sq
    b_coef = 2 * (fx * dx + fy * dy)
    c_coef = fx * fx + fy * fy - R * R
    disc = b_coef * b_coef - 4 * a_coef * c_coef
    root = math.sqrt(max(disc, 0.0))
    t1 = (-b_coef - root) / (2 * a_coef)
    t2 = (-b_coef + root) / (2 * a_coef)
    t_in, t_out = max(t1, 0.0), min(t2, 1.0)
    entry = (ax + t_in * dx, ay + t_in * dy)
    exit_ = (ax + t_out * dx, ay + t_out * dy)

    theta_in = math.atan2(entry[1] - cy, entry[0] - cx)
    theta_out = math.atan2(exit_[1] - cy, exit_[0] - cx)
    ccw_span = (theta_out - theta_in) % (2 * math.pi)
    cw_span = (theta_in - theta_out) % (2 * math.pi)
    if ccw_span <= cw_span + 1e-12:
        direction, span = 1.0, ccw_span
    else:
        direction, span = -1.0, cw_span

    n_steps = max(1, math.ceil(span / arc_step - 1e-12))
    z = start[2]
    arc: list[Vec3] = []
    for k in range(n_steps + 1):
        theta = theta_in + direction * min(k * arc_step, span)
        arc.append((cx + R * math.cos(theta), cy + R * math.sin(theta), z))
    if extent is not None:
        for p in arc:
            if not extent.contains_xy(p[0], p[1]):
                raise StrategyInfeasible(f"arc waypoint {p} leaves the world extent")

    waypoints: list[Vec3] = [start]
    for wp in arc:
        if wp != waypoints[-1]:
            waypoints.append(wp)
    return ManeuverPlan(
        strategy="circumnavigate",
        waypoints=tuple(waypoints),
        maneuver_calls=_decompose_legs(waypoints, limits, h_speed),
        rationale=(
            f"arc of radius {R} m around the sphere center, "
            f"sampled every {arc_step:.4f} rad, rejoining the direct line"
        ),
    )
