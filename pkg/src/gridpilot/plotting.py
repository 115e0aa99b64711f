"""Deterministic trajectory artifacts from a mission log: a top-down map
plot, an altitude-vs-time profile, and a CSV of the raw samples.

SVGs are assembled by hand so the output bytes depend only on the log
contents: no renderer metadata, no timestamps.
"""

from __future__ import annotations

from pathlib import Path

from .mission import MissionLog
from .world import Cube, world_from_dict

MAP_SIZE = 640
STRIP_W, STRIP_H = 640, 240
PAD = 40


def _f(value: float) -> str:
    return f"{value:.3f}"


def _map_svg(log: MissionLog) -> str:
    world = world_from_dict(log.world)
    ext = world.extent
    span_x = ext.x_max - ext.x_min
    span_y = ext.y_max - ext.y_min
    scale = (MAP_SIZE - 2 * PAD) / max(span_x, span_y)

    def sx(x: float) -> str:
        return _f(PAD + (x - ext.x_min) * scale)

    def sy(y: float) -> str:
        return _f(MAP_SIZE - PAD - (y - ext.y_min) * scale)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{MAP_SIZE}" '
        f'height="{MAP_SIZE}" viewBox="0 0 {MAP_SIZE} {MAP_SIZE}">',
        f'<rect x="{sx(ext.x_min)}" y="{sy(ext.y_max)}" '
        f'width="{_f(span_x * scale)}" height="{_f(span_y * scale)}" '
        'fill="#fafafa" stroke="#333" stroke-width="1"/>',
    ]
    # Occupied base cells.
    for iy in range(world.grid.ny):
        for ix in range(world.grid.nx):
            if world.grid.cells[iy][ix].occupancy:
                x0, y0, x1, y1 = world.grid.cell_rect(ix, iy)
                parts.append(
                    f'<rect x="{sx(x0)}" y="{sy(y1)}" '
                    f'width="{_f((x1 - x0) * scale)}" height="{_f((y1 - y0) * scale)}" '
                    'fill="#e0e0e0" stroke="none"/>'
                )
    # Obstacle footprints and clearance boundaries.
    for obs in world.obstacles:
        if isinstance(obs.shape, Cube):
            lo, hi = obs.shape.lo, obs.shape.hi
            parts.append(
                f'<rect x="{sx(lo[0])}" y="{sy(hi[1])}" '
                f'width="{_f((hi[0] - lo[0]) * scale)}" '
                f'height="{_f((hi[1] - lo[1]) * scale)}" '
                'fill="#8d6e63" stroke="#4e342e" stroke-width="1"/>'
            )
            if obs.clearance > 0:
                c = obs.clearance
                parts.append(
                    f'<rect x="{sx(lo[0] - c)}" y="{sy(hi[1] + c)}" '
                    f'width="{_f((hi[0] - lo[0] + 2 * c) * scale)}" '
                    f'height="{_f((hi[1] - lo[1] + 2 * c) * scale)}" '
                    'fill="none" stroke="#d32f2f" stroke-width="1" '
                    'stroke-dasharray="4 3"/>'
                )
        else:
            cx, cy = obs.shape.center[0], obs.shape.center[1]
            parts.append(
                f'<circle cx="{sx(cx)}" cy="{sy(cy)}" '
                f'r="{_f(obs.shape.radius * scale)}" '
                'fill="#90a4ae" stroke="#455a64" stroke-width="1"/>'
            )
            if obs.clearance > 0:
                parts.append(
                    f'<circle cx="{sx(cx)}" cy="{sy(cy)}" '
                    f'r="{_f((obs.shape.radius + obs.clearance) * scale)}" '
                    'fill="none" stroke="#d32f2f" stroke-width="1" '
                    'stroke-dasharray="4 3"/>'
                )
    # Trajectory trace.
    if log.samples:
        points = " ".join(
            f"{sx(p.position[0])},{sy(p.position[1])}" for _, p in log.samples
        )
        parts.append(
            f'<polyline points="{points}" fill="none" stroke="#1565c0" stroke-width="2"/>'
        )
    # Start / goal markers.
    parts.append(
        f'<circle cx="{sx(log.start[0])}" cy="{sy(log.start[1])}" r="5" fill="#2e7d32"/>'
    )
    parts.append(
        f'<circle cx="{sx(log.goal[0])}" cy="{sy(log.goal[1])}" r="5" fill="#c62828"/>'
    )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def _altitude_svg(log: MissionLog) -> str:
    samples = log.samples or []
    t_max = max((t for t, _ in samples), default=1.0) or 1.0
    z_values = [p.position[2] for _, p in samples] or [0.0]
    z_top = max(max(z_values), (log.height_bound or 0.0) + 1.0, 1.0) * 1.1
    sx_span = STRIP_W - 2 * PAD
    sy_span = STRIP_H - 2 * PAD

    def sx(t: float) -> str:
        return _f(PAD + t / t_max * sx_span)

    def sy(z: float) -> str:
        return _f(STRIP_H - PAD - z / z_top * sy_span)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{STRIP_W}" '
        f'height="{STRIP_H}" viewBox="0 0 {STRIP_W} {STRIP_H}">',
        f'<rect x="{PAD}" y="{PAD}" width="{sx_span}" height="{sy_span}" '
        'fill="#fafafa" stroke="#333" stroke-width="1"/>',
    ]
    if log.height_bound is not None:
        y = sy(log.height_bound)
        parts.append(
            f'<line x1="{PAD}" y1="{y}" x2="{PAD + sx_span}" y2="{y}" '
            'stroke="#d32f2f" stroke-width="1" stroke-dasharray="6 4"/>'
        )
    if samples:
        points = " ".join(f"{sx(t)},{sy(p.position[2])}" for t, p in samples)
        parts.append(
            f'<polyline points="{points}" fill="none" stroke="#1565c0" stroke-width="2"/>'
        )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def _samples_csv(log: MissionLog) -> str:
    lines = ["t,x,y,z,yaw,roll,pitch"]
    for t, pose in log.samples:
        x, y, z = pose.position
        lines.append(f"{t!r},{x!r},{y!r},{z!r},{pose.yaw!r},{pose.roll!r},{pose.pitch!r}")
    return "\n".join(lines) + "\n"


def plot_log(log: MissionLog, out_prefix: str | Path) -> list[Path]:
    """Write {prefix}.map.svg, {prefix}.altitude.svg, and {prefix}.samples.csv."""
    prefix = Path(out_prefix)
    prefix.parent.mkdir(parents=True, exist_ok=True)
    outputs = {
        prefix.with_name(prefix.name + ".map.svg"): _map_svg(log),
        prefix.with_name(prefix.name + ".altitude.svg"): _altitude_svg(log),
        prefix.with_name(prefix.name + ".samples.csv"): _samples_csv(log),
    }
    for path, content in outputs.items():
        path.write_text(content)
    return list(outputs)
