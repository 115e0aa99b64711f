"""Batch entry point. Every command is a thin shell over the library:
run missions in either mode, replay and plot logs, validate worlds, and
launch the gateway with --serve.

Exit codes: 0 success, 1 mission failure, 2 usage error, 3 environment error.
"""

from __future__ import annotations

import sys
from pathlib import Path

import click

from .errors import (
    GridPilotError,
    MalformedLog,
    MissionFileInvalid,
    ProviderUnavailable,
    WorldFileInvalid,
)
from .llm import HttpProvider, ScriptedProvider
from .mission import MissionLog, evaluate, load_mission, replay, run_direct, run_llm
from .plotting import plot_log
from .world import load_world

EXIT_OK = 0
EXIT_MISSION_FAILED = 1
EXIT_USAGE = 2
EXIT_ENVIRONMENT = 3


@click.group(invoke_without_command=True)
@click.option("--serve", is_flag=True, help="Launch the gateway service.")
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8000, show_default=True)
@click.option(
    "--missions-dir",
    default="missions",
    show_default=True,
    help="Mission catalog served by the gateway.",
)
@click.option(
    "--console-dir",
    default=None,
    help="Static operator console to mount at /console (optional).",
)
@click.pass_context
def main(ctx: click.Context, serve: bool, host: str, port: int,
         missions_dir: str, console_dir: str | None) -> None:
    if ctx.invoked_subcommand is not None:
        return
    if not serve:
        click.echo(ctx.get_help())
        ctx.exit(EXIT_USAGE)
    import uvicorn

    from .gateway import create_app

    if not Path(missions_dir).is_dir():
        click.echo(f"missions directory not found: {missions_dir}", err=True)
        ctx.exit(EXIT_ENVIRONMENT)
    app = create_app(missions_dir, console_dir)
    uvicorn.run(app, host=host, port=port, log_level="info")


@main.command()
@click.option("--mission", "mission_path", required=True,
              type=click.Path(path_type=Path), help="Mission file to fly.")
@click.option("--mode", type=click.Choice(["direct", "llm"]), default="direct",
              show_default=True)
@click.option("--provider", type=click.Choice(["scripted", "http"]), default="scripted",
              show_default=True, help="Model provider for llm mode.")
@click.option("--fixture", type=click.Path(path_type=Path), default=None,
              help="Scripted-provider fixture file (llm mode).")
@click.option("--base-url", default=None, help="Chat-completions endpoint (http provider).")
@click.option("--seed", type=int, default=None,
              help="Sampling seed forwarded to the http provider.")
@click.option("--out", type=click.Path(path_type=Path), default=None,
              help="Log output path (default: <mission-id>.<mode>.ndjson).")
def run(mission_path: Path, mode: str, provider: str, fixture: Path | None,
        base_url: str | None, seed: int | None, out: Path | None) -> None:
    """Fly a mission and write its log; exit 0 only on a clean success."""
    try:
        mission = load_mission(mission_path)
    except (MissionFileInvalid, WorldFileInvalid) as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_ENVIRONMENT)

    try:
        if mode == "direct":
            log = run_direct(mission)
        else:
            if provider == "scripted":
                if fixture is None:
                    raise click.UsageError("--provider scripted requires --fixture")
                model = ScriptedProvider.from_file(fixture)
            else:
                if base_url is None:
                    raise click.UsageError("--provider http requires --base-url")
                model = HttpProvider(base_url, seed=seed)
            log = run_llm(mission, model)
    except click.UsageError:
        raise
    except ProviderUnavailable as exc:
        click.echo(f"provider error: {exc}", err=True)
        sys.exit(EXIT_ENVIRONMENT)
    except GridPilotError as exc:
        click.echo(f"mission failed: {exc}", err=True)
        sys.exit(EXIT_MISSION_FAILED)

    out = out or Path(f"{mission.id}.{mode}.ndjson")
    log.save(out)
    metrics = evaluate(log)
    click.echo(
        f"{mission.id} [{mode}] status={log.final_status} "
        f"path={metrics.path_length:.2f}m collisions={metrics.net_collisions} "
        f"calls={metrics.calls_used} sim={metrics.sim_duration:.2f}s -> {out}"
    )
    ok = log.final_status == "reached" and metrics.net_collisions == 0
    sys.exit(EXIT_OK if ok else EXIT_MISSION_FAILED)


@main.command()
@click.option("--log", "log_path", required=True, type=click.Path(path_type=Path))
@click.option("--out", "out_prefix", required=True, type=click.Path(path_type=Path),
              help="Output prefix for .map.svg, .altitude.svg, .samples.csv.")
def plot(log_path: Path, out_prefix: Path) -> None:
    """Render a log's trajectory artifacts."""
    try:
        log = MissionLog.load(log_path)
    except MalformedLog as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_ENVIRONMENT)
    for path in plot_log(log, out_prefix):
        click.echo(f"wrote {path}")
    sys.exit(EXIT_OK)


@main.command()
@click.option("--log", "log_path", required=True, type=click.Path(path_type=Path))
def replay_log(log_path: Path) -> None:
    """Re-execute a log against a fresh world and verify it reproduces."""
    try:
        log = MissionLog.load(log_path)
    except MalformedLog as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_ENVIRONMENT)
    try:
        replay(log)
    except GridPilotError as exc:
        click.echo(f"replay diverged: {exc}", err=True)
        sys.exit(EXIT_MISSION_FAILED)
    click.echo("replay ok: log reproduced field-for-field")
    sys.exit(EXIT_OK)


@main.command()
@click.option("--world", "world_path", required=True, type=click.Path(path_type=Path))
@click.option("--csv", "csv_path", type=click.Path(path_type=Path), default=None,
              help="Also write the 0/1 occupancy grid as CSV.")
def validate(world_path: Path, csv_path: Path | None) -> None:
    """Check world invariants and grid/footprint agreement."""
    from .world import _footprint_overlaps_rect  # intentional: self-check path

    try:
        world = load_world(world_path)
    except WorldFileInvalid as exc:
        click.echo(f"invalid world: {exc}", err=True)
        sys.exit(EXIT_ENVIRONMENT)
    except GridPilotError as exc:
        click.echo(f"world invariant violated: {exc}", err=True)
        sys.exit(EXIT_MISSION_FAILED)

    grid = world.grid
    mismatches = 0
    for iy in range(grid.ny):
        for ix in range(grid.nx):
            x0, y0, x1, y1 = grid.cell_rect(ix, iy)
            expect = any(
                _footprint_overlaps_rect(obs.shape, x0, y0, x1, y1)
                for obs in world.obstacles
            )
            if bool(grid.cells[iy][ix].occupancy) != expect:
                mismatches += 1
    occupied = grid.occupied_count()
    click.echo(
        f"{world_path}: {grid.nx}x{grid.ny} cells at {world.resolution} m, "
        f"{len(world.obstacles)} obstacle(s), {occupied} occupied cell(s)"
    )
    if csv_path is not None:
        csv_path.write_text(grid.to_csv())
        click.echo(f"wrote {csv_path}")
    if mismatches:
        click.echo(f"FAIL: {mismatches} cell(s) disagree with the footprint test", err=True)
        sys.exit(EXIT_MISSION_FAILED)
    click.echo("pass: grid agrees with the obstacle footprints")
    sys.exit(EXIT_OK)


if __name__ == "__main__":
    main()
