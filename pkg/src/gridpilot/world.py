"""Pre-mapped 2.5D world: obstacles in continuous coordinates plus the
rasterized occupancy/height grid the agent and the model reason over.

Grid cells carry a binary occupancy bit and the maximum obstacle height over
the cell footprint; cells can be refined into 2x2 children for finer control.
A cell rasterizes as occupied only when an obstacle footprint overlaps it
with positive area, so a footprint that merely grazes a cell edge stays free.
Continuous collision checks, by contrast, treat obstacle surfaces as solid:
touching counts as a hit.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator, Sequence, Union

from .errors import (
    CellNotFound,
    NonDivisibleExtent,
    ObstacleNotFound,
    ObstacleOutOfBounds,
    OutOfBounds,
    WorldFileInvalid,
)

Vec3 = tuple[float, float, float]

WORLD_SCHEMA = "gridpilot.world/v1"


@dataclass(frozen=True)
class WorldExtent:
    x_min: float
    x_max: float
    y_min: float
    y_max: float
    z_ceiling: float

    def __post_init__(self) -> None:
        if not (self.x_min < self.x_max and self.y_min < self.y_max):
            raise WorldFileInvalid("extent must have x_min < x_max and y_min < y_max")
        if self.z_ceiling <= 0:
            raise WorldFileInvalid("extent z_ceiling must be positive")

    def contains_xy(self, x: float, y: float) -> bool:
        return self.x_min <= x <= self.x_max and self.y_min <= y <= self.y_max

    def contains(self, p: Sequence[float]) -> bool:
        return self.contains_xy(p[0], p[1]) and 0.0 <= p[2] <= self.z_ceiling


@dataclass(frozen=True)
class Cube:
    center: Vec3
    edge_lengths: Vec3

    def __post_init__(self) -> None:
        if any(e <= 0 for e in self.edge_lengths):
            raise WorldFileInvalid("cube edge lengths must be positive")

    @property
    def lo(self) -> Vec3:
        c, e = self.center, self.edge_lengths
        return (c[0] - e[0] / 2, c[1] - e[1] / 2, c[2] - e[2] / 2)

    @property
    def hi(self) -> Vec3:
        c, e = self.center, self.edge_lengths
        return (c[0] + e[0] / 2, c[1] + e[1] / 2, c[2] + e[2] / 2)

    @property
    def top(self) -> float:
        return self.hi[2]


@dataclass(frozen=True)
class Sphere:
    center: Vec3
    radius: float

    def __post_init__(self) -> None:
        if self.radius <= 0:
            raise WorldFileInvalid("sphere radius must be positive")

    @property
    def top(self) -> float:
        return self.center[2] + self.radius


Shape = Union[Cube, Sphere]


@dataclass(frozen=True)
class Obstacle:
    id: str
    shape: Shape
    clearance: float = 0.0

    def __post_init__(self) -> None:
        if self.clearance < 0:
            raise WorldFileInvalid(f"obstacle {self.id!r}: clearance must be >= 0")


@dataclass(frozen=True)
class Cell:
    """One grid cell: occupancy bit, max obstacle height, optional 2x2 children.

    Children are ordered (sw, se, nw, ne), x-minor, y-major.
    """

    occupancy: int
    height: float
    children: tuple["Cell", "Cell", "Cell", "Cell"] | None = None


@dataclass(frozen=True)
class CollisionReport:
    collisions: tuple[str, ...]
    clearance_violations: tuple[str, ...]

    @property
    def collided(self) -> bool:
        return bool(self.collisions)


# --- continuous geometry -------------------------------------------------

def _seg_point_distance(a: Sequence[float], b: Sequence[float], p: Sequence[float]) -> float:
    """Exact minimum distance from segment a-b to point p."""
    ab = [b[i] - a[i] for i in range(len(a))]
    ap = [p[i] - a[i] for i in range(len(a))]
    denom = sum(d * d for d in ab)
    if denom == 0.0:
        return math.sqrt(sum(d * d for d in ap))
    t = max(0.0, min(1.0, sum(ap[i] * ab[i] for i in range(len(a))) / denom))
    closest = [a[i] + t * ab[i] for i in range(len(a))]
    return math.sqrt(sum((p[i] - closest[i]) ** 2 for i in range(len(a))))


def _seg_aabb_intersects(a: Vec3, b: Vec3, lo: Vec3, hi: Vec3) -> bool:
    """Closed-set segment/box intersection via the slab method."""
    t0, t1 = 0.0, 1.0
    for i in range(3):
        d = b[i] - a[i]
        if abs(d) < 1e-15:
            if a[i] < lo[i] or a[i] > hi[i]:
                return False
            continue
        ta = (lo[i] - a[i]) / d
        tb = (hi[i] - a[i]) / d
        if ta > tb:
            ta, tb = tb, ta
        t0 = max(t0, ta)
        t1 = min(t1, tb)
        if t0 > t1:
            return False
    return True


def _point_aabb_distance(p: Vec3, lo: Vec3, hi: Vec3) -> float:
    dsq = 0.0
    for i in range(3):
        d = max(lo[i] - p[i], 0.0, p[i] - hi[i])
        dsq += d * d
    return math.sqrt(dsq)


def _seg_aabb_distance(a: Vec3, b: Vec3, lo: Vec3, hi: Vec3) -> float:
    """Minimum distance from segment to a solid box.

    Distance to a convex set is convex along the segment, so golden-section
    search converges to the global minimum.
    """
    if _seg_aabb_intersects(a, b, lo, hi):
        return 0.0

    def dist(t: float) -> float:
        p = (a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1]), a[2] + t * (b[2] - a[2]))
        return _point_aabb_distance(p, lo, hi)

    inv_phi = (math.sqrt(5.0) - 1.0) / 2.0
    left, right = 0.0, 1.0
    c = right - inv_phi * (right - left)
    d = left + inv_phi * (right - left)
    fc, fd = dist(c), dist(d)
    for _ in range(120):
        if fc < fd:
            right, d, fd = d, c, fc
            c = right - inv_phi * (right - left)
            fc = dist(c)
        else:
            left, c, fc = c, d, fd
            d = left + inv_phi * (right - left)
            fd = dist(d)
    return min(dist(0.0), dist(1.0), fc, fd)


def _shape_hits_segment(shape: Shape, a: Vec3, b: Vec3) -> bool:
    if isinstance(shape, Cube):
        return _seg_aabb_intersects(a, b, shape.lo, shape.hi)
    return _seg_point_distance(a, b, shape.center) <= shape.radius


def _shape_segment_distance(shape: Shape, a: Vec3, b: Vec3) -> float:
    """Distance from the segment to the shape's solid surface (0 if touching)."""
    if isinstance(shape, Cube):
        return _seg_aabb_distance(a, b, shape.lo, shape.hi)
    return max(0.0, _seg_point_distance(a, b, shape.center) - shape.radius)


def collision_check(
    obstacles: Sequence[Obstacle], segment: tuple[Vec3, Vec3]
) -> CollisionReport:
    """Exact continuous check of one straight flight segment.

    Reports obstacles whose solid the segment touches, and separately
    obstacles whose clearance stand-off the segment enters (strictly inside;
    grazing the clearance boundary is allowed).
    """
    a, b = segment
    hit: list[str] = []
    near: list[str] = []
    for obs in obstacles:
        if _shape_hits_segment(obs.shape, a, b):
            hit.append(obs.id)
        elif obs.clearance > 0 and _shape_segment_distance(obs.shape, a, b) < obs.clearance:
            near.append(obs.id)
    return CollisionReport(collisions=tuple(hit), clearance_violations=tuple(near))


# --- rasterization --------------------------------------------------------

def _footprint_overlaps_rect(
    shape: Shape, x0: float, y0: float, x1: float, y1: float
) -> bool:
    """Positive-area overlap between the xy footprint and the cell rectangle."""
    if isinstance(shape, Cube):
        lo, hi = shape.lo, shape.hi
        return min(hi[0], x1) > max(lo[0], x0) and min(hi[1], y1) > max(lo[1], y0)
    cx, cy = shape.center[0], shape.center[1]
    dx = max(x0 - cx, 0.0, cx - x1)
    dy = max(y0 - cy, 0.0, cy - y1)
    return dx * dx + dy * dy < shape.radius * shape.radius


def _footprint_height_over_rect(
    shape: Shape, x0: float, y0: float, x1: float, y1: float
) -> float:
    """Maximum obstacle surface height over the cell rectangle."""
    if isinstance(shape, Cube):
        return shape.top
    cx, cy = shape.center[0], shape.center[1]
    dx = max(x0 - cx, 0.0, cx - x1)
    dy = max(y0 - cy, 0.0, cy - y1)
    dsq = dx * dx + dy * dy
    return shape.center[2] + math.sqrt(max(0.0, shape.radius**2 - dsq))


def _rasterize_cell(
    obstacles: Sequence[Obstacle],
    x0: float,
    y0: float,
    size: float,
    depth_left: int,
) -> Cell:
    x1, y1 = x0 + size, y0 + size
    occupancy = 0
    height = 0.0
    for obs in obstacles:
        if _footprint_overlaps_rect(obs.shape, x0, y0, x1, y1):
            occupancy = 1
            height = max(height, _footprint_height_over_rect(obs.shape, x0, y0, x1, y1))
    if depth_left <= 0:
        return Cell(occupancy=occupancy, height=height)
    half = size / 2
    children = (
        _rasterize_cell(obstacles, x0, y0, half, depth_left - 1),
        _rasterize_cell(obstacles, x0 + half, y0, half, depth_left - 1),
        _rasterize_cell(obstacles, x0, y0 + half, half, depth_left - 1),
        _rasterize_cell(obstacles, x0 + half, y0 + half, half, depth_left - 1),
    )
    occupancy = 1 if any(c.occupancy for c in children) else 0
    height = max(c.height for c in children)
    return Cell(occupancy=occupancy, height=height, children=children)


@dataclass(frozen=True)
class GridMap:
    """Immutable rasterized world grid. Refinement returns a new map."""

    extent: WorldExtent
    base_resolution: float
    obstacles: tuple[Obstacle, ...]
    cells: tuple[tuple[Cell, ...], ...]  # cells[iy][ix]

    @property
    def nx(self) -> int:
        return len(self.cells[0])

    @property
    def ny(self) -> int:
        return len(self.cells)

    def cell_at(self, ix: int, iy: int) -> Cell:
        if not (0 <= ix < self.nx and 0 <= iy < self.ny):
            raise CellNotFound(f"cell ({ix}, {iy}) outside grid {self.nx}x{self.ny}")
        return self.cells[iy][ix]

    def cell_rect(self, ix: int, iy: int) -> tuple[float, float, float, float]:
        x0 = self.extent.x_min + ix * self.base_resolution
        y0 = self.extent.y_min + iy * self.base_resolution
        return (x0, y0, x0 + self.base_resolution, y0 + self.base_resolution)

    def index_of(self, x: float, y: float) -> tuple[int, int]:
        if not self.extent.contains_xy(x, y):
            raise OutOfBounds(f"({x}, {y}) outside extent")
        ix = min(int((x - self.extent.x_min) / self.base_resolution), self.nx - 1)
        iy = min(int((y - self.extent.y_min) / self.base_resolution), self.ny - 1)
        return ix, iy

    def occupied_count(self) -> int:
        return sum(c.occupancy for row in self.cells for c in row)

    def iter_leaves(self) -> Iterator[tuple[float, float, float, Cell]]:
        """Yield (x0, y0, size, leaf cell) over the whole grid, row-major."""

        def walk(cell: Cell, x0: float, y0: float, size: float):
            if cell.children is None:
                yield (x0, y0, size, cell)
                return
            half = size / 2
            offsets = ((0.0, 0.0), (half, 0.0), (0.0, half), (half, half))
            for child, (ox, oy) in zip(cell.children, offsets):
                yield from walk(child, x0 + ox, y0 + oy, half)

        for iy in range(self.ny):
            for ix in range(self.nx):
                x0, y0, _, _ = self.cell_rect(ix, iy)
                yield from walk(self.cells[iy][ix], x0, y0, self.base_resolution)

    def to_csv(self) -> str:
        """Base-resolution occupancy as CSV, row iy=0 first (y ascending)."""
        return "\n".join(
            ",".join(str(c.occupancy) for c in row) for row in self.cells
        ) + "\n"

    def digest(self) -> str:
        """Stable hash of the rasterized grid for reproducibility checks."""
        payload = json.dumps(
            [
                (round(x0, 9), round(y0, 9), round(size, 9), cell.occupancy, round(cell.height, 9))
                for x0, y0, size, cell in self.iter_leaves()
            ],
            separators=(",", ":"),
        )
        return hashlib.sha256(payload.encode()).hexdigest()[:16]


def _check_obstacle_in_extent(obs: Obstacle, extent: WorldExtent) -> None:
    shape = obs.shape
    if isinstance(shape, Cube):
        lo, hi = shape.lo, shape.hi
        ok = (
            extent.x_min <= lo[0]
            and hi[0] <= extent.x_max
            and extent.y_min <= lo[1]
            and hi[1] <= extent.y_max
            and lo[2] >= 0.0
            and hi[2] <= extent.z_ceiling
        )
    else:
        c, r = shape.center, shape.radius
        ok = (
            extent.x_min <= c[0] - r
            and c[0] + r <= extent.x_max
            and extent.y_min <= c[1] - r
            and c[1] + r <= extent.y_max
            and c[2] - r >= 0.0
            and c[2] + r <= extent.z_ceiling
        )
    if not ok:
        raise ObstacleOutOfBounds(f"obstacle {obs.id!r} does not fit inside the extent")


def build_gridmap(
    extent: WorldExtent, resolution: float, obstacles: Sequence[Obstacle]
) -> GridMap:
    """Rasterize obstacles onto a fresh grid.

    A cell is occupied iff some obstacle footprint (clearance excluded)
    overlaps the cell rectangle with positive area; its height is the maximum
    obstacle surface height over the cell.
    """
    if resolution <= 0:
        raise NonDivisibleExtent("resolution must be positive")
    spans = (extent.x_max - extent.x_min, extent.y_max - extent.y_min)
    counts = []
    for span in spans:
        n = span / resolution
        if abs(n - round(n)) > 1e-9 or round(n) < 1:
            raise NonDivisibleExtent(
                f"resolution {resolution} does not evenly divide extent span {span}"
            )
        counts.append(int(round(n)))
    nx, ny = counts

    ids = [o.id for o in obstacles]
    if len(set(ids)) != len(ids):
        raise WorldFileInvalid("obstacle ids must be unique")
    for obs in obstacles:
        _check_obstacle_in_extent(obs, extent)

    rows = []
    for iy in range(ny):
        row = []
        y0 = extent.y_min + iy * resolution
        for ix in range(nx):
            x0 = extent.x_min + ix * resolution
            row.append(_rasterize_cell(obstacles, x0, y0, resolution, 0))
        rows.append(tuple(row))
    return GridMap(
        extent=extent,
        base_resolution=resolution,
        obstacles=tuple(obstacles),
        cells=tuple(rows),
    )


def refine_cell(grid: GridMap, cell_index: tuple[int, int], depth: int) -> GridMap:
    """Return a new map with one base cell refined to 2^depth x 2^depth leaves.

    Each leaf is re-rasterized against the obstacles; the parent occupancy is
    the OR of its children, so queries outside the refined cell are unchanged.
    """
    if depth < 1:
        raise ValueError("depth must be >= 1")
    ix, iy = cell_index
    grid.cell_at(ix, iy)  # raises CellNotFound
    x0, y0, _, _ = grid.cell_rect(ix, iy)
    refined = _rasterize_cell(grid.obstacles, x0, y0, grid.base_resolution, depth)
    rows = [list(row) for row in grid.cells]
    rows[iy][ix] = refined
    return GridMap(
        extent=grid.extent,
        base_resolution=grid.base_resolution,
        obstacles=grid.obstacles,
        cells=tuple(tuple(row) for row in rows),
    )


def query_occupancy(grid: GridMap, position: Sequence[float]) -> int:
    """Occupancy of the deepest cell containing (x, y), under 2.5D semantics:
    a point above the cell's obstacle height reads 0 even over an occupied
    footprint."""
    x, y, z = position
    if not grid.extent.contains((x, y, z)):
        raise OutOfBounds(f"position {tuple(position)} outside extent")
    ix, iy = grid.index_of(x, y)
    cell = grid.cells[iy][ix]
    cx0, cy0, _, _ = grid.cell_rect(ix, iy)
    size = grid.base_resolution
    while cell.children is not None:
        half = size / 2
        east = x >= cx0 + half
        north = y >= cy0 + half
        cell = cell.children[(2 if north else 0) + (1 if east else 0)]
        cx0 += half if east else 0.0
        cy0 += half if north else 0.0
        size = half
    if cell.occupancy and z > cell.height:
        return 0
    return cell.occupancy


# --- world description files ----------------------------------------------

@dataclass(frozen=True)
class World:
    """A parsed world description plus its rasterized grid."""

    extent: WorldExtent
    resolution: float
    obstacles: tuple[Obstacle, ...]
    grid: GridMap = field(compare=False)

    def obstacle(self, obstacle_id: str) -> Obstacle:
        for obs in self.obstacles:
            if obs.id == obstacle_id:
                return obs
        raise ObstacleNotFound(f"no obstacle {obstacle_id!r}")

    def to_dict(self) -> dict:
        return {
            "schema": WORLD_SCHEMA,
            "extent": {
                "x_min": self.extent.x_min,
                "x_max": self.extent.x_max,
                "y_min": self.extent.y_min,
                "y_max": self.extent.y_max,
                "z_ceiling": self.extent.z_ceiling,
            },
            "resolution": self.resolution,
            "obstacles": [_obstacle_to_dict(o) for o in self.obstacles],
        }


def _obstacle_to_dict(obs: Obstacle) -> dict:
    if isinstance(obs.shape, Cube):
        return {
            "id": obs.id,
            "shape": "cube",
            "center": list(obs.shape.center),
            "edge_lengths": list(obs.shape.edge_lengths),
            "clearance": obs.clearance,
        }
    return {
        "id": obs.id,
        "shape": "sphere",
        "center": list(obs.shape.center),
        "radius": obs.shape.radius,
        "clearance": obs.clearance,
    }


def _vec3(raw, what: str) -> Vec3:
    if not isinstance(raw, (list, tuple)) or len(raw) != 3:
        raise WorldFileInvalid(f"{what} must be a 3-element array")
    try:
        return (float(raw[0]), float(raw[1]), float(raw[2]))
    except (TypeError, ValueError) as exc:
        raise WorldFileInvalid(f"{what} must be numeric") from exc


def world_from_dict(data: dict) -> World:
    try:
        if data.get("schema") != WORLD_SCHEMA:
            raise WorldFileInvalid(f"unsupported world schema {data.get('schema')!r}")
        ext = data["extent"]
        extent = WorldExtent(
            x_min=float(ext["x_min"]),
            x_max=float(ext["x_max"]),
            y_min=float(ext["y_min"]),
            y_max=float(ext["y_max"]),
            z_ceiling=float(ext["z_ceiling"]),
        )
        resolution = float(data["resolution"])
        obstacles = []
        for raw in data.get("obstacles", []):
            kind = raw.get("shape")
            center = _vec3(raw.get("center"), f"obstacle {raw.get('id')!r} center")
            if kind == "cube":
                shape: Shape = Cube(
                    center=center,
                    edge_lengths=_vec3(
                        raw.get("edge_lengths"), f"obstacle {raw.get('id')!r} edges"
                    ),
                )
            elif kind == "sphere":
                shape = Sphere(center=center, radius=float(raw["radius"]))
            else:
                raise WorldFileInvalid(f"unknown obstacle shape {kind!r}")
            obstacles.append(
                Obstacle(id=str(raw["id"]), shape=shape, clearance=float(raw.get("clearance", 0.0)))
            )
    except WorldFileInvalid:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise WorldFileInvalid(f"world description invalid: {exc}") from exc
    grid = build_gridmap(extent, resolution, obstacles)
    return World(extent=extent, resolution=resolution, obstacles=tuple(obstacles), grid=grid)


def load_world(path: str | Path) -> World:
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except OSError as exc:
        raise WorldFileInvalid(f"cannot read world file {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise WorldFileInvalid(f"world file {path} is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise WorldFileInvalid(f"world file {path} must contain a JSON object")
    return world_from_dict(data)
