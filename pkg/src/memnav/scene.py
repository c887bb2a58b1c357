"""Simulated world: occupancy grid, object instances, raycasting, geodesics.

Grids are boolean numpy arrays indexed [iy, ix] (True = occupied). Cell
(ix, iy) covers the world rectangle [ix*cell, (ix+1)*cell) x [iy*cell,
(iy+1)*cell). Scenes are immutable after construction and safe to share
across concurrent episode runners.
"""

from __future__ import annotations

import heapq
import json
import math
import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .geometry import AgentPose

UNREACHABLE = math.inf

SQRT2 = math.sqrt(2.0)


class SceneError(ValueError):
    """Raised when a scene violates its invariants or a query is ill-posed."""


@dataclass(frozen=True)
class ObjectInstance:
    """A placed object: category label, center, and occupied footprint cells.

    decoy_of marks an object that visually mimics another category; the
    perception oracle may report it under that category instead.
    """

    category: str
    center: tuple[float, float]
    footprint: tuple[tuple[int, int], ...]
    decoy_of: str | None = None

    def __post_init__(self) -> None:
        if not self.footprint:
            raise SceneError(f"object '{self.category}' has an empty footprint")
        object.__setattr__(self, "footprint", tuple(tuple(c) for c in self.footprint))
        object.__setattr__(self, "center", (float(self.center[0]), float(self.center[1])))


@dataclass(frozen=True)
class Scene:
    name: str
    cell_size: float
    grid: np.ndarray
    objects: tuple[ObjectInstance, ...]
    start_pose: AgentPose
    agent_radius: float = 0.18

    def __post_init__(self) -> None:
        grid = np.asarray(self.grid, dtype=bool)
        grid.setflags(write=False)
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "objects", tuple(self.objects))
        validate_scene(self)

    @property
    def height_cells(self) -> int:
        return self.grid.shape[0]

    @property
    def width_cells(self) -> int:
        return self.grid.shape[1]

    def cell_of(self, x: float, y: float) -> tuple[int, int]:
        return (int(math.floor(x / self.cell_size)), int(math.floor(y / self.cell_size)))

    def cell_center(self, ix: int, iy: int) -> tuple[float, float]:
        return ((ix + 0.5) * self.cell_size, (iy + 0.5) * self.cell_size)

    def in_bounds(self, ix: int, iy: int) -> bool:
        return 0 <= ix < self.width_cells and 0 <= iy < self.height_cells

    def is_occupied(self, ix: int, iy: int) -> bool:
        return self.in_bounds(ix, iy) and bool(self.grid[iy, ix])

    def objects_of(self, category: str) -> list[ObjectInstance]:
        return [o for o in self.objects if o.category == category]


def validate_scene(scene: Scene) -> None:
    """Check all scene invariants, raising SceneError naming the bad field."""
    if scene.cell_size <= 0:
        raise SceneError(f"cell_size must be positive, got {scene.cell_size}")
    if scene.grid.ndim != 2:
        raise SceneError(f"grid must be 2-D, got shape {scene.grid.shape}")
    for obj in scene.objects:
        xs = [c[0] for c in obj.footprint]
        ys = [c[1] for c in obj.footprint]
        cx, cy = obj.center
        bx0, bx1 = min(xs) * scene.cell_size, (max(xs) + 1) * scene.cell_size
        by0, by1 = min(ys) * scene.cell_size, (max(ys) + 1) * scene.cell_size
        if not (bx0 <= cx <= bx1 and by0 <= cy <= by1):
            raise SceneError(
                f"objects: center {obj.center} of '{obj.category}' lies outside "
                f"its footprint bounding box"
            )
        for ix, iy in obj.footprint:
            if not scene.in_bounds(ix, iy):
                raise SceneError(
                    f"objects: footprint cell ({ix}, {iy}) of '{obj.category}' is out of bounds"
                )
            if not scene.grid[iy, ix]:
                raise SceneError(
                    f"grid: footprint cell ({ix}, {iy}) of '{obj.category}' is not marked occupied"
                )
    sx, sy = scene.start_pose.x, scene.start_pose.y
    six, siy = scene.cell_of(sx, sy)
    if not scene.in_bounds(six, siy) or scene.grid[siy, six]:
        raise SceneError(f"start_pose: cell ({six}, {siy}) is not free")
    if clearance_at(scene, sx, sy) < scene.agent_radius:
        raise SceneError(
            f"start_pose: position ({sx}, {sy}) lacks agent-radius clearance"
        )


@dataclass(frozen=True)
class EpisodeSpec:
    """One navigation task: find target_category in scene within max_steps."""

    scene: Scene
    target_category: str
    max_steps: int = 40
    success_distance: float = 1.0
    seed: int = 0

    def __post_init__(self) -> None:
        if not self.scene.objects_of(self.target_category):
            raise SceneError(
                f"target_category: scene '{self.scene.name}' contains no "
                f"'{self.target_category}' instance"
            )


# ---------------------------------------------------------------------------
# Raycasting (grid DDA)


def raycast_batch(
    grid: np.ndarray,
    cell_size: float,
    origin: tuple[float, float],
    headings_deg: np.ndarray,
    max_range: float,
) -> np.ndarray:
    """Distance from origin to the first occupied-cell boundary per heading.

    Rays that leave the grid or exceed max_range report max_range. All rays
    share one origin so the per-step state stays vectorized.
    """
    headings = np.radians(np.asarray(headings_deg, dtype=float))
    n = headings.shape[0]
    dx = np.cos(headings)
    dy = np.sin(headings)
    ox, oy = origin
    ix = np.full(n, int(math.floor(ox / cell_size)))
    iy = np.full(n, int(math.floor(oy / cell_size)))

    step_x = np.where(dx > 0, 1, np.where(dx < 0, -1, 0))
    step_y = np.where(dy > 0, 1, np.where(dy < 0, -1, 0))
    with np.errstate(divide="ignore", invalid="ignore"):
        tdx = np.where(dx != 0, cell_size / np.abs(dx), np.inf)
        tdy = np.where(dy != 0, cell_size / np.abs(dy), np.inf)
        bx = (ix + (step_x > 0)) * cell_size
        by = (iy + (step_y > 0)) * cell_size
        tmax_x = np.where(dx != 0, (bx - ox) / dx, np.inf)
        tmax_y = np.where(dy != 0, (by - oy) / dy, np.inf)

    out = np.full(n, float(max_range))
    active = np.ones(n, dtype=bool)
    ny, nx = grid.shape
    max_iters = int(2 * max_range / cell_size) + 4
    for _ in range(max_iters):
        if not active.any():
            break
        take_x = active & (tmax_x <= tmax_y)
        take_y = active & ~take_x & (tmax_y < np.inf)
        t = np.where(take_x, tmax_x, tmax_y)
        crossed = take_x | take_y
        done = active & (~crossed | (t > max_range))
        active &= ~done

        ix = np.where(active & take_x, ix + step_x, ix)
        tmax_x = np.where(active & take_x, tmax_x + tdx, tmax_x)
        iy = np.where(active & take_y, iy + step_y, iy)
        tmax_y = np.where(active & take_y, tmax_y + tdy, tmax_y)

        inside = active & (ix >= 0) & (ix < nx) & (iy >= 0) & (iy < ny)
        left = active & ~inside
        active &= ~left

        if inside.any():
            hit = np.zeros(n, dtype=bool)
            hit[inside] = grid[iy[inside], ix[inside]]
            out = np.where(hit, t, out)
            active &= ~hit
    return out


def _scalar_raycast(
    grid: np.ndarray,
    cell_size: float,
    origin: tuple[float, float],
    heading_deg: float,
    max_range: float,
    ignore_cells: frozenset[tuple[int, int]] | set[tuple[int, int]] | None = None,
) -> float:
    """Single-ray grid walk with the same boundary semantics as raycast_batch.

    Uses the same numpy trig as the batch path so single and batched rays
    agree bit for bit.
    """
    rad = float(np.radians(heading_deg))
    dx, dy = float(np.cos(rad)), float(np.sin(rad))
    ix = int(math.floor(origin[0] / cell_size))
    iy = int(math.floor(origin[1] / cell_size))
    step_x = 1 if dx > 0 else (-1 if dx < 0 else 0)
    step_y = 1 if dy > 0 else (-1 if dy < 0 else 0)
    tdx = cell_size / abs(dx) if dx != 0 else math.inf
    tdy = cell_size / abs(dy) if dy != 0 else math.inf
    tmax_x = ((ix + (step_x > 0)) * cell_size - origin[0]) / dx if dx != 0 else math.inf
    tmax_y = ((iy + (step_y > 0)) * cell_size - origin[1]) / dy if dy != 0 else math.inf
    ny, nx = grid.shape
    while True:
        if tmax_x <= tmax_y:
            if math.isinf(tmax_x):
                return max_range
            t, ix = tmax_x, ix + step_x
            tmax_x += tdx
        else:
            t, iy = tmax_y, iy + step_y
            tmax_y += tdy
        if t > max_range or not (0 <= ix < nx and 0 <= iy < ny):
            return max_range
        if grid[iy, ix] and (ignore_cells is None or (ix, iy) not in ignore_cells):
            return t


def raycast(
    scene: Scene, origin: tuple[float, float], heading_deg: float, max_range: float
) -> float:
    """Distance to the first occupied-cell boundary along one heading."""
    ix, iy = scene.cell_of(*origin)
    if scene.is_occupied(ix, iy):
        raise SceneError(f"raycast origin {origin} lies inside an occupied cell")
    return _scalar_raycast(scene.grid, scene.cell_size, origin, heading_deg, max_range)


def raycast_ignoring(
    scene: Scene,
    origin: tuple[float, float],
    heading_deg: float,
    max_range: float,
    ignore_cells: frozenset[tuple[int, int]] | set[tuple[int, int]],
) -> float:
    """Raycast treating the given cells as free (used for occlusion tests)."""
    return _scalar_raycast(
        scene.grid, scene.cell_size, origin, heading_deg, max_range, ignore_cells or None
    )


# ---------------------------------------------------------------------------
# Clearance and geodesics


def clearance_at(scene: Scene, x: float, y: float) -> float:
    """Distance from (x, y) to the nearest occupied cell's boundary.

    Scans a bounded window; returns at most 2 cell diagonals beyond the
    window, which is plenty for collision checks against the agent radius.
    """
    cell = scene.cell_size
    window = int(math.ceil(scene.agent_radius / cell)) + 3
    cx, cy = scene.cell_of(x, y)
    best = (window + 1) * cell
    for iy in range(max(0, cy - window), min(scene.height_cells, cy + window + 1)):
        for ix in range(max(0, cx - window), min(scene.width_cells, cx + window + 1)):
            if not scene.grid[iy, ix]:
                continue
            gx = max(ix * cell - x, 0.0, x - (ix + 1) * cell)
            gy = max(iy * cell - y, 0.0, y - (iy + 1) * cell)
            best = min(best, math.hypot(gx, gy))
    return best


def inflate_grid(grid: np.ndarray, cell_size: float, clearance: float) -> np.ndarray:
    """Mark cells whose center lies within clearance of any occupied cell."""
    if clearance <= 0:
        return grid.copy()
    ny, nx = grid.shape
    blocked = grid.copy()
    reach = int(math.ceil(clearance / cell_size)) + 1
    for dy in range(-reach, reach + 1):
        for dx in range(-reach, reach + 1):
            if dx == 0 and dy == 0:
                continue
            gx = max(abs(dx) - 0.5, 0.0) * cell_size
            gy = max(abs(dy) - 0.5, 0.0) * cell_size
            if math.hypot(gx, gy) >= clearance:
                continue
            src = grid[
                max(0, -dy) : ny - max(0, dy),
                max(0, -dx) : nx - max(0, dx),
            ]
            blocked[
                max(0, dy) : ny - max(0, -dy),
                max(0, dx) : nx - max(0, -dx),
            ] |= src
    return blocked


def _dijkstra_counts(
    blocked: np.ndarray,
    sources: list[tuple[int, int]],
    diagonal: bool = True,
) -> dict[tuple[int, int], tuple[int, int]]:
    """Grid Dijkstra returning (straight, diagonal) step counts per cell.

    Costs stay exact: path length is reconstructed as
    (straight + sqrt(2) * diagonal) * cell_size only at the end. Diagonal
    moves may not cut corners (both orthogonal neighbors must be free).
    """
    ny, nx = blocked.shape
    dist: dict[tuple[int, int], tuple[int, int]] = {}
    heap: list[tuple[float, int, int, int, int]] = []
    for sx, sy in sources:
        if 0 <= sx < nx and 0 <= sy < ny and not blocked[sy, sx]:
            heapq.heappush(heap, (0.0, 0, 0, sx, sy))
    orth = ((1, 0), (-1, 0), (0, 1), (0, -1))
    diag = ((1, 1), (1, -1), (-1, 1), (-1, -1))
    while heap:
        _, s, d, ix, iy = heapq.heappop(heap)
        if (ix, iy) in dist:
            continue
        dist[(ix, iy)] = (s, d)
        for dx, dy in orth:
            jx, jy = ix + dx, iy + dy
            if 0 <= jx < nx and 0 <= jy < ny and not blocked[jy, jx] and (jx, jy) not in dist:
                heapq.heappush(heap, (s + 1 + d * SQRT2, s + 1, d, jx, jy))
        if not diagonal:
            continue
        for dx, dy in diag:
            jx, jy = ix + dx, iy + dy
            if not (0 <= jx < nx and 0 <= jy < ny) or blocked[jy, jx] or (jx, jy) in dist:
                continue
            if blocked[iy, ix + dx] or blocked[iy + dy, ix]:
                continue
            heapq.heappush(heap, (s + (d + 1) * SQRT2, s, d + 1, jx, jy))
    return dist


def shortest_path_length(
    scene: Scene,
    start: tuple[float, float],
    goal: tuple[float, float],
    clearance: float = 0.18,
    diagonal: bool = True,
) -> float:
    """Length of the minimal grid path between the cells containing the endpoints.

    The occupancy grid is inflated by the given clearance first; straight
    moves cost cell_size and diagonal moves sqrt(2) * cell_size. Returns
    UNREACHABLE (math.inf) when no path exists.
    """
    blocked = inflate_grid(scene.grid, scene.cell_size, clearance)
    a = scene.cell_of(*start)
    b = scene.cell_of(*goal)
    for name, (ix, iy) in (("start", a), ("goal", b)):
        if not scene.in_bounds(ix, iy) or blocked[iy, ix]:
            raise SceneError(f"{name} endpoint {(ix, iy)} lies inside an inflated obstacle")
    if a == b:
        return 0.0
    dist = _dijkstra_counts(blocked, [a], diagonal=diagonal)
    if b not in dist:
        return UNREACHABLE
    s, d = dist[b]
    return (s + d * SQRT2) * scene.cell_size


def geodesic_to_region(
    scene: Scene,
    start: tuple[float, float],
    region: list[tuple[int, int]],
    clearance: float = 0.0,
) -> float:
    """Geodesic distance from start to the nearest cell of the region."""
    blocked = inflate_grid(scene.grid, scene.cell_size, clearance)
    a = scene.cell_of(*start)
    if not scene.in_bounds(*a) or blocked[a[1], a[0]]:
        return UNREACHABLE
    targets = {c for c in region if scene.in_bounds(*c) and not blocked[c[1], c[0]]}
    if not targets:
        return UNREACHABLE
    if a in targets:
        return 0.0
    dist = _dijkstra_counts(blocked, list(targets))
    if a not in dist:
        return UNREACHABLE
    s, d = dist[a]
    return (s + d * SQRT2) * scene.cell_size


def success_region_cells(
    scene: Scene, center: tuple[float, float], radius: float
) -> list[tuple[int, int]]:
    """Free cells whose center lies strictly within radius of the point."""
    cell = scene.cell_size
    cx, cy = scene.cell_of(*center)
    reach = int(math.ceil(radius / cell)) + 1
    out = []
    for iy in range(max(0, cy - reach), min(scene.height_cells, cy + reach + 1)):
        for ix in range(max(0, cx - reach), min(scene.width_cells, cx + reach + 1)):
            if scene.grid[iy, ix]:
                continue
            px, py = scene.cell_center(ix, iy)
            if math.hypot(px - center[0], py - center[1]) < radius:
                out.append((ix, iy))
    return out


def _ray_hit_cell(
    scene: Scene, origin: tuple[float, float], heading_deg: float, max_range: float
) -> tuple[float, tuple[int, int] | None]:
    """Scalar grid walk reporting the first occupied cell hit, if any."""
    cell = scene.cell_size
    rad = float(np.radians(heading_deg))
    dx, dy = float(np.cos(rad)), float(np.sin(rad))
    ix, iy = scene.cell_of(*origin)
    step_x = 1 if dx > 0 else (-1 if dx < 0 else 0)
    step_y = 1 if dy > 0 else (-1 if dy < 0 else 0)
    tdx = cell / abs(dx) if dx != 0 else math.inf
    tdy = cell / abs(dy) if dy != 0 else math.inf
    tmax_x = ((ix + (step_x > 0)) * cell - origin[0]) / dx if dx != 0 else math.inf
    tmax_y = ((iy + (step_y > 0)) * cell - origin[1]) / dy if dy != 0 else math.inf
    while True:
        if tmax_x <= tmax_y:
            if math.isinf(tmax_x):
                return max_range, None
            t, ix = tmax_x, ix + step_x
            tmax_x += tdx
        else:
            t, iy = tmax_y, iy + step_y
            tmax_y += tdy
        if t > max_range or not scene.in_bounds(ix, iy):
            return max_range, None
        if scene.grid[iy, ix]:
            return t, (ix, iy)


def distance_to_object(scene: Scene, position: tuple[float, float], obj: ObjectInstance) -> float:
    """Geodesic distance through free space to the object's footprint.

    With a clear line of sight the geodesic equals the straight-line
    distance to the footprint; otherwise it falls back to the grid geodesic
    seeded at free cells orthogonally adjacent to the footprint (an agent
    standing on such a cell is at distance ~0, half a cell).
    """
    footprint = set(obj.footprint)
    cell = scene.cell_size
    xs = [c[0] for c in footprint]
    ys = [c[1] for c in footprint]
    qx = min(max(position[0], min(xs) * cell), (max(xs) + 1) * cell)
    qy = min(max(position[1], min(ys) * cell), (max(ys) + 1) * cell)
    euclid = math.hypot(qx - position[0], qy - position[1])
    if euclid < 1e-9:
        return 0.0
    heading = math.degrees(math.atan2(qy - position[1], qx - position[0]))
    hit, hit_cell = _ray_hit_cell(scene, position, heading, euclid + 2 * cell)
    if hit_cell is not None and hit_cell in footprint:
        return hit
    seeds = set()
    for ix, iy in footprint:
        for dx, dy in ((1, 0), (-1, 0), (0, 1), (0, -1)):
            jx, jy = ix + dx, iy + dy
            if scene.in_bounds(jx, jy) and not scene.grid[jy, jx]:
                seeds.add((jx, jy))
    if not seeds:
        return UNREACHABLE
    a = scene.cell_of(*position)
    if not scene.in_bounds(*a) or scene.grid[a[1], a[0]]:
        return UNREACHABLE
    if a in seeds:
        return 0.5 * scene.cell_size
    dist = _dijkstra_counts(scene.grid, list(seeds))
    if a not in dist:
        return UNREACHABLE
    s, d = dist[a]
    return (s + d * SQRT2) * scene.cell_size + 0.5 * scene.cell_size


# ---------------------------------------------------------------------------
# Serialization

_RLE_TOKEN = re.compile(r"(\d+)([.#])")


def _encode_grid(grid: np.ndarray) -> str:
    rows = []
    for row in grid:
        runs = []
        count = 0
        current = None
        for occupied in row:
            ch = "#" if occupied else "."
            if ch != current:
                if current is not None:
                    runs.append(f"{count}{current}")
                current, count = ch, 1
            else:
                count += 1
        runs.append(f"{count}{current}")
        rows.append("".join(runs))
    return "/".join(rows)


def _decode_grid(text: str) -> np.ndarray:
    rows = []
    for r, row_text in enumerate(text.split("/")):
        cells: list[bool] = []
        pos = 0
        for m in _RLE_TOKEN.finditer(row_text):
            if m.start() != pos:
                raise SceneError(f"grid: malformed run-length text in row {r}")
            cells.extend([m.group(2) == "#"] * int(m.group(1)))
            pos = m.end()
        if pos != len(row_text) or not cells:
            raise SceneError(f"grid: malformed run-length text in row {r}")
        rows.append(cells)
    widths = {len(r) for r in rows}
    if len(widths) != 1:
        raise SceneError(f"grid: rows have unequal lengths {sorted(widths)}")
    return np.array(rows, dtype=bool)


def scene_to_dict(scene: Scene) -> dict:
    return {
        "name": scene.name,
        "cell_size": scene.cell_size,
        "grid": _encode_grid(scene.grid),
        "objects": [
            {
                "category": o.category,
                "center": list(o.center),
                "footprint_cells": [list(c) for c in o.footprint],
                **({"decoy_of": o.decoy_of} if o.decoy_of else {}),
            }
            for o in scene.objects
        ],
        "start_pose": {"x": scene.start_pose.x, "y": scene.start_pose.y, "yaw": scene.start_pose.yaw},
        "agent_radius": scene.agent_radius,
    }


def scene_from_dict(data: dict) -> Scene:
    for key in ("name", "cell_size", "grid", "objects", "start_pose"):
        if key not in data:
            raise SceneError(f"scene document missing field '{key}'")
    try:
        grid = _decode_grid(data["grid"])
        objects = [
            ObjectInstance(
                category=o["category"],
                center=tuple(o["center"]),
                footprint=tuple(tuple(c) for c in o["footprint_cells"]),
                decoy_of=o.get("decoy_of"),
            )
            for o in data["objects"]
        ]
        sp = data["start_pose"]
        pose = AgentPose(x=sp["x"], y=sp["y"], yaw=sp["yaw"])
    except (KeyError, TypeError) as exc:
        raise SceneError(f"scene document malformed: {exc!r}") from exc
    return Scene(
        name=data["name"],
        cell_size=float(data["cell_size"]),
        grid=grid,
        objects=tuple(objects),
        start_pose=pose,
        agent_radius=float(data.get("agent_radius", 0.18)),
    )


def save_scene(scene: Scene, path: str | Path) -> None:
    Path(path).write_text(json.dumps(scene_to_dict(scene), indent=2, sort_keys=True))


def load_scene(path: str | Path) -> Scene:
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise SceneError(f"scene file {path} is not valid JSON: {exc}") from exc
    return scene_from_dict(data)
