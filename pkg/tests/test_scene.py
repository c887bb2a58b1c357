import json
import math
from collections import deque

import numpy as np
import pytest

from memnav.geometry import AgentPose
from memnav.scene import (
    EpisodeSpec,
    ObjectInstance,
    Scene,
    SceneError,
    UNREACHABLE,
    clearance_at,
    distance_to_object,
    inflate_grid,
    load_scene,
    raycast,
    raycast_batch,
    save_scene,
    scene_from_dict,
    scene_to_dict,
    shortest_path_length,
)

from conftest import box_cells, grid_from_rows, make_object, make_room_scene


# ---------------------------------------------------------------------------
# Oracles


def stepping_raycast(scene, origin, heading_deg, max_range, step=0.005):
    """Naive oracle: march along the ray in tiny increments."""
    rad = math.radians(heading_deg)
    dx, dy = math.cos(rad), math.sin(rad)
    t = step
    while t <= max_range:
        ix = int(math.floor((origin[0] + t * dx) / scene.cell_size))
        iy = int(math.floor((origin[1] + t * dy) / scene.cell_size))
        if scene.is_occupied(ix, iy):
            return t
        t += step
    return max_range


def bfs_path_cells(blocked, start, goal):
    """Uniform-cost 4-connected BFS; returns step count or None."""
    if blocked[start[1], start[0]] or blocked[goal[1], goal[0]]:
        return None
    ny, nx = blocked.shape
    seen = {start: 0}
    queue = deque([start])
    while queue:
        cur = queue.popleft()
        if cur == goal:
            return seen[cur]
        for dx, dy in ((1, 0), (-1, 0), (0, 1), (0, -1)):
            nxt = (cur[0] + dx, cur[1] + dy)
            if 0 <= nxt[0] < nx and 0 <= nxt[1] < ny and not blocked[nxt[1], nxt[0]] and nxt not in seen:
                seen[nxt] = seen[cur] + 1
                queue.append(nxt)
    return None


# ---------------------------------------------------------------------------
# Raycasting


def test_raycast_open_corridor_returns_max_range(empty_room):
    assert raycast(empty_room, (4.0, 4.0), 0.0, 3.0) == pytest.approx(3.0)


def test_raycast_wall_two_meters_ahead():
    scene = make_room_scene(8.0, 8.0)
    # East wall starts at x = 7.8; cast from x = 5.8 toward it.
    d = raycast(scene, (5.8, 4.0), 0.0, 5.0)
    assert d == pytest.approx(2.0, abs=scene.cell_size)


def test_raycast_adjacent_wall():
    scene = make_room_scene(8.0, 8.0)
    d = raycast(scene, (7.75, 4.0), 0.0, 5.0)
    assert d <= scene.cell_size


def test_raycast_rejects_occupied_origin(empty_room):
    with pytest.raises(SceneError):
        raycast(empty_room, (0.05, 0.05), 0.0, 1.0)


def test_raycast_matches_stepping_oracle_on_random_scenes():
    rng = np.random.default_rng(11)
    scene = make_room_scene(8.0, 8.0, objects=[make_object("box", (5.0, 5.0), half=0.3)])
    for _ in range(200):
        origin = (rng.uniform(1.0, 4.0), rng.uniform(1.0, 4.0))
        if scene.is_occupied(*scene.cell_of(*origin)):
            continue
        heading = rng.uniform(0, 360)
        got = raycast(scene, origin, heading, 6.0)
        want = stepping_raycast(scene, origin, heading, 6.0)
        assert abs(got - want) <= 0.011 or (got == 6.0 and want == 6.0)


def test_raycast_batch_agrees_with_single(empty_room):
    rng = np.random.default_rng(3)
    origin = (4.0, 4.0)
    headings = rng.uniform(0, 360, 64)
    batch = raycast_batch(empty_room.grid, empty_room.cell_size, origin, headings, 5.0)
    for h, d in zip(headings, batch):
        assert raycast(empty_room, origin, float(h), 5.0) == d


def test_raycast_monotone_in_max_range(empty_room):
    rng = np.random.default_rng(5)
    for _ in range(50):
        heading = rng.uniform(0, 360)
        short = raycast(empty_room, (4.0, 4.0), heading, 2.0)
        long = raycast(empty_room, (4.0, 4.0), heading, 6.0)
        if short < 2.0:
            assert long == pytest.approx(short)


def test_raycast_axis_aligned_headings(empty_room):
    for heading in (0.0, 90.0, 180.0, 270.0):
        d = raycast(empty_room, (4.0, 4.0), heading, 10.0)
        assert d == pytest.approx(3.8, abs=empty_room.cell_size)


# ---------------------------------------------------------------------------
# Geodesics


def test_shortest_path_zero_for_same_point(empty_room):
    assert shortest_path_length(empty_room, (4.0, 4.0), (4.0, 4.0)) == 0.0


def test_shortest_path_straight_corridor(empty_room):
    d = shortest_path_length(empty_room, (1.0, 4.0), (4.0, 4.0))
    assert d == pytest.approx(3.0, abs=empty_room.cell_size)


def test_shortest_path_unreachable_through_wall():
    rows = [
        "##########",
        "#...##...#",
        "#...##...#",
        "#...##...#",
        "##########",
    ]
    scene = Scene(
        name="split",
        cell_size=0.1,
        grid=grid_from_rows(rows),
        objects=(),
        start_pose=AgentPose(0.25, 0.25, 0.0),
        agent_radius=0.04,
    )
    assert shortest_path_length(scene, (0.25, 0.25), (0.85, 0.25), clearance=0.0) == UNREACHABLE


def test_shortest_path_rejects_endpoint_in_inflated_obstacle(empty_room):
    with pytest.raises(SceneError):
        shortest_path_length(empty_room, (0.25, 4.0), (4.0, 4.0), clearance=0.18)


def test_dijkstra_matches_bfs_on_small_grids():
    rng = np.random.default_rng(23)
    for _ in range(8):
        ny, nx = rng.integers(3, 9), rng.integers(3, 9)
        grid = rng.random((ny, nx)) < 0.3
        scene_grid = grid.copy()
        free = [(x, y) for y in range(ny) for x in range(nx) if not grid[y, x]]
        if len(free) < 2:
            continue
        scene = Scene(
            name="rand",
            cell_size=0.1,
            grid=scene_grid,
            objects=(),
            start_pose=AgentPose(
                (free[0][0] + 0.5) * 0.1, (free[0][1] + 0.5) * 0.1, 0.0
            ),
            agent_radius=0.04,
        )
        for a in free:
            for b in free:
                want = bfs_path_cells(grid, a, b)
                got = shortest_path_length(
                    scene,
                    ((a[0] + 0.5) * 0.1, (a[1] + 0.5) * 0.1),
                    ((b[0] + 0.5) * 0.1, (b[1] + 0.5) * 0.1),
                    clearance=0.0,
                    diagonal=False,
                )
                if want is None:
                    assert got == UNREACHABLE
                else:
                    assert got == want * 0.1


def test_triangle_inequality_sampled(empty_room):
    rng = np.random.default_rng(9)
    points = [(rng.uniform(0.6, 7.4), rng.uniform(0.6, 7.4)) for _ in range(6)]
    points = [p for p in points if not empty_room.grid[empty_room.cell_of(*p)[1], empty_room.cell_of(*p)[0]]]
    for a in points:
        for b in points:
            for c in points:
                ab = shortest_path_length(empty_room, a, b, clearance=0.0)
                bc = shortest_path_length(empty_room, b, c, clearance=0.0)
                ac = shortest_path_length(empty_room, a, c, clearance=0.0)
                assert ac <= ab + bc + 1e-9


def test_diagonal_costs_sqrt2():
    scene = make_room_scene(4.0, 4.0)
    d = shortest_path_length(scene, (1.0, 1.0), (2.0, 2.0), clearance=0.0)
    assert d == pytest.approx(10 * math.sqrt(2) * 0.1, abs=0.02)


def test_inflate_grid_blocks_near_walls(empty_room):
    blocked = inflate_grid(empty_room.grid, empty_room.cell_size, 0.18)
    # A cell whose center is 0.15 m from the wall face must be blocked.
    ix, iy = empty_room.cell_of(0.35, 4.0)
    assert blocked[iy, ix]
    ix, iy = empty_room.cell_of(0.65, 4.0)
    assert not blocked[iy, ix]


def test_clearance_at_open_space(empty_room):
    assert clearance_at(empty_room, 4.0, 4.0) > 0.3
    assert clearance_at(empty_room, 0.45, 4.0) == pytest.approx(0.25, abs=1e-6)


def test_distance_to_object_line_of_sight(empty_room):
    obj = make_object("sofa", (5.0, 4.0), half=0.2)
    scene = make_room_scene(8.0, 8.0, objects=[obj])
    d = distance_to_object(scene, (3.0, 4.0), obj)
    assert d == pytest.approx(1.8, abs=0.02)


def test_distance_to_object_behind_wall():
    grid = np.zeros((40, 60), dtype=bool)
    grid[:2, :] = grid[-2:, :] = True
    grid[:, :2] = grid[:, -2:] = True
    grid[10:40, 30] = True  # wall with a gap near the bottom
    obj = ObjectInstance("sofa", (4.0, 2.0), box_cells(3.8, 1.8, 4.2, 2.2))
    for ix, iy in obj.footprint:
        grid[iy, ix] = True
    scene = Scene(
        name="detour",
        cell_size=0.1,
        grid=grid,
        objects=(obj,),
        start_pose=AgentPose(1.0, 2.0, 0.0),
    )
    direct = math.hypot(4.0 - 2.6, 0.0)
    d = distance_to_object(scene, (2.6, 2.0), obj)
    assert d > direct + 0.5  # must detour around the wall


# ---------------------------------------------------------------------------
# Validation and serialization


def test_scene_rejects_unmarked_footprint():
    grid = np.zeros((20, 20), dtype=bool)
    obj = ObjectInstance("sofa", (1.0, 1.0), ((10, 10),))
    with pytest.raises(SceneError, match="not marked occupied"):
        Scene("bad", 0.1, grid, (obj,), AgentPose(0.5, 0.5, 0))


def test_scene_rejects_center_outside_footprint_bbox():
    grid = np.zeros((20, 20), dtype=bool)
    grid[10, 10] = True
    obj = ObjectInstance("sofa", (1.9, 1.9), ((10, 10),))
    with pytest.raises(SceneError, match="bounding box"):
        Scene("bad", 0.1, grid, (obj,), AgentPose(0.5, 0.5, 0))


def test_scene_rejects_occupied_start():
    grid = np.zeros((20, 20), dtype=bool)
    grid[5, 5] = True
    with pytest.raises(SceneError, match="start_pose"):
        Scene("bad", 0.1, grid, (), AgentPose(0.55, 0.55, 0))


def test_scene_rejects_start_without_clearance(empty_room):
    with pytest.raises(SceneError, match="clearance"):
        make_room_scene(start=AgentPose(0.3, 4.0, 0.0))


def test_scene_json_round_trip(tmp_path, empty_room):
    obj = make_object("sofa", (5.0, 4.0), half=0.2)
    scene = make_room_scene(8.0, 8.0, objects=[obj], name="rt")
    path = tmp_path / "scene.json"
    save_scene(scene, path)
    loaded = load_scene(path)
    assert loaded.name == scene.name
    assert np.array_equal(loaded.grid, scene.grid)
    assert loaded.objects == scene.objects
    assert loaded.start_pose == scene.start_pose
    save_scene(loaded, tmp_path / "again.json")
    assert (tmp_path / "again.json").read_bytes() == path.read_bytes()


def test_scene_loader_names_missing_field(tmp_path):
    data = scene_to_dict(make_room_scene())
    del data["grid"]
    with pytest.raises(SceneError, match="grid"):
        scene_from_dict(data)


def test_scene_loader_rejects_bad_rle(tmp_path):
    data = scene_to_dict(make_room_scene())
    data["grid"] = "3#x2."
    with pytest.raises(SceneError, match="run-length"):
        scene_from_dict(data)


def test_scene_loader_rejects_ragged_rows():
    data = scene_to_dict(make_room_scene())
    data["grid"] = "3#/2#"
    with pytest.raises(SceneError, match="unequal"):
        scene_from_dict(data)


def test_scene_loader_rejects_invariant_violation(tmp_path):
    scene = make_room_scene(8.0, 8.0, objects=[make_object("sofa", (5.0, 4.0))])
    data = scene_to_dict(scene)
    data["objects"][0]["footprint_cells"].append([2, 2])  # free cell
    with pytest.raises(SceneError, match="not marked occupied"):
        scene_from_dict(data)


def test_episode_spec_requires_target():
    scene = make_room_scene()
    with pytest.raises(SceneError, match="target_category"):
        EpisodeSpec(scene=scene, target_category="sofa")
