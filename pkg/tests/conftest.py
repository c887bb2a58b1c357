"""Shared scene and observation builders for the test suite."""

from __future__ import annotations

import math

import numpy as np
import pytest

from memnav.geometry import AgentPose
from memnav.perception import DirectionalView, Observation, VIEW_YAWS
from memnav.scene import ObjectInstance, Scene


def grid_from_rows(rows: list[str]) -> np.ndarray:
    """Build an occupancy grid from visual rows, top row = highest y."""
    return np.array([[c == "#" for c in row] for row in reversed(rows)], dtype=bool)


def box_cells(x0: float, y0: float, x1: float, y1: float, cell: float = 0.1) -> tuple:
    cells = []
    for iy in range(int(math.floor(y0 / cell + 1e-9)), int(math.ceil(y1 / cell - 1e-9))):
        for ix in range(int(math.floor(x0 / cell + 1e-9)), int(math.ceil(x1 / cell - 1e-9))):
            cells.append((ix, iy))
    return tuple(cells)


def make_room_scene(
    width_m: float = 8.0,
    height_m: float = 8.0,
    objects: list[ObjectInstance] | None = None,
    start: AgentPose | None = None,
    cell: float = 0.1,
    name: str = "room",
) -> Scene:
    """One rectangular room with 0.2 m walls and the given objects."""
    nx, ny = int(width_m / cell), int(height_m / cell)
    grid = np.zeros((ny, nx), dtype=bool)
    wall = max(2, int(0.2 / cell))
    grid[:wall, :] = True
    grid[-wall:, :] = True
    grid[:, :wall] = True
    grid[:, -wall:] = True
    for obj in objects or []:
        for ix, iy in obj.footprint:
            grid[iy, ix] = True
    return Scene(
        name=name,
        cell_size=cell,
        grid=grid,
        objects=tuple(objects or []),
        start_pose=start or AgentPose(x=width_m / 2, y=height_m / 2, yaw=0.0),
    )


def make_object(
    category: str,
    center: tuple[float, float],
    half: float = 0.15,
    decoy_of: str | None = None,
    cell: float = 0.1,
) -> ObjectInstance:
    return ObjectInstance(
        category=category,
        center=center,
        footprint=box_cells(center[0] - half, center[1] - half, center[0] + half, center[1] + half, cell),
        decoy_of=decoy_of,
    )


def make_view(
    view_yaw: float,
    width: int = 8,
    depth: float = 5.0,
    labels: dict[str, float] | None = None,
) -> DirectionalView:
    """Synthetic view: uniform column depth plus labels with ranges."""
    labels = labels or {}
    return DirectionalView(
        view_yaw=view_yaw,
        column_depth=np.full(width, depth),
        labels=frozenset(labels),
        label_confidences={k: 1.0 for k in labels},
        label_ranges=dict(labels),
    )


def make_observation(
    per_view: dict[float, dict] | None = None,
    pose: AgentPose | None = None,
    step: int = 0,
    width: int = 8,
) -> Observation:
    """Observation from per-view overrides: {yaw: {"depth": d, "labels": {...}}}."""
    per_view = per_view or {}
    views = []
    for yaw in VIEW_YAWS:
        spec = per_view.get(yaw, {})
        views.append(
            make_view(
                yaw,
                width=width,
                depth=spec.get("depth", 5.0),
                labels=spec.get("labels", {}),
            )
        )
    return Observation(views=tuple(views), pose=pose or AgentPose(0.0, 0.0, 0.0), step=step)


@pytest.fixture
def empty_room() -> Scene:
    return make_room_scene()
