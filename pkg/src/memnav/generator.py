"""Seeded procedural indoor scenes, including two engineered templates.

Scenes are carved out of a solid grid: free rectangles for rooms, corridors
and doorways, then object footprints marked back as occupied. The
"dead_end" template builds a corridor with a semantically attractive
cul-de-sac pocket and the true target beyond it; "decoy" places a
target-mimicking object on the short path with the real target farther on.
Both keep their construction properties under seed jitter.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .advisor import cooccurring_categories
from .geometry import AgentPose
from .scene import ObjectInstance, Scene, SceneError

TEMPLATES = ("open", "dead_end", "decoy")


@dataclass(frozen=True)
class GeneratorParams:
    template: str = "open"
    rooms: int = 3
    room_min: float = 3.0
    room_max: float = 5.0
    cell_size: float = 0.1
    target_category: str = "sofa"

    def __post_init__(self) -> None:
        if self.template not in TEMPLATES:
            raise ValueError(
                f"unknown template '{self.template}'; valid templates: {', '.join(TEMPLATES)}"
            )
        if self.rooms < 1:
            raise ValueError("room count must be >= 1")
        if self.room_min < 4 * self.cell_size or self.room_max < self.room_min:
            raise ValueError("room sizes must be >= 4 cells and max >= min")


class _Builder:
    """Carve-and-place helper over a solid occupancy grid."""

    def __init__(self, width_m: float, height_m: float, cell: float) -> None:
        self.cell = cell
        self.grid = np.ones((int(round(height_m / cell)), int(round(width_m / cell))), dtype=bool)
        self.objects: list[ObjectInstance] = []

    def _span(self, lo: float, hi: float, limit: int) -> range:
        a = max(0, int(math.floor(lo / self.cell + 1e-9)))
        b = min(limit, int(math.ceil(hi / self.cell - 1e-9)))
        return range(a, b)

    def carve(self, x0: float, y0: float, x1: float, y1: float) -> None:
        ny, nx = self.grid.shape
        for iy in self._span(y0, y1, ny):
            for ix in self._span(x0, x1, nx):
                self.grid[iy, ix] = False

    def fill(self, x0: float, y0: float, x1: float, y1: float) -> None:
        ny, nx = self.grid.shape
        for iy in self._span(y0, y1, ny):
            for ix in self._span(x0, x1, nx):
                self.grid[iy, ix] = True

    def place(
        self,
        category: str,
        cx: float,
        cy: float,
        half_w: float,
        half_h: float,
        decoy_of: str | None = None,
    ) -> None:
        ny, nx = self.grid.shape
        cells = [
            (ix, iy)
            for iy in self._span(cy - half_h, cy + half_h, ny)
            for ix in self._span(cx - half_w, cx + half_w, nx)
        ]
        if not cells:
            raise SceneError(f"object '{category}' footprint is empty at ({cx}, {cy})")
        for ix, iy in cells:
            self.grid[iy, ix] = True
        self.objects.append(
            ObjectInstance(category=category, center=(cx, cy), footprint=tuple(cells), decoy_of=decoy_of)
        )

    def build(self, name: str, start: AgentPose) -> Scene:
        return Scene(
            name=name,
            cell_size=self.cell,
            grid=self.grid,
            objects=tuple(self.objects),
            start_pose=start,
        )


def _pick_attractors(target: str, rng: np.random.Generator, count: int) -> list[str]:
    related = sorted(cooccurring_categories(target))
    if not related:
        related = ["table", "lamp"]
    idx = rng.permutation(len(related))
    return [related[int(i)] for i in idx[:count]] if len(related) >= count else [
        related[int(i) % len(related)] for i in range(count)
    ]


def _generate_dead_end(params: GeneratorParams, seed: int) -> Scene:
    rng = np.random.default_rng([seed & 0x7FFFFFFF, 1])
    corr_y0, corr_y1 = 4.8, 6.8
    corr_x0 = 1.0
    corr_x1 = float(rng.uniform(16.0, 17.5))
    pocket_w = float(rng.uniform(3.8, 4.2))
    pocket_x0 = float(rng.uniform(5.6, 6.4))
    pocket_depth = float(rng.uniform(3.0, 3.4))
    pocket_y1 = corr_y0 - 0.2
    pocket_y0 = pocket_y1 - pocket_depth
    door_c = pocket_x0 + pocket_w / 2.0

    b = _Builder(corr_x1 + 1.0, 8.0, params.cell_size)
    b.carve(corr_x0, corr_y0, corr_x1, corr_y1)
    b.carve(pocket_x0, pocket_y0, pocket_x0 + pocket_w, pocket_y1)
    b.carve(door_c - 0.9, pocket_y1, door_c + 0.9, corr_y0)

    cats = _pick_attractors(params.target_category, rng, 4)
    ys = (pocket_y0 + 0.8, pocket_y0 + 1.9)
    b.place(cats[0], pocket_x0 + 0.35, ys[0], 0.15, 0.15)
    b.place(cats[1], pocket_x0 + 0.35, ys[1], 0.15, 0.15)
    b.place(cats[2], pocket_x0 + pocket_w - 0.35, ys[0], 0.15, 0.15)
    b.place(cats[3], pocket_x0 + pocket_w - 0.35, ys[1], 0.15, 0.15)

    b.place(params.target_category, corr_x1 - 0.55, corr_y1 - 0.45, 0.35, 0.35)
    start = AgentPose(x=2.0, y=(corr_y0 + corr_y1) / 2.0, yaw=0.0)
    return b.build(f"dead_end-{seed}", start)


def _generate_decoy(params: GeneratorParams, seed: int) -> Scene:
    rng = np.random.default_rng([seed & 0x7FFFFFFF, 2])
    corr_y0, corr_y1 = 4.0, 6.5
    corr_x0, corr_x1 = 1.0, 14.0
    decoy_x = float(rng.uniform(5.8, 6.2))
    leg_x1 = float(rng.uniform(9.3, 9.7))
    leg_x0 = leg_x1 - 2.5
    leg_y0 = 0.8

    b = _Builder(corr_x1 + 1.0, 8.0, params.cell_size)
    b.carve(corr_x0, corr_y0, corr_x1, corr_y1)
    # Side leg south of the corridor; the true target sits at its far end,
    # occluded from the corridor until the agent reaches the mouth.
    b.carve(leg_x0, leg_y0, leg_x1, corr_y0)

    # The decoy hangs on the north wall: no gap behind it, a wide lane south.
    b.place("mirror", decoy_x, corr_y1 - 0.2, 0.1, 0.15, decoy_of=params.target_category)
    b.place(params.target_category, (leg_x0 + leg_x1) / 2.0, leg_y0 + 0.5, 0.35, 0.35)

    start = AgentPose(x=2.0, y=(corr_y0 + corr_y1) / 2.0, yaw=0.0)
    return b.build(f"decoy-{seed}", start)


_PALETTE = ("plant", "chair", "table", "lamp", "window", "mirror")


def _generate_open(params: GeneratorParams, seed: int) -> Scene:
    rng = np.random.default_rng([seed & 0x7FFFFFFF, 0])
    widths = [float(rng.uniform(params.room_min, params.room_max)) for _ in range(params.rooms)]
    heights = [float(rng.uniform(params.room_min, params.room_max)) for _ in range(params.rooms)]
    total_w = sum(widths) + 0.2 * (params.rooms - 1) + 2.0
    total_h = max(heights) + 2.0
    if total_w / params.cell_size > 4000:
        raise SceneError("rooms cannot fit: requested layout exceeds the grid budget")

    b = _Builder(total_w, total_h, params.cell_size)
    x = 1.0
    spans = []
    for i in range(params.rooms):
        y0 = 1.0
        y1 = 1.0 + heights[i]
        b.carve(x, y0, x + widths[i], y1)
        spans.append((x, x + widths[i], y0, y1))
        if i + 1 < params.rooms:
            door_y = y0 + min(heights[i], heights[i + 1]) / 2.0
            b.carve(x + widths[i], door_y - 0.6, x + widths[i] + 0.2, door_y + 0.6)
        x += widths[i] + 0.2

    for i, (x0, x1, y0, y1) in enumerate(spans):
        if i == params.rooms - 1:
            b.place(params.target_category, x1 - 0.55, y1 - 0.55, 0.3, 0.3)
        elif rng.random() < 0.8:
            cat = _PALETTE[int(rng.integers(len(_PALETTE)))]
            b.place(cat, x0 + 0.45, y1 - 0.45, 0.15, 0.15)

    x0, x1, y0, y1 = spans[0]
    start = AgentPose(x=(x0 + x1) / 2.0, y=(y0 + y1) / 2.0, yaw=0.0)
    return b.build(f"open-{seed}", start)


def generate_scene(params: GeneratorParams, seed: int) -> Scene:
    """Deterministic scene for the given (params, seed) pair."""
    if params.template == "dead_end":
        return _generate_dead_end(params, seed)
    if params.template == "decoy":
        return _generate_decoy(params, seed)
    return _generate_open(params, seed)
