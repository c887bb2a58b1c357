"""Directional view rendering and the ground-truth label oracle.

Rendering is 2.5D: each view carries one horizontal depth value per pixel
column, and the vertical dimension only enters when floor-plane points are
projected through the tilted camera. The label oracle reports the categories
of visible objects, optionally substituting decoy labels and dropping true
labels under a seeded noise model, standing in for a learned tagger.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .geometry import (
    AgentPose,
    CameraIntrinsics,
    angular_deviation,
    bearing_deg,
    camera_extrinsics,
    column_heading,
    normalize_yaw,
    project_point,
)
from .scene import Scene, ObjectInstance, SceneError, raycast_batch, raycast_ignoring

VIEW_YAWS: tuple[float, ...] = (30.0, 90.0, 150.0, 210.0, 270.0, 330.0)

DEFAULT_CAMERA_HEIGHT = 0.88
DEFAULT_TILT_RAD = 0.25
DEFAULT_DEPTH_RANGE = 10.0


@dataclass(frozen=True)
class OracleConfig:
    """Noise model for the label oracle.

    false_negative_rate drops true labels independently per object; decoys
    report the category they mimic when the flag is set, at the configured
    confidence. Labels are only reported within max_label_range.
    """

    false_negative_rate: float = 0.0
    decoys_report_mimicked_category: bool = True
    max_label_range: float = 8.0
    seed: int = 0
    decoy_confidence: float = 1.0

    def __post_init__(self) -> None:
        if not (0.0 <= self.false_negative_rate <= 1.0):
            raise ValueError("false_negative_rate must lie in [0, 1]")
        if not (0.0 <= self.decoy_confidence <= 1.0):
            raise ValueError("decoy_confidence must lie in [0, 1]")


@dataclass(frozen=True)
class DirectionalView:
    """One of the six views: relative yaw, per-column depth, and labels."""

    view_yaw: float
    column_depth: np.ndarray
    labels: frozenset[str]
    label_confidences: dict[str, float]
    label_ranges: dict[str, float]

    def __post_init__(self) -> None:
        if self.view_yaw not in VIEW_YAWS:
            raise ValueError(f"view_yaw must be one of {VIEW_YAWS}, got {self.view_yaw}")
        depth = np.asarray(self.column_depth, dtype=float)
        depth.setflags(write=False)
        if (depth <= 0).any():
            raise ValueError("column_depth entries must be positive")
        object.__setattr__(self, "column_depth", depth)
        object.__setattr__(self, "labels", frozenset(self.labels))


@dataclass(frozen=True)
class Observation:
    """The six views rendered at one pose, ordered by view yaw."""

    views: tuple[DirectionalView, ...]
    pose: AgentPose
    step: int

    def __post_init__(self) -> None:
        yaws = tuple(v.view_yaw for v in self.views)
        if yaws != VIEW_YAWS:
            raise ValueError(f"views must cover yaws {VIEW_YAWS} in order, got {yaws}")

    def view_at(self, view_yaw: float) -> DirectionalView:
        return self.views[VIEW_YAWS.index(view_yaw)]

    def semantic_priors(self) -> dict[float, frozenset[str]]:
        """Map from view yaw to the label set seen in that view."""
        return {v.view_yaw: v.labels for v in self.views}


@dataclass(frozen=True)
class NavMask:
    """Per-column collision-free travel distance for one view."""

    view_yaw: float
    traversable_range: np.ndarray

    def __post_init__(self) -> None:
        rng = np.asarray(self.traversable_range, dtype=float)
        rng.setflags(write=False)
        if (rng < 0).any():
            raise ValueError("traversable_range entries must be >= 0")
        object.__setattr__(self, "traversable_range", rng)


def visible_objects(
    scene: Scene,
    pose: AgentPose,
    view_center_yaw: float,
    hfov_deg: float,
    max_range: float,
) -> list[tuple[int, ObjectInstance, float]]:
    """Objects whose center lies in the view frustum, unoccluded, within range.

    Occlusion is tested with a center ray that ignores the object's own
    footprint. Returns (index, object, distance) triples in scene order.
    """
    out = []
    origin = (pose.x, pose.y)
    for idx, obj in enumerate(scene.objects):
        dist = math.hypot(obj.center[0] - pose.x, obj.center[1] - pose.y)
        if dist > max_range:
            continue
        if angular_deviation(bearing_deg(origin, obj.center), view_center_yaw) > hfov_deg / 2.0:
            continue
        if dist > 1e-9:
            hit = raycast_ignoring(
                scene, origin, bearing_deg(origin, obj.center), dist, frozenset(obj.footprint)
            )
            if hit < dist - 1e-9:
                continue
        out.append((idx, obj, dist))
    return out


def _reported_label(obj: ObjectInstance, oracle: OracleConfig) -> tuple[str, float] | None:
    """Label and confidence the oracle reports for one visible object."""
    if obj.decoy_of is not None:
        if oracle.decoys_report_mimicked_category:
            return obj.decoy_of, oracle.decoy_confidence
        return None
    return obj.category, 1.0


def _object_sightings(
    scene: Scene, pose: AgentPose, max_range: float
) -> list[tuple[int, ObjectInstance, float, float]]:
    """Unoccluded objects within range: (index, object, distance, bearing).

    View-independent, so it is computed once per pose and filtered per view
    by frustum containment.
    """
    out = []
    origin = (pose.x, pose.y)
    for idx, obj in enumerate(scene.objects):
        dist = math.hypot(obj.center[0] - pose.x, obj.center[1] - pose.y)
        if dist > max_range:
            continue
        bearing = bearing_deg(origin, obj.center)
        if dist > 1e-9:
            hit = raycast_ignoring(scene, origin, bearing, dist, frozenset(obj.footprint))
            if hit < dist - 1e-9:
                continue
        out.append((idx, obj, dist, bearing))
    return out


def render_observation(
    scene: Scene,
    pose: AgentPose,
    intr: CameraIntrinsics,
    oracle: OracleConfig,
    step: int = 0,
    depth_range: float = DEFAULT_DEPTH_RANGE,
) -> Observation:
    """Render the six directional views at the given pose.

    Column depths come from one horizontal raycast per pixel column. The
    label dropout stream is seeded by (oracle.seed, step), so re-rendering
    the same step reproduces the observation bit for bit.
    """
    ix, iy = scene.cell_of(pose.x, pose.y)
    if scene.is_occupied(ix, iy):
        raise SceneError(f"render pose ({pose.x}, {pose.y}) lies in occupied space")

    hfov = 2.0 * math.degrees(math.atan2(intr.width / 2.0, intr.fx))
    columns = np.arange(intr.width, dtype=float)
    offsets = np.degrees(np.arctan2(columns - intr.cx, intr.fx))
    centers = [normalize_yaw(pose.yaw + vy) for vy in VIEW_YAWS]
    headings = np.concatenate([c - offsets for c in centers])
    depths = raycast_batch(
        scene.grid, scene.cell_size, (pose.x, pose.y), headings, depth_range
    ).reshape(len(VIEW_YAWS), intr.width)

    rng = np.random.default_rng([oracle.seed & 0x7FFFFFFF, step])
    dropped: set[int] = set()
    for idx, obj in enumerate(scene.objects):
        # Dropout is a per-step property of each object: a dropped label is
        # absent from every view of this observation, not just one.
        u = rng.random()
        if obj.decoy_of is None and u < oracle.false_negative_rate:
            dropped.add(idx)

    sightings = _object_sightings(scene, pose, oracle.max_label_range)
    views = []
    for view_idx, view_yaw in enumerate(VIEW_YAWS):
        center = centers[view_idx]
        labels: set[str] = set()
        confidences: dict[str, float] = {}
        ranges: dict[str, float] = {}
        for idx, obj, dist, bearing in sightings:
            if idx in dropped or angular_deviation(bearing, center) > hfov / 2.0:
                continue
            reported = _reported_label(obj, oracle)
            if reported is None:
                continue
            label, conf = reported
            labels.add(label)
            confidences[label] = max(confidences.get(label, 0.0), conf)
            ranges[label] = min(ranges.get(label, math.inf), dist)
        views.append(
            DirectionalView(
                view_yaw=view_yaw,
                column_depth=depths[view_idx],
                labels=frozenset(labels),
                label_confidences=confidences,
                label_ranges=ranges,
            )
        )
    return Observation(views=tuple(views), pose=pose, step=step)


def nav_mask(
    scene: Scene,
    pose: AgentPose,
    view: DirectionalView,
    agent_radius: float = 0.18,
    safety_margin: float = 0.1,
) -> NavMask:
    """Collision-free travel distance per column: depth minus clearances."""
    ranges = np.clip(view.column_depth - agent_radius - safety_margin, 0.0, None)
    return NavMask(view_yaw=view.view_yaw, traversable_range=ranges)


def node_in_mask(
    node_pos: tuple[float, float],
    pose: AgentPose,
    view_yaw: float,
    intr: CameraIntrinsics,
    mask: NavMask,
    camera_height: float = DEFAULT_CAMERA_HEIGHT,
    tilt_rad: float = DEFAULT_TILT_RAD,
) -> bool:
    """Whether a floor point projects into the view's traversable area.

    The point is lifted to the floor plane (z = 0), projected through this
    view's camera, and accepted when the projection lands in the image and
    the point's horizontal distance does not exceed the mask range at its
    column (nearest-column lookup).
    """
    ext = camera_extrinsics(pose, camera_height, tilt_rad, view_yaw)
    proj = project_point(intr, ext, (node_pos[0], node_pos[1], 0.0))
    if proj is None:
        return False
    u, v = int(round(proj.u)), int(round(proj.v))
    if not (0 <= u < intr.width and 0 <= v < intr.height):
        return False
    dist = math.hypot(node_pos[0] - pose.x, node_pos[1] - pose.y)
    return dist <= float(mask.traversable_range[u])


def all_nav_masks(
    scene: Scene,
    pose: AgentPose,
    obs: Observation,
    agent_radius: float = 0.18,
    safety_margin: float = 0.1,
) -> dict[float, NavMask]:
    return {
        v.view_yaw: nav_mask(scene, pose, v, agent_radius, safety_margin) for v in obs.views
    }
