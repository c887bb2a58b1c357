"""Candidate action rays from the navigation mask and collision-safe motion."""

from __future__ import annotations

import math
from dataclasses import dataclass

from .geometry import AgentPose, CameraIntrinsics, PolarAction, apply_polar, heading_column, normalize_relative, normalize_yaw
from .perception import NavMask
from .scene import Scene, clearance_at

DEFAULT_N_RAYS = 7
DEFAULT_MAX_STEP = 1.5
MIN_USEFUL_RAY = 0.2


@dataclass(frozen=True)
class CandidateRay:
    """A straight, collision-checked motion option within the chosen view."""

    index: int
    heading: float
    length: float
    endpoint: tuple[float, float]

    def __post_init__(self) -> None:
        if self.length < 0:
            raise ValueError("ray length must be >= 0")


def sample_rays(
    mask: NavMask,
    pose: AgentPose,
    direction_world: float,
    intr: CameraIntrinsics,
    n_rays: int = DEFAULT_N_RAYS,
    max_step: float = DEFAULT_MAX_STEP,
    min_useful: float = MIN_USEFUL_RAY,
) -> list[CandidateRay]:
    """Evenly spread candidate rays across the view, clipped by the mask.

    Ray k's length is the mask's traversable range at the matching pixel
    column, capped at max_step. Rays shorter than min_useful are dropped;
    when every ray drops, a single rotate-in-place candidate keeps the step
    non-empty. Output is sorted by heading with contiguous indices.
    """
    if n_rays < 1:
        raise ValueError("n_rays must be >= 1")
    hfov = 2.0 * math.degrees(math.atan2(intr.width / 2.0, intr.fx))
    rays: list[CandidateRay] = []
    for k in range(n_rays):
        offset = -hfov / 2.0 + hfov * k / (n_rays - 1) if n_rays > 1 else 0.0
        heading = normalize_yaw(direction_world + offset)
        column = heading_column(intr, direction_world, heading)
        col = min(max(int(round(column)), 0), intr.width - 1)
        length = min(max_step, float(mask.traversable_range[col]))
        if length < min_useful:
            continue
        rad = math.radians(heading)
        rays.append(
            CandidateRay(
                index=len(rays),
                heading=heading,
                length=length,
                endpoint=(pose.x + length * math.cos(rad), pose.y + length * math.sin(rad)),
            )
        )
    if not rays:
        return [
            CandidateRay(
                index=0,
                heading=normalize_yaw(direction_world),
                length=0.0,
                endpoint=(pose.x, pose.y),
            )
        ]
    return rays


def execute(scene: Scene, pose: AgentPose, ray: CandidateRay) -> tuple[AgentPose, float]:
    """Rotate to the ray heading and advance as far as safely possible.

    The clearance along the ray is re-checked against the scene at execution
    time, and the travel distance backs off until the resulting pose keeps
    agent-radius clearance. Returns the new pose and the distance moved.
    """
    theta = normalize_relative(ray.heading - pose.yaw)
    length = ray.length
    while length > 0:
        candidate = apply_polar(pose, PolarAction(r=length, theta=theta))
        if clearance_at(scene, candidate.x, candidate.y) >= scene.agent_radius:
            return candidate, length
        length = max(0.0, length - scene.cell_size / 2.0)
    return apply_polar(pose, PolarAction(r=0.0, theta=theta)), 0.0
