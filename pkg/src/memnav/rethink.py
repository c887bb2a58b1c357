"""Dual-modal rethinking: deadlock detection via memory projection, target
verification, and the stop rule."""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

from .advisor import Advisor, AdvisorError, AdvisorRequest, Mode, OracleAccess, StructuredResponse
from .geometry import AgentPose, CameraIntrinsics, angular_deviation, bearing_deg, normalize_yaw
from .memory import MemoryBuffer, MemoryNode
from .perception import NavMask, Observation, node_in_mask


@dataclass(frozen=True)
class RethinkConfig:
    tau_theta: float = 30.0
    exclusion_radius: float = 0.5
    d_thres: float = 1.0
    camera_height: float = 0.88
    tilt_rad: float = 0.25

    def __post_init__(self) -> None:
        if not (0.0 < self.tau_theta <= 180.0):
            raise ValueError("tau_theta must lie in (0, 180]")
        if self.exclusion_radius <= 0 or self.d_thres <= 0:
            raise ValueError("radii must be positive")


class RethinkMode(Enum):
    NONE = "none"
    MODE_A = "mode_a"
    MODE_B_PASS = "mode_b_pass"
    MODE_B_FAIL_THEN_A = "mode_b_fail_then_a"


@dataclass(frozen=True)
class RethinkOutcome:
    final_direction: float
    mode_taken: RethinkMode
    triggered_node: MemoryNode | None
    verified: bool
    direction_changed: bool = False
    verify_error: str | None = None


def check_trigger(
    buffer: MemoryBuffer,
    response: StructuredResponse,
    pose: AgentPose,
    intr: CameraIntrinsics,
    masks: dict[float, NavMask],
    cfg: RethinkConfig,
) -> set[int]:
    """Indices of memory nodes the chosen direction points back into.

    A node hits when it projects into the chosen view's traversable mask,
    its bearing deviates from the chosen direction by less than tau_theta,
    and it lies beyond the exclusion radius (the node pushed this very step
    sits at the agent's feet and would otherwise hit trivially). Only the
    chosen view is tested; the bearing constraint already rejects nodes
    outside its sector.
    """
    a_dir_world = normalize_yaw(pose.yaw + response.a_dir)
    mask = masks[response.a_dir]
    hits: set[int] = set()
    for i, node in enumerate(buffer.nodes):
        dist = math.hypot(node.position[0] - pose.x, node.position[1] - pose.y)
        if dist <= cfg.exclusion_radius:
            continue
        if angular_deviation(a_dir_world, bearing_deg((pose.x, pose.y), node.position)) >= cfg.tau_theta:
            continue
        if node_in_mask(
            node.position, pose, response.a_dir, intr, mask, cfg.camera_height, cfg.tilt_rad
        ):
            hits.add(i)
    return hits


def stop_flag(p_current: tuple[float, float], p_goal: tuple[float, float], cfg: RethinkConfig) -> bool:
    """Strict threshold: stop only when closer than d_thres to the goal estimate."""
    return math.hypot(p_current[0] - p_goal[0], p_current[1] - p_goal[1]) < cfg.d_thres


def run_rethink(
    buffer: MemoryBuffer,
    observation: Observation,
    response: StructuredResponse,
    masks: dict[float, NavMask],
    intr: CameraIntrinsics,
    advisor: Advisor,
    cfg: RethinkConfig,
    target_category: str,
    oracle_access: OracleAccess,
    enable_mode_a: bool = True,
    enable_mode_b: bool = True,
) -> RethinkOutcome:
    """One rethink pass per step: at most one verify and one rethink call.

    Goal claims go to Mode B verification first (unless disabled, in which
    case the claim is taken at face value). A failed verification clears the
    claim and falls through to the Mode A deadlock check, which either keeps
    the direction or retrieves the furthest hit node and asks the advisor to
    reconsider once.
    """
    pose = observation.pose
    mode = RethinkMode.NONE

    if response.f_goal:
        if not enable_mode_b:
            return RethinkOutcome(
                final_direction=response.a_dir,
                mode_taken=RethinkMode.NONE,
                triggered_node=None,
                verified=True,
            )
        verify_error = None
        try:
            confirmed = advisor.verify(
                AdvisorRequest(
                    target_category=target_category,
                    observation=observation,
                    mode=Mode.VERIFY_B,
                ),
                observation.view_at(response.a_dir),
                oracle_access,
            )
        except AdvisorError as exc:
            confirmed = False
            verify_error = str(exc)
        if confirmed:
            return RethinkOutcome(
                final_direction=response.a_dir,
                mode_taken=RethinkMode.MODE_B_PASS,
                triggered_node=None,
                verified=True,
            )
        mode = RethinkMode.MODE_B_FAIL_THEN_A
    else:
        verify_error = None

    if not enable_mode_a or not buffer.nodes:
        return RethinkOutcome(
            final_direction=response.a_dir,
            mode_taken=mode,
            triggered_node=None,
            verified=False,
            verify_error=verify_error,
        )

    hits = check_trigger(buffer, response, pose, intr, masks, cfg)
    if not hits:
        return RethinkOutcome(
            final_direction=response.a_dir,
            mode_taken=mode,
            triggered_node=None,
            verified=False,
            verify_error=verify_error,
        )

    node = buffer.furthest_hit(hits, (pose.x, pose.y))
    revised = advisor.rethink(
        AdvisorRequest(
            target_category=target_category,
            observation=observation,
            mode=Mode.RETHINK_A,
            injected_history=node.description,
        ),
        response,
    )
    return RethinkOutcome(
        final_direction=revised.a_dir,
        mode_taken=RethinkMode.MODE_A if mode is RethinkMode.NONE else mode,
        triggered_node=node,
        verified=False,
        direction_changed=revised.a_dir != response.a_dir,
        verify_error=verify_error,
    )
