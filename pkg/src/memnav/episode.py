"""Full per-step decision loop: perceive, decide, remember, rethink, move."""

from __future__ import annotations

import dataclasses
import hashlib
import json
import math
from dataclasses import dataclass, field

from .action import CandidateRay, DEFAULT_MAX_STEP, DEFAULT_N_RAYS, MIN_USEFUL_RAY, execute, sample_rays
from .advisor import (
    Advisor,
    AdvisorError,
    AdvisorRequest,
    Mode,
    OracleAccess,
    ScriptedAdvisor,
    StructuredResponse,
)
from .geometry import AgentPose, CameraIntrinsics, bearing_deg, make_intrinsics, normalize_yaw
from .memory import MemoryBuffer, MemoryNode
from .perception import (
    DEFAULT_CAMERA_HEIGHT,
    DEFAULT_DEPTH_RANGE,
    DEFAULT_TILT_RAD,
    Observation,
    OracleConfig,
    all_nav_masks,
    render_observation,
    visible_objects,
)
from .rethink import RethinkConfig, RethinkMode, RethinkOutcome, run_rethink, stop_flag
from .scene import (
    EpisodeSpec,
    Scene,
    distance_to_object,
    geodesic_to_region,
    raycast,
    success_region_cells,
)


@dataclass(frozen=True)
class SimConfig:
    """Simulation constants of the embodiment and camera rig."""

    width: int = 640
    height: int = 480
    hfov_deg: float = 79.0
    camera_height: float = DEFAULT_CAMERA_HEIGHT
    tilt_rad: float = DEFAULT_TILT_RAD
    agent_radius: float = 0.18
    safety_margin: float = 0.1
    n_rays: int = DEFAULT_N_RAYS
    max_step: float = DEFAULT_MAX_STEP
    min_useful_ray: float = MIN_USEFUL_RAY
    depth_range: float = DEFAULT_DEPTH_RANGE

    def intrinsics(self) -> CameraIntrinsics:
        return make_intrinsics(self.width, self.height, self.hfov_deg)

    @property
    def hfov(self) -> float:
        return self.hfov_deg


@dataclass(frozen=True)
class AblationConfig:
    """Module toggles for ablation harnesses."""

    enable_mode_a: bool = True
    enable_mode_b: bool = True
    memory_capacity: int = 10
    oracle: OracleConfig = field(default_factory=OracleConfig)

    def __post_init__(self) -> None:
        if self.memory_capacity < 0:
            raise ValueError("memory_capacity must be >= 0")


@dataclass(frozen=True)
class StepRecord:
    step: int
    pose: tuple[float, float, float]
    response: StructuredResponse
    outcome: RethinkOutcome
    ray_index: int | None
    ray_heading: float | None
    moved: float
    memory_digest: str
    stopped: bool


@dataclass(frozen=True)
class EpisodeResult:
    scene_name: str
    target_category: str
    success: bool
    path_length: float
    shortest_length: float
    steps_used: int
    stop_issued: bool
    trajectory: tuple[AgentPose, ...]
    step_records: tuple[StepRecord, ...]
    error: str | None = None

    def __post_init__(self) -> None:
        if self.success and not self.stop_issued:
            raise ValueError("success requires an issued stop")


def optimal_path_length(spec: EpisodeSpec, agent_radius: float = 0.18) -> float:
    """Geodesic from the start to the nearest target's success boundary."""
    scene = spec.scene
    start = (scene.start_pose.x, scene.start_pose.y)
    best = math.inf
    for obj in scene.objects_of(spec.target_category):
        region = success_region_cells(scene, obj.center, spec.success_distance)
        best = min(best, geodesic_to_region(scene, start, region, clearance=agent_radius))
    return best


def goal_distance(scene: Scene, position: tuple[float, float], target_category: str) -> float:
    """Geodesic distance from a position to the nearest true target instance."""
    return min(
        (distance_to_object(scene, position, obj) for obj in scene.objects_of(target_category)),
        default=math.inf,
    )


def _memory_digest(buffer: MemoryBuffer) -> str:
    payload = json.dumps(
        [[n.step, round(n.position[0], 6), round(n.position[1], 6), n.description] for n in buffer.nodes]
    )
    return hashlib.sha1(payload.encode()).hexdigest()[:12]


def _estimate_goal_point(
    scene: Scene,
    pose: AgentPose,
    obs: Observation,
    a_dir: float,
    target: str,
    oracle: OracleConfig,
    sim: SimConfig,
) -> tuple[float, float]:
    """Ground-point estimate of the verified target's location.

    Prefers the raycast hit toward the nearest object labeled as the target
    in the view (the simulator provides the hit); without such an object the
    estimate falls back to the view's center-column ground point.
    """
    center = normalize_yaw(pose.yaw + a_dir)
    labeled: list[tuple[float, tuple[float, float]]] = []
    for _, obj, dist in visible_objects(scene, pose, center, sim.hfov_deg, oracle.max_label_range):
        if obj.decoy_of is not None:
            if oracle.decoys_report_mimicked_category and obj.decoy_of == target:
                labeled.append((dist, obj.center))
        elif obj.category == target:
            labeled.append((dist, obj.center))
    origin = (pose.x, pose.y)
    if labeled:
        dist, center_pt = min(labeled)
        heading = bearing_deg(origin, center_pt)
        hit = raycast(scene, origin, heading, max_range=dist)
    else:
        view = obs.view_at(a_dir)
        hit = float(view.column_depth[int(sim.intrinsics().cx)])
        heading = center
    rad = math.radians(heading)
    return (pose.x + hit * math.cos(rad), pose.y + hit * math.sin(rad))


def run_episode(
    spec: EpisodeSpec,
    ablation: AblationConfig,
    advisor: Advisor,
    sim: SimConfig = SimConfig(),
    rethink_cfg: RethinkConfig | None = None,
) -> EpisodeResult:
    """Run one episode to stop, budget exhaustion, or advisor breakdown.

    Advisor failures that survive the backend's own fallbacks mark the
    episode as a failure with an error annotation instead of raising.
    """
    scene = spec.scene
    intr = sim.intrinsics()
    if rethink_cfg is None:
        rethink_cfg = RethinkConfig(d_thres=spec.success_distance)
    # Node projection must share the renderer's camera geometry.
    rethink_cfg = dataclasses.replace(
        rethink_cfg, camera_height=sim.camera_height, tilt_rad=sim.tilt_rad
    )
    oracle = dataclasses.replace(ablation.oracle, seed=spec.seed)
    access = OracleAccess(scene=scene, oracle=oracle, hfov_deg=sim.hfov_deg)

    buffer = MemoryBuffer(capacity=ablation.memory_capacity)
    pose = scene.start_pose
    trajectory = [pose]
    records: list[StepRecord] = []
    path_length = 0.0
    stop_issued = False
    error: str | None = None

    for step in range(spec.max_steps):
        try:
            obs = render_observation(scene, pose, intr, oracle, step=step, depth_range=sim.depth_range)
            response = advisor.decide(
                AdvisorRequest(
                    target_category=spec.target_category, observation=obs, mode=Mode.DECIDE
                )
            )
            buffer.push(
                MemoryNode(position=(pose.x, pose.y), description=response.description, step=step)
            )
            masks = all_nav_masks(scene, pose, obs, sim.agent_radius, sim.safety_margin)
            outcome = run_rethink(
                buffer,
                obs,
                response,
                masks,
                intr,
                advisor,
                rethink_cfg,
                spec.target_category,
                access,
                enable_mode_a=ablation.enable_mode_a and ablation.memory_capacity > 0,
                enable_mode_b=ablation.enable_mode_b,
            )

            if outcome.verified:
                p_goal = _estimate_goal_point(
                    scene, pose, obs, outcome.final_direction, spec.target_category, oracle, sim
                )
                if stop_flag((pose.x, pose.y), p_goal, rethink_cfg):
                    stop_issued = True
                    trajectory.append(pose)
                    records.append(
                        StepRecord(
                            step=step,
                            pose=(pose.x, pose.y, pose.yaw),
                            response=response,
                            outcome=outcome,
                            ray_index=None,
                            ray_heading=None,
                            moved=0.0,
                            memory_digest=_memory_digest(buffer),
                            stopped=True,
                        )
                    )
                    break

            direction_world = normalize_yaw(pose.yaw + outcome.final_direction)
            rays = sample_rays(
                masks[outcome.final_direction],
                pose,
                direction_world,
                intr,
                n_rays=sim.n_rays,
                max_step=sim.max_step,
                min_useful=sim.min_useful_ray,
            )
            ray_index = advisor.pick_ray(rays, direction_world)
            if not (0 <= ray_index < len(rays)):
                raise AdvisorError(f"pick_ray returned invalid index {ray_index}")
            ray = rays[ray_index]
            pose, moved = execute(scene, pose, ray)
            path_length += moved
            trajectory.append(pose)
            records.append(
                StepRecord(
                    step=step,
                    pose=(trajectory[-2].x, trajectory[-2].y, trajectory[-2].yaw),
                    response=response,
                    outcome=outcome,
                    ray_index=ray_index,
                    ray_heading=ray.heading,
                    moved=moved,
                    memory_digest=_memory_digest(buffer),
                    stopped=False,
                )
            )
        except AdvisorError as exc:
            error = f"advisor failed at step {step}: {exc}"
            break

    success = stop_issued and goal_distance(
        scene, (pose.x, pose.y), spec.target_category
    ) < spec.success_distance
    return EpisodeResult(
        scene_name=scene.name,
        target_category=spec.target_category,
        success=success,
        path_length=path_length,
        shortest_length=optimal_path_length(spec, sim.agent_radius),
        steps_used=len(records),
        stop_issued=stop_issued,
        trajectory=tuple(trajectory),
        step_records=tuple(records),
        error=error,
    )


def count_revisits(trajectory: tuple[AgentPose, ...], radius: float = 0.5, min_gap: int = 2) -> int:
    """Positions that return within radius of a pose at least min_gap steps older."""
    count = 0
    pts = [(p.x, p.y) for p in trajectory]
    for t in range(len(pts)):
        for s in range(t - min_gap + 1):
            if math.hypot(pts[t][0] - pts[s][0], pts[t][1] - pts[s][1]) < radius:
                count += 1
                break
    return count


def default_advisor(spec: EpisodeSpec) -> ScriptedAdvisor:
    return ScriptedAdvisor(seed=spec.seed)
