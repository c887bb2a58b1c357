"""Memory-guided zero-shot object navigation on a deterministic 2.5D simulator."""

from .action import CandidateRay, execute, sample_rays
from .advisor import (
    Advisor,
    AdvisorError,
    AdvisorRequest,
    Mode,
    OracleAccess,
    RemoteAdvisor,
    RemoteAdvisorConfig,
    ResponseParseError,
    ScriptedAdvisor,
    StructuredResponse,
    parse_structured_response,
)
from .episode import AblationConfig, EpisodeResult, SimConfig, count_revisits, run_episode
from .generator import GeneratorParams, TEMPLATES, generate_scene
from .geometry import (
    AgentPose,
    CameraIntrinsics,
    ExtrinsicTransform,
    PixelProjection,
    PolarAction,
    angular_deviation,
    apply_polar,
    camera_extrinsics,
    make_intrinsics,
    project_point,
)
from .memory import MemoryBuffer, MemoryNode
from .metrics import compute_metrics, run_suite, sweep_memory_capacity
from .perception import (
    DirectionalView,
    NavMask,
    Observation,
    OracleConfig,
    VIEW_YAWS,
    nav_mask,
    node_in_mask,
    render_observation,
)
from .rethink import RethinkConfig, RethinkMode, RethinkOutcome, check_trigger, run_rethink, stop_flag
from .scene import (
    EpisodeSpec,
    ObjectInstance,
    Scene,
    SceneError,
    UNREACHABLE,
    load_scene,
    raycast,
    save_scene,
    shortest_path_length,
)

__all__ = [
    "AblationConfig",
    "Advisor",
    "AdvisorError",
    "AdvisorRequest",
    "AgentPose",
    "CameraIntrinsics",
    "CandidateRay",
    "DirectionalView",
    "EpisodeResult",
    "EpisodeSpec",
    "ExtrinsicTransform",
    "GeneratorParams",
    "MemoryBuffer",
    "MemoryNode",
    "Mode",
    "NavMask",
    "Observation",
    "ObjectInstance",
    "OracleAccess",
    "OracleConfig",
    "PixelProjection",
    "PolarAction",
    "RemoteAdvisor",
    "RemoteAdvisorConfig",
    "ResponseParseError",
    "RethinkConfig",
    "RethinkMode",
    "RethinkOutcome",
    "Scene",
    "SceneError",
    "ScriptedAdvisor",
    "SimConfig",
    "StructuredResponse",
    "TEMPLATES",
    "UNREACHABLE",
    "VIEW_YAWS",
    "angular_deviation",
    "apply_polar",
    "camera_extrinsics",
    "check_trigger",
    "compute_metrics",
    "count_revisits",
    "execute",
    "generate_scene",
    "load_scene",
    "make_intrinsics",
    "nav_mask",
    "node_in_mask",
    "parse_structured_response",
    "project_point",
    "raycast",
    "render_observation",
    "run_episode",
    "run_rethink",
    "run_suite",
    "save_scene",
    "sample_rays",
    "shortest_path_length",
    "stop_flag",
    "sweep_memory_capacity",
]
