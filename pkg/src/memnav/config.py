"""Run configuration: JSON schema with embodiment defaults and validation.

Every simulation constant is a named key with its standard default (40-step
budget, 1.0 m stop radius, capacity 10, 79 deg HFOV, 0.25 rad tilt, 0.18 m
radius, 0.88 m camera height, 640x480 camera). Unknown keys are rejected
with the offending name so typos fail loudly before any episode runs.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from .advisor import RemoteAdvisorConfig
from .episode import AblationConfig, SimConfig
from .generator import GeneratorParams, TEMPLATES
from .perception import OracleConfig
from .rethink import RethinkConfig
from .scene import EpisodeSpec, Scene, load_scene


class ConfigError(ValueError):
    """Invalid or incomplete run configuration."""


_SCHEMA: dict[str, dict] = {
    "camera": {
        "width": int,
        "height": int,
        "hfov_deg": float,
        "height_m": float,
        "tilt_rad": float,
    },
    "agent": {
        "radius": float,
        "safety_margin": float,
        "n_rays": int,
        "max_step": float,
        "min_useful_ray": float,
        "depth_range": float,
    },
    "rethink": {"tau_theta": float, "exclusion_radius": float},
    "oracle": {
        "false_negative_rate": float,
        "decoys_report_mimicked_category": bool,
        "max_label_range": float,
        "decoy_confidence": float,
    },
    "ablation": {"enable_mode_a": bool, "enable_mode_b": bool},
    "generator": {
        "template": str,
        "count": int,
        "rooms": int,
        "room_min": float,
        "room_max": float,
        "cell_size": float,
    },
    "advisor": {
        "kind": str,
        "base_url": str,
        "model": str,
        "api_key_env": str,
        "timeout_s": float,
        "temperature": float,
        "max_in_flight": int,
        "max_tokens": int,
    },
}

_TOP_LEVEL = {
    "seed": int,
    "target_category": str,
    "max_steps": int,
    "success_distance": float,
    "d_thres": float,
    "memory_capacity": int,
    "scenes": list,
    "parallel": int,
    "episodes_per_scene": int,
} | {k: dict for k in _SCHEMA}


def _check_value(path: str, value, expected) -> None:
    if expected is float:
        if not isinstance(value, (int, float)) or isinstance(value, bool):
            raise ConfigError(f"config key '{path}' must be a number, got {value!r}")
    elif expected is int:
        if not isinstance(value, int) or isinstance(value, bool):
            raise ConfigError(f"config key '{path}' must be an integer, got {value!r}")
    elif not isinstance(value, expected):
        raise ConfigError(
            f"config key '{path}' must be {expected.__name__}, got {type(value).__name__}"
        )


def _validate(data: dict) -> None:
    if not isinstance(data, dict):
        raise ConfigError("config document must be a JSON object")
    for key, value in data.items():
        if key not in _TOP_LEVEL:
            raise ConfigError(f"unknown config key '{key}'")
        _check_value(key, value, _TOP_LEVEL[key])
        if key in _SCHEMA:
            for sub, subval in value.items():
                if sub not in _SCHEMA[key]:
                    raise ConfigError(f"unknown config key '{key}.{sub}'")
                _check_value(f"{key}.{sub}", subval, _SCHEMA[key][sub])


@dataclass(frozen=True)
class RunConfig:
    seed: int
    target_category: str
    max_steps: int
    success_distance: float
    scene_paths: tuple[str, ...]
    generator: GeneratorParams | None
    generator_count: int
    episodes_per_scene: int
    sim: SimConfig
    ablation: AblationConfig
    rethink: RethinkConfig
    advisor_kind: str
    remote: RemoteAdvisorConfig | None
    parallel: int


def parse_config(data: dict, base_dir: Path | None = None) -> RunConfig:
    _validate(data)
    if "seed" not in data:
        raise ConfigError("config key 'seed' is required for reproducibility")
    base = base_dir or Path.cwd()

    cam = data.get("camera", {})
    agent = data.get("agent", {})
    sim = SimConfig(
        width=cam.get("width", 640),
        height=cam.get("height", 480),
        hfov_deg=float(cam.get("hfov_deg", 79.0)),
        camera_height=float(cam.get("height_m", 0.88)),
        tilt_rad=float(cam.get("tilt_rad", 0.25)),
        agent_radius=float(agent.get("radius", 0.18)),
        safety_margin=float(agent.get("safety_margin", 0.1)),
        n_rays=agent.get("n_rays", 7),
        max_step=float(agent.get("max_step", 1.5)),
        min_useful_ray=float(agent.get("min_useful_ray", 0.2)),
        depth_range=float(agent.get("depth_range", 10.0)),
    )

    oracle_data = data.get("oracle", {})
    oracle = OracleConfig(
        false_negative_rate=float(oracle_data.get("false_negative_rate", 0.0)),
        decoys_report_mimicked_category=oracle_data.get("decoys_report_mimicked_category", True),
        max_label_range=float(oracle_data.get("max_label_range", 8.0)),
        decoy_confidence=float(oracle_data.get("decoy_confidence", 1.0)),
    )
    abl_data = data.get("ablation", {})
    ablation = AblationConfig(
        enable_mode_a=abl_data.get("enable_mode_a", True),
        enable_mode_b=abl_data.get("enable_mode_b", True),
        memory_capacity=data.get("memory_capacity", 10),
        oracle=oracle,
    )
    rt = data.get("rethink", {})
    rethink = RethinkConfig(
        tau_theta=float(rt.get("tau_theta", 30.0)),
        exclusion_radius=float(rt.get("exclusion_radius", 0.5)),
        d_thres=float(data.get("d_thres", data.get("success_distance", 1.0))),
        camera_height=sim.camera_height,
        tilt_rad=sim.tilt_rad,
    )

    scene_paths = []
    for p in data.get("scenes", []):
        if not isinstance(p, str):
            raise ConfigError(f"config key 'scenes' must list file paths, got {p!r}")
        full = (base / p) if not Path(p).is_absolute() else Path(p)
        if not full.exists():
            raise ConfigError(f"scene file '{p}' does not exist")
        scene_paths.append(str(full))

    generator = None
    generator_count = 0
    gen = data.get("generator")
    if gen is not None:
        template = gen.get("template", "open")
        if template not in TEMPLATES:
            raise ConfigError(
                f"config key 'generator.template' must be one of {', '.join(TEMPLATES)}"
            )
        generator = GeneratorParams(
            template=template,
            rooms=gen.get("rooms", 3),
            room_min=float(gen.get("room_min", 3.0)),
            room_max=float(gen.get("room_max", 5.0)),
            cell_size=float(gen.get("cell_size", 0.1)),
            target_category=data.get("target_category", "sofa"),
        )
        generator_count = gen.get("count", 1)
        if generator_count < 1:
            raise ConfigError("config key 'generator.count' must be >= 1")

    if not scene_paths and generator is None:
        raise ConfigError("config must provide 'scenes' or a 'generator' section")

    adv = data.get("advisor", {})
    kind = adv.get("kind", "scripted")
    if kind not in ("scripted", "remote"):
        raise ConfigError("config key 'advisor.kind' must be 'scripted' or 'remote'")
    remote = None
    if kind == "remote":
        if "base_url" not in adv or "model" not in adv:
            raise ConfigError("remote advisor requires 'advisor.base_url' and 'advisor.model'")
        remote = RemoteAdvisorConfig(
            base_url=adv["base_url"],
            model=adv["model"],
            api_key_env=adv.get("api_key_env", "MEMNAV_API_KEY"),
            timeout_s=float(adv.get("timeout_s", 30.0)),
            temperature=float(adv.get("temperature", 0.0)),
            max_in_flight=adv.get("max_in_flight", 4),
            max_tokens=adv.get("max_tokens", 512),
        )

    return RunConfig(
        seed=data["seed"],
        target_category=data.get("target_category", "sofa"),
        max_steps=data.get("max_steps", 40),
        success_distance=float(data.get("success_distance", 1.0)),
        scene_paths=tuple(scene_paths),
        generator=generator,
        generator_count=generator_count,
        episodes_per_scene=data.get("episodes_per_scene", 1),
        sim=sim,
        ablation=ablation,
        rethink=rethink,
        advisor_kind=kind,
        remote=remote,
        parallel=data.get("parallel", 1),
    )


def load_config(path: str | Path) -> RunConfig:
    p = Path(path)
    if not p.exists():
        raise ConfigError(f"config file '{path}' does not exist")
    try:
        data = json.loads(p.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file '{path}' is not valid JSON: {exc}") from exc
    return parse_config(data, base_dir=p.parent)


def build_episode_specs(config: RunConfig) -> list[EpisodeSpec]:
    """Materialize the episode list: loaded or generated scenes, seeded per episode."""
    from .generator import generate_scene

    scenes: list[Scene] = [load_scene(p) for p in config.scene_paths]
    if config.generator is not None:
        scenes.extend(
            generate_scene(config.generator, config.seed + i) for i in range(config.generator_count)
        )
    specs = []
    index = 0
    for scene in scenes:
        for _ in range(config.episodes_per_scene):
            specs.append(
                EpisodeSpec(
                    scene=scene,
                    target_category=config.target_category,
                    max_steps=config.max_steps,
                    success_distance=config.success_distance,
                    seed=config.seed * 100003 + index,
                )
            )
            index += 1
    return specs


def config_fingerprint(config: RunConfig) -> dict:
    """Flat summary of the effective configuration, embedded in reports."""
    return {
        "seed": config.seed,
        "target_category": config.target_category,
        "max_steps": config.max_steps,
        "success_distance": config.success_distance,
        "memory_capacity": config.ablation.memory_capacity,
        "enable_mode_a": config.ablation.enable_mode_a,
        "enable_mode_b": config.ablation.enable_mode_b,
        "camera": [config.sim.width, config.sim.height, config.sim.hfov_deg],
        "camera_height": config.sim.camera_height,
        "tilt_rad": config.sim.tilt_rad,
        "agent_radius": config.sim.agent_radius,
        "tau_theta": config.rethink.tau_theta,
        "exclusion_radius": config.rethink.exclusion_radius,
        "d_thres": config.rethink.d_thres,
        "max_label_range": config.ablation.oracle.max_label_range,
        "false_negative_rate": config.ablation.oracle.false_negative_rate,
        "advisor": config.advisor_kind,
        "scenes": len(config.scene_paths),
        "generated": config.generator_count,
        "template": config.generator.template if config.generator else None,
        "parallel": config.parallel,
    }
