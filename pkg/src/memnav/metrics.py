"""Success-rate and path-efficiency metrics, suite running, and the K sweep."""

from __future__ import annotations

import dataclasses
import json
import math
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Sequence

from .advisor import RemoteAdvisor, RemoteAdvisorConfig, ScriptedAdvisor
from .episode import AblationConfig, EpisodeResult, SimConfig, run_episode
from .rethink import RethinkConfig
from .scene import EpisodeSpec


def spl_contribution(result: EpisodeResult) -> float:
    """Per-episode success-weighted path efficiency, in [0, 1]."""
    if not result.success:
        return 0.0
    l, p = result.shortest_length, result.path_length
    if not math.isfinite(l):
        return 0.0
    denom = max(p, l)
    if denom <= 0.0:
        return 1.0
    return l / denom


def compute_metrics(results: Sequence[EpisodeResult]) -> tuple[float, float]:
    """Success rate and success-weighted path length over an episode batch."""
    if not results:
        raise ValueError("cannot compute metrics over an empty result list")
    n = len(results)
    sr = sum(1.0 for r in results if r.success) / n
    spl = sum(spl_contribution(r) for r in results) / n
    return sr, spl


def _episode_task(
    args: tuple[
        EpisodeSpec, AblationConfig, SimConfig, RethinkConfig | None, RemoteAdvisorConfig | None
    ]
) -> EpisodeResult:
    spec, ablation, sim, rethink_cfg, remote = args
    advisor = RemoteAdvisor(remote) if remote else ScriptedAdvisor(seed=spec.seed)
    return run_episode(spec, ablation, advisor, sim, rethink_cfg)


def run_suite(
    specs: Sequence[EpisodeSpec],
    ablation: AblationConfig,
    sim: SimConfig = SimConfig(),
    rethink_cfg: RethinkConfig | None = None,
    parallel: int = 1,
    remote: RemoteAdvisorConfig | None = None,
) -> list[EpisodeResult]:
    """Run a suite of independent episodes, each with its own advisor.

    The default backend is a scripted advisor seeded per episode; passing a
    remote config builds the HTTP backend instead. Results come back ordered
    by episode index whether executed serially or in a process pool, so
    reports are identical either way.
    """
    tasks = [(spec, ablation, sim, rethink_cfg, remote) for spec in specs]
    if parallel <= 1 or len(tasks) <= 1:
        return [_episode_task(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=parallel) as pool:
        return list(pool.map(_episode_task, tasks, chunksize=max(1, len(tasks) // (4 * parallel) or 1)))


def sweep_memory_capacity(
    specs: Sequence[EpisodeSpec],
    ks: Sequence[int],
    base: AblationConfig,
    sim: SimConfig = SimConfig(),
    rethink_cfg: RethinkConfig | None = None,
    parallel: int = 1,
    remote: RemoteAdvisorConfig | None = None,
) -> list[dict]:
    """Run the suite once per memory capacity; one table row per K.

    Capacity 0 disables memory-based decision correction outright. Episode
    seeds are identical across capacities so rows differ only by K.
    """
    if not ks:
        raise ValueError("ks must be non-empty")
    rows = []
    for k in ks:
        ablation = dataclasses.replace(base, memory_capacity=k)
        results = run_suite(specs, ablation, sim, rethink_cfg, parallel, remote)
        sr, spl = compute_metrics(results)
        rows.append(
            {
                "k": int(k),
                "sr": sr,
                "spl": spl,
                "episodes": len(results),
                "successes": sum(1 for r in results if r.success),
            }
        )
    return rows


# ---------------------------------------------------------------------------
# Report serialization


def result_to_dict(result: EpisodeResult) -> dict:
    return {
        "scene": result.scene_name,
        "target": result.target_category,
        "success": result.success,
        "spl": spl_contribution(result),
        "path_length": result.path_length,
        "shortest_length": result.shortest_length if math.isfinite(result.shortest_length) else None,
        "steps_used": result.steps_used,
        "stop_issued": result.stop_issued,
        "error": result.error,
    }


def step_record_to_dict(result: EpisodeResult, episode_index: int) -> list[dict]:
    out = []
    for rec in result.step_records:
        out.append(
            {
                "episode": episode_index,
                "step": rec.step,
                "pose": [rec.pose[0], rec.pose[1], rec.pose[2]],
                "response": {
                    "a_dir": rec.response.a_dir,
                    "f_goal": rec.response.f_goal,
                    "explanation": rec.response.explanation,
                    "description": rec.response.description,
                },
                "rethink": {
                    "mode": rec.outcome.mode_taken.value,
                    "final_direction": rec.outcome.final_direction,
                    "verified": rec.outcome.verified,
                    "direction_changed": rec.outcome.direction_changed,
                    "triggered_step": (
                        rec.outcome.triggered_node.step if rec.outcome.triggered_node else None
                    ),
                },
                "ray_index": rec.ray_index,
                "ray_heading": rec.ray_heading,
                "moved": rec.moved,
                "memory_digest": rec.memory_digest,
                "stopped": rec.stopped,
            }
        )
    return out


def summary_report(config: dict, results: Sequence[EpisodeResult]) -> dict:
    sr, spl = compute_metrics(list(results))
    return {
        "config": config,
        "sr": sr,
        "spl": spl,
        "episodes": len(results),
        "per_episode": [result_to_dict(r) for r in results],
    }


def write_summary(path: str | Path, report: dict) -> None:
    Path(path).write_text(json.dumps(report, indent=2, sort_keys=True) + "\n")


def write_step_log(path: str | Path, results: Sequence[EpisodeResult]) -> None:
    lines = []
    for i, result in enumerate(results):
        for record in step_record_to_dict(result, i):
            lines.append(json.dumps(record, sort_keys=True))
    Path(path).write_text("\n".join(lines) + ("\n" if lines else ""))


def write_sweep_csv(path: str | Path, rows: Sequence[dict]) -> None:
    lines = ["k,sr,spl,episodes,successes"]
    for row in rows:
        lines.append(f"{row['k']},{row['sr']!r},{row['spl']!r},{row['episodes']},{row['successes']}")
    Path(path).write_text("\n".join(lines) + "\n")


def write_episode_csv(path: str | Path, results: Sequence[EpisodeResult]) -> None:
    lines = ["episode,scene,target,success,spl,path_length,shortest_length,steps_used"]
    for i, r in enumerate(results):
        lines.append(
            f"{i},{r.scene_name},{r.target_category},{int(r.success)},"
            f"{spl_contribution(r)!r},{r.path_length!r},{r.shortest_length!r},{r.steps_used}"
        )
    Path(path).write_text("\n".join(lines) + "\n")
