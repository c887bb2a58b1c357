"""Scratch: trace episodes on the engineered templates (not part of the package)."""
import sys
import time

from memnav import (
    AblationConfig,
    EpisodeSpec,
    GeneratorParams,
    OracleConfig,
    ScriptedAdvisor,
    SimConfig,
    count_revisits,
    generate_scene,
    run_episode,
)


def trace(template, seed, enable_a=True, enable_b=True, k=10, width=320, verbose=True):
    params = GeneratorParams(template=template)
    scene = generate_scene(params, seed)
    spec = EpisodeSpec(scene=scene, target_category="sofa", seed=seed)
    ablation = AblationConfig(
        enable_mode_a=enable_a,
        enable_mode_b=enable_b,
        memory_capacity=k,
        oracle=OracleConfig(max_label_range=6.0),
    )
    sim = SimConfig(width=width, height=int(width * 0.75))
    t0 = time.time()
    result = run_episode(spec, ablation, ScriptedAdvisor(seed=seed), sim)
    dt = time.time() - t0
    print(
        f"== {template} seed={seed} A={enable_a} B={enable_b} K={k}: "
        f"success={result.success} stop={result.stop_issued} steps={result.steps_used} "
        f"P={result.path_length:.2f} L={result.shortest_length:.2f} "
        f"revisits={count_revisits(result.trajectory)} ({dt:.2f}s)"
    )
    if verbose:
        for rec in result.step_records:
            print(
                f"  t={rec.step:2d} pose=({rec.pose[0]:5.2f},{rec.pose[1]:5.2f},{rec.pose[2]:6.1f}) "
                f"a_dir={int(rec.response.a_dir):3d} goal={int(rec.response.f_goal)} "
                f"mode={rec.outcome.mode_taken.value:<18} final={int(rec.outcome.final_direction):3d} "
                f"ray={rec.ray_index} moved={rec.moved:.2f} stop={int(rec.stopped)}"
            )
    return result


if __name__ == "__main__":
    template = sys.argv[1] if len(sys.argv) > 1 else "dead_end"
    seed = int(sys.argv[2]) if len(sys.argv) > 2 else 7
    mode = sys.argv[3] if len(sys.argv) > 3 else "full"
    if mode == "full":
        trace(template, seed, True, True, 10)
    elif mode == "noA":
        trace(template, seed, False, True, 10)
    elif mode == "noB":
        trace(template, seed, True, False, 10)
    elif mode == "k0":
        trace(template, seed, True, True, 0)
