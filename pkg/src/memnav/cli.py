"""Command line entry point: scene generation, runs, sweeps, and reports."""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path

from .advisor import AdvisorError
from .config import ConfigError, RunConfig, build_episode_specs, config_fingerprint, load_config
from .generator import GeneratorParams, TEMPLATES, generate_scene
from .metrics import (
    run_suite,
    summary_report,
    sweep_memory_capacity,
    write_episode_csv,
    write_step_log,
    write_summary,
    write_sweep_csv,
)
from .scene import save_scene


def _fail(message: str) -> int:
    print(f"error: {message}", file=sys.stderr)
    return 1


def _apply_overrides(config: RunConfig, args: argparse.Namespace) -> RunConfig:
    updates: dict = {}
    if args.seed is not None:
        updates["seed"] = args.seed
    if args.parallel is not None:
        updates["parallel"] = args.parallel
    ablation = config.ablation
    if getattr(args, "k", None) is not None:
        ablation = dataclasses.replace(ablation, memory_capacity=args.k)
    if getattr(args, "no_mode_a", False):
        ablation = dataclasses.replace(ablation, enable_mode_a=False)
    if getattr(args, "no_mode_b", False):
        ablation = dataclasses.replace(ablation, enable_mode_b=False)
    if ablation is not config.ablation:
        updates["ablation"] = ablation
    return dataclasses.replace(config, **updates) if updates else config


def _check_remote(config: RunConfig) -> None:
    """Fail fast on remote misconfiguration before any episode runs."""
    if config.advisor_kind == "remote":
        from .advisor import RemoteAdvisor

        RemoteAdvisor(config.remote)


def cmd_gen_scenes(args: argparse.Namespace) -> int:
    if args.count < 1:
        return _fail("--count must be >= 1")
    try:
        params = GeneratorParams(
            template=args.template,
            rooms=args.rooms,
            target_category=args.target,
        )
    except ValueError as exc:
        return _fail(str(exc))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    paths = []
    for i in range(args.count):
        scene = generate_scene(params, args.seed + i)
        path = out / f"scene_{i:03d}.json"
        save_scene(scene, path)
        paths.append(path)
    print(f"wrote {len(paths)} scene files to {out}")
    return 0


def _run_configured(args: argparse.Namespace) -> tuple[RunConfig, list]:
    config = _apply_overrides(load_config(args.config), args)
    _check_remote(config)
    specs = build_episode_specs(config)
    if not specs:
        raise ConfigError("configuration produced no episodes")
    results = run_suite(
        specs,
        config.ablation,
        config.sim,
        config.rethink,
        parallel=config.parallel,
        remote=config.remote,
    )
    return config, results


def cmd_run(args: argparse.Namespace) -> int:
    try:
        config, results = _run_configured(args)
    except (ConfigError, AdvisorError, ValueError) as exc:
        return _fail(str(exc))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    report = summary_report(config_fingerprint(config), results)
    write_summary(out / "summary.json", report)
    write_step_log(out / "episodes.jsonl", results)
    write_episode_csv(out / "per_episode.csv", results)
    print(f"episodes: {report['episodes']}  SR: {report['sr']:.4f}  SPL: {report['spl']:.4f}")
    print(f"reports written to {out}")
    return 0


def _parse_ks(text: str) -> list[int]:
    try:
        values = [int(part) for part in text.split(",") if part.strip() != ""]
    except ValueError as exc:
        raise ConfigError(f"--ks must be a comma-separated list of integers: {exc}") from exc
    if not values:
        raise ConfigError("--ks must contain at least one capacity")
    deduped = sorted(set(values))
    if len(deduped) != len(values):
        print("warning: duplicate K values removed", file=sys.stderr)
    if any(v < 0 for v in deduped):
        raise ConfigError("memory capacities must be >= 0")
    return deduped


def cmd_sweep(args: argparse.Namespace) -> int:
    try:
        ks = _parse_ks(args.ks)
        config = _apply_overrides(load_config(args.config), args)
        _check_remote(config)
        specs = build_episode_specs(config)
        if not specs:
            raise ConfigError("configuration produced no episodes")
        rows = sweep_memory_capacity(
            specs,
            ks,
            config.ablation,
            config.sim,
            config.rethink,
            parallel=config.parallel,
            remote=config.remote,
        )
    except (ConfigError, AdvisorError, ValueError) as exc:
        return _fail(str(exc))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    table = {"config": config_fingerprint(config), "rows": rows}
    (out / "sweep.json").write_text(json.dumps(table, indent=2, sort_keys=True) + "\n")
    write_sweep_csv(out / "sweep.csv", rows)
    for row in rows:
        print(f"K={row['k']:3d}  SR={row['sr']:.4f}  SPL={row['spl']:.4f}  n={row['episodes']}")
    print(f"sweep table written to {out}")
    return 0


def cmd_report(args: argparse.Namespace) -> int:
    path = Path(args.summary)
    if not path.exists():
        return _fail(f"report file '{path}' does not exist")
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        return _fail(f"report file is not valid JSON: {exc}")
    if "rows" in data:
        print(f"{'K':>4}  {'SR':>8}  {'SPL':>8}  {'n':>5}")
        for row in data["rows"]:
            print(f"{row['k']:>4}  {row['sr']:>8.4f}  {row['spl']:>8.4f}  {row['episodes']:>5}")
        return 0
    print(f"episodes: {data['episodes']}  SR: {data['sr']:.4f}  SPL: {data['spl']:.4f}")
    for i, ep in enumerate(data.get("per_episode", [])):
        status = "ok" if ep["success"] else ("err" if ep.get("error") else "fail")
        print(
            f"  [{i:03d}] {ep['scene']:<18} {status:<4} steps={ep['steps_used']:>3} "
            f"P={ep['path_length']:.2f} spl={ep['spl']:.3f}"
        )
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="memnav",
        description="Memory-guided object navigation: scenes, episode runs, and sweeps.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen-scenes", help="write procedural scene files")
    gen.add_argument("--template", default="open", choices=TEMPLATES)
    gen.add_argument("--count", type=int, default=10)
    gen.add_argument("--seed", type=int, required=True)
    gen.add_argument("--out", required=True)
    gen.add_argument("--rooms", type=int, default=3)
    gen.add_argument("--target", default="sofa")
    gen.set_defaults(func=cmd_gen_scenes)

    run = sub.add_parser("run", help="run an episode suite from a config file")
    run.add_argument("--config", required=True)
    run.add_argument("--out", required=True)
    run.add_argument("--seed", type=int, default=None)
    run.add_argument("--parallel", type=int, default=None)
    run.add_argument("--k", type=int, default=None, help="override memory capacity")
    run.add_argument("--no-mode-a", action="store_true", help="disable decision correction")
    run.add_argument("--no-mode-b", action="store_true", help="disable target verification")
    run.set_defaults(func=cmd_run)

    sweep = sub.add_parser("sweep", help="sweep memory capacity over a suite")
    sweep.add_argument("--config", required=True)
    sweep.add_argument("--out", required=True)
    sweep.add_argument("--ks", required=True, help="comma-separated capacities, e.g. 0,5,8,10,12,15")
    sweep.add_argument("--seed", type=int, default=None)
    sweep.add_argument("--parallel", type=int, default=None)
    sweep.add_argument("--no-mode-a", action="store_true")
    sweep.add_argument("--no-mode-b", action="store_true")
    sweep.set_defaults(func=cmd_sweep)

    rep = sub.add_parser("report", help="print a summary or sweep table")
    rep.add_argument("--summary", required=True, help="path to summary.json or sweep.json")
    rep.set_defaults(func=cmd_report)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
