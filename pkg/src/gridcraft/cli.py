"""Command-line interface.

Subcommands: run, metrics, replay, bench, serve, map. Success exits 0;
failures print a machine-readable error JSON to stderr and exit nonzero.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from .config import ConfigError, GameConfig, load_config, validate_config
from .log import read_log, replay
from .metrics import (ScenarioScores, achievement_summary, ct_to_json,
                      cultural_transmission, plot_achievements, plot_tool_use,
                      proximity_fraction, proximity_to_csv, proximity_to_json,
                      summary_to_csv, summary_to_json, tool_use_stats,
                      tools_to_csv, tools_to_json)
from .observation import obs_manifest, save_gif
from .runner import (POLICY_REGISTRY, ScenarioSpec, bench, bench_parallel,
                     run_batch)
from .serve import serve_loop
from .worldgen import dump_map, generate_world


def _load_cfg(path: str | None) -> GameConfig:
    if path is None:
        return validate_config(GameConfig())
    return load_config(path)


def _parse_seeds(spec: str) -> list[int]:
    """'0:100' means range(0, 100); '1,2,3' is an explicit list."""
    if ":" in spec:
        lo, hi = spec.split(":", 1)
        return list(range(int(lo), int(hi)))
    return [int(s) for s in spec.split(",") if s]


def _scenario_from_args(args) -> ScenarioSpec | None:
    if args.scenario == "none":
        return None
    kind = args.scenario
    return ScenarioSpec(kind=kind, k=args.half_k,
                        reward_scenario=args.reward_scenario,
                        fixed_timesteps=args.fixed_timesteps or None)


def cmd_run(args) -> int:
    cfg = _load_cfg(args.config)
    seeds = _parse_seeds(args.seeds)
    scenario = _scenario_from_args(args)
    policy_names = [args.policy] * cfg.n_agents
    if scenario is not None:
        for slot in scenario.slots(cfg.n_agents):
            policy_names[slot] = args.expert_policy
    logs, stats = run_batch(cfg, policy_names, seeds, scenario=scenario,
                            parallelism=args.parallel, horizon=args.horizon,
                            out_dir=args.out_dir)
    os.makedirs(args.out_dir, exist_ok=True)
    with open(os.path.join(args.out_dir, "manifest.json"), "w") as fh:
        fh.write(obs_manifest(cfg if scenario is None
                              else scenario.apply(cfg)).to_json())
    with open(os.path.join(args.out_dir, "summary.json"), "w") as fh:
        json.dump(stats, fh, indent=2)
    print(json.dumps(stats, indent=2))
    return 0 if not stats["errors"] else 1


def _logs_from(path_spec: str):
    paths = []
    for part in path_spec.split(","):
        if os.path.isdir(part):
            paths.extend(sorted(
                os.path.join(part, f) for f in os.listdir(part)
                if f.endswith(".gclog")))
        else:
            paths.append(part)
    if not paths:
        raise FileNotFoundError(f"no logs under {path_spec!r}")
    return [read_log(p) for p in paths]


def _score_samples(logs) -> list[float]:
    return [float(lg.achievements_per_agent().mean()) for lg in logs]


def _slot_samples(logs, slots) -> list[float]:
    return [float(lg.achievements_per_agent()[list(slots)].mean())
            for lg in logs]


def cmd_metrics(args) -> int:
    fmt = args.format
    if args.report == "ct":
        full = _logs_from(args.full)
        half = _logs_from(args.half)
        solo = _logs_from(args.solo)
        learner = [args.learner_slot]
        expert_logs = _logs_from(args.expert_logs) if args.expert_logs else full
        n = full[0].n_agents
        expert_slots = [i for i in range(n) if i != args.learner_slot] or [0]
        scores = ScenarioScores.from_samples(
            _slot_samples(full, learner), _slot_samples(half, learner),
            _slot_samples(solo, learner), _slot_samples(expert_logs, expert_slots))
        result = cultural_transmission(scores)
        out = ct_to_json(result, scores)
    elif args.report == "proximity":
        logs = _logs_from(args.logs)
        reps = [proximity_fraction(lg) for lg in logs]
        mean = float(np.mean([r.mean_fraction for r in reps]))
        if fmt == "json":
            out = json.dumps({"mean_fraction": mean,
                              "episodes": len(reps)}, indent=2)
        else:
            out = "mean_fraction,episodes\n" + f"{mean:.6f},{len(reps)}\n"
        if len(logs) == 1:
            out = (proximity_to_json(reps[0]) if fmt == "json"
                   else proximity_to_csv(reps[0]))
    elif args.report == "tools":
        logs = _logs_from(args.logs)
        stats = tool_use_stats(logs)
        out = tools_to_json(stats) if fmt == "json" else tools_to_csv(stats)
        if args.plot:
            plot_tool_use(stats, args.plot)
    elif args.report == "achievements":
        logs = _logs_from(args.logs)
        summary = achievement_summary(logs)
        out = summary_to_json(summary) if fmt == "json" else summary_to_csv(summary)
        if args.plot:
            plot_achievements(summary, args.plot)
    else:
        raise ValueError(f"unknown report {args.report!r}")
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(out)
    else:
        print(out)
    return 0


def cmd_replay(args) -> int:
    log = read_log(args.log)
    for note in log.notes:
        print(f"note: {note}", file=sys.stderr)
    steps, frames = replay(log, collect_frames=bool(args.gif))
    print(f"replay verified: {steps} steps, {log.n_agents} agents, "
          f"seed {log.seed}")
    if args.gif:
        save_gif(frames, args.gif, fps=args.fps)
        print(f"wrote {len(frames)} frames to {args.gif}")
    return 0


def cmd_bench(args) -> int:
    cfg = _load_cfg(args.config)
    report = bench(cfg, duration=args.duration, batch=args.batch,
                   with_logging=args.log)
    if args.workers > 1:
        report["parallel"] = bench_parallel(cfg, duration=args.duration,
                                            workers=args.workers)
    print(json.dumps(report, indent=2))
    return 0


def cmd_serve(args) -> int:
    cfg = _load_cfg(args.config)
    return serve_loop(cfg, batch=args.batch,
                      auto_reset=not args.no_auto_reset,
                      include_events=args.events)


def cmd_map(args) -> int:
    cfg = _load_cfg(args.config)
    state = generate_world(cfg, args.seed)
    print(dump_map(state))
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="gridcraft",
        description="Deterministic multi-agent survival grid-world engine")
    sub = p.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run episode batches and write logs")
    run_p.add_argument("--config", default=None, help="config JSON path")
    run_p.add_argument("--scenario", default="none",
                       choices=["none", "solo", "full_expert", "half_expert"])
    run_p.add_argument("--half-k", type=int, default=50)
    run_p.add_argument("--reward-scenario", default=None,
                       choices=[None, "independent", "shared", "attack", "proximity"])
    run_p.add_argument("--fixed-timesteps", action="store_true")
    run_p.add_argument("--seeds", required=True, help="'0:100' or '1,2,3'")
    run_p.add_argument("--policy", default="random",
                       choices=sorted(POLICY_REGISTRY))
    run_p.add_argument("--expert-policy", default="survivor",
                       choices=sorted(POLICY_REGISTRY))
    run_p.add_argument("--horizon", type=int, default=None)
    run_p.add_argument("--parallel", type=int, default=1)
    run_p.add_argument("--out-dir", required=True)
    run_p.set_defaults(func=cmd_run)

    met_p = sub.add_parser("metrics", help="compute reports from logs")
    met_p.add_argument("--report", required=True,
                       choices=["ct", "proximity", "tools", "achievements"])
    met_p.add_argument("--logs", help="log dir or comma list")
    met_p.add_argument("--full", help="ct: logs with expert always visible")
    met_p.add_argument("--half", help="ct: logs with expert visible first k steps")
    met_p.add_argument("--solo", help="ct: logs with expert never visible")
    met_p.add_argument("--expert-logs", default=None,
                       help="ct: logs to score the expert from (default: --full)")
    met_p.add_argument("--learner-slot", type=int, default=0)
    met_p.add_argument("--format", default="json", choices=["csv", "json"])
    met_p.add_argument("--out", default=None)
    met_p.add_argument("--plot", default=None, help="optional PNG path")
    met_p.set_defaults(func=cmd_metrics)

    rep_p = sub.add_parser("replay", help="verify a log, optionally render")
    rep_p.add_argument("--log", required=True)
    rep_p.add_argument("--gif", default=None)
    rep_p.add_argument("--fps", type=int, default=10)
    rep_p.set_defaults(func=cmd_replay)

    ben_p = sub.add_parser("bench", help="measure stepping throughput")
    ben_p.add_argument("--config", default=None)
    ben_p.add_argument("--duration", type=float, default=5.0)
    ben_p.add_argument("--batch", type=int, default=1)
    ben_p.add_argument("--log", action="store_true",
                       help="include log-append cost")
    ben_p.add_argument("--workers", type=int, default=1,
                       help="also measure multi-process aggregate throughput")
    ben_p.set_defaults(func=cmd_bench)

    srv_p = sub.add_parser("serve", help="NDJSON reset/step endpoint on stdio")
    srv_p.add_argument("--config", default=None)
    srv_p.add_argument("--batch", type=int, default=1)
    srv_p.add_argument("--no-auto-reset", action="store_true")
    srv_p.add_argument("--events", action="store_true",
                       help="include per-step events in responses")
    srv_p.set_defaults(func=cmd_serve)

    map_p = sub.add_parser("map", help="print a generated world as text")
    map_p.add_argument("--config", default=None)
    map_p.add_argument("--seed", type=int, default=0)
    map_p.set_defaults(func=cmd_map)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(json.dumps({"error": {"type": "config", "errors": exc.errors}}),
              file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(json.dumps({"error": {"type": type(exc).__name__,
                                    "message": str(exc)}}),
              file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
