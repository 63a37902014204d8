"""Command line: ``python -m dgrl <subcommand>``."""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .agent import ConfigError
from .bench import (
    emit_csv,
    evaluate_weights,
    measure_step_time,
    parse_config,
    parse_size,
    run_experiment,
)
from .envs import synth_feature_matrix
from .theory import format_reports, run_all


def _seed_list(text: str) -> list[int]:
    try:
        seeds = [int(s) for s in text.split(",") if s.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"seed list must be comma-separated integers, got {text!r}") from None
    if not seeds:
        raise argparse.ArgumentTypeError("seed list must not be empty")
    return seeds


def _load(args) -> "object":
    cfg = parse_config(args.config)
    if args.seed_list is not None:
        cfg = replace(cfg, seeds=args.seed_list)
    if args.out is not None:
        cfg = replace(cfg, out_dir=args.out)
    if args.episodes is not None:
        cfg = replace(cfg, agent=replace(cfg.agent, episodes=args.episodes))
    return cfg


def cmd_train(args) -> int:
    cfg = _load(args)
    summary = run_experiment(cfg)
    print(f"{cfg.env_id}/{cfg.variant} {cfg.algorithm}: seeds={summary['seeds']} "
          f"median peak={summary['median_peak']:.4f} mean={summary['mean_peak']:.4f} std={summary['std_peak']:.4f}")
    print(f"outputs in {cfg.out_dir}")
    return 0


def cmd_evaluate(args) -> int:
    cfg = _load(args)
    rows = []
    for seed in cfg.seeds:
        weights = Path(args.weights) if args.weights else Path(cfg.out_dir) / f"weights_seed{seed}.npz"
        if not weights.is_file():
            raise FileNotFoundError(f"weights not found: {weights}")
        row = evaluate_weights(cfg, weights, seed, args.eval_episodes)
        rows.append(row)
        print(f"seed {seed}: mean={row['mean']:.4f} median={row['median']:.4f} std={row['std']:.4f}")
    if args.out:
        Path(args.out).mkdir(parents=True, exist_ok=True)
        emit_csv(rows, Path(args.out) / "evaluation.csv")
    return 0


def cmd_steptime(args) -> int:
    sizes = [parse_size(s) for s in args.sizes.split(",")]
    algorithms = ["dgrl", "axial-greedy"] if args.algorithm == "all" else [args.algorithm]
    reports = []
    for alg in algorithms:
        reports += measure_step_time(sizes, alg, episodes=args.episodes, steps_per_episode=args.steps,
                                     seed=args.seed_list[0] if args.seed_list else 0)
    print(f"{'algorithm':<14}{'space':>8}{'ms/step':>10}{'std':>10}")
    for r in reports:
        print(f"{r.algorithm:<14}{r.descriptor:>8}{r.mean_ms:>10.4f}{r.std_ms:>10.4f}")
    print("(selection path only; environment steps not timed)")
    if args.out:
        Path(args.out).mkdir(parents=True, exist_ok=True)
        emit_csv(reports, Path(args.out) / "steptime.csv")
    return 0


def cmd_theory(args) -> int:
    reports = run_all(seed=args.seed_list[0] if args.seed_list else 0)
    print(format_reports(reports))
    if args.out:
        Path(args.out).mkdir(parents=True, exist_ok=True)
        emit_csv([r.row() for r in reports], Path(args.out) / "theory.csv")
    return 0 if all(r.passed for r in reports) else 1


def cmd_synth(args) -> int:
    feats = synth_feature_matrix(args.rows, args.cols, seed=args.seed_list[0] if args.seed_list else 0)
    out = Path(args.out or "features.csv")
    if out.suffix == "" or out.is_dir():
        out.mkdir(parents=True, exist_ok=True)
        out = out / "features.csv"
    np.savetxt(out, feats, delimiter=",", fmt="%.6f")
    print(f"wrote {feats.shape[0]}x{feats.shape[1]} feature matrix to {out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="dgrl", description="Train and benchmark large discrete action agents.")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, config_required: bool):
        sp.add_argument("--config", required=config_required, help="key = value experiment file")
        sp.add_argument("--seed-list", type=_seed_list, default=None, help="comma-separated seeds, e.g. 0,1,2")
        sp.add_argument("--out", default=None, help="output directory")
        sp.add_argument("--episodes", type=int, default=None, help="episode override")

    sp = sub.add_parser("train", help="train every seed of a config")
    common(sp, True)
    sp.set_defaults(func=cmd_train)

    sp = sub.add_parser("evaluate", help="evaluate saved weights")
    common(sp, True)
    sp.add_argument("--weights", default=None, help="weights file (default: <out>/weights_seed<s>.npz)")
    sp.add_argument("--eval-episodes", type=int, default=10)
    sp.set_defaults(func=cmd_evaluate)

    sp = sub.add_parser("steptime", help="time the action-selection path")
    common(sp, False)
    sp.add_argument("--sizes", default="5^5,20^20,50^50")
    sp.add_argument("--algorithm", default="all", choices=["all", "dgrl", "axial-greedy", "round-only"])
    sp.add_argument("--steps", type=int, default=5, help="timed selections per episode")
    sp.set_defaults(func=cmd_steptime, episodes=1000)

    sp = sub.add_parser("theory-check", help="run the property checks")
    common(sp, False)
    sp.set_defaults(func=cmd_theory)

    sp = sub.add_parser("synth-features", help="write a synthetic movie feature matrix")
    common(sp, False)
    sp.add_argument("--rows", type=int, default=343)
    sp.add_argument("--cols", type=int, default=24)
    sp.set_defaults(func=cmd_synth)
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "episodes", None) is None and args.command == "steptime":
        args.episodes = 1000
    try:
        return args.func(args)
    except (ConfigError, FileNotFoundError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
