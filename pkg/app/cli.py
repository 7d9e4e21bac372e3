"""
Command-line entry point for the Dual Curriculum Design laboratory.

Run with: python -m app.cli <train|eval|game|report> [options]
(installed as the `dcd-lab` console script)
"""

import argparse
import logging
import sys
from pathlib import Path
from typing import Dict, List, Optional

import numpy as np
import pandas as pd

# Add parent directory to path
sys.path.insert(0, str(Path(__file__).parent.parent))

from src.agent import load_tables
from src.config import RunSettings, flag_name, parse_config
from src.errors import DcdError
from src.evaluation import default_suites, evaluate_suites, load_suite_manifest
from src.game_core import analyze_game, load_game, verify_game_suite
from src.monitoring import aggregate_reports, load_report_json
from src.teachers import run_dcd

logger = logging.getLogger("app.cli")

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_ERROR = 2

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"


# ============================================================================
# PARSER
# ============================================================================

def _common_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--log-level", default="INFO",
                        choices=["DEBUG", "INFO", "WARNING", "ERROR"], help="Logging verbosity.")
    common.add_argument("--quiet", action="store_true", help="Hide progress bars.")
    return common


def _add_settings_flags(parser: argparse.ArgumentParser) -> None:
    """One --flag per RunSettings field; values are validated by the settings model."""
    for name, info in RunSettings.model_fields.items():
        default = info.default
        if isinstance(default, tuple):
            default = ",".join(default)
        elif hasattr(default, "value"):
            default = default.value
        parser.add_argument(f"--{flag_name(name)}", dest=name, default=None,
                            help=f"default: {default}")
    parser.add_argument("--config", default=None, help="Flat key=value config file.")


def build_parser() -> argparse.ArgumentParser:
    common = _common_parser()
    parser = argparse.ArgumentParser(
        prog="dcd-lab",
        description="Dual Curriculum Design laboratory: curricula on a maze and exact game checks.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    train = sub.add_parser("train", parents=[common], help="Train a student with a curriculum algorithm.")
    _add_settings_flags(train)

    evaluate = sub.add_parser("eval", parents=[common], help="Evaluate a checkpoint on the held-out suites.")
    evaluate.add_argument("--checkpoint", required=True, help="Policy/value checkpoint file.")
    evaluate.add_argument("--csv", default=None, help="Write the per-level table here.")
    evaluate.add_argument("--stochastic", action="store_true",
                          help="Sample actions for eval-attempts episodes instead of greedy play.")
    _add_settings_flags(evaluate)

    game = sub.add_parser("game", parents=[common], help="Run the finite-game bound checks.")
    game.add_argument("--B", type=float, default=1.0, help="Counterexample payoff scale.")
    game.add_argument("--p", type=float, default=0.5, help="Probability of teacher 1.")
    game.add_argument("--eps", type=float, default=0.1, help="Counterexample epsilon.")
    game.add_argument("--n", type=int, default=2, help="Index of the last filler parameter.")
    game.add_argument("--num-random", type=int, default=500, help="Random games in the bound sweep.")
    game.add_argument("--num-regret-pair", type=int, default=20, help="Random games for two regret teachers.")
    game.add_argument("--seed", type=int, default=0)
    game.add_argument("--game-file", default=None, help="Check a game given in the text matrix format.")
    game.add_argument("--csv", default=None, help="Write the check table here.")

    report = sub.add_parser("report", parents=[common], help="Aggregate report.json files across seeds.")
    report.add_argument("paths", nargs="+", help="report.json files or directories containing them.")
    report.add_argument("--csv", default=None, help="Write the aggregate table here.")

    return parser


def _settings_flags(args: argparse.Namespace) -> Dict[str, object]:
    return {name: getattr(args, name) for name in RunSettings.model_fields if getattr(args, name, None) is not None}


# ============================================================================
# COMMANDS
# ============================================================================

def cmd_train(args: argparse.Namespace) -> int:
    config = parse_config(_settings_flags(args), args.config)
    suites = load_suite_manifest(config.suite_manifest) if config.suite_manifest else None
    report = run_dcd(config.dcd, suites, config.run_dir, progress=not args.quiet)
    print(f"Run directory: {config.run_dir}")
    for name, value in report.counters.items():
        print(f"  {name:20s} {value}")
    for suite, rate in report.final_solved_rates.items():
        print(f"  solved[{suite}] {rate:.3f}")
    return EXIT_OK


def cmd_eval(args: argparse.Namespace) -> int:
    config = parse_config(_settings_flags(args), args.config)
    policy, _ = load_tables(args.checkpoint)
    dcd = config.dcd
    if config.suite_manifest:
        suites = load_suite_manifest(config.suite_manifest)
    else:
        suites = [s for s in default_suites(dcd.template.width, dcd.seed, dcd.eval_levels, dcd.eval_attempts)
                  if s.name in dcd.eval_suites]

    rng = np.random.default_rng(dcd.seed) if args.stochastic else None
    table = evaluate_suites(policy, suites, dcd.env, rng, greedy=not args.stochastic)
    print(table.groupby("suite", sort=False)["solved_rate"].mean().to_string())
    if args.csv:
        Path(args.csv).parent.mkdir(parents=True, exist_ok=True)
        table.to_csv(args.csv, index=False)
        logger.info("wrote %s", args.csv)
    return EXIT_OK


def cmd_game(args: argparse.Namespace) -> int:
    if args.game_file:
        game = load_game(Path(args.game_file).read_text(encoding="utf-8"))
        table = analyze_game(game, p=args.p, seed=args.seed)
    else:
        table = verify_game_suite(args.B, args.p, args.eps, args.n,
                                  num_random=args.num_random, num_regret_pair=args.num_regret_pair,
                                  seed=args.seed)
    with pd.option_context("display.float_format", "{:.6g}".format):
        print(table.to_string(index=False))
    if args.csv:
        Path(args.csv).parent.mkdir(parents=True, exist_ok=True)
        table.to_csv(args.csv, index=False)
    failed = int((~table["ok"].astype(bool)).sum())
    if failed:
        logger.error("%d check(s) failed", failed)
        return EXIT_CHECK_FAILED
    return EXIT_OK


def _report_files(paths: List[str]) -> List[Path]:
    files = []
    for raw in paths:
        path = Path(raw)
        files.extend(sorted(path.rglob("report.json")) if path.is_dir() else [path])
    return files


def cmd_report(args: argparse.Namespace) -> int:
    files = _report_files(args.paths)
    reports = [load_report_json(f) for f in files]
    table = aggregate_reports(reports)
    print(f"Aggregated {len(reports)} report(s)")
    print(table.to_string(index=False))
    if args.csv:
        Path(args.csv).parent.mkdir(parents=True, exist_ok=True)
        table.to_csv(args.csv, index=False)
    return EXIT_OK


COMMANDS = {"train": cmd_train, "eval": cmd_eval, "game": cmd_game, "report": cmd_report}


def run_command(args: argparse.Namespace) -> int:
    """Dispatch a parsed subcommand; DcdError and OSError become EXIT_ERROR."""
    try:
        return COMMANDS[args.command](args)
    except (DcdError, OSError) as e:
        logger.error("%s", e)
        return EXIT_ERROR


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=getattr(logging, args.log_level), format=LOG_FORMAT)
    return run_command(args)


if __name__ == "__main__":
    sys.exit(main())
