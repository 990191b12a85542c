"""Command-line front end: ``leakgame <command> ...``.

Every command prints a JSON document on standard output.  Exit codes:
0 success, 1 verification failed, 2 input error, 3 numerical or model error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import files
from .crowds import CrowdsModelError, CrowdsNumericalError, build_adjacency, case_study_game
from .game import GameError, utility_table
from .oracle import OracleError, grid_minimax, verify_epsilon_saddle
from .solver import SolverConfig, SolverError, solve_lp_bayes, solve_minimax

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_INPUT = 2
EXIT_NUMERICAL = 3


class InputError(ValueError):
    pass


def _emit(obj) -> None:
    sys.stdout.write(files.dumps(obj))


def _load_game(path):
    if not Path(path).is_file():
        raise InputError(f"cannot read game file {path}")
    return files.load_game(path)


def _parse_delta(text: str, game) -> np.ndarray:
    """Accept a JSON list, a {action: prob} object, solver output, or a path / '-' holding one."""
    if text == "-":
        text = sys.stdin.read()
    elif Path(text).is_file():
        text = Path(text).read_text()
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"--delta is not valid JSON: {exc}") from exc
    if isinstance(obj, dict) and "subgradient" in obj:
        obj = obj["subgradient"]
    if isinstance(obj, dict) and "delta_star" in obj:
        obj = obj["delta_star"]
    if isinstance(obj, dict):
        unknown = set(obj) - set(game.defender_actions)
        if unknown:
            raise InputError(f"--delta names unknown defender actions {sorted(unknown)}")
        obj = [obj.get(d, 0.0) for d in game.defender_actions]
    if not isinstance(obj, list):
        raise InputError("--delta must be a list of probabilities")
    if len(obj) != len(game.defender_actions):
        raise InputError(f"--delta has {len(obj)} entries, game has {len(game.defender_actions)} defender actions")
    try:
        return np.asarray(obj, dtype=float)
    except (TypeError, ValueError) as exc:
        raise InputError(f"--delta entries must be numbers: {exc}") from exc


# --- commands -----------------------------------------------------------------


def cmd_solve(args) -> int:
    game = _load_game(args.game)
    out = {}
    if args.method in ("subgradient", "both"):
        config = SolverConfig(epsilon=args.epsilon, max_iterations=args.max_iter, step_scale=args.step_scale)
        res = solve_minimax(game, config, record_trace=args.trace is not None)
        if args.trace is not None:
            res.trace.write_csv(args.trace)
        out["subgradient"] = res.to_json()
    if args.method in ("lp", "both"):
        try:
            out["lp"] = solve_lp_bayes(game).to_json()
        except TypeError as exc:
            raise InputError(f"--method lp needs a Bayes game: {exc}") from exc
    _emit(out[args.method] if args.method != "both" else out)
    return EXIT_OK


def cmd_table(args) -> int:
    table = utility_table(_load_game(args.game))
    _emit(
        {
            "defender_actions": list(table.defender_actions),
            "attacker_actions": list(table.attacker_actions),
            "values": table.values.tolist(),
            "text": table.render(),
        }
    )
    if args.text:
        sys.stderr.write(table.render() + "\n")
    return EXIT_OK


def cmd_verify(args) -> int:
    game = _load_game(args.game)
    delta = _parse_delta(args.delta, game)
    try:
        strategy = game.defender_strategy(delta)
    except GameError as exc:
        raise InputError(str(exc)) from exc
    report = verify_epsilon_saddle(game, strategy, epsilon=args.epsilon, samples=args.samples)
    _emit(report.to_json())
    return EXIT_OK if report.passed else EXIT_FAILED


def cmd_oracle_grid(args) -> int:
    game = _load_game(args.game)
    _emit(grid_minimax(game, args.resolution, maximin=args.maximin).to_json())
    return EXIT_OK


def cmd_crowds_build(args) -> int:
    if not Path(args.topology).is_file():
        raise InputError(f"cannot read topology file {args.topology}")
    config = files.load_config(args.topology)
    game = case_study_game(config)
    files.save_game(game, args.output)
    adj = build_adjacency(config.topology)
    _emit(
        {
            "output": str(args.output),
            "nodes": len(config.topology.nodes),
            "edges": sum(len(nb) for nb in adj) // 2,
            "defender_actions": len(game.defender_actions),
            "attacker_actions": len(game.attacker_actions),
        }
    )
    return EXIT_OK


def cmd_examples(args) -> int:
    if args.action == "list":
        _emit(files.bundled_names())
        return EXIT_OK
    if not args.name:
        raise InputError("examples emit needs a name")
    try:
        sys.stdout.write(files.bundled_text(args.name))
    except FileNotFoundError as exc:
        raise InputError(str(exc)) from exc
    return EXIT_OK


# --- parser -------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="leakgame", description="Leakage games between a defender and an attacker.")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("solve", help="compute the defender's minimax strategy")
    s.add_argument("game")
    s.add_argument("--epsilon", type=float, default=1e-3)
    s.add_argument("--max-iter", type=int, default=50_000)
    s.add_argument("--step-scale", type=float, default=1.0)
    s.add_argument("--method", choices=["subgradient", "lp", "both"], default="subgradient")
    s.add_argument("--trace", metavar="CSV", help="write per-iteration k, f, f_best, step")
    s.set_defaults(func=cmd_solve)

    t = sub.add_parser("table", help="utility of every pure strategy profile")
    t.add_argument("game")
    t.add_argument("--text", action="store_true", help="also print the aligned table on stderr")
    t.set_defaults(func=cmd_table)

    v = sub.add_parser("verify", help="check an epsilon-optimal defender strategy")
    v.add_argument("game")
    v.add_argument("--delta", required=True, help="JSON list/object, solver output, a file, or '-' for stdin")
    v.add_argument("--epsilon", type=float, default=1e-3)
    v.add_argument("--samples", type=int, default=1000)
    v.set_defaults(func=cmd_verify)

    o = sub.add_parser("oracle", help="brute-force oracles")
    osub = o.add_subparsers(dest="oracle", required=True)
    g = osub.add_parser("grid", help="minimise f over a simplex lattice")
    g.add_argument("game")
    g.add_argument("--resolution", type=float, default=0.01)
    g.add_argument("--maximin", action="store_true")
    g.set_defaults(func=cmd_oracle_grid)

    c = sub.add_parser("crowds", help="Crowds case-study games")
    csub = c.add_subparsers(dest="crowds", required=True)
    b = csub.add_parser("build", help="build a game file from a topology file")
    b.add_argument("topology")
    b.add_argument("-o", "--output", required=True)
    b.set_defaults(func=cmd_crowds_build)

    e = sub.add_parser("examples", help="bundled example files")
    e.add_argument("action", choices=["list", "emit"])
    e.add_argument("name", nargs="?")
    e.set_defaults(func=cmd_examples)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_INPUT
    try:
        return args.func(args)
    except (InputError, files.FormatError, OracleError, OSError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_INPUT
    except (SolverError, CrowdsModelError, CrowdsNumericalError, np.linalg.LinAlgError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
