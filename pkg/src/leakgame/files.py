"""JSON formats for channels, games and Crowds topologies."""

from __future__ import annotations

import json
from importlib import resources
from pathlib import Path

import numpy as np

from .channel import Channel, ChannelError, Prior
from .crowds import CrowdsConfig, Topology
from .game import GameError, LeakageGame
from .vulnerability import measure_from_json

SIG_DIGITS = 12


class FormatError(ValueError):
    """A file that does not follow one of the documented layouts."""


def round_sig(x: float) -> float:
    return float(f"{x:.{SIG_DIGITS}g}")


def _rounded(obj):
    if isinstance(obj, float):
        return round_sig(obj)
    if isinstance(obj, dict):
        return {k: _rounded(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_rounded(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _rounded(obj.tolist())
    if isinstance(obj, np.floating):
        return round_sig(float(obj))
    if isinstance(obj, np.integer):
        return int(obj)
    return obj


def dumps(obj) -> str:
    """Deterministic JSON: insertion key order, floats at 12 significant digits."""
    return json.dumps(_rounded(obj), indent=2, allow_nan=False) + "\n"


def _read_json(path) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: not valid JSON ({exc})") from exc


# --- games -------------------------------------------------------------------


def game_to_json(game: LeakageGame) -> dict:
    return {
        "secrets": list(game.prior.labels),
        "prior": game.prior.probs.tolist(),
        "defender_actions": list(game.defender_actions),
        "attacker_actions": list(game.attacker_actions),
        "measure": game.measure.to_json(),
        "channels": {
            f"{d},{a}": game.channels[(d, a)].to_dict()
            for d in game.defender_actions
            for a in game.attacker_actions
        },
    }


def game_from_json(obj: dict) -> LeakageGame:
    try:
        secrets = [str(s) for s in obj["secrets"]]
        prior = Prior(np.asarray(obj["prior"], dtype=float), tuple(secrets))
        D = [str(d) for d in obj["defender_actions"]]
        A = [str(a) for a in obj["attacker_actions"]]
        for act in D + A:
            if "," in act:
                raise FormatError(f"action label {act!r} contains a comma")
        channels = {}
        for key, ch in obj["channels"].items():
            parts = key.split(",")
            if len(parts) != 2:
                raise FormatError(f"channel key {key!r} is not 'd,a'")
            channels[(parts[0], parts[1])] = Channel.from_dict(ch)
        measure = measure_from_json(obj["measure"])
        return LeakageGame(tuple(D), tuple(A), channels, prior, measure)
    except FormatError:
        raise
    except (KeyError, TypeError, AttributeError) as exc:
        raise FormatError(f"malformed game file: missing or bad field {exc}") from exc
    except (ChannelError, GameError, ValueError) as exc:
        raise FormatError(f"invalid game: {exc}") from exc


def load_game(path) -> LeakageGame:
    return game_from_json(_read_json(path))


def save_game(game: LeakageGame, path) -> None:
    Path(path).write_text(dumps(game_to_json(game)))


# --- topologies --------------------------------------------------------------


def config_from_json(obj: dict) -> CrowdsConfig:
    try:
        nodes = obj["nodes"]
        if not nodes:
            raise FormatError("topology has an empty node list")
        topo = Topology(
            np.asarray(nodes, dtype=float),
            float(obj["radius"]),
            np.asarray(obj.get("candidates", []), dtype=float),
        )
        if len(topo.candidates) == 0:
            raise FormatError("topology lists no candidate locations")
        return CrowdsConfig(float(obj["p_f"]), topo)
    except FormatError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"malformed topology: {exc}") from exc


def config_to_json(config: CrowdsConfig) -> dict:
    t = config.topology
    return {
        "nodes": t.nodes.tolist(),
        "radius": t.radius,
        "candidates": t.candidates.tolist(),
        "p_f": config.p_f,
    }


def load_config(path) -> CrowdsConfig:
    return config_from_json(_read_json(path))


# --- bundled fixtures --------------------------------------------------------


def bundled_names() -> list[str]:
    root = resources.files("leakgame") / "data"
    return sorted(p.name[: -len(".json")] for p in root.iterdir() if p.name.endswith(".json"))


def bundled_path(name: str) -> Path:
    name = name[:-5] if name.endswith(".json") else name
    path = Path(str(resources.files("leakgame") / "data" / f"{name}.json"))
    if not path.exists():
        raise FileNotFoundError(f"no bundled example named {name!r}; try one of {bundled_names()}")
    return path


def bundled_text(name: str) -> str:
    return bundled_path(name).read_text()
