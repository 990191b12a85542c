import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from leakgame import files
from leakgame.crowds import case_study_game
from leakgame.oracle import random_game
from leakgame.vulnerability import GVulnerability

from conftest import GAME_FIXTURES, TOPOLOGY_FIXTURES


def _reparse(game):
    return files.game_from_json(json.loads(files.dumps(files.game_to_json(game))))


class TestDumps:
    def test_twelve_significant_digits(self):
        assert files.dumps({"v": 1 / 3}) == '{\n  "v": 0.333333333333\n}\n'

    def test_key_order_preserved(self):
        assert list(json.loads(files.dumps({"z": 1, "a": 2}))) == ["z", "a"]

    def test_numpy_values(self):
        out = json.loads(files.dumps({"a": np.arange(3), "b": np.float64(0.5), "c": np.int64(4)}))
        assert out == {"a": [0, 1, 2], "b": 0.5, "c": 4}

    def test_rejects_nan(self):
        with pytest.raises(ValueError):
            files.dumps({"v": float("nan")})

    @given(st.floats(allow_nan=False, allow_infinity=False))
    def test_rounding_is_idempotent(self, x):
        assert files.round_sig(files.round_sig(x)) == files.round_sig(x)


class TestGameFiles:
    @pytest.mark.parametrize("name", GAME_FIXTURES)
    def test_fixture_round_trip(self, name, tmp_path):
        game = files.load_game(files.bundled_path(name))
        path = tmp_path / "g.json"
        files.save_game(game, path)
        again = files.load_game(path)
        assert again == game
        assert path.read_text() == files.dumps(files.game_to_json(again))

    @given(st.integers(0, 2**32 - 1))
    @settings(max_examples=50, deadline=None)
    def test_random_round_trip(self, seed):
        rng = np.random.default_rng(seed)
        game = random_game(rng, *(int(v) for v in rng.integers(1, 5, size=4)))
        once = _reparse(game)
        assert _reparse(once) == once
        for key, ch in game.channels.items():
            np.testing.assert_allclose(once.channels[key].matrix, ch.matrix, atol=1e-11)

    def test_g_measure_round_trip(self):
        game = random_game(np.random.default_rng(0), 2, 2, 3, 2, GVulnerability(("u", "v"), np.eye(2, 3)))
        assert _reparse(game).measure == game.measure

    @pytest.mark.parametrize("name", TOPOLOGY_FIXTURES)
    def test_crowds_games_round_trip(self, name):
        once = _reparse(case_study_game(files.load_config(files.bundled_path(name))))
        assert _reparse(once) == once

    @pytest.mark.parametrize(
        "mutate",
        [
            lambda g: g.pop("prior"),
            lambda g: g["channels"].pop(next(iter(g["channels"]))),
            lambda g: g.update(measure="shannon"),
            lambda g: g.update(defender_actions=["a,b", "c"]),
            lambda g: g["channels"].update({"0": g["channels"]["0,0"]}),
            lambda g: g["channels"]["0,0"].update(rows=[[0.5, 0.6], [0, 1]]),
        ],
    )
    def test_malformed(self, mutate):
        obj = json.loads(files.bundled_text("two_millionaires"))
        mutate(obj)
        with pytest.raises(files.FormatError):
            files.game_from_json(obj)

    def test_invalid_json(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text("{nope")
        with pytest.raises(files.FormatError):
            files.load_game(path)


class TestTopologyFiles:
    def test_round_trip(self):
        config = files.load_config(files.bundled_path("ten_node_topology"))
        again = files.config_from_json(files.config_to_json(config))
        np.testing.assert_array_equal(again.topology.nodes, config.topology.nodes)
        assert again.p_f == config.p_f

    @pytest.mark.parametrize(
        "obj",
        [
            {"nodes": [], "radius": 250, "candidates": [[0, 0]], "p_f": 0.5},
            {"nodes": [[0, 0]], "radius": 250, "candidates": [], "p_f": 0.5},
            {"nodes": [[0, 0]], "radius": -1, "candidates": [[0, 0]], "p_f": 0.5},
            {"nodes": [[0, 0]], "radius": 250, "candidates": [[0, 0]], "p_f": 1.0},
            {"nodes": [[0, 0]], "candidates": [[0, 0]], "p_f": 0.5},
        ],
    )
    def test_malformed(self, obj):
        with pytest.raises(files.FormatError):
            files.config_from_json(obj)

    def test_manet_fixture_is_connected_enough(self):
        from leakgame.crowds import build_adjacency

        config = files.load_config(files.bundled_path("manet30_topology"))
        assert len(config.topology.nodes) == 30
        assert len(config.topology.candidates) == 9
        assert min(len(nb) for nb in build_adjacency(config.topology)) >= 1


class TestBundled:
    def test_names(self):
        names = files.bundled_names()
        assert set(GAME_FIXTURES + TOPOLOGY_FIXTURES) <= set(names)

    def test_unknown(self):
        with pytest.raises(FileNotFoundError):
            files.bundled_path("nope")
