"""Leakage games: pure and mixed utilities, attacker best response."""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Mapping, Sequence, Union

import numpy as np

from .channel import TOL, Channel, ChannelError, Prior, compose_convex, pad_compatible
from .vulnerability import VulnerabilityMeasure, posterior_vulnerability


class GameError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class MixedStrategy:
    probs: np.ndarray
    actions: tuple[str, ...]

    def __post_init__(self):
        p = np.array(self.probs, dtype=float)
        actions = tuple(self.actions)
        if p.shape != (len(actions),):
            raise GameError(f"strategy has {p.size} entries for {len(actions)} actions")
        if not np.all(np.isfinite(p)) or np.any(p < 0) or abs(p.sum() - 1.0) > TOL:
            raise GameError(f"not a distribution: {p.tolist()}")
        p.setflags(write=False)
        object.__setattr__(self, "probs", p)
        object.__setattr__(self, "actions", actions)

    @classmethod
    def point(cls, actions: Sequence[str], action) -> "MixedStrategy":
        actions = tuple(actions)
        p = np.zeros(len(actions))
        p[actions.index(action)] = 1.0
        return cls(p, actions)

    @classmethod
    def uniform(cls, actions: Sequence[str]) -> "MixedStrategy":
        return cls(np.full(len(actions), 1.0 / len(actions)), tuple(actions))

    def as_dict(self) -> dict[str, float]:
        return dict(zip(self.actions, self.probs.tolist()))


StrategyLike = Union[MixedStrategy, Sequence[float], np.ndarray]


@dataclass(frozen=True, eq=False)
class LeakageGame:
    """Defender actions D, attacker actions A, channels C[d, a], prior and measure.

    Utility is always the attacker's.  Channels for one attacker action may be
    given over different outputs; they are padded with zero columns so the
    defender's mixture is well defined.
    """

    defender_actions: tuple[str, ...]
    attacker_actions: tuple[str, ...]
    channels: Mapping[tuple[str, str], Channel]
    prior: Prior
    measure: VulnerabilityMeasure

    def __post_init__(self):
        D = tuple(str(d) for d in self.defender_actions)
        A = tuple(str(a) for a in self.attacker_actions)
        for what, acts in (("defender", D), ("attacker", A)):
            if not acts:
                raise GameError(f"no {what} actions")
            if len(set(acts)) != len(acts):
                raise GameError(f"duplicate {what} actions")
        chans = {}
        for d in D:
            for a in A:
                ch = self.channels.get((d, a))
                if ch is None:
                    raise GameError(f"missing channel for profile ({d}, {a})")
                if ch.input_labels != self.prior.labels:
                    raise GameError(f"channel ({d}, {a}) inputs differ from the prior's secrets")
                chans[(d, a)] = ch
        extra = set(self.channels) - set(chans)
        if extra:
            raise GameError(f"channels for unknown profiles: {sorted(extra)}")
        object.__setattr__(self, "defender_actions", D)
        object.__setattr__(self, "attacker_actions", A)
        object.__setattr__(self, "channels", chans)

    @property
    def shape(self) -> tuple[int, int]:
        return len(self.defender_actions), len(self.attacker_actions)

    def channel(self, d, a) -> Channel:
        try:
            return self.channels[(str(d), str(a))]
        except KeyError:
            raise GameError(f"unknown profile ({d}, {a})") from None

    @cached_property
    def families(self) -> tuple[tuple[Channel, ...], ...]:
        """For each attacker action, the padded channels indexed by defender action."""
        return tuple(
            tuple(pad_compatible([self.channels[(d, a)] for d in self.defender_actions]))
            for a in self.attacker_actions
        )

    def defender_strategy(self, delta: StrategyLike) -> MixedStrategy:
        return _as_strategy(delta, self.defender_actions)

    def attacker_strategy(self, alpha: StrategyLike) -> MixedStrategy:
        return _as_strategy(alpha, self.attacker_actions)

    def __eq__(self, other):
        if not isinstance(other, LeakageGame):
            return NotImplemented
        return (
            self.defender_actions == other.defender_actions
            and self.attacker_actions == other.attacker_actions
            and self.prior == other.prior
            and self.measure == other.measure
            and all(self.channels[k] == other.channels[k] for k in self.channels)
        )


def _as_strategy(s: StrategyLike, actions: tuple[str, ...]) -> MixedStrategy:
    if isinstance(s, MixedStrategy):
        if s.actions != actions:
            raise GameError("strategy is over a different action list")
        return s
    return MixedStrategy(np.asarray(s, dtype=float), actions)


def pure_utility(game: LeakageGame, d, a) -> float:
    return posterior_vulnerability(game.measure, game.prior, game.channel(d, a))


def mixed_channel(game: LeakageGame, delta: StrategyLike, a_index: int) -> Channel:
    """The channel the attacker faces after playing action ``a_index``."""
    delta = game.defender_strategy(delta)
    return compose_convex(game.families[a_index], delta.probs)


def attacker_values(game: LeakageGame, delta: StrategyLike) -> np.ndarray:
    """Posterior vulnerability of the defender-mixed channel, one entry per attacker action."""
    delta = game.defender_strategy(delta)
    return np.array(
        [
            posterior_vulnerability(game.measure, game.prior, mixed_channel(game, delta, i))
            for i in range(len(game.attacker_actions))
        ]
    )


def mixed_utility(game: LeakageGame, delta: StrategyLike, alpha: StrategyLike) -> float:
    alpha = game.attacker_strategy(alpha)
    vals = attacker_values(game, delta)
    # fixed-order summation
    total = 0.0
    for w, v in zip(alpha.probs, vals):
        total += w * v
    return float(total)


def attacker_best_response(game: LeakageGame, delta: StrategyLike) -> tuple[str, float]:
    """Best pure reply to ``delta`` and its value f(delta); ties go to the lowest index."""
    vals = attacker_values(game, delta)
    i = int(np.argmax(vals))
    return game.attacker_actions[i], float(vals[i])


@dataclass(frozen=True, eq=False)
class UtilityTable:
    values: np.ndarray
    defender_actions: tuple[str, ...]
    attacker_actions: tuple[str, ...]

    def render(self, digits: int = 4) -> str:
        head = ["d\\a", *self.attacker_actions]
        rows = [[d, *(f"{v:.{digits}f}" for v in row)] for d, row in zip(self.defender_actions, self.values)]
        widths = [max(len(r[j]) for r in [head, *rows]) for j in range(len(head))]
        fmt = lambda r: "  ".join(c.rjust(w) for c, w in zip(r, widths))  # noqa: E731
        return "\n".join([fmt(head), *(fmt(r) for r in rows)])


def utility_table(game: LeakageGame) -> UtilityTable:
    vals = np.array(
        [[pure_utility(game, d, a) for a in game.attacker_actions] for d in game.defender_actions]
    )
    return UtilityTable(vals, game.defender_actions, game.attacker_actions)


__all__ = [
    "ChannelError",
    "GameError",
    "LeakageGame",
    "MixedStrategy",
    "UtilityTable",
    "attacker_best_response",
    "attacker_values",
    "mixed_channel",
    "mixed_utility",
    "pure_utility",
    "utility_table",
]
