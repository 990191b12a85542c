"""Brute-force checks that do not depend on the solvers' iterations.

* :func:`grid_minimax` enumerates defender strategies on a simplex lattice.
* :func:`verify_epsilon_saddle` checks a candidate defender strategy.
* :func:`check_convexity_theorem` compares the vulnerability of a channel
  mixture with the mixture of vulnerabilities.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional, Sequence

import numpy as np

from .channel import Channel, Prior, compose_convex, pad_compatible
from .game import LeakageGame, MixedStrategy, StrategyLike, attacker_values
from .vulnerability import Bayes, VulnerabilityMeasure, posterior_vulnerability

MAX_GRID_DEFENDERS = 5
MAX_GRID_ATTACKERS = 3
_CHUNK = 20_000


class OracleError(ValueError):
    pass


def default_seed() -> int:
    return int(os.environ.get("LEAKGAME_SEED", "0"))


# --- random instances ----------------------------------------------------------


def random_prior(rng: np.random.Generator, labels: Sequence[str]) -> Prior:
    p = rng.uniform(size=len(labels))
    return Prior(p / p.sum(), tuple(labels))


def random_channel(rng: np.random.Generator, inputs: Sequence[str], outputs: Sequence[str]) -> Channel:
    m = rng.uniform(size=(len(inputs), len(outputs)))
    return Channel(m / m.sum(axis=1, keepdims=True), tuple(inputs), tuple(outputs))


def random_game(
    rng: np.random.Generator,
    n_defender: int,
    n_attacker: int,
    n_secrets: int,
    n_outputs: int,
    measure: Optional[VulnerabilityMeasure] = None,
) -> LeakageGame:
    xs = [f"x{i}" for i in range(n_secrets)]
    ys = [f"y{i}" for i in range(n_outputs)]
    D = tuple(f"d{i}" for i in range(n_defender))
    A = tuple(f"a{i}" for i in range(n_attacker))
    prior = random_prior(rng, xs)
    channels = {(d, a): random_channel(rng, xs, ys) for d in D for a in A}
    return LeakageGame(D, A, channels, prior, measure or Bayes())


# --- grid -----------------------------------------------------------------------


@lru_cache(maxsize=None)
def _compositions(total: int, parts: int) -> np.ndarray:
    if parts == 1:
        return np.array([[total]], dtype=np.int64)
    blocks = []
    for first in range(total, -1, -1):
        rest = _compositions(total - first, parts - 1)
        blocks.append(np.column_stack([np.full(len(rest), first), rest]))
    return np.concatenate(blocks)


def simplex_grid(parts: int, resolution: float) -> np.ndarray:
    """All distributions over ``parts`` outcomes with entries in multiples of ``resolution``."""
    steps = int(round(1.0 / resolution))
    if steps < 1 or abs(steps * resolution - 1.0) > 1e-9:
        raise OracleError(f"1/resolution must be an integer, got resolution={resolution}")
    return _compositions(steps, parts) / steps


def _grid_values(game: LeakageGame, points: np.ndarray) -> np.ndarray:
    """V[pi, C_{delta a}] for every grid point (rows) and attacker action (columns)."""
    out = np.empty((len(points), len(game.attacker_actions)))
    if isinstance(game.measure, Bayes):
        pi = game.prior.probs
        for i, fam in enumerate(game.families):
            joint = np.stack([pi[:, None] * ch.matrix for ch in fam])  # (D, X, Y)
            D, X, Y = joint.shape
            flat = joint.reshape(D, X * Y)
            for lo in range(0, len(points), _CHUNK):
                mixed = points[lo : lo + _CHUNK] @ flat
                col_max = np.maximum.reduce([mixed[:, x * Y : (x + 1) * Y] for x in range(X)])
                out[lo : lo + _CHUNK, i] = col_max.sum(axis=1)
    else:
        for r, p in enumerate(points):
            out[r] = attacker_values(game, p)
    return out


@dataclass(frozen=True, eq=False)
class GridResult:
    best_delta: MixedStrategy
    best_value: float
    resolution: float
    points: int
    attacker_maximin: Optional[tuple[np.ndarray, float]] = None

    def to_json(self) -> dict:
        out = {
            "defender_actions": list(self.best_delta.actions),
            "best_delta": self.best_delta.probs.tolist(),
            "best_value": self.best_value,
            "resolution": self.resolution,
            "points": self.points,
        }
        if self.attacker_maximin is not None:
            alpha, val = self.attacker_maximin
            out["attacker_maximin"] = {"alpha": alpha.tolist(), "value": val}
        return out


def grid_minimax(game: LeakageGame, resolution: float = 0.01, maximin: bool = False) -> GridResult:
    """Minimise f over the simplex lattice of the given resolution.

    With ``maximin`` (and at most three attacker actions) the attacker side is
    also enumerated: max over lattice alpha of min over lattice delta.
    """
    D, A = game.shape
    if D > MAX_GRID_DEFENDERS:
        raise OracleError(f"grid search supports at most {MAX_GRID_DEFENDERS} defender actions, got {D}")
    if not 0 < resolution <= 0.1:
        raise OracleError("resolution must lie in (0, 0.1]")
    points = simplex_grid(D, resolution)
    vals = _grid_values(game, points)
    f = vals.max(axis=1)
    i = int(np.argmin(f))
    best = game.defender_strategy(points[i])
    best_value = float(attacker_values(game, best).max())

    mm = None
    if maximin:
        if A > MAX_GRID_ATTACKERS:
            raise OracleError(f"maximin enumeration supports at most {MAX_GRID_ATTACKERS} attacker actions")
        alphas = simplex_grid(A, resolution)
        worst = np.array([np.min(vals @ alpha) for alpha in alphas])
        j = int(np.argmax(worst))
        mm = (alphas[j], float(worst[j]))
    return GridResult(best, best_value, resolution, len(points), mm)


def lipschitz_estimate(game: LeakageGame, samples: int = 200, seed: Optional[int] = None) -> float:
    """Largest ||g - mean(g)||_1 over subgradients at vertices, centre and random strategies.

    With this norm, |f(p) - f(q)| <= G max_d |p_d - q_d| along the sampled
    subgradients, matching the lattice's max-coordinate rounding error.
    """
    from .solver import bayes_subgradient, generic_subgradient

    sub = bayes_subgradient if isinstance(game.measure, Bayes) else generic_subgradient
    rng = np.random.default_rng(default_seed() if seed is None else seed)
    D = len(game.defender_actions)
    probes = [*np.eye(D), np.full(D, 1.0 / D), *rng.dirichlet(np.ones(D), size=samples)]
    best = 0.0
    for p in probes:
        g = sub(game, p / p.sum())
        best = max(best, float(np.abs(g - g.mean()).sum()))
    return best


# --- epsilon-saddle ---------------------------------------------------------------


@dataclass(frozen=True)
class SaddleReport:
    passed: bool
    f_hat: float
    best_response: str
    reference_value: float
    reference: str
    affine_violation: float
    convex_violation: float
    worst_delta: list
    samples: int

    @property
    def worst_violation(self) -> float:
        return max(self.affine_violation, self.convex_violation)

    def to_json(self) -> dict:
        return {
            "passed": self.passed,
            "f_hat": self.f_hat,
            "best_response": self.best_response,
            "reference_value": self.reference_value,
            "reference": self.reference,
            "affine_violation": self.affine_violation,
            "convex_violation": self.convex_violation,
            "worst_violation": self.worst_violation,
            "worst_delta": self.worst_delta,
            "samples": self.samples,
        }


def verify_epsilon_saddle(
    game: LeakageGame,
    delta_hat: StrategyLike,
    epsilon: float = 1e-3,
    samples: int = 1000,
    seed: Optional[int] = None,
) -> SaddleReport:
    """Check that ``delta_hat`` is an epsilon-optimal defender strategy.

    (i) Utility is affine in the attacker's strategy, so the attacker's best
    reply is found exactly among pure actions; its value f_hat must not exceed
    the game value plus epsilon.  For Bayes games the value comes from the
    exact LP; otherwise from the best sampled strategy.
    (ii) No sampled defender strategy (all vertices, the centre, and
    ``samples`` uniform draws) may beat f_hat by more than epsilon.
    """
    delta_hat = game.defender_strategy(delta_hat)
    vals = attacker_values(game, delta_hat)
    a = int(np.argmax(vals))
    f_hat = float(vals[a])

    D = len(game.defender_actions)
    rng = np.random.default_rng(default_seed() if seed is None else seed)
    probes = np.vstack([np.eye(D), np.full((1, D), 1.0 / D), rng.dirichlet(np.ones(D), size=samples)])
    probes /= probes.sum(axis=1, keepdims=True)
    f_probe = _grid_values(game, probes).max(axis=1)
    j = int(np.argmin(f_probe))
    convex_violation = max(0.0, f_hat - epsilon - float(f_probe[j]))

    if isinstance(game.measure, Bayes):
        from .solver import solve_lp_bayes

        reference, ref_value = "lp", solve_lp_bayes(game).value
    else:
        reference, ref_value = "samples", float(f_probe[j])
    affine_violation = max(0.0, f_hat - ref_value - epsilon)
    return SaddleReport(
        passed=affine_violation == 0.0 and convex_violation == 0.0,
        f_hat=f_hat,
        best_response=game.attacker_actions[a],
        reference_value=ref_value,
        reference=reference,
        affine_violation=affine_violation,
        convex_violation=convex_violation,
        worst_delta=probes[j].tolist(),
        samples=len(probes),
    )


# --- convexity of mixing -----------------------------------------------------------


@dataclass(frozen=True)
class ConvexityReport:
    lhs: float
    rhs: float
    passed: bool

    @property
    def slack(self) -> float:
        return self.rhs - self.lhs


def check_convexity_theorem(
    prior: Prior,
    measure: VulnerabilityMeasure,
    channels: Sequence[Channel],
    mu,
    tol: float = 1e-9,
) -> ConvexityReport:
    """V[pi, sum_i mu_i C_i] <= sum_i mu_i V[pi, C_i]."""
    padded = pad_compatible(channels)
    mu = np.asarray(mu, dtype=float)
    lhs = posterior_vulnerability(measure, prior, compose_convex(padded, mu))
    rhs = float(sum(w * posterior_vulnerability(measure, prior, ch) for w, ch in zip(mu, channels)))
    return ConvexityReport(lhs, rhs, lhs <= rhs + tol)
