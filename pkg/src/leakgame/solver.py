"""Defender equilibrium strategies for leakage games.

The defender minimises f(delta) = max_a V[pi, sum_d delta(d) C_da] over the
probability simplex.  Two routes are provided: projected subgradient descent
(any convex measure) and, for Bayes vulnerability, an exact linear program.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.optimize import linprog

from .game import LeakageGame, MixedStrategy, StrategyLike, attacker_values
from .vulnerability import Bayes

SIMPLEX_RADIUS = math.sqrt(2.0)
CUT_CHECK_EVERY = 100
CUT_POOL = 512


class SolverError(RuntimeError):
    """Numerical failure inside a solver."""


@dataclass(frozen=True)
class SolverConfig:
    epsilon: float = 1e-3
    max_iterations: int = 50_000
    step_scale: float = 1.0
    seed: int = 0  # reserved for randomised tie-breaking; ties are broken by index
    fd_step: float = 1e-6

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be at least 1")
        if not self.step_scale > 0:
            raise ValueError("step_scale must be positive")
        if not self.fd_step > 0:
            raise ValueError("fd_step must be positive")


@dataclass
class SubgradientTrace:
    f: list[float] = field(default_factory=list)
    f_best: list[float] = field(default_factory=list)
    step: list[float] = field(default_factory=list)

    def rows(self):
        for k, row in enumerate(zip(self.f, self.f_best, self.step), start=1):
            yield (k, *row)

    def write_csv(self, path) -> None:
        import csv

        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["k", "f", "f_best", "step"])
            for k, f, fb, s in self.rows():
                w.writerow([k, repr(f), repr(fb), repr(s)])


@dataclass(eq=False)
class EquilibriumResult:
    delta_star: MixedStrategy
    value: float
    iterations_used: int
    certificate: np.ndarray
    gap_bound: float
    attacker_actions: tuple[str, ...]
    method: str
    epsilon: Optional[float] = None
    trace: Optional[SubgradientTrace] = None

    @property
    def converged(self) -> bool:
        return self.epsilon is None or self.gap_bound <= self.epsilon

    def to_json(self) -> dict:
        return {
            "method": self.method,
            "defender_actions": list(self.delta_star.actions),
            "delta_star": self.delta_star.probs.tolist(),
            "value": self.value,
            "certificate": dict(zip(self.attacker_actions, self.certificate.tolist())),
            "gap_bound": self.gap_bound,
            "iterations_used": self.iterations_used,
            "converged": self.converged,
        }


# ---------------------------------------------------------------------------
# projection


def project_simplex(v) -> np.ndarray:
    """Euclidean projection onto {x >= 0, sum x = 1} by sorting and thresholding."""
    v = np.asarray(v, dtype=float)
    if v.ndim != 1 or v.size == 0:
        raise ValueError("expected a non-empty vector")
    if not np.all(np.isfinite(v)):
        raise ValueError("cannot project a vector with NaN or Inf entries")
    u = np.sort(v)[::-1]
    css = np.cumsum(u)
    j = np.arange(1, v.size + 1)
    rho = np.flatnonzero(u * j > css - 1.0)[-1]
    theta = (css[rho] - 1.0) / (rho + 1)
    return np.maximum(v - theta, 0.0)


def simplex_threshold(x: np.ndarray, v: np.ndarray) -> float:
    """Recover theta with x = max(v - theta, 0) from a projection's support."""
    support = x > 0
    return float(np.mean(v[support] - x[support]))


# ---------------------------------------------------------------------------
# f and its subgradients


class _BayesKernel:
    """Precomputed pi(x) C_da(x, y), zero-padded to a common output count."""

    def __init__(self, game: LeakageGame):
        pi = game.prior.probs
        n_y = max(fam[0].shape[1] for fam in game.families)
        A, D, X = len(game.attacker_actions), len(game.defender_actions), len(pi)
        w = np.zeros((A, D, X, n_y))
        for i, fam in enumerate(game.families):
            for d, ch in enumerate(fam):
                w[i, d, :, : ch.shape[1]] = pi[:, None] * ch.matrix
        self.weights = w
        self._cols = np.arange(n_y)

    def values(self, delta: np.ndarray) -> np.ndarray:
        mixed = np.tensordot(delta, self.weights, axes=([0], [1]))
        return mixed.max(axis=1).sum(axis=1)

    def __call__(self, delta: np.ndarray) -> tuple[float, np.ndarray]:
        mixed = np.tensordot(delta, self.weights, axes=([0], [1]))  # (A, X, Y)
        vals = mixed.max(axis=1).sum(axis=1)
        a = int(np.argmax(vals))
        best_x = mixed[a].argmax(axis=0)
        g = self.weights[a][:, best_x, self._cols].sum(axis=1)
        return float(vals[a]), g


def _require_bayes(game: LeakageGame) -> None:
    if not isinstance(game.measure, Bayes):
        raise TypeError(f"Bayes-only route called on a {game.measure.kind} game")


def f_value(game: LeakageGame, delta: StrategyLike) -> float:
    """f(delta) = max_a V[pi, C_{delta a}]."""
    return float(np.max(attacker_values(game, delta)))


def bayes_subgradient(game: LeakageGame, delta: StrategyLike) -> np.ndarray:
    """g_d = sum_y pi(x*_y) C_{d a*}(x*_y, y) at the active attacker action a*.

    Ties in a* and in each x*_y go to the lowest index.
    """
    _require_bayes(game)
    delta = game.defender_strategy(delta)
    return _BayesKernel(game)(delta.probs)[1]


def _branch(game: LeakageGame, a_index: int) -> Callable[[np.ndarray], float]:
    if isinstance(game.measure, Bayes):
        kern = _BayesKernel(game)
        return lambda d: float(kern.values(d)[a_index])
    from .game import mixed_channel
    from .vulnerability import posterior_vulnerability

    return lambda d: posterior_vulnerability(
        game.measure, game.prior, mixed_channel(game, d, a_index)
    )


def _fd_gradient(branch, delta: np.ndarray, base: float, h: float) -> np.ndarray:
    n = delta.size
    slopes = np.empty(n)
    for d in range(n):
        moved = (1.0 - h) * delta
        moved[d] += h
        slopes[d] = (branch(moved) - base) / h
    return slopes - slopes.mean()


def generic_subgradient(game: LeakageGame, delta: StrategyLike, h: float = 1e-6) -> np.ndarray:
    """Finite-difference subgradient of the active branch, centred on the simplex tangent space.

    Slopes are taken towards each vertex (delta + h (e_d - delta)), which keeps
    every probe feasible even on the simplex boundary.
    """
    if not h > 0:
        raise ValueError("h must be positive")
    delta = game.defender_strategy(delta).probs
    vals = attacker_values(game, delta)
    a = int(np.argmax(vals))
    return _fd_gradient(_branch(game, a), delta, float(vals[a]), h)


def _generic_oracle(game: LeakageGame, h: float):
    branches = [_branch(game, i) for i in range(len(game.attacker_actions))]

    def oracle(delta):
        vals = np.array([b(delta) for b in branches])
        a = int(np.argmax(vals))
        return float(vals[a]), _fd_gradient(branches[a], delta, float(vals[a]), h)

    return oracle


# ---------------------------------------------------------------------------
# solvers


def _result(game, delta, iterations, gap, method, epsilon=None, trace=None) -> EquilibriumResult:
    strat = game.defender_strategy(delta)
    cert = attacker_values(game, strat)
    return EquilibriumResult(
        delta_star=strat,
        value=float(cert.max()),
        iterations_used=iterations,
        certificate=cert,
        gap_bound=float(gap),
        attacker_actions=game.attacker_actions,
        method=method,
        epsilon=epsilon,
        trace=trace,
    )


def cut_lower_bound(slopes: np.ndarray, offsets: Optional[np.ndarray] = None) -> float:
    """Lower bound on min f from minorants f(delta) >= offset_i + slope_i . delta.

    Solves max over mixtures mu of min_d (mu . offset + mu^T slopes)_d, a small
    matrix game, then re-evaluates the bound at the returned mixture so that LP
    tolerances cannot overstate it.
    """
    n, D = slopes.shape
    offsets = np.zeros(n) if offsets is None else offsets
    shifted = slopes + offsets[:, None]
    c = np.zeros(n + 1)
    c[-1] = -1.0
    a_ub = np.hstack([-shifted.T, np.ones((D, 1))])
    a_eq = np.zeros((1, n + 1))
    a_eq[0, :n] = 1.0
    res = linprog(
        c, A_ub=a_ub, b_ub=np.zeros(D), A_eq=a_eq, b_eq=[1.0],
        bounds=[(0.0, None)] * n + [(None, None)], method="highs",
    )
    if res.status != 0:
        return -math.inf
    mu = np.clip(res.x[:n], 0.0, None)
    mu /= mu.sum()
    return float((mu @ shifted).min())


def solve_minimax(
    game: LeakageGame, config: Optional[SolverConfig] = None, record_trace: bool = False
) -> EquilibriumResult:
    """Projected subgradient descent on f from the uniform strategy.

    Step k is step_scale / sqrt(k).  The best iterate is returned together with
    an a-posteriori bound on f(best) - min f, the smallest of

    * (R^2 + G^2 sum step^2) / (2 sum step), R = sqrt(2), G = largest
      subgradient norm seen so far;
    * f(best) minus the step-weighted average of the linear cuts
      f(delta_k) + g_k . (delta - delta_k), minimised over the simplex;
    * f(best) minus the best bound obtainable by mixing the distinct cuts
      seen so far (at most ``CUT_POOL`` of the most recent ones).  For Bayes
      vulnerability these cuts are exact; for other measures they carry the
      finite-difference error of the subgradient estimate.

    Iteration stops once the bound is at most ``epsilon``; otherwise after
    ``max_iterations`` steps with ``converged`` false.
    """
    config = config or SolverConfig()
    D = len(game.defender_actions)
    if isinstance(game.measure, Bayes):
        oracle = _BayesKernel(game)
    else:
        oracle = _generic_oracle(game, config.fd_step)

    trace = SubgradientTrace() if record_trace else None
    delta = np.full(D, 1.0 / D)
    best_delta, f_best = delta, math.inf
    g_max = 0.0
    step_sum = step_sq_sum = 0.0
    cut_const = 0.0
    cut_slope = np.zeros(D)
    cuts: dict[bytes, np.ndarray] = {}
    new_cuts = False
    gap = math.inf
    moves = 0
    for k in range(1, config.max_iterations + 1):
        f_k, g = oracle(delta)
        if f_k < f_best:
            f_best, best_delta = f_k, delta
        step = config.step_scale / math.sqrt(k)
        g_tan = g - g.mean()
        g_max = max(g_max, float(np.sqrt(g_tan @ g_tan)))
        step_sum += step
        step_sq_sum += step * step
        cut_const += step * (f_k - float(g @ delta))
        cut_slope += step * g
        lower = (cut_const + float(cut_slope.min())) / step_sum
        boyd = (SIMPLEX_RADIUS**2 + g_max**2 * step_sq_sum) / (2.0 * step_sum)
        gap = max(0.0, min(gap, boyd, f_best - lower))
        cut = np.append(f_k - float(g @ delta), g)
        key = np.round(cut, 12).tobytes()
        if key not in cuts:
            cuts[key] = cut
            if len(cuts) > CUT_POOL:
                del cuts[next(iter(cuts))]
            new_cuts = True
        if gap > config.epsilon and new_cuts and (k <= 8 or k % CUT_CHECK_EVERY == 0):
            pool = np.array(list(cuts.values()))
            gap = max(0.0, min(gap, f_best - cut_lower_bound(pool[:, 1:], pool[:, 0])))
            new_cuts = False
        if trace is not None:
            trace.f.append(f_k)
            trace.f_best.append(f_best)
            trace.step.append(step)
        if gap <= config.epsilon or k == config.max_iterations:
            break
        delta = project_simplex(delta - step * g)
        moves += 1
    return _result(game, best_delta, moves, gap, "subgradient", config.epsilon, trace)


def lp_matrices(game: LeakageGame):
    """Constraint data for min t over (delta, t, z).

    z[a, y] >= sum_d delta_d pi(x) C_da(x, y) for every (a, y, x),
    sum_y z[a, y] <= t for every a, delta on the simplex.
    """
    pi = game.prior.probs
    D, A, X = len(game.defender_actions), len(game.attacker_actions), len(pi)
    n_out = [fam[0].shape[1] for fam in game.families]
    z_off = np.concatenate([[0], np.cumsum(n_out)])[:-1] + D + 1
    n_var = D + 1 + sum(n_out)
    rows = []
    for i, fam in enumerate(game.families):
        stack = np.stack([ch.matrix for ch in fam])  # (D, X, Y)
        for y in range(n_out[i]):
            for x in range(X):
                r = np.zeros(n_var)
                r[:D] = pi[x] * stack[:, x, y]
                r[z_off[i] + y] = -1.0
                rows.append(r)
    for i in range(A):
        r = np.zeros(n_var)
        r[z_off[i] : z_off[i] + n_out[i]] = 1.0
        r[D] = -1.0
        rows.append(r)
    a_ub = np.array(rows)
    b_ub = np.zeros(len(rows))
    a_eq = np.zeros((1, n_var))
    a_eq[0, :D] = 1.0
    c = np.zeros(n_var)
    c[D] = 1.0
    bounds = [(0.0, None)] * D + [(None, None)] + [(0.0, None)] * sum(n_out)
    return c, a_ub, b_ub, a_eq, np.array([1.0]), bounds


def solve_lp_bayes(game: LeakageGame) -> EquilibriumResult:
    """Exact defender strategy for Bayes games via the epigraph LP (HiGHS)."""
    _require_bayes(game)
    D = len(game.defender_actions)
    c, a_ub, b_ub, a_eq, b_eq, bounds = lp_matrices(game)
    res = linprog(c, A_ub=a_ub, b_ub=b_ub, A_eq=a_eq, b_eq=b_eq, bounds=bounds, method="highs")
    if res.status != 0:
        raise SolverError(f"LP solver failed: {res.message}")
    delta = np.clip(res.x[:D], 0.0, None)
    delta /= delta.sum()
    t_star = float(res.x[D])
    out = _result(game, delta, 0, 0.0, "lp")
    out.gap_bound = max(0.0, out.value - t_star)
    return out
