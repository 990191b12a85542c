"""Crowds on an ad-hoc proximity network as a leakage game.

Honest base nodes initiate and forward messages.  The attacker places one
corrupted node and the defender places one deliverer node, each at a candidate
location.  The attacker observes which honest node first forwards a message to
the corrupted node, or nothing if the message is delivered before that.

Channels are computed exactly from the absorbing Markov chain of the message
path; :func:`simulate_channel` is an independent Monte Carlo check.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .channel import Channel, Prior
from .game import LeakageGame
from .vulnerability import Bayes

UNDETECTED = "undetected"
CORRUPTED = -1
DELIVERER = -2


class CrowdsModelError(ValueError):
    """The network cannot run the protocol (e.g. an initiator has no neighbour)."""


class CrowdsNumericalError(RuntimeError):
    pass


@dataclass(frozen=True, eq=False)
class Topology:
    nodes: np.ndarray
    radius: float
    candidates: np.ndarray

    def __post_init__(self):
        nodes = np.array(self.nodes, dtype=float).reshape(-1, 2)
        cands = np.array(self.candidates, dtype=float).reshape(-1, 2)
        if nodes.shape[0] == 0:
            raise ValueError("topology has no nodes")
        if not (np.all(np.isfinite(nodes)) and np.all(np.isfinite(cands))):
            raise ValueError("positions must be finite")
        if not (np.isfinite(self.radius) and self.radius > 0):
            raise ValueError("communication radius must be positive")
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "candidates", cands)
        object.__setattr__(self, "radius", float(self.radius))

    @property
    def node_labels(self) -> tuple[str, ...]:
        return tuple(f"n{i}" for i in range(len(self.nodes)))


@dataclass(frozen=True, eq=False)
class CrowdsConfig:
    p_f: float
    topology: Topology

    def __post_init__(self):
        if not 0.0 < self.p_f < 1.0:
            raise ValueError(f"forwarding probability must be in (0, 1), got {self.p_f}")


def _within(p: np.ndarray, q: np.ndarray, radius: float) -> np.ndarray:
    diff = p[:, None, :] - q[None, :, :]
    return np.hypot(diff[..., 0], diff[..., 1]) <= radius


def build_adjacency(topology: Topology) -> list[frozenset[int]]:
    """Neighbour sets of the base nodes; distance exactly ``radius`` counts as connected."""
    close = _within(topology.nodes, topology.nodes, topology.radius)
    np.fill_diagonal(close, False)
    return [frozenset(np.flatnonzero(row).tolist()) for row in close]


@dataclass(frozen=True)
class PlacedNetwork:
    """Honest adjacency plus which honest nodes see the placed nodes."""

    honest: list[frozenset[int]]
    sees_corrupted: np.ndarray
    sees_deliverer: np.ndarray

    @property
    def degree(self) -> np.ndarray:
        return np.array([len(nb) for nb in self.honest]) + self.sees_corrupted + self.sees_deliverer

    def edge_count(self) -> int:
        return sum(len(nb) for nb in self.honest) // 2 + int(self.sees_corrupted.sum() + self.sees_deliverer.sum())


def place(config: CrowdsConfig, corrupted: int, deliverer: Optional[int] = None) -> PlacedNetwork:
    topo = config.topology
    n_cand = len(topo.candidates)
    for idx in (corrupted, deliverer):
        if idx is not None and not 0 <= idx < n_cand:
            raise IndexError(f"candidate index {idx} out of range 0..{n_cand - 1}")

    def sees(idx):
        if idx is None:
            return np.zeros(len(topo.nodes), dtype=int)
        return _within(topo.nodes, topo.candidates[idx : idx + 1], topo.radius)[:, 0].astype(int)

    net = PlacedNetwork(build_adjacency(topo), sees(corrupted), sees(deliverer))
    isolated = np.flatnonzero(net.degree == 0)
    if isolated.size:
        raise CrowdsModelError(
            f"initiator(s) {[topo.node_labels[i] for i in isolated]} have no neighbours"
        )
    return net


def crowds_channel(config: CrowdsConfig, corrupted: int, deliverer: Optional[int] = None) -> Channel:
    """Exact observation channel for one placement of the corrupted and deliverer nodes.

    Outputs are ``detected:<node>`` for every honest node adjacent to the
    corrupted node (in node order) followed by ``undetected``.
    """
    net = place(config, corrupted, deliverer)
    labels = config.topology.node_labels
    n = len(labels)
    pf = config.p_f
    deg = net.degree.astype(float)
    step = np.zeros((n, n))
    for j, nb in enumerate(net.honest):
        step[j, list(nb)] = 1.0 / deg[j]
    watched = np.flatnonzero(net.sees_corrupted)
    # one hop into the corrupted node from sender j reveals j
    reveal = np.zeros((n, watched.size))
    reveal[watched, np.arange(watched.size)] = 1.0 / deg[watched]
    escape = net.sees_deliverer / deg

    # h = probabilities once an honest forwarder holds the message
    lhs = np.eye(n) - pf * step
    rhs = np.column_stack([pf * reveal, (1.0 - pf) + pf * escape])
    try:
        held = np.linalg.solve(lhs, rhs)
    except np.linalg.LinAlgError as exc:
        raise CrowdsNumericalError(f"absorbing chain is singular: {exc}") from exc
    if not np.all(np.isfinite(held)):
        raise CrowdsNumericalError("non-finite absorption probabilities")

    # initiators always forward on the first hop
    rows = step @ held + np.column_stack([reveal, escape])
    if rows.min() < -1e-12:
        raise CrowdsNumericalError(f"negative probability {rows.min():.3e}")
    rows = np.clip(rows, 0.0, 1.0)
    outs = tuple(f"detected:{labels[k]}" for k in watched) + (UNDETECTED,)
    return Channel(rows, labels, outs)


def simulate_channel(
    config: CrowdsConfig,
    corrupted: int,
    deliverer: Optional[int] = None,
    runs: int = 1_000_000,
    seed: int = 0,
) -> tuple[np.ndarray, tuple[str, ...]]:
    """Monte Carlo frequencies of each observation, ``runs`` paths per initiator.

    Returns (frequency matrix, output labels) with the same layout as
    :func:`crowds_channel`.  Paths are walked hop by hop on neighbour lists.
    """
    net = place(config, corrupted, deliverer)
    labels = config.topology.node_labels
    n = len(labels)
    # neighbour table: honest ids, CORRUPTED, DELIVERER; padded with a sentinel
    lists = [
        sorted(nb) + [CORRUPTED] * int(net.sees_corrupted[j]) + [DELIVERER] * int(net.sees_deliverer[j])
        for j, nb in enumerate(net.honest)
    ]
    width = max(len(lst) for lst in lists)
    table = np.full((n, width), -99, dtype=np.int64)
    for j, lst in enumerate(lists):
        table[j, : len(lst)] = lst
    deg = np.array([len(lst) for lst in lists])

    watched = np.flatnonzero(net.sees_corrupted)
    col_of = np.full(n, -1)
    col_of[watched] = np.arange(watched.size)
    und_col = watched.size
    counts = np.zeros((n, watched.size + 1), dtype=np.int64)
    rng = np.random.default_rng(seed)

    for x in range(n):
        holder = np.full(runs, x, dtype=np.int64)
        outcome = np.full(runs, -1, dtype=np.int64)
        active = np.arange(runs)
        first = True
        while active.size:
            cur = holder[active]
            if not first:
                deliver = rng.random(active.size) >= config.p_f
                outcome[active[deliver]] = und_col
                active, cur = active[~deliver], cur[~deliver]
            first = False
            pick = (rng.random(active.size) * deg[cur]).astype(np.int64)
            nxt = table[cur, pick]
            hit = nxt == CORRUPTED
            outcome[active[hit]] = col_of[cur[hit]]
            outcome[active[nxt == DELIVERER]] = und_col
            moving = nxt >= 0
            holder[active[moving]] = nxt[moving]
            active = active[moving]
        counts[x] = np.bincount(outcome, minlength=und_col + 1)
    outs = tuple(f"detected:{labels[k]}" for k in watched) + (UNDETECTED,)
    return counts / runs, outs


def candidate_label(i: int) -> str:
    return f"c{i}"


def case_study_game(
    config: CrowdsConfig,
    attacker_candidates: Optional[Sequence[int]] = None,
    defender_candidates: Optional[Sequence[int]] = None,
) -> LeakageGame:
    """Deliverer placements versus corrupted placements, uniform prior, Bayes vulnerability.

    Both players pick from the topology's candidate locations (all of them by
    default).  Both nodes may be placed at the same location.
    """
    n_cand = len(config.topology.candidates)
    atk = list(range(n_cand)) if attacker_candidates is None else list(attacker_candidates)
    dfn = list(range(n_cand)) if defender_candidates is None else list(defender_candidates)
    if not atk or not dfn:
        raise ValueError("candidate lists must be non-empty")
    channels = {
        (candidate_label(d), candidate_label(a)): crowds_channel(config, a, d) for d in dfn for a in atk
    }
    return LeakageGame(
        tuple(candidate_label(d) for d in dfn),
        tuple(candidate_label(a) for a in atk),
        channels,
        Prior.uniform(config.topology.node_labels),
        Bayes(),
    )
