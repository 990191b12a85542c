"""Vulnerability measures on priors, their posterior versions, and leakage."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .channel import Channel, ChannelError, Prior, decompose, joint_matrix


class NotConvexError(ValueError):
    """A measure declared convex failed a convexity spot-check."""


class VulnerabilityMeasure:
    """Base class; subclasses implement ``value`` on a probability vector."""

    kind = "abstract"

    def value(self, probs: np.ndarray) -> float:
        raise NotImplementedError

    def posterior(self, prior: Prior, channel: Channel) -> float:
        return expected_posterior(self, prior, channel)

    def to_json(self):
        raise TypeError(f"{self.kind} measures cannot be written to game files")


@dataclass(frozen=True)
class Bayes(VulnerabilityMeasure):
    """Probability of guessing the secret in one try."""

    kind = "bayes"

    def value(self, probs):
        return float(np.max(probs))

    def posterior(self, prior, channel):
        return float(joint_matrix(prior, channel).max(axis=0).sum())

    def to_json(self):
        return "bayes"


@dataclass(frozen=True, eq=False)
class GVulnerability(VulnerabilityMeasure):
    """Expected gain of the best guess; ``gain[w, x]`` rewards guess w when the secret is x.

    Columns of ``gain`` follow the order of the prior's labels.
    """

    guesses: tuple[str, ...]
    gain: np.ndarray

    kind = "g"

    def __post_init__(self):
        gain = np.array(self.gain, dtype=float)
        guesses = tuple(str(w) for w in self.guesses)
        if gain.ndim != 2 or gain.shape[0] != len(guesses) or gain.shape[0] == 0:
            raise ValueError(f"gain matrix shape {gain.shape} does not fit {len(guesses)} guesses")
        if not np.all(np.isfinite(gain)):
            raise ValueError("gain entries must be finite")
        if len(set(guesses)) != len(guesses):
            raise ValueError("duplicate guess labels")
        gain.setflags(write=False)
        object.__setattr__(self, "gain", gain)
        object.__setattr__(self, "guesses", guesses)

    @classmethod
    def identity(cls, labels) -> "GVulnerability":
        return cls(tuple(labels), np.eye(len(labels)))

    def _check(self, n: int) -> None:
        if self.gain.shape[1] != n:
            raise ChannelError(f"gain has {self.gain.shape[1]} secret columns, prior has {n}")

    def value(self, probs):
        self._check(len(probs))
        return float(np.max(self.gain @ probs))

    def posterior(self, prior, channel):
        self._check(len(prior))
        joint = joint_matrix(prior, channel)
        return float((self.gain @ joint).max(axis=0).sum())

    def __eq__(self, other):
        if not isinstance(other, GVulnerability):
            return NotImplemented
        return self.guesses == other.guesses and np.array_equal(self.gain, other.gain)

    def to_json(self):
        return {"g": {"guesses": list(self.guesses), "gain": self.gain.tolist()}}


@dataclass(frozen=True)
class CustomConvex(VulnerabilityMeasure):
    """Caller-supplied vulnerability; convexity is the caller's promise.

    Call :meth:`spot_check` to test that promise on random priors.
    """

    func: Callable[[np.ndarray], float]
    name: str = "custom"

    kind = "custom"

    def value(self, probs):
        return float(self.func(np.asarray(probs, dtype=float)))

    def spot_check(self, n_secrets: int, samples: int = 200, seed: int = 0, slack: float = 1e-9):
        rng = np.random.default_rng(seed)
        for _ in range(samples):
            p1 = rng.dirichlet(np.ones(n_secrets))
            p2 = rng.dirichlet(np.ones(n_secrets))
            t = rng.uniform(0.0, 1.0)
            lhs = self.value(t * p1 + (1 - t) * p2)
            rhs = t * self.value(p1) + (1 - t) * self.value(p2)
            if lhs > rhs + slack:
                raise NotConvexError(
                    f"measure {self.name!r} violates convexity by {lhs - rhs:.3e} "
                    f"at t={t:.4f}"
                )


def shannon_measure() -> CustomConvex:
    """Negative Shannon entropy in bits."""

    def neg_entropy(p):
        nz = p[p > 0]
        return float(np.sum(nz * np.log2(nz)))

    return CustomConvex(neg_entropy, "neg-shannon")


def guessing_measure() -> CustomConvex:
    """Negative guessing entropy (expected number of guesses, best order first)."""

    def neg_guessing(p):
        ranked = np.sort(p)[::-1]
        return -float(np.dot(np.arange(1, p.size + 1), ranked))

    return CustomConvex(neg_guessing, "neg-guessing")


def measure_from_json(obj) -> VulnerabilityMeasure:
    if obj == "bayes":
        return Bayes()
    if isinstance(obj, dict) and set(obj) == {"g"}:
        body = obj["g"]
        return GVulnerability(tuple(body["guesses"]), np.asarray(body["gain"], dtype=float))
    raise ValueError(f"unknown measure: {obj!r}")


# ---------------------------------------------------------------------------


def prior_vulnerability(measure: VulnerabilityMeasure, prior: Prior) -> float:
    return measure.value(prior.probs)


def expected_posterior(measure: VulnerabilityMeasure, prior: Prior, channel: Channel) -> float:
    """sum_y p(y) V(p_{X|y}), evaluated through the explicit posteriors."""
    dec = decompose(prior, channel)
    total = 0.0
    for j, lab in enumerate(dec.output_labels):
        post = dec.posteriors.get(lab)
        if post is not None:
            total += dec.output_marginal[j] * measure.value(post.probs)
    return total


def posterior_vulnerability(measure: VulnerabilityMeasure, prior: Prior, channel: Channel) -> float:
    return measure.posterior(prior, channel)


def column_max_vulnerability(channel: Channel) -> float:
    """Bayes posterior vulnerability under the uniform prior: column maxima over |X|."""
    return float(channel.matrix.max(axis=0).sum() / channel.shape[0])


@dataclass(frozen=True)
class LeakageReport:
    prior_vulnerability: float
    posterior_vulnerability: float
    additive: float
    multiplicative: Optional[float] = field(default=None)


def leakage(measure: VulnerabilityMeasure, prior: Prior, channel: Channel) -> LeakageReport:
    v_prior = prior_vulnerability(measure, prior)
    v_post = posterior_vulnerability(measure, prior, channel)
    mult = v_post / v_prior if v_prior != 0 else None
    return LeakageReport(v_prior, v_post, v_post - v_prior, mult)
