"""Channel matrices, priors, convex composition and Bayesian decomposition.

A channel maps secrets (rows) to observables (columns); every row is a
conditional distribution.  Labels are carried explicitly so that padding and
mixing never silently misalign columns.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

TOL = 1e-9


class ChannelError(ValueError):
    """Malformed channel, prior or composition request."""


def _labels(labels, what: str) -> tuple[str, ...]:
    out = tuple(str(lab) for lab in labels)
    if len(set(out)) != len(out):
        raise ChannelError(f"duplicate {what} labels: {list(out)}")
    return out


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr = np.array(arr, dtype=float, copy=True)
    arr.setflags(write=False)
    return arr


def _check_distribution(probs: np.ndarray, what: str) -> None:
    if probs.ndim != 1 or probs.size == 0:
        raise ChannelError(f"{what} must be a non-empty vector")
    if not np.all(np.isfinite(probs)):
        raise ChannelError(f"{what} has non-finite entries")
    if np.any(probs < 0):
        raise ChannelError(f"{what} has negative entries")
    if abs(probs.sum() - 1.0) > TOL:
        raise ChannelError(f"{what} sums to {probs.sum()!r}, not 1")


@dataclass(frozen=True, eq=False)
class Prior:
    """Distribution over secrets."""

    probs: np.ndarray
    labels: tuple[str, ...]

    def __post_init__(self):
        probs = np.asarray(self.probs, dtype=float)
        _check_distribution(probs, "prior")
        labels = _labels(self.labels, "secret")
        if len(labels) != probs.size:
            raise ChannelError(f"{len(labels)} labels for {probs.size} probabilities")
        object.__setattr__(self, "probs", _frozen(probs))
        object.__setattr__(self, "labels", labels)

    @classmethod
    def uniform(cls, labels: Sequence) -> "Prior":
        n = len(labels)
        return cls(np.full(n, 1.0 / n), tuple(labels))

    def __len__(self) -> int:
        return self.probs.size

    def __eq__(self, other) -> bool:
        if not isinstance(other, Prior):
            return NotImplemented
        return self.labels == other.labels and np.array_equal(self.probs, other.probs)

    def __repr__(self) -> str:
        return f"Prior({dict(zip(self.labels, self.probs.tolist()))})"


@dataclass(frozen=True, eq=False)
class Channel:
    """Row-stochastic matrix from secrets to observables."""

    matrix: np.ndarray
    input_labels: tuple[str, ...]
    output_labels: tuple[str, ...]

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=float)
        if m.ndim != 2:
            raise ChannelError("channel matrix must be two-dimensional")
        ins = _labels(self.input_labels, "input")
        outs = _labels(self.output_labels, "output")
        if m.shape != (len(ins), len(outs)):
            raise ChannelError(
                f"matrix shape {m.shape} does not match labels ({len(ins)}, {len(outs)})"
            )
        if len(ins) == 0 or len(outs) == 0:
            raise ChannelError("channel needs at least one input and one output")
        if not np.all(np.isfinite(m)):
            raise ChannelError("channel has non-finite entries")
        if np.any(m < 0):
            raise ChannelError("channel has negative entries")
        if np.any(m > 1 + TOL):
            raise ChannelError("channel has entries above 1")
        sums = m.sum(axis=1)
        bad = np.flatnonzero(np.abs(sums - 1.0) > TOL)
        if bad.size:
            i = bad[0]
            raise ChannelError(f"row {ins[i]!r} sums to {sums[i]!r}, not 1")
        object.__setattr__(self, "matrix", _frozen(m))
        object.__setattr__(self, "input_labels", ins)
        object.__setattr__(self, "output_labels", outs)

    @property
    def shape(self) -> tuple[int, int]:
        return self.matrix.shape

    def __eq__(self, other) -> bool:
        if not isinstance(other, Channel):
            return NotImplemented
        return (
            self.input_labels == other.input_labels
            and self.output_labels == other.output_labels
            and np.array_equal(self.matrix, other.matrix)
        )

    def __repr__(self) -> str:
        return (
            f"Channel(inputs={list(self.input_labels)}, "
            f"outputs={list(self.output_labels)}, rows={self.matrix.tolist()})"
        )

    def to_dict(self) -> dict:
        return {
            "inputs": list(self.input_labels),
            "outputs": list(self.output_labels),
            "rows": self.matrix.tolist(),
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "Channel":
        try:
            return validate_channel(obj["rows"], obj["inputs"], obj["outputs"])
        except (KeyError, TypeError) as exc:
            raise ChannelError(f"bad channel object: {exc}") from exc


@dataclass(frozen=True, eq=False)
class JointDecomposition:
    """Output marginal p(y) and the posterior over secrets for each y with p(y) > 0."""

    output_marginal: np.ndarray
    output_labels: tuple[str, ...]
    posteriors: dict[str, Prior]


def validate_channel(matrix, input_labels, output_labels) -> Channel:
    try:
        m = np.asarray(matrix, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ChannelError(f"channel rows are not a rectangular numeric array: {exc}") from exc
    return Channel(m, tuple(input_labels), tuple(output_labels))


def pad_compatible(channels: Sequence[Channel]) -> list[Channel]:
    """Extend every channel with zero columns so all share the union of outputs.

    The union keeps first-appearance order across the list.
    """
    if not channels:
        return []
    inputs = channels[0].input_labels
    for ch in channels[1:]:
        if ch.input_labels != inputs:
            raise ChannelError("channels have different input labels")
    union: dict[str, None] = {}
    for ch in channels:
        union.update(dict.fromkeys(ch.output_labels))
    outs = tuple(union)
    col = {lab: j for j, lab in enumerate(outs)}
    padded = []
    for ch in channels:
        if ch.output_labels == outs:
            padded.append(ch)
            continue
        m = np.zeros((len(inputs), len(outs)))
        m[:, [col[lab] for lab in ch.output_labels]] = ch.matrix
        padded.append(Channel(m, inputs, outs))
    return padded


def compose_convex(channels: Sequence[Channel], weights) -> Channel:
    """Entry-wise mixture sum_i w_i C_i of compatible channels."""
    w = np.asarray(weights, dtype=float)
    if len(channels) == 0 or w.shape != (len(channels),):
        raise ChannelError(f"need one weight per channel, got {w.shape} for {len(channels)}")
    _check_distribution(w, "mixing weights")
    first = channels[0]
    for ch in channels[1:]:
        if ch.input_labels != first.input_labels or ch.output_labels != first.output_labels:
            raise ChannelError("channels are not compatible; pad them first")
    stack = np.stack([ch.matrix for ch in channels])
    mixed = np.tensordot(w, stack, axes=1)
    # guard against 1+ulp overshoot from accumulation
    np.clip(mixed, 0.0, 1.0, out=mixed)
    return Channel(mixed, first.input_labels, first.output_labels)


def joint_matrix(prior: Prior, channel: Channel) -> np.ndarray:
    """p(x, y) = pi(x) C(x, y)."""
    if prior.labels != channel.input_labels:
        raise ChannelError("prior labels do not match channel inputs")
    return prior.probs[:, None] * channel.matrix


def decompose(prior: Prior, channel: Channel) -> JointDecomposition:
    joint = joint_matrix(prior, channel)
    py = joint.sum(axis=0)
    posteriors = {}
    for j, lab in enumerate(channel.output_labels):
        if py[j] <= 0:
            continue
        post = joint[:, j] / py[j]
        # renormalise away rounding so the posterior passes validation
        posteriors[lab] = Prior(post / post.sum(), prior.labels)
    return JointDecomposition(_frozen(py), channel.output_labels, posteriors)
