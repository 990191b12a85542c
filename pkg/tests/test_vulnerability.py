import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from leakgame.channel import Channel, Prior, compose_convex
from leakgame.vulnerability import (
    Bayes,
    CustomConvex,
    GVulnerability,
    NotConvexError,
    column_max_vulnerability,
    expected_posterior,
    guessing_measure,
    leakage,
    measure_from_json,
    posterior_vulnerability,
    prior_vulnerability,
    shannon_measure,
)
from oracles import bayes_posterior_loop, posterior_by_bayes_rule

XS = ("0", "1")
UNIFORM = Prior.uniform(XS)


def _instance(rng, n=None, m=None):
    n = n or int(rng.integers(1, 6))
    m = m or int(rng.integers(1, 6))
    xs = tuple(map(str, range(n)))
    mat = rng.uniform(size=(n, m)) ** 3
    mat /= mat.sum(axis=1, keepdims=True)
    return Prior(rng.dirichlet(np.ones(n)), xs), Channel(mat, xs, tuple(map(str, range(m))))


def mixed_defender_channel(p):
    """p * C00 + (1 - p) * C10 for the millionaires channels."""
    return Channel([[1, 0], [1 - p, p]], XS, ("T", "F"))


class TestPriorVulnerability:
    def test_uniform(self):
        assert prior_vulnerability(Bayes(), UNIFORM) == 0.5

    def test_max_entry(self):
        assert prior_vulnerability(Bayes(), Prior([0.25, 0.75], XS)) == 0.75

    def test_identity_gain_equals_bayes(self, rng):
        for _ in range(100):
            n = int(rng.integers(1, 7))
            labels = tuple(map(str, range(n)))
            prior = Prior(rng.dirichlet(np.ones(n)), labels)
            g = GVulnerability.identity(labels)
            brute = max(sum((1.0 if w == x else 0.0) * prior.probs[x] for x in range(n)) for w in range(n))
            assert prior_vulnerability(g, prior) == pytest.approx(brute, abs=1e-15)
            assert prior_vulnerability(g, prior) == prior_vulnerability(Bayes(), prior)


class TestPosteriorVulnerability:
    def test_identity_channel(self):
        assert posterior_vulnerability(Bayes(), UNIFORM, Channel(np.eye(2), XS, ("T", "F"))) == 1.0

    def test_constant_channel(self):
        ch = Channel([[1, 0], [1, 0]], XS, ("T", "F"))
        assert posterior_vulnerability(Bayes(), UNIFORM, ch) == 0.5

    @pytest.mark.parametrize("p", [0.0, 0.25, 0.5, 1.0])
    def test_mixed_millionaires_channel(self, p):
        value = posterior_vulnerability(Bayes(), UNIFORM, mixed_defender_channel(p))
        assert value == pytest.approx((1 + p) / 2, abs=1e-15)

    @pytest.mark.parametrize("p", [0.2, 0.5, 0.9])
    def test_mixed_binary_sum_channel(self, p):
        ch = compose_convex(
            [Channel(np.eye(2), XS, ("0", "1")), Channel([[0, 1], [1, 0]], XS, ("0", "1"))], [p, 1 - p]
        )
        assert posterior_vulnerability(Bayes(), UNIFORM, ch) == pytest.approx(max(p, 1 - p), abs=1e-15)

    def test_closed_form_matches_expectation_1000(self, rng):
        for _ in range(1000):
            prior, ch = _instance(rng)
            closed = posterior_vulnerability(Bayes(), prior, ch)
            assert closed == pytest.approx(expected_posterior(Bayes(), prior, ch), abs=1e-12)
            assert closed == pytest.approx(bayes_posterior_loop(prior.probs, ch.matrix.tolist()), abs=1e-12)

    def test_g_closed_form_matches_expectation(self, rng):
        for _ in range(200):
            prior, ch = _instance(rng)
            n = len(prior)
            gain = rng.uniform(-1, 2, size=(int(rng.integers(1, 5)), n))
            g = GVulnerability(tuple(f"w{i}" for i in range(len(gain))), gain)
            ref = posterior_by_bayes_rule(prior.probs, ch.matrix.tolist(), lambda p: max(gain @ np.array(p)))
            assert posterior_vulnerability(g, prior, ch) == pytest.approx(ref, abs=1e-12)

    @given(st.integers(0, 2**32 - 1))
    @settings(max_examples=200, deadline=None)
    def test_bayes_bounds(self, seed):
        prior, ch = _instance(np.random.default_rng(seed))
        v = posterior_vulnerability(Bayes(), prior, ch)
        assert prior.probs.max() - 1e-12 <= v <= 1 + 1e-12

    @pytest.mark.parametrize(
        "measure",
        [Bayes(), shannon_measure(), guessing_measure()],
        ids=["bayes", "shannon", "guessing"],
    )
    def test_observation_never_lowers_vulnerability(self, measure, rng):
        for _ in range(300):
            prior, ch = _instance(rng)
            assert posterior_vulnerability(measure, prior, ch) >= prior_vulnerability(measure, prior) - 1e-9


class TestColumnMax:
    def test_identity(self):
        assert column_max_vulnerability(Channel(np.eye(2), XS, ("a", "b"))) == 1.0

    def test_single_output(self):
        assert column_max_vulnerability(Channel([[1.0], [1.0]], XS, ("a",))) == 0.5

    def test_attacker_switch_channel(self):
        # (2 - p) / 2 at p = 0.25: p * C01 + (1 - p) * C11
        ch = Channel([[0.25, 0.75], [1, 0]], XS, ("T", "F"))
        assert column_max_vulnerability(ch) == pytest.approx(0.875, abs=1e-15)

    def test_agrees_with_bayes_under_uniform(self, rng):
        for _ in range(100):
            prior, ch = _instance(rng)
            uniform = Prior.uniform(prior.labels)
            assert column_max_vulnerability(ch) == pytest.approx(posterior_vulnerability(Bayes(), uniform, ch))


class TestLeakage:
    def test_full_revelation(self):
        rep = leakage(Bayes(), UNIFORM, Channel(np.eye(2), XS, ("a", "b")))
        assert rep.additive == pytest.approx(0.5)
        assert rep.multiplicative == pytest.approx(2.0)

    @pytest.mark.parametrize("measure", [Bayes(), shannon_measure(), guessing_measure()])
    def test_constant_channel_leaks_nothing(self, measure, rng):
        for _ in range(20):
            n = int(rng.integers(1, 5))
            labels = tuple(map(str, range(n)))
            prior = Prior(rng.dirichlet(np.ones(n)), labels)
            rep = leakage(measure, prior, Channel(np.ones((n, 1)), labels, ("y",)))
            assert rep.additive == pytest.approx(0.0, abs=1e-12)
            if rep.multiplicative is not None:
                assert rep.multiplicative == pytest.approx(1.0, abs=1e-12)

    def test_half_mixed_defender(self):
        rep = leakage(Bayes(), UNIFORM, mixed_defender_channel(0.5))
        assert rep.additive == pytest.approx(0.25, abs=1e-15)

    def test_zero_prior_vulnerability_has_no_ratio(self):
        g = GVulnerability(("w",), np.zeros((1, 2)))
        assert leakage(g, UNIFORM, Channel(np.eye(2), XS, ("a", "b"))).multiplicative is None


class TestIndependenceCounterexample:
    eps = 0.01

    def channels(self):
        e = self.eps
        c1 = Channel([[1 - e, e], [e, 1 - e]], XS, ("0", "1"))
        c2 = Channel(np.eye(2), XS, ("0", "1"))
        c3 = Channel([[0, 1], [1, 0]], XS, ("0", "1"))
        return c1, c2, c3

    def test_ordering_reverses_under_mixing(self):
        c1, c2, c3 = self.channels()
        v = lambda ch: posterior_vulnerability(Bayes(), UNIFORM, ch)  # noqa: E731
        assert v(c1) < v(c2)
        mix13 = v(compose_convex([c1, c3], [0.5, 0.5]))
        mix23 = v(compose_convex([c2, c3], [0.5, 0.5]))
        assert mix13 > mix23
        assert mix13 == pytest.approx((1 + self.eps) / 2, abs=1e-15)
        assert mix23 == pytest.approx(0.5, abs=1e-15)


class TestCustomConvex:
    @pytest.mark.parametrize("measure", [shannon_measure(), guessing_measure()])
    def test_builtin_measures_pass(self, measure):
        measure.spot_check(4)

    def test_concave_measure_rejected(self):
        entropy = CustomConvex(lambda p: -float(np.sum(p[p > 0] * np.log(p[p > 0]))), "entropy")
        with pytest.raises(NotConvexError):
            entropy.spot_check(3)

    def test_guessing_values(self):
        assert guessing_measure().value(np.array([0.2, 0.5, 0.3])) == pytest.approx(-(0.5 + 2 * 0.3 + 3 * 0.2))

    def test_not_serialisable(self):
        with pytest.raises(TypeError):
            shannon_measure().to_json()


class TestMeasureJson:
    def test_round_trip(self):
        g = GVulnerability(("a", "b"), [[1, 0.5], [0, 2]])
        assert measure_from_json(g.to_json()) == g
        assert measure_from_json(Bayes().to_json()) == Bayes()

    def test_unknown(self):
        with pytest.raises(ValueError):
            measure_from_json("shannon")
