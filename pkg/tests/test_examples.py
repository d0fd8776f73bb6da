"""Sampling, prefix generation and consolidation of weighted examples."""

import math

import numpy as np
import pytest

from beliefrm.events import TraceOutcome, compress, make_alphabet, prob_label
from beliefrm.examples import (WeightedExample, consolidate,
                               incomplete_prefixes, load_pool,
                               merge_duplicates, parse_example, sample_body,
                               sample_example, save_pool)
from beliefrm.sensors import label_probability

AL = make_alphabet(["coffee", "office"])
G, D, I = TraceOutcome.GOAL, TraceOutcome.DEADEND, TraceOutcome.INCOMPLETE

# the two-proposition noisy goal trace used throughout:
# mostly-quiet steps, coffee spike at steps 2-3, office spike at step 5
NOISY = [
    prob_label(AL, coffee=0.01, office=0.01),
    prob_label(AL, coffee=0.9, office=0.01),
    prob_label(AL, coffee=0.9, office=0.01),
    prob_label(AL, coffee=0.01, office=0.01),
    prob_label(AL, coffee=0.01, office=0.9),
]


class TestSampleExample:
    def test_deterministic_when_probs_are_crisp(self):
        trace = [prob_label(AL), prob_label(AL, coffee=1.0),
                 prob_label(AL, coffee=1.0), prob_label(AL),
                 prob_label(AL, office=1.0)]
        ex = sample_example(trace, G, np.random.default_rng(0))
        assert ex.body == (0, AL.label("coffee"), 0, AL.label("office"))
        assert ex.penalty == 1.0 and ex.outcome is G

    def test_bodies_are_compressed(self):
        rng = np.random.default_rng(1)
        for _ in range(100):
            body = sample_body(NOISY, rng)
            assert compress(body) == body

    def test_expected_sample_shape(self):
        """With the spike pattern above, the most likely body is
        (empty, coffee, empty, office)."""
        rng = np.random.default_rng(2)
        bodies = [sample_body(NOISY, rng) for _ in range(2000)]
        top = max(set(bodies), key=bodies.count)
        assert top == (0, AL.label("coffee"), 0, AL.label("office"))

    def test_step_marginal_matches_label_probability(self):
        """Empirical frequency of drawing exactly {coffee} at step 2 must
        match the independent-product probability 0.9 * 0.99."""
        rng = np.random.default_rng(3)
        n = 10_000
        hits = 0
        for _ in range(n):
            draws = rng.random(2) < NOISY[1]
            label = int(draws[0]) | int(draws[1]) << 1
            hits += label == AL.label("coffee")
        expected = label_probability(NOISY[1], AL.label("coffee"))
        assert expected == pytest.approx(0.891)
        assert hits / n == pytest.approx(expected, abs=0.02)

    def test_empty_trace_rejected(self):
        with pytest.raises(ValueError):
            sample_example([], G, np.random.default_rng(0))


class TestIncompletePrefixes:
    def test_all_proper_prefixes(self):
        out = incomplete_prefixes(NOISY, np.random.default_rng(4), "all")
        assert len(out) == 4
        assert all(ex.outcome is I for ex in out)

    def test_single_step_trace_has_none(self):
        assert incomplete_prefixes(NOISY[:1], np.random.default_rng(5)) == []

    def test_subsample_deterministic(self):
        a = incomplete_prefixes(NOISY, np.random.default_rng(6), 2)
        b = incomplete_prefixes(NOISY, np.random.default_rng(6), 2)
        assert len(a) == 2
        assert [x.body for x in a] == [x.body for x in b]

    def test_default_caps_at_four(self):
        long_trace = NOISY * 3
        out = incomplete_prefixes(long_trace, np.random.default_rng(7))
        assert len(out) == 4


class TestConsolidate:
    def test_identical_examples_merge(self):
        body = (0, AL.label("coffee"))
        pool = [WeightedExample(1.0, G, body) for _ in range(3)]
        merged = merge_duplicates(pool)
        assert len(merged) == 1 and merged[0].penalty == 3.0

    def test_classes_balanced(self):
        pool = (
            [WeightedExample(1.0, G, (AL.label("coffee"),))] * 10
            + [WeightedExample(1.0, I, (0,))] * 5
        )
        out = consolidate(pool)
        mass = {}
        for ex in out:
            mass[ex.outcome] = mass.get(ex.outcome, 0.0) + ex.penalty
        assert mass[G] == pytest.approx(mass[I], abs=1e-9)
        assert mass[G] + mass[I] == pytest.approx(15.0)

    def test_empty_pool(self):
        assert consolidate([]) == []

    def test_idempotent(self):
        rng = np.random.default_rng(8)
        pool = [
            WeightedExample(1.0, [G, D, I][int(rng.integers(3))],
                            tuple(int(x) for x in rng.integers(0, 3, 3)
                                  if True))
            for _ in range(50)
        ]
        pool = [WeightedExample(ex.penalty, ex.outcome, compress(ex.body))
                for ex in pool]
        once = consolidate(pool)
        twice = consolidate(once)
        assert [(e.outcome, e.body) for e in once] == \
            [(e.outcome, e.body) for e in twice]
        for a, b in zip(once, twice):
            assert a.penalty == pytest.approx(b.penalty)

    def test_merge_preserves_class_mass(self):
        rng = np.random.default_rng(9)
        bodies = [(0,), (AL.label("coffee"),), (0, AL.label("office"))]
        pool = [
            WeightedExample(float(rng.integers(1, 4)), G,
                            bodies[int(rng.integers(3))])
            for _ in range(30)
        ]
        merged = merge_duplicates(pool)
        assert sum(e.penalty for e in merged) == \
            pytest.approx(sum(e.penalty for e in pool))

    def test_infinite_penalties_untouched(self):
        pool = [WeightedExample(math.inf, G, (AL.label("coffee"),)),
                WeightedExample(2.0, I, (0,))]
        out = consolidate(pool)
        pens = {ex.outcome: ex.penalty for ex in out}
        assert math.isinf(pens[G]) and pens[I] == pytest.approx(2.0)


class TestPoolFiles:
    def test_roundtrip(self, tmp_path):
        pool = [
            WeightedExample(2.5, G, (0, AL.label("coffee"),
                                     AL.label("office"))),
            WeightedExample(1.0, I, (0,)),
            WeightedExample(math.inf, D, (AL.label("coffee", "office"),)),
        ]
        path = tmp_path / "pool.txt"
        save_pool(path, AL, pool)
        back = load_pool(path, AL)
        assert back == pool

    def test_parse_format(self):
        ex = parse_example(AL, "G;3.0;-|coffee")
        assert ex == WeightedExample(3.0, G, (0, AL.label("coffee")))
