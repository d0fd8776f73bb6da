"""Labels, traces, compression and the trace file format."""

import numpy as np
import pytest

from beliefrm.events import (TraceOutcome, compress, format_noisy_trace,
                             format_symbolic_trace, make_alphabet,
                             parse_noisy_trace, parse_symbolic_trace,
                             prob_label)
from beliefrm.machine import guard

AL = make_alphabet(["coffee", "mail", "office", "A", "B", "C", "D", "deco"])


class TestAlphabet:
    def test_label_roundtrip(self):
        lab = AL.label("coffee", "office")
        assert AL.label_names(lab) == ("coffee", "office")

    def test_unique_names_required(self):
        with pytest.raises(ValueError):
            make_alphabet(["a", "a"])

    def test_cap_at_16(self):
        with pytest.raises(ValueError):
            make_alphabet([f"p{i}" for i in range(17)])
        assert len(make_alphabet([f"p{i}" for i in range(16)])) == 16


class TestCompress:
    def test_consecutive_duplicates_removed(self):
        c, o = AL.label("coffee"), AL.label("office")
        assert compress((0, c, c, 0, o)) == (0, c, 0, o)

    def test_single_element(self):
        assert compress((0,)) == (0,)

    def test_single_run_collapses(self):
        a = AL.label("A")
        assert compress((a, a, a)) == (a,)

    def test_empty(self):
        assert compress(()) == ()

    def test_idempotent_and_shrinking(self):
        rng = np.random.default_rng(0)
        for _ in range(200):
            trace = tuple(int(x) for x in rng.integers(0, 4, size=rng.integers(1, 12)))
            once = compress(trace)
            assert compress(once) == once
            assert len(once) <= len(trace)
            assert once[0] == trace[0] and once[-1] == trace[-1]


class TestGuardSatisfaction:
    def test_positive_and_negatives(self):
        g = guard(AL, "coffee", "!office", "!deco")
        assert g.satisfied_by(AL.label("coffee"))

    def test_empty_guard_vacuous(self):
        g = guard(AL)
        assert g.satisfied_by(0)

    def test_complementary_literal_fails(self):
        g = guard(AL, "coffee", "!deco")
        assert not g.satisfied_by(AL.label("coffee", "deco"))

    def test_monotone_under_weakening(self):
        """Removing any literal from a guard never turns true into false."""
        rng = np.random.default_rng(1)
        names = list(AL.names)
        for _ in range(300):
            lits = list(rng.choice(8, size=rng.integers(1, 5), replace=False))
            signs = rng.random(len(lits)) < 0.5
            literals = [("!" if s else "") + names[l]
                        for l, s in zip(lits, signs)]
            g = guard(AL, *literals)
            label = int(rng.integers(0, 256))
            if not g.satisfied_by(label):
                continue
            for drop in range(len(literals)):
                weaker = guard(AL, *(literals[:drop] + literals[drop + 1:]))
                assert weaker.satisfied_by(label)


class TestTraceFiles:
    def test_symbolic_roundtrip(self):
        trace = (0, AL.label("coffee"), 0, AL.label("office", "deco"))
        line = format_symbolic_trace(AL, TraceOutcome.GOAL, trace)
        assert line.startswith("G;")
        assert "-" in line  # empty steps
        out, back = parse_symbolic_trace(AL, line)
        assert out is TraceOutcome.GOAL
        assert back == trace

    def test_noisy_roundtrip(self):
        trace = [prob_label(AL, coffee=0.9, office=0.01), prob_label(AL)]
        line = format_noisy_trace(AL, TraceOutcome.INCOMPLETE, trace)
        out, back = parse_noisy_trace(AL, line)
        assert out is TraceOutcome.INCOMPLETE
        assert len(back) == 2
        np.testing.assert_array_equal(back[0], trace[0])
        np.testing.assert_array_equal(back[1], trace[1])

    def test_probability_precision_survives(self):
        p = 0.123456789123456789
        trace = [prob_label(AL, mail=p)]
        _, back = parse_noisy_trace(
            AL, format_noisy_trace(AL, TraceOutcome.DEADEND, trace))
        assert back[0][AL.index("mail")] == p

    def test_outcome_letters(self):
        assert TraceOutcome.from_letter("G") is TraceOutcome.GOAL
        assert TraceOutcome.from_letter("D") is TraceOutcome.DEADEND
        assert TraceOutcome.from_letter("I") is TraceOutcome.INCOMPLETE
        with pytest.raises(ValueError):
            TraceOutcome.from_letter("X")

    def test_empty_trace_line(self):
        line = format_symbolic_trace(AL, TraceOutcome.INCOMPLETE, ())
        out, back = parse_symbolic_trace(AL, line)
        assert back == ()
