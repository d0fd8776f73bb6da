"""Machine induction: coverage, scoring, optimal search and its oracle."""

import numpy as np
import pytest

from _gen import (classified_pool, office_walk_pool, random_label_trace,
                  random_machine, small_instance)
from beliefrm.events import TraceOutcome, make_alphabet
from beliefrm.examples import WeightedExample, consolidate
from beliefrm.induction import (EmptyAlphabetError, InductionTask,
                                InstanceTooLargeError, ScoredHypothesis,
                                brute_force_induce, complete_guards, covers,
                                hypothesis_length, induce, score)
from beliefrm.machine import guard
from beliefrm.worlds import OFFICE_ALPHABET, make_task

AL3 = make_alphabet(["a", "b", "c"])
G, D, I = TraceOutcome.GOAL, TraceOutcome.DEADEND, TraceOutcome.INCOMPLETE
COFFEE = make_task("coffee")


def _office(*names):
    return OFFICE_ALPHABET.label(*names)


class TestCovers:
    def test_goal_trace_covered(self):
        ex = WeightedExample(1.0, G, (0, _office("coffee"), 0,
                                      _office("office")))
        assert covers(COFFEE, ex)

    def test_incomplete_covered_mid_machine(self):
        assert covers(COFFEE, WeightedExample(1.0, I, (_office("coffee"),)))

    def test_goal_not_covered_without_progress(self):
        assert not covers(COFFEE, WeightedExample(1.0, G, (_office("office"),)))

    def test_deadend_needs_reject_state(self):
        assert covers(COFFEE, WeightedExample(1.0, D, (_office("deco"),)))
        assert not covers(COFFEE, WeightedExample(1.0, D, (_office("coffee"),)))


class TestScore:
    def test_covering_machine_no_penalty(self):
        _, pool = office_walk_pool("coffee", 50, seed=20)
        task = InductionTask(OFFICE_ALPHABET, consolidate(pool))
        assert score(COFFEE, task).penalty == 0.0

    def test_loop_machine_on_incomplete_pool(self):
        pool = [WeightedExample(1.0, I, (_office("coffee"),))]
        task = InductionTask(OFFICE_ALPHABET, pool)
        hyp = induce(task)
        assert hyp.score == 0.0 and hyp.length == 0.0

    def test_matches_single_pass_recomputation(self):
        """score() must equal an independent one-pass recount."""
        rng = np.random.default_rng(21)
        for trial in range(10):
            gt = random_machine(rng, AL3, int(rng.integers(0, 3)))
            traces = [random_label_trace(rng, 3, int(rng.integers(2, 7)))
                      for _ in range(60)]
            pool = classified_pool(gt, traces)
            task = InductionTask(AL3, pool)
            candidate = random_machine(rng, AL3, int(rng.integers(0, 3)))
            got = score(candidate, task)
            # independent recount
            length = sum(1 + g.literals
                         for outs in candidate.edges.values()
                         for g, _ in outs)
            penalty = 0.0
            for ex in pool:
                final = candidate.traverse(ex.body)[-1]
                ok = {G: final == candidate.uA, D: final == candidate.uR,
                      I: final not in (candidate.uA, candidate.uR)}[ex.outcome]
                penalty += 0.0 if ok else ex.penalty
            assert got.length == length
            assert got.penalty == pytest.approx(penalty)
            assert got.score == pytest.approx(length + penalty)

    def test_length_modes(self):
        assert hypothesis_length(COFFEE, "plus-one") == 15
        assert hypothesis_length(COFFEE, "literals") == 10


class TestCompleteGuards:
    def test_coffee_like_completion(self):
        cup = frozenset({0})
        cup_office = frozenset({0, 2})
        deco = frozenset({7})
        guards = complete_guards([cup, cup_office, deco])
        assert guards[cup] == guard(OFFICE_ALPHABET, "coffee", "!office",
                                    "!deco")
        assert guards[cup_office] == guard(OFFICE_ALPHABET, "coffee",
                                           "office", "!deco")
        assert guards[deco] == guard(OFFICE_ALPHABET, "deco")

    def test_identical_positives_unresolvable(self):
        assert complete_guards([frozenset({1}), frozenset({1})]) is None

    def test_results_pairwise_exclusive(self):
        rng = np.random.default_rng(22)
        for _ in range(100):
            n = int(rng.integers(1, 5))
            bases = set()
            while len(bases) < n:
                bits = rng.random(4) < 0.5
                base = frozenset(int(i) for i in range(4) if bits[i])
                if base:
                    bases.add(base)
            guards = complete_guards(list(bases))
            gs = list(guards.values())
            for i in range(len(gs)):
                for j in range(i + 1, len(gs)):
                    assert gs[i].mutually_exclusive_with(gs[j])


class TestInduce:
    def test_single_goal_example_buys_one_edge(self):
        # penalty must exceed the edge cost for covering to win
        pool = [WeightedExample(10.0, G, (AL3.label("a"),))]
        hyp = induce(InductionTask(AL3, pool))
        assert hyp.score == 2.0 and hyp.penalty == 0.0
        assert hyp.machine.serialize() == "states 3 0 1 2\n0 1 1.0 a\n"

    def test_low_penalty_example_not_worth_an_edge(self):
        pool = [WeightedExample(1.0, G, (AL3.label("a"),))]
        hyp = induce(InductionTask(AL3, pool))
        assert hyp.score == 1.0 and hyp.length == 0.0

    def test_empty_pool_gives_loop_machine(self):
        hyp = induce(InductionTask(AL3, []))
        assert hyp.score == 0.0
        assert hyp.machine.serialize() == "states 3 0 1 2\n"

    def test_empty_alphabet_rejected(self):
        with pytest.raises(EmptyAlphabetError):
            InductionTask(make_alphabet([]), [])

    def test_deterministic(self):
        _, _, _, pool = small_instance(100)
        task = InductionTask(AL3, pool, max_intermediate_states=1)
        a, b = induce(task), induce(task)
        assert a.score == b.score
        assert a.machine.serialize() == b.machine.serialize()

    def test_machines_pass_determinism_validation(self):
        for seed in range(5):
            _, k, _, pool = small_instance(seed, n_traces=80)
            hyp = induce(InductionTask(AL3, pool, max_intermediate_states=k))
            # RewardMachine re-validates mutual exclusivity on parse
            hyp.machine.parse(AL3, hyp.machine.serialize())

    def test_budget_expiry_flags_suboptimal(self):
        _, _, _, pool = small_instance(101, n_traces=300)
        task = InductionTask(AL3, pool, max_intermediate_states=2,
                             budget_seconds=0.0)
        hyp = induce(task)
        assert hyp.suboptimal
        assert isinstance(hyp, ScoredHypothesis)

    def test_matches_oracle_on_random_instances(self):
        for seed in range(10):
            _, k, _, pool = small_instance(seed, n_traces=120)
            task = InductionTask(AL3, pool, max_intermediate_states=k,
                                 budget_seconds=120.0)
            ours = induce(task)
            oracle = brute_force_induce(task)
            assert ours.score == oracle.score, f"seed {seed}"
            assert ours.machine.serialize() == oracle.machine.serialize()

    def test_score_never_beaten_by_ground_truth(self):
        """The optimum is at most the (in-space) generating machine's score."""
        for seed in range(8):
            _, k, gt, pool = small_instance(seed, n_traces=120)
            task = InductionTask(AL3, pool, max_intermediate_states=k)
            hyp = induce(task)
            assert hyp.score <= score(gt, task).score

    def test_monotone_under_added_example(self):
        """opt(T) <= opt(T + e) <= opt(T) + penalty(e) (no rebalancing)."""
        rng = np.random.default_rng(23)
        for seed in range(6):
            _, k, gt, pool = small_instance(seed, n_traces=60)
            base_task = InductionTask(AL3, pool, max_intermediate_states=k)
            base = brute_force_induce(base_task).score
            extra_trace = random_label_trace(rng, 3, 4)
            extra = classified_pool(gt, [extra_trace])[0]
            extra = WeightedExample(2.0, extra.outcome, extra.body)
            bigger = InductionTask(AL3, pool + [extra],
                                   max_intermediate_states=k)
            grown = brute_force_induce(bigger).score
            assert base <= grown <= base + extra.penalty


class TestBruteForce:
    def test_caps_enforced(self):
        big_alphabet = make_alphabet(["a", "b", "c", "d"])
        with pytest.raises(InstanceTooLargeError):
            brute_force_induce(InductionTask(big_alphabet, []))
        with pytest.raises(InstanceTooLargeError):
            brute_force_induce(
                InductionTask(AL3, [], max_intermediate_states=3))

    def test_empty_pool(self):
        hyp = brute_force_induce(InductionTask(AL3, []))
        assert hyp.score == 0.0
        assert hyp.machine.serialize() == "states 3 0 1 2\n"

    def test_single_goal_example(self):
        pool = [WeightedExample(10.0, G, (AL3.label("a"),))]
        hyp = brute_force_induce(InductionTask(AL3, pool))
        assert hyp.machine.serialize() == "states 3 0 1 2\n0 1 1.0 a\n"


class TestCoffeeRecovery:
    def test_recovered_machine_is_outcome_equivalent(self):
        """Noise-free office traces must induce a machine that classifies
        held-out random walks exactly like the handcrafted one."""
        rm_true, pool = office_walk_pool("coffee", 200, seed=24)
        task = InductionTask(OFFICE_ALPHABET, consolidate(pool),
                             max_intermediate_states=2,
                             budget_seconds=120.0)
        hyp = induce(task)
        assert not hyp.suboptimal
        from beliefrm.worlds import canonical_map, random_walk_trace

        grid = canonical_map()
        rng = np.random.default_rng(25)
        for _ in range(300):
            trace, _ = random_walk_trace(grid, rm_true, rng, max_steps=100)
            assert hyp.machine.classify(trace) == rm_true.classify(trace)
