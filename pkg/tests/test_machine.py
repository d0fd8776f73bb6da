"""Reward machine traversal, belief filtering, potentials and shaping."""

import numpy as np
import pytest

from _gen import random_machine
from beliefrm.events import exact_prob_label, make_alphabet
from beliefrm.machine import (Guard, IllFormedMachineError, RewardMachine,
                              belief_step, belief_step_brute, guard,
                              is_terminal_belief, loop_machine,
                              most_likely_state, shaped_reward,
                              threshold_label, threshold_step)
from beliefrm.worlds import OFFICE_ALPHABET as AL
from beliefrm.worlds import make_task

COFFEE = make_task("coffee")
EMPTY = AL.label()
CUP = AL.label("coffee")
OFFICE = AL.label("office")
DECO = AL.label("deco")


class TestGuards:
    def test_overlapping_literals_rejected(self):
        with pytest.raises(ValueError):
            Guard(frozenset({1}), frozenset({1}))

    def test_format_parse_roundtrip(self):
        g = guard(AL, "coffee", "!office", "!deco")
        assert Guard.parse(AL, g.format(AL)) == g
        assert Guard.parse(AL, "-") == guard(AL)


class TestStep:
    def test_coffee_advances(self):
        assert COFFEE.step(0, CUP) == (1, 0.0)

    def test_otherwise_self_loop(self):
        assert COFFEE.step(1, EMPTY) == (1, 0.0)

    def test_accepting_absorbs(self):
        for lab in (EMPTY, CUP, DECO):
            assert COFFEE.step(2, lab) == (2, 0.0)

    def test_decoration_rejects(self):
        nxt, r = COFFEE.step(0, DECO)
        assert nxt == COFFEE.uR and r == 0.0

    def test_direct_goal_pays_one(self):
        assert COFFEE.step(1, OFFICE) == (2, 1.0)

    def test_runtime_determinism_guard(self):
        rm = make_task("coffee")
        # bypass construction-time validation to hit the runtime check
        rm.edges[0].append((guard(AL, "coffee"), 3))
        with pytest.raises(IllFormedMachineError):
            rm.step(0, CUP)

    def test_construction_rejects_overlapping_guards(self):
        with pytest.raises(ValueError):
            RewardMachine(AL, 3, 0, 1, 2, {0: [(guard(AL, "coffee"), 1),
                                               (guard(AL, "office"), 2)]})

    def test_sinks_cannot_have_edges(self):
        with pytest.raises(ValueError):
            RewardMachine(AL, 3, 0, 1, 2, {1: [(guard(AL, "coffee"), 0)]})


class TestTraverse:
    def test_goal_trace(self):
        trace = (EMPTY, CUP, EMPTY, EMPTY, OFFICE)
        assert COFFEE.traverse(trace) == [0, 0, 1, 1, 1, 2]

    def test_empty_trace(self):
        assert COFFEE.traverse(()) == [0]

    def test_decoration_trace(self):
        assert COFFEE.traverse((DECO,)) == [0, 3]


class TestBeliefStep:
    def test_noise_free_reduces_to_step(self):
        b = COFFEE.initial_belief()
        pl = exact_prob_label(AL, CUP)
        nxt = belief_step(COFFEE, b, pl)
        expected = np.zeros(4)
        expected[1] = 1.0
        np.testing.assert_array_equal(nxt, expected)

    def test_half_coffee_splits_belief(self):
        pl = np.zeros(len(AL))
        pl[AL.index("coffee")] = 0.5
        nxt = belief_step(COFFEE, COFFEE.initial_belief(), pl)
        np.testing.assert_allclose(nxt, [0.5, 0.5, 0.0, 0.0], atol=1e-12)

    def test_absorbing_mass_unchanged(self):
        b = np.array([0.0, 0.0, 0.4, 0.6])
        rng = np.random.default_rng(7)
        for _ in range(10):
            pl = rng.random(len(AL))
            np.testing.assert_allclose(belief_step(COFFEE, b, pl), b,
                                       atol=1e-12)

    def test_matches_brute_force_on_random_machines(self):
        """Marginalising over guard-relevant propositions only must equal
        the full 2^|P| label sum."""
        rng = np.random.default_rng(8)
        for trial in range(30):
            n_props = int(rng.integers(2, 9))
            alphabet = make_alphabet([f"p{i}" for i in range(n_props)])
            rm = random_machine(rng, alphabet, int(rng.integers(0, 4)))
            b = rng.random(rm.n_states)
            b /= b.sum()
            for _ in range(5):
                pl = rng.random(n_props)
                fast = belief_step(rm, b, pl)
                brute = belief_step_brute(rm, b, pl)
                np.testing.assert_allclose(fast, brute, atol=1e-12)
                assert fast.sum() == pytest.approx(1.0, abs=1e-9)
                b = fast

    def test_noise_free_stream_tracks_traversal(self):
        rng = np.random.default_rng(9)
        labels = [EMPTY, CUP, OFFICE, DECO]
        for _ in range(20):
            trace = [labels[int(rng.integers(4))] for _ in range(8)]
            states = COFFEE.traverse(trace)
            b = COFFEE.initial_belief()
            for i, lab in enumerate(trace):
                b = belief_step(COFFEE, b, exact_prob_label(AL, lab))
                assert b[states[i + 1]] == 1.0


class TestPotential:
    def test_coffee_potentials(self):
        phi = COFFEE.potential()
        assert phi[0] == 3.0 and phi[1] == 3.0 and phi[2] == 4.0
        assert phi[3] == -np.inf

    def test_accepting_initial_state(self):
        rm = RewardMachine(AL, 2, 0, 0, 1)
        assert rm.potential()[0] == 2.0

    def test_chain(self):
        edges = {0: [(guard(AL, "coffee"), 1)], 1: [(guard(AL, "office"), 2)]}
        rm = RewardMachine(AL, 4, 0, 2, 3, edges)
        phi = rm.potential()
        assert list(phi[:3]) == [2.0, 3.0, 4.0]

    def test_reachable_values_are_integers_in_range(self):
        rng = np.random.default_rng(10)
        for _ in range(30):
            rm = random_machine(rng, AL, int(rng.integers(0, 4)))
            phi = rm.potential()
            finite = phi[np.isfinite(phi)]
            assert np.all(finite == np.round(finite))
            assert np.all(finite >= 0) and np.all(finite <= rm.n_states)


class TestShapedReward:
    def test_worked_example(self):
        b_prev = np.array([1.0, 0.0, 0.0, 0.0])
        b_next = np.array([0.0, 0.5, 0.5, 0.0])
        r = shaped_reward(COFFEE, b_prev, b_next, 0.9)
        assert r == pytest.approx(0.15, abs=1e-9)

    def test_no_movement_no_reward(self):
        b = np.array([0.0, 1.0, 0.0, 0.0])
        assert shaped_reward(COFFEE, b, b, 1.0) == pytest.approx(0.0)

    def test_telescoping_sum(self):
        """With gamma = 1 the per-step shaping sums to the potential
        difference between the last and first belief."""
        rng = np.random.default_rng(11)
        engine = COFFEE.engine()
        beliefs = [COFFEE.initial_belief()]
        for _ in range(40):
            beliefs.append(engine.belief_step(beliefs[-1], rng.random(len(AL))))
        total = sum(engine.shaped_reward(beliefs[i], beliefs[i + 1], 1.0)
                    for i in range(len(beliefs) - 1))
        expected = (engine.belief_potential(beliefs[-1])
                    - engine.belief_potential(beliefs[0]))
        assert total == pytest.approx(expected, abs=1e-6)

    def test_mass_on_unreachable_state_clamps_to_floor(self):
        b_prev = np.array([1.0, 0.0, 0.0, 0.0])
        b_next = np.array([0.0, 0.0, 0.0, 1.0])  # all mass on the reject sink
        r = shaped_reward(COFFEE, b_prev, b_next, 0.9)
        floor = COFFEE.default_shaping_floor()
        assert r == pytest.approx(0.9 * floor - 3.0)
        assert np.isfinite(r)


class TestThresholding:
    def test_above_threshold_included(self):
        pl = np.zeros(len(AL))
        pl[AL.index("coffee")] = 0.8
        assert threshold_label(pl, 0.7) == CUP
        assert threshold_step(COFFEE, 0, pl, 0.7) == 1

    def test_below_threshold_excluded(self):
        pl = np.zeros(len(AL))
        pl[AL.index("coffee")] = 0.8
        assert threshold_label(pl, 0.9) == EMPTY
        assert threshold_step(COFFEE, 0, pl, 0.9) == 0

    def test_all_zero(self):
        assert threshold_label(np.zeros(len(AL)), 0.5) == EMPTY


class TestBeliefQueries:
    def test_terminal_one_hot(self):
        b = np.array([0.0, 0.0, 1.0, 0.0])
        assert is_terminal_belief(COFFEE, b)

    def test_argmax_not_terminal(self):
        b = np.array([0.4, 0.3, 0.3, 0.0])
        assert most_likely_state(b) == 0
        assert not is_terminal_belief(COFFEE, b)

    def test_tie_breaks_to_lowest_id(self):
        b = np.array([0.5, 0.0, 0.5, 0.0])
        assert most_likely_state(b) == 0


class TestSerialization:
    def test_roundtrip_machines(self):
        rng = np.random.default_rng(12)
        for rm in [COFFEE, make_task("coffeemail"), make_task("visitabcd"),
                   loop_machine(AL)] + [random_machine(rng, AL, k)
                                        for k in (0, 1, 2)]:
            text = rm.serialize()
            back = RewardMachine.parse(AL, text)
            assert back == rm
            assert back.serialize() == text

    def test_rewards_preserved(self):
        back = RewardMachine.parse(AL, COFFEE.serialize())
        assert back.rewards == {(0, 2): 1.0, (1, 2): 1.0}

    def test_missing_header_rejected(self):
        with pytest.raises(ValueError):
            RewardMachine.parse(AL, "0 1 0.0 coffee\n")
