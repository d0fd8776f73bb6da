"""Reward machines: guarded transitions, belief filtering and reward shaping.

A machine is a deterministic finite-state automaton whose edges are guarded
by conjunctions of proposition literals.  Any label satisfying no explicit
guard self-loops with reward 0; the accepting and rejecting states are
absorbing.  Under probabilistic labels the current state is replaced by a
belief vector, updated exactly by marginalising over the propositions that
appear in some guard (the rest integrate out to 1).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .events import Alphabet, Label
from .sensors import label_probability


class IllFormedMachineError(ValueError):
    """Two guards of the same state matched one label."""


@dataclass(frozen=True)
class Guard:
    """Conjunction of positive and negated proposition ids."""

    positive: frozenset
    negative: frozenset

    def __post_init__(self):
        if self.positive & self.negative:
            raise ValueError("a literal cannot be both positive and negative")

    def satisfied_by(self, label: Label) -> bool:
        for p in self.positive:
            if not label >> p & 1:
                return False
        for p in self.negative:
            if label >> p & 1:
                return False
        return True

    def mutually_exclusive_with(self, other: "Guard") -> bool:
        """Syntactic check: the pair shares a complementary literal."""
        return bool(self.positive & other.negative or self.negative & other.positive)

    @property
    def literals(self) -> int:
        return len(self.positive) + len(self.negative)

    def format(self, alphabet: Alphabet) -> str:
        parts = [alphabet.names[p] for p in sorted(self.positive)]
        parts += ["!" + alphabet.names[p] for p in sorted(self.negative)]
        return ",".join(parts) if parts else "-"

    @classmethod
    def parse(cls, alphabet: Alphabet, text: str) -> "Guard":
        pos, neg = set(), set()
        if text != "-":
            for lit in text.split(","):
                if lit.startswith("!"):
                    neg.add(alphabet.index(lit[1:]))
                else:
                    pos.add(alphabet.index(lit))
        return cls(frozenset(pos), frozenset(neg))


def guard(alphabet: Alphabet, *literals: str) -> Guard:
    """Build a guard from names, ``!name`` for negated literals."""
    pos, neg = set(), set()
    for lit in literals:
        if lit.startswith("!"):
            neg.add(alphabet.index(lit[1:]))
        else:
            pos.add(alphabet.index(lit))
    return Guard(frozenset(pos), frozenset(neg))


class RewardMachine:
    """Deterministic reward machine with absorbing accept/reject sinks.

    ``edges`` maps a state id to an ordered list of (Guard, successor)
    pairs; ``rewards`` maps (from, to) pairs to reals and defaults to 0.
    Determinism is verified syntactically at construction: every pair of
    guards leaving one state must share a complementary literal.
    """

    def __init__(self, alphabet: Alphabet, n_states: int, u0: int, uA: int,
                 uR: int, edges=None, rewards=None):
        self.alphabet = alphabet
        self.n_states = n_states
        self.u0 = u0
        self.uA = uA
        self.uR = uR
        self.edges = {u: list(outs) for u, outs in (edges or {}).items()}
        self.rewards = dict(rewards or {})
        self._validate()
        self._engine = None

    def _validate(self):
        for u in (self.u0, self.uA, self.uR):
            if not 0 <= u < self.n_states:
                raise ValueError(f"state id {u} out of range")
        if self.uA == self.uR:
            raise ValueError("accepting and rejecting states must differ")
        for u, outs in self.edges.items():
            if u in (self.uA, self.uR) and outs:
                raise ValueError("sink states cannot have outgoing edges")
            for _, v in outs:
                if not 0 <= v < self.n_states:
                    raise ValueError(f"edge target {v} out of range")
            for i in range(len(outs)):
                for j in range(i + 1, len(outs)):
                    if not outs[i][0].mutually_exclusive_with(outs[j][0]):
                        raise ValueError(
                            f"guards {i} and {j} of state {u} are not "
                            "syntactically mutually exclusive"
                        )

    # --- crisp traversal --------------------------------------------------

    def step(self, state: int, label: Label):
        """Successor state and transition reward for one label."""
        if not 0 <= state < self.n_states:
            raise ValueError(f"state id {state} out of range")
        if state in (self.uA, self.uR):
            return state, self.rewards.get((state, state), 0.0)
        matched = None
        for g, v in self.edges.get(state, ()):
            if g.satisfied_by(label):
                if matched is not None:
                    raise IllFormedMachineError(
                        f"state {state} has two guards satisfied by label {label:#x}"
                    )
                matched = v
        nxt = state if matched is None else matched
        return nxt, self.rewards.get((state, nxt), 0.0)

    def traverse(self, trace):
        """State sequence v0..v_n visited while consuming ``trace``."""
        states = [self.u0]
        for label in trace:
            states.append(self.step(states[-1], label)[0])
        return states

    def classify(self, trace):
        """Outcome class of the final traversal state: 'G', 'D' or 'I'."""
        final = self.traverse(trace)[-1]
        if final == self.uA:
            return "G"
        if final == self.uR:
            return "D"
        return "I"

    # --- belief filtering ---------------------------------------------------

    @property
    def relevant_props(self):
        """Sorted proposition ids mentioned by at least one guard."""
        props = set()
        for outs in self.edges.values():
            for g, _ in outs:
                props |= g.positive | g.negative
        return sorted(props)

    def engine(self) -> "BeliefEngine":
        if self._engine is None:
            self._engine = BeliefEngine(self)
        return self._engine

    def initial_belief(self) -> np.ndarray:
        b = np.zeros(self.n_states)
        b[self.u0] = 1.0
        return b

    # --- potentials ---------------------------------------------------------

    def potential(self) -> np.ndarray:
        """Phi(u) = |U| - min distance to the accepting state, -inf where
        the accepting state is unreachable.  Distances follow explicit
        guard edges only (implicit self-loops never shorten a path)."""
        dist = np.full(self.n_states, np.inf)
        dist[self.uA] = 0.0
        preds = {u: set() for u in range(self.n_states)}
        for u, outs in self.edges.items():
            for _, v in outs:
                if v != u:
                    preds[v].add(u)
        frontier = [self.uA]
        while frontier:
            nxt = []
            for v in frontier:
                for u in preds[v]:
                    if dist[u] == np.inf:
                        dist[u] = dist[v] + 1.0
                        nxt.append(u)
            frontier = nxt
        phi = self.n_states - dist
        return phi

    def default_shaping_floor(self) -> float:
        return -10.0 * self.n_states

    # --- serialization --------------------------------------------------------
    #
    # Header ``states N u0 uA uR`` then one line per edge
    # ``from to reward lit[,lit...]`` (guard ``-`` when literal-free).
    # The printer is canonical: edges sorted by (from, to, guard text).

    def serialize(self) -> str:
        lines = [f"states {self.n_states} {self.u0} {self.uA} {self.uR}"]
        rows = []
        for u, outs in self.edges.items():
            for g, v in outs:
                rows.append((u, v, g.format(self.alphabet)))
        rows.sort()
        for u, v, gtext in rows:
            r = self.rewards.get((u, v), 0.0)
            lines.append(f"{u} {v} {r!r} {gtext}")
        return "\n".join(lines) + "\n"

    @classmethod
    def parse(cls, alphabet: Alphabet, text: str) -> "RewardMachine":
        lines = [ln for ln in text.strip().splitlines() if ln.strip()]
        if not lines or not lines[0].startswith("states "):
            raise ValueError("missing 'states N u0 uA uR' header")
        _, n, u0, uA, uR = lines[0].split()
        edges: dict = {}
        rewards = {}
        for ln in lines[1:]:
            u_s, v_s, r_s, gtext = ln.split(None, 3)
            u, v = int(u_s), int(v_s)
            edges.setdefault(u, []).append((Guard.parse(alphabet, gtext), v))
            r = float(r_s)
            if r != 0.0:
                rewards[(u, v)] = r
        return cls(alphabet, int(n), int(u0), int(uA), int(uR), edges, rewards)

    def __eq__(self, other):
        return (
            isinstance(other, RewardMachine)
            and self.alphabet == other.alphabet
            and self.serialize() == other.serialize()
        )

    def __repr__(self):
        return (
            f"RewardMachine(n_states={self.n_states}, "
            f"edges={sum(len(o) for o in self.edges.values())})"
        )


class BeliefEngine:
    """Precomputed tables for exact belief filtering on one machine.

    The label sum of the belief update runs only over the propositions that
    occur in some guard; all other propositions marginalise to 1, which is
    exact because successors do not depend on them.
    """

    def __init__(self, rm: RewardMachine):
        self.rm = rm
        self.relevant = np.array(rm.relevant_props, dtype=np.intp)
        k = len(self.relevant)
        n = rm.n_states
        succ = np.empty((n, 1 << k), dtype=np.intp)
        for u in range(n):
            for idx in range(1 << k):
                label = 0
                for i, p in enumerate(self.relevant):
                    if idx >> i & 1:
                        label |= 1 << int(p)
                succ[u, idx] = rm.step(u, label)[0]
        self.succ = succ
        self.phi = rm.potential()

    def belief_step(self, belief: np.ndarray, pl: np.ndarray) -> np.ndarray:
        out = np.zeros_like(belief)
        rel_probs = np.ascontiguousarray(pl[self.relevant])
        _kernels.belief_step(belief, rel_probs, self.succ, out)
        return out

    def belief_potential(self, belief: np.ndarray, floor=None) -> float:
        if floor is None:
            floor = self.rm.default_shaping_floor()
        return _kernels.belief_potential(belief, self.phi, floor)

    def shaped_reward(self, b_prev, b_next, gamma: float, floor=None) -> float:
        return gamma * self.belief_potential(b_next, floor) - self.belief_potential(
            b_prev, floor
        )


def belief_step(rm: RewardMachine, belief: np.ndarray, pl: np.ndarray) -> np.ndarray:
    return rm.engine().belief_step(belief, pl)


def belief_step_brute(rm: RewardMachine, belief, pl) -> np.ndarray:
    """Reference belief update summing over all 2^|P| labels (test oracle)."""
    n_props = len(rm.alphabet)
    out = np.zeros_like(belief)
    for label in range(1 << n_props):
        w = label_probability(pl, label)
        if w == 0.0:
            continue
        for u in range(rm.n_states):
            if belief[u] != 0.0:
                out[rm.step(u, label)[0]] += w * belief[u]
    return out


def shaped_reward(rm: RewardMachine, b_prev, b_next, gamma: float, floor=None) -> float:
    """Potential-based shaping on beliefs: gamma * Phi(b') - Phi(b), where
    Phi(b) is the belief-weighted state potential (0 mass on a -inf state
    contributes 0) clamped below at ``floor``."""
    return rm.engine().shaped_reward(b_prev, b_next, gamma, floor)


def threshold_step(rm: RewardMachine, state: int, pl: np.ndarray,
                   threshold: float) -> int:
    """Crisp traversal of a probabilistic label: every proposition whose
    posterior exceeds the threshold is treated as true."""
    if not 0.0 < threshold < 1.0:
        raise ValueError("threshold must lie in (0, 1)")
    return rm.step(state, threshold_label(pl, threshold))[0]


def threshold_label(pl: np.ndarray, threshold: float) -> Label:
    label = 0
    for i in range(len(pl)):
        if pl[i] > threshold:
            label |= 1 << i
    return label


def most_likely_state(belief: np.ndarray) -> int:
    """Argmax with ties broken toward the lowest state id."""
    return int(np.argmax(belief))


def is_terminal_belief(rm: RewardMachine, belief: np.ndarray) -> bool:
    return most_likely_state(belief) in (rm.uA, rm.uR)


def loop_machine(alphabet: Alphabet) -> RewardMachine:
    """Edge-free three-state machine: the starting hypothesis before any
    induction has run.  Never reaches a sink on its own."""
    return RewardMachine(alphabet, 3, u0=0, uA=1, uR=2)
