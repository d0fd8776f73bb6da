"""Tabular Q-learning over (grid position, binned belief vector).

Belief vectors are truncated to a fixed number of decimals so they can key
a finite table; missing entries read as zeros.  Action selection is
epsilon-greedy with a uniform tie-break among maximal entries, and epsilon
decays linearly over a fixed number of agent steps, then stays constant.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .worlds import ACTIONS

N_ACTIONS = len(ACTIONS)


def bin_belief(belief: np.ndarray, decimals: int = 2) -> tuple:
    """Componentwise floor(b * 10^d) as an int tuple (hash-friendly)."""
    scale = 10 ** decimals
    return tuple(int(b * scale) for b in belief)


@dataclass
class ExplorationSchedule:
    start: float = 1.0
    end: float = 0.1
    decay_steps: int = 2000

    def epsilon(self, step: int) -> float:
        if step >= self.decay_steps:
            return self.end
        frac = step / self.decay_steps
        return self.start + (self.end - self.start) * frac


class QTable:
    """Zero-initialised action values keyed by (position, binned belief)."""

    def __init__(self, decimals: int = 2):
        self.decimals = decimals
        self.table: dict = {}

    def key(self, state, belief) -> tuple:
        return (state, bin_belief(belief, self.decimals))

    def values(self, state, belief):
        return self.table.get(self.key(state, belief), _ZEROS)

    def reset(self):
        self.table.clear()

    def __len__(self):
        return len(self.table)

    def dump(self, path):
        """One line per key: ``x y b0,b1,... q_up q_down q_left q_right``."""
        with open(path, "w") as fh:
            for ((x, y), bins), q in sorted(self.table.items()):
                bins_s = ",".join(str(b) for b in bins)
                q_s = " ".join(repr(v) for v in q)
                fh.write(f"{x} {y} {bins_s} {q_s}\n")


_ZEROS = (0.0,) * N_ACTIONS


def select_action(q: QTable, state, belief, epsilon: float,
                  rng: np.random.Generator) -> int:
    """Epsilon-greedy with uniform tie-break over maximal entries."""
    if rng.random() < epsilon:
        return int(rng.integers(N_ACTIONS))
    values = q.values(state, belief)
    best = max(values)
    ties = [a for a in range(N_ACTIONS) if values[a] == best]
    if len(ties) == 1:
        return ties[0]
    return ties[int(rng.integers(len(ties)))]


def q_update(q: QTable, state, b_prev, action: int, r_total: float,
             next_state, b_next, alpha: float, gamma: float,
             terminal: bool) -> None:
    """One-step update toward r + gamma * max_a' q(s', b', a'); the
    bootstrap term is dropped on terminal transitions."""
    key = q.key(state, b_prev)
    old = q.table.get(key)
    if old is None:
        old = list(_ZEROS)
        q.table[key] = old
    bootstrap = 0.0 if terminal else max(q.values(next_state, b_next))
    old[action] += alpha * (r_total + gamma * bootstrap - old[action])
