"""Turning noisy traces into weighted classified examples for the inducer.

A finished episode's noisy trace is sampled into a crisp symbolic body via
per-proposition Bernoulli draws, compressed, and tagged with the episode
outcome at penalty 1.  Proper prefixes become additional incomplete-class
examples.  ``consolidate`` merges duplicate bodies (summing penalties) and
rebalances the per-class penalty mass so no outcome class dominates the
induction objective.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .events import SymbolicTrace, TraceOutcome, compress


@dataclass(frozen=True)
class WeightedExample:
    penalty: float  # positive; math.inf marks a hard, must-cover example
    outcome: TraceOutcome
    body: SymbolicTrace

    def __post_init__(self):
        if not self.penalty > 0.0:
            raise ValueError("penalty must be positive")
        if compress(self.body) != tuple(self.body):
            raise ValueError("example body must be compressed")

    def key(self):
        return (self.outcome, self.body)


def sample_body(noisy_trace, rng: np.random.Generator) -> SymbolicTrace:
    """Draw one crisp body: each proposition occurs at each step with its
    posterior probability, independently; the result is compressed."""
    labels = []
    for pl in noisy_trace:
        draws = rng.random(len(pl)) < pl
        label = 0
        for i in range(len(pl)):
            if draws[i]:
                label |= 1 << i
        labels.append(label)
    return compress(labels)


def sample_example(noisy_trace, outcome: TraceOutcome,
                   rng: np.random.Generator, penalty: float = 1.0):
    if not len(noisy_trace):
        raise ValueError("cannot sample an example from an empty trace")
    return WeightedExample(penalty, outcome, sample_body(noisy_trace, rng))


def incomplete_prefixes(noisy_trace, rng: np.random.Generator,
                        subsample="default"):
    """Incomplete-class examples from proper prefixes of a finished trace.

    ``subsample``: "all" keeps every proper prefix, an int n keeps n prefix
    lengths drawn uniformly without replacement, "default" keeps
    min(4, |trace| - 1).
    """
    n = len(noisy_trace)
    if n <= 1:
        return []
    lengths = list(range(1, n))
    if subsample == "default":
        subsample = min(4, n - 1)
    if subsample != "all":
        take = min(int(subsample), len(lengths))
        picked = rng.choice(len(lengths), size=take, replace=False)
        lengths = sorted(lengths[i] for i in picked)
    return [
        sample_example(noisy_trace[:k], TraceOutcome.INCOMPLETE, rng)
        for k in lengths
    ]


def merge_duplicates(pool):
    """Sum penalties of examples with identical (outcome, body), keeping
    first-seen order."""
    merged: dict = {}
    for ex in pool:
        k = ex.key()
        if k in merged:
            merged[k] = merged[k] + ex.penalty
        else:
            merged[k] = ex.penalty
    return [
        WeightedExample(pen, outcome, body)
        for (outcome, body), pen in merged.items()
    ]


def consolidate(pool, rebalance: bool = True):
    """Merge duplicates, then scale finite penalties so every outcome class
    present carries equal total mass (total mass preserved).  Infinite
    penalties are left untouched by the scaling."""
    merged = merge_duplicates(pool)
    if not rebalance or not merged:
        return merged
    class_mass = {}
    for ex in merged:
        if math.isfinite(ex.penalty):
            class_mass[ex.outcome] = class_mass.get(ex.outcome, 0.0) + ex.penalty
    nonempty = [o for o, m in class_mass.items() if m > 0.0]
    if not nonempty:
        return merged
    target = sum(class_mass[o] for o in nonempty) / len(nonempty)
    factors = {o: target / class_mass[o] for o in nonempty}
    out = []
    for ex in merged:
        if math.isfinite(ex.penalty) and ex.outcome in factors:
            out.append(WeightedExample(ex.penalty * factors[ex.outcome],
                                       ex.outcome, ex.body))
        else:
            out.append(ex)
    return out


# --- pool file format: trace lines with a penalty column -------------------
#
# ``OUTCOME;PENALTY;step|step|...`` where steps use the symbolic trace
# format of :mod:`beliefrm.events`.

def format_example(alphabet, ex: WeightedExample) -> str:
    from .events import format_symbolic_step

    steps = "|".join(format_symbolic_step(alphabet, lab) for lab in ex.body)
    return f"{ex.outcome.value};{ex.penalty!r};{steps}"


def parse_example(alphabet, line: str) -> WeightedExample:
    from .events import parse_symbolic_trace

    outcome_part, _, rest = line.strip().partition(";")
    pen_part, _, steps_part = rest.partition(";")
    outcome, body = parse_symbolic_trace(alphabet, f"{outcome_part};{steps_part}")
    return WeightedExample(float(pen_part), outcome, body)


def save_pool(path, alphabet, pool):
    with open(path, "w") as fh:
        for ex in pool:
            fh.write(format_example(alphabet, ex) + "\n")


def load_pool(path, alphabet):
    pool = []
    with open(path) as fh:
        for line in fh:
            if line.strip():
                pool.append(parse_example(alphabet, line))
    return pool
