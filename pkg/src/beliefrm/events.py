"""Symbolic vocabulary: propositions, labels, traces and episode outcomes.

Labels are plain ``int`` bitmasks over a fixed alphabet of at most
``MAX_PROPOSITIONS`` propositions, so set operations on them are single
word ops.  Probabilistic labels are float vectors of per-proposition
occurrence posteriors.  Everything here is an immutable value; reward
machine internals live in :mod:`beliefrm.machine`.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

MAX_PROPOSITIONS = 16

Label = int  # bitmask over alphabet proposition ids
SymbolicTrace = tuple  # tuple[Label, ...]


class TraceOutcome(enum.Enum):
    GOAL = "G"
    DEADEND = "D"
    INCOMPLETE = "I"

    @classmethod
    def from_letter(cls, letter: str) -> "TraceOutcome":
        for out in cls:
            if out.value == letter:
                return out
        raise ValueError(f"unknown outcome letter {letter!r}")


@dataclass(frozen=True)
class Alphabet:
    """Dense id -> name mapping for the proposition set."""

    names: tuple

    def __post_init__(self):
        if len(self.names) > MAX_PROPOSITIONS:
            raise ValueError(
                f"alphabet of {len(self.names)} propositions exceeds the "
                f"cap of {MAX_PROPOSITIONS}"
            )
        if len(set(self.names)) != len(self.names):
            raise ValueError("proposition names must be unique")

    def __len__(self):
        return len(self.names)

    def index(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise KeyError(f"unknown proposition {name!r}") from None

    def label(self, *names: str) -> Label:
        """Bitmask for the label containing exactly the named propositions."""
        mask = 0
        for name in names:
            mask |= 1 << self.index(name)
        return mask

    def label_names(self, label: Label) -> tuple:
        return tuple(n for i, n in enumerate(self.names) if label >> i & 1)


def make_alphabet(names) -> Alphabet:
    return Alphabet(tuple(names))


# --- probabilistic labels ------------------------------------------------

def prob_label(alphabet: Alphabet, **probs) -> np.ndarray:
    """ProbLabel vector with named entries set and all others 0."""
    pl = np.zeros(len(alphabet))
    for name, p in probs.items():
        pl[alphabet.index(name)] = p
    return pl


def exact_prob_label(alphabet: Alphabet, label: Label) -> np.ndarray:
    """Noise-free ProbLabel: the 0/1 indicator of ``label``."""
    pl = np.zeros(len(alphabet))
    for i in range(len(alphabet)):
        if label >> i & 1:
            pl[i] = 1.0
    return pl


def validate_prob_label(pl: np.ndarray, alphabet: Alphabet) -> None:
    if len(pl) != len(alphabet):
        raise ValueError("ProbLabel length does not match alphabet size")
    if np.any(pl < 0.0) or np.any(pl > 1.0):
        raise ValueError("ProbLabel entries must lie in [0, 1]")


# --- trace operations ----------------------------------------------------

def compress(trace) -> SymbolicTrace:
    """Collapse runs of equal consecutive labels into single occurrences.

    Order of distinct runs is preserved; the empty trace maps to itself.
    """
    out = []
    for label in trace:
        if not out or out[-1] != label:
            out.append(label)
    return tuple(out)


# --- trace file format ----------------------------------------------------
#
# One trace per line: ``OUTCOME;step|step|...`` with OUTCOME in {G, D, I}.
# A symbolic step is a comma-separated list of proposition names, a
# probabilistic step a list of ``name:prob`` pairs (omitted names are
# probability 0); the empty step is written ``-``.

def format_symbolic_step(alphabet: Alphabet, label: Label) -> str:
    names = alphabet.label_names(label)
    return ",".join(names) if names else "-"


def format_prob_step(alphabet: Alphabet, pl: np.ndarray) -> str:
    parts = [
        f"{alphabet.names[i]}:{float(pl[i])!r}"
        for i in range(len(alphabet)) if pl[i] != 0.0
    ]
    return ",".join(parts) if parts else "-"


def format_symbolic_trace(alphabet, outcome: TraceOutcome, trace) -> str:
    steps = "|".join(format_symbolic_step(alphabet, lab) for lab in trace)
    return f"{outcome.value};{steps}"


def format_noisy_trace(alphabet, outcome: TraceOutcome, trace) -> str:
    steps = "|".join(format_prob_step(alphabet, pl) for pl in trace)
    return f"{outcome.value};{steps}"


def _parse_step_fields(step: str):
    if step == "-":
        return []
    return step.split(",")


def parse_symbolic_trace(alphabet: Alphabet, line: str):
    """Parse one ``OUTCOME;steps`` line into (outcome, symbolic trace)."""
    outcome_part, _, steps_part = line.strip().partition(";")
    outcome = TraceOutcome.from_letter(outcome_part)
    trace = []
    if steps_part:
        for step in steps_part.split("|"):
            label = 0
            for name in _parse_step_fields(step):
                label |= 1 << alphabet.index(name)
            trace.append(label)
    return outcome, tuple(trace)


def parse_noisy_trace(alphabet: Alphabet, line: str):
    """Parse one ``OUTCOME;steps`` line into (outcome, list of ProbLabels)."""
    outcome_part, _, steps_part = line.strip().partition(";")
    outcome = TraceOutcome.from_letter(outcome_part)
    trace = []
    if steps_part:
        for step in steps_part.split("|"):
            pl = np.zeros(len(alphabet))
            for field in _parse_step_fields(step):
                name, _, prob = field.partition(":")
                pl[alphabet.index(name)] = float(prob)
            validate_prob_label(pl, alphabet)
            trace.append(pl)
    return outcome, trace
