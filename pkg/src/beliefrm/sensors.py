"""Binary sensor simulation and Bayes posterior computation.

Each proposition gets an independent binary sensor characterised by
sensitivity P(detect | occurred), specificity P(no detect | absent) and a
prior P(occurred).  ``sense`` turns a ground-truth label into a vector of
per-proposition occurrence posteriors; ``solve_confidence`` inverts the
posterior formula so experiments can be specified by the posterior value a
detection should produce rather than by raw sensor accuracy.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .events import Alphabet, Label


class DegenerateSensorError(ValueError):
    """The sensor/prior combination makes the requested reading impossible."""


class InfeasibleTargetError(ValueError):
    """No confidence in [0, 1] produces the requested posterior."""


@dataclass(frozen=True)
class SensorSpec:
    sensitivity: float
    specificity: float
    prior: float

    def __post_init__(self):
        for field in ("sensitivity", "specificity", "prior"):
            v = getattr(self, field)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{field} must lie in [0, 1], got {v}")


def posterior(spec: SensorSpec, detected: bool) -> float:
    """P(occurred | reading) by Bayes' rule.

    P(detect | absent) = 1 - specificity and P(no detect | occurred) =
    1 - sensitivity; raises if the reading itself has probability 0.
    """
    p = spec.prior
    if detected:
        like_t, like_f = spec.sensitivity, 1.0 - spec.specificity
    else:
        like_t, like_f = 1.0 - spec.sensitivity, spec.specificity
    denom = like_t * p + like_f * (1.0 - p)
    if denom <= 0.0:
        raise DegenerateSensorError(
            f"reading detected={detected} has probability 0 under {spec}"
        )
    return like_t * p / denom


def solve_confidence(prior: float, target_posterior: float) -> float:
    """Confidence c with sensitivity = specificity = c such that a detection
    yields the target posterior.

    Solving t = c*p / (c*p + (1-c)*(1-p)) for c gives
    c = t*(1-p) / (p + t - 2*p*t).
    """
    p, t = prior, target_posterior
    if not 0.0 < p < 1.0:
        raise ValueError(f"prior must lie in (0, 1), got {p}")
    if not 0.0 < t < 1.0:
        raise ValueError(f"target posterior must lie in (0, 1), got {t}")
    denom = p + t - 2.0 * p * t
    if denom == 0.0:
        raise InfeasibleTargetError(f"prior {p} and target {t} are degenerate")
    c = t * (1.0 - p) / denom
    if not 0.0 <= c <= 1.0:
        raise InfeasibleTargetError(
            f"no confidence in [0, 1] reaches posterior {t} from prior {p}"
        )
    return c


class SensorBank:
    """One sensor per proposition, with the two possible posterior values
    per sensor precomputed (a reading is binary, so each sensor can only
    ever emit two posteriors)."""

    def __init__(self, alphabet: Alphabet, specs):
        if len(specs) != len(alphabet):
            raise ValueError("need exactly one SensorSpec per proposition")
        self.alphabet = alphabet
        self.specs = tuple(specs)
        self._sens = np.array([s.sensitivity for s in self.specs])
        self._fpr = np.array([1.0 - s.specificity for s in self.specs])
        self._post_detect = np.array(
            [posterior(s, True) for s in self.specs]
        )
        self._post_nodetect = np.array(
            [posterior(s, False) for s in self.specs]
        )

    @classmethod
    def perfect(cls, alphabet: Alphabet, priors=None) -> "SensorBank":
        if priors is None:
            priors = [0.5] * len(alphabet)
        return cls(
            alphabet, [SensorSpec(1.0, 1.0, p) for p in priors]
        )

    def sense(self, ground_truth: Label, rng: np.random.Generator) -> np.ndarray:
        """Draw one reading per sensor and return the posterior vector.

        Detections are conditionally independent given the ground truth.
        """
        n = len(self.alphabet)
        occurred = np.fromiter(
            (ground_truth >> i & 1 for i in range(n)), dtype=bool, count=n
        )
        p_detect = np.where(occurred, self._sens, self._fpr)
        detected = rng.random(n) < p_detect
        return np.where(detected, self._post_detect, self._post_nodetect)


def sense(bank: SensorBank, ground_truth: Label, rng) -> np.ndarray:
    return bank.sense(ground_truth, rng)


def label_probability(pl: np.ndarray, candidate: Label) -> float:
    """Probability of ``candidate`` being the true label under independent
    per-proposition posteriors: prod over members of probs[l], times prod
    over non-members of (1 - probs[l])."""
    prob = 1.0
    for i in range(len(pl)):
        prob *= pl[i] if candidate >> i & 1 else 1.0 - pl[i]
    return prob
