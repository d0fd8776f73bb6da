"""Reward-machine reinforcement learning under noisy symbolic sensing.

Trains tabular agents that track a Bayesian belief over the states of a
reward machine whose labels come from imperfect binary sensors, shape
rewards from that belief, and periodically relearn the machine itself from
sampled noisy traces by cost-optimal search.
"""

from ._kernels import BACKEND as kernel_backend
from .events import TraceOutcome, compress, make_alphabet
from .machine import (Guard, RewardMachine, belief_step, guard,
                      is_terminal_belief, loop_machine, most_likely_state,
                      shaped_reward, threshold_step)
from .sensors import SensorBank, SensorSpec, posterior, sense, solve_confidence
from .worlds import OfficeEnv, canonical_map, make_task, random_map

__version__ = "0.1.0"

__all__ = [
    "Guard", "OfficeEnv", "RewardMachine", "SensorBank", "SensorSpec",
    "TraceOutcome", "belief_step", "canonical_map", "compress", "guard",
    "is_terminal_belief", "kernel_backend", "loop_machine", "make_alphabet",
    "make_task", "most_likely_state", "posterior", "random_map", "sense",
    "shaped_reward", "solve_confidence", "threshold_step",
]
