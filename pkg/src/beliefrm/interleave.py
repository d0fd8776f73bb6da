"""Interleaved policy learning and reward-machine relearning.

The driver starts from an edge-free machine, tracks a belief over machine
states during every episode, feeds finished episodes into the example pool
and relearns the machine whenever the average episode cross-entropy (how
poorly the belief predicted the known episode outcome) crosses a threshold
after a warm-up period.  The Q-function is reinitialised on every relearn.
"""

from __future__ import annotations

import math
import pickle
import time
from dataclasses import dataclass, field

import numpy as np

from .agent import ExplorationSchedule, QTable, q_update, select_action
from .events import TraceOutcome
from .examples import consolidate, incomplete_prefixes, sample_example
from .induction import InductionTask, induce
from .machine import (RewardMachine, is_terminal_belief, loop_machine,
                      threshold_label)
from .worlds import ACTIONS, OfficeEnv

CE_CLAMP = 1e-10


@dataclass
class InterleaveParams:
    beta: float = 0.1
    warmup_episodes: int = 50
    max_episode_len: int = 500
    relearn_when: str = "above"  # relearn when avg CE is above/below beta
    samples_per_trace: int = 1
    prefix_subsample: object = "default"  # "all", "default" or an int
    pool_cap: int = 5000
    gamma: float = 0.99
    alpha: float = 0.1
    binning_decimals: int = 2
    shaping: bool = True
    shaping_floor: float | None = None  # None: -10 * |U| of the current RM
    threshold: float | None = None  # crisp thresholded tracking instead of beliefs
    schedule: ExplorationSchedule = field(default_factory=ExplorationSchedule)
    max_intermediate_states: int = 1
    induction_budget: float | None = 60.0
    induction_max_bases: int | None = 16
    edge_cost: str = "plus-one"
    checkpoint_every: int = 0
    checkpoint_path: str | None = None

    def __post_init__(self):
        if self.relearn_when not in ("above", "below"):
            raise ValueError("relearn_when must be 'above' or 'below'")


@dataclass
class EpisodeRecord:
    index: int
    ret: float
    outcome: str
    steps: int
    relearned: bool
    rm_states: int
    wall_ms: float


def recognize_belief(rm: RewardMachine, outcome: TraceOutcome,
                     final_belief) -> float:
    """Cross-entropy between the belief's outcome prediction
    (b[uA], b[uR], 1 - b[uA] - b[uR]) and the known one-hot outcome."""
    p_acc = float(final_belief[rm.uA])
    p_rej = float(final_belief[rm.uR])
    if outcome is TraceOutcome.GOAL:
        p = p_acc
    elif outcome is TraceOutcome.DEADEND:
        p = p_rej
    else:
        p = 1.0 - p_acc - p_rej
    p = min(max(p, CE_CLAMP), 1.0)
    return -math.log(p)


class Driver:
    """One training replica; owns its RNG streams and mutable state."""

    def __init__(self, env: OfficeEnv, params: InterleaveParams,
                 rng: np.random.Generator, fixed_machine: RewardMachine = None):
        self.env = env
        self.params = params
        seeds = rng.spawn(3)
        self.env_rng, self.agent_rng, self.example_rng = seeds
        self.fixed = fixed_machine is not None
        self.rm = fixed_machine if self.fixed else loop_machine(env.alphabet)
        self.q = QTable(params.binning_decimals)
        self.pool: list = []
        self.step_cnt = 0  # episodes since the last relearn
        self.ce_sum = 0.0
        self.agent_steps = 0
        self.episode_idx = 0
        self.has_learned = False
        self.max_intermediate = params.max_intermediate_states
        self.records: list = []
        self.any_induction_suboptimal = False

    # --- one episode -----------------------------------------------------

    def run_episode(self):
        p = self.params
        env = self.env
        env.reset()
        engine = self.rm.engine()
        belief = self.rm.initial_belief()
        crisp_state = self.rm.u0  # only used in thresholding mode
        trace = []
        ep_return = 0.0
        steps = 0
        while True:
            eps = p.schedule.epsilon(self.agent_steps)
            pos = env.pos
            action = select_action(self.q, pos, belief, eps, self.agent_rng)
            res = env.step(ACTIONS[action], self.env_rng)
            trace.append(res.prob_label)
            if p.threshold is None:
                b_next = engine.belief_step(belief, res.prob_label)
            else:
                lab = threshold_label(res.prob_label, p.threshold)
                crisp_state = self.rm.step(crisp_state, lab)[0]
                b_next = np.zeros(self.rm.n_states)
                b_next[crisp_state] = 1.0
            r_total = res.reward
            if p.shaping:
                r_total += engine.shaped_reward(belief, b_next, p.gamma,
                                                p.shaping_floor)
            belief_done = is_terminal_belief(self.rm, b_next)
            q_update(self.q, pos, belief, action, r_total, res.state, b_next,
                     p.alpha, p.gamma, terminal=res.terminal or belief_done)
            belief = b_next
            ep_return += res.reward
            self.agent_steps += 1
            steps += 1
            if res.terminal or belief_done or steps >= p.max_episode_len:
                break
        return trace, env.outcome(), belief, ep_return, steps

    # --- relearning -------------------------------------------------------

    def should_relearn(self) -> bool:
        if self.step_cnt < self.params.warmup_episodes:
            return False
        avg = self.ce_sum / self.step_cnt
        if self.params.relearn_when == "above":
            return avg > self.params.beta
        return avg < self.params.beta

    def _induce(self) -> RewardMachine:
        task = InductionTask(
            self.env.alphabet,
            consolidate(self.pool),
            max_intermediate_states=self.max_intermediate,
            edge_cost=self.params.edge_cost,
            max_bases=self.params.induction_max_bases,
            budget_seconds=self.params.induction_budget,
        )
        hyp = induce(task)
        if hyp.suboptimal:
            self.any_induction_suboptimal = True
        return hyp.machine

    def relearn(self) -> RewardMachine:
        if not self.pool:
            raise ValueError("cannot relearn from an empty example pool")
        new_rm = self._induce()
        if self.has_learned and new_rm.serialize() == self.rm.serialize():
            # stuck on the same hypothesis: grow the state budget once
            self.max_intermediate += 1
            new_rm = self._induce()
        self.has_learned = True
        self.rm = new_rm
        self.step_cnt = 0
        self.ce_sum = 0.0
        self.q.reset()
        return new_rm

    def _add_examples(self, trace, outcome):
        p = self.params
        for _ in range(p.samples_per_trace):
            self.pool.append(sample_example(trace, outcome, self.example_rng))
        self.pool.extend(
            incomplete_prefixes(trace, self.example_rng, p.prefix_subsample)
        )
        if p.pool_cap and len(self.pool) > p.pool_cap:
            self._evict(len(self.pool) - p.pool_cap)

    def _evict(self, n: int):
        """Drop the oldest incomplete examples first, then oldest overall."""
        keep = []
        dropped = 0
        for ex in self.pool:
            if dropped < n and ex.outcome is TraceOutcome.INCOMPLETE:
                dropped += 1
            else:
                keep.append(ex)
        self.pool = keep[n - dropped:] if dropped < n else keep

    # --- training loop -----------------------------------------------------

    def run(self, num_episodes: int):
        p = self.params
        for _ in range(num_episodes):
            t0 = time.perf_counter()
            trace, outcome, final_belief, ep_return, steps = self.run_episode()
            relearned = False
            if not self.fixed and trace:
                self._add_examples(trace, outcome)
                self.step_cnt += 1
                self.ce_sum += recognize_belief(self.rm, outcome, final_belief)
                if self.should_relearn():
                    self.relearn()
                    relearned = True
            self.records.append(EpisodeRecord(
                self.episode_idx, ep_return, outcome.value, steps, relearned,
                self.rm.n_states, (time.perf_counter() - t0) * 1e3,
            ))
            self.episode_idx += 1
            if (p.checkpoint_every and p.checkpoint_path
                    and self.episode_idx % p.checkpoint_every == 0):
                self.save_checkpoint(p.checkpoint_path)
        return self.records

    # --- checkpointing ------------------------------------------------------

    def save_checkpoint(self, path):
        state = {
            "rm": self.rm.serialize(),
            "pool": self.pool,
            "q": self.q.table,
            "step_cnt": self.step_cnt,
            "ce_sum": self.ce_sum,
            "agent_steps": self.agent_steps,
            "episode_idx": self.episode_idx,
            "has_learned": self.has_learned,
            "max_intermediate": self.max_intermediate,
            "rngs": (self.env_rng, self.agent_rng, self.example_rng),
            "records": self.records,
        }
        with open(path, "wb") as fh:
            pickle.dump(state, fh)

    @classmethod
    def from_checkpoint(cls, path, env: OfficeEnv, params: InterleaveParams,
                        fixed_machine: RewardMachine = None):
        with open(path, "rb") as fh:
            state = pickle.load(fh)
        drv = cls(env, params, np.random.default_rng(0), fixed_machine)
        drv.rm = (fixed_machine if fixed_machine is not None
                  else RewardMachine.parse(env.alphabet, state["rm"]))
        drv.pool = state["pool"]
        drv.q.table = state["q"]
        drv.step_cnt = state["step_cnt"]
        drv.ce_sum = state["ce_sum"]
        drv.agent_steps = state["agent_steps"]
        drv.episode_idx = state["episode_idx"]
        drv.has_learned = state["has_learned"]
        drv.max_intermediate = state["max_intermediate"]
        drv.env_rng, drv.agent_rng, drv.example_rng = state["rngs"]
        drv.records = state["records"]
        return drv
