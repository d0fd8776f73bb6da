"""Experiment harness: config files, multi-seed runs, metric aggregation.

Configs are flat ``key = value`` text with sections (configparser syntax).
Each replica is keyed by (seed, map index); its RNG streams derive from
that pair alone, so replicas are reproducible and order-independent.  Raw
per-episode CSVs are written per replica and aggregated into a single
learning-curve CSV with window-100 moving averages.
"""

from __future__ import annotations

import configparser
import csv
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .agent import ExplorationSchedule
from .interleave import Driver, InterleaveParams
from .sensors import SensorBank, SensorSpec, solve_confidence
from .worlds import (OFFICE_ALPHABET, GridMap, OfficeEnv, TASK_NAMES,
                     canonical_map, first_noise_targets, make_task,
                     occupancy_priors, random_map)

WINDOW = 100


class ConfigError(ValueError):
    """Invalid experiment configuration; message names the field."""


class InductionBudgetExhausted(RuntimeError):
    """An induction call returned a suboptimal hypothesis in strict mode."""


@dataclass
class ExperimentConfig:
    task: str = "coffee"
    map_spec: str = "canonical"  # canonical | random:<seed> | random:<seed>:<count>
    noise_targets: str = "first"  # first | all | comma-separated names
    posterior: float | None = 0.9
    confidence: float | None = None
    prior_overrides: dict = field(default_factory=dict)
    seeds: tuple = (0,)
    num_episodes: int = 5000
    workers: int = 1
    gamma: float = 0.99
    alpha: float = 0.1
    epsilon_start: float = 1.0
    epsilon_end: float = 0.1
    epsilon_decay_steps: int = 2000
    binning_decimals: int = 2
    shaping: bool = True
    beta: float = 0.1
    warmup_episodes: int = 50
    max_episode_len: int = 500
    relearn_when: str = "above"
    samples_per_trace: int = 1
    prefix_subsample: object = "default"
    pool_cap: int = 5000
    checkpoint_every: int = 0
    max_intermediate_states: int = 1
    induction_budget: float = 60.0
    induction_max_bases: int = 16
    edge_cost: str = "plus-one"
    strict_budget: bool = False
    threshold: float | None = None

    def validate(self):
        if self.task not in TASK_NAMES:
            raise ConfigError(f"task.name: unknown task {self.task!r}")
        if not self.seeds:
            raise ConfigError("experiment.seeds: seed list must be non-empty")
        if self.posterior is None and self.confidence is None:
            raise ConfigError("noise: set either posterior or confidence")
        for name, value in (("noise.posterior", self.posterior),
                            ("noise.confidence", self.confidence)):
            if value is not None and not 0.0 < value <= 1.0:
                raise ConfigError(f"{name}: must lie in (0, 1], got {value}")
        for name, value in (("agent.gamma", self.gamma),
                            ("agent.alpha", self.alpha),
                            ("agent.epsilon_start", self.epsilon_start),
                            ("agent.epsilon_end", self.epsilon_end)):
            if not 0.0 <= value <= 1.0:
                raise ConfigError(f"{name}: must lie in [0, 1], got {value}")
        if self.threshold is not None and not 0.0 < self.threshold < 1.0:
            raise ConfigError(
                f"threshold.value: must lie in (0, 1), got {self.threshold}"
            )
        if self.relearn_when not in ("above", "below"):
            raise ConfigError("interleave.relearn_when: must be above or below")
        if self.num_episodes <= 0:
            raise ConfigError("experiment.episodes: must be positive")
        return self


def _parse_seeds(text: str):
    seeds = []
    for part in text.replace(" ", "").split(","):
        if ".." in part:
            lo, hi = part.split("..")
            seeds.extend(range(int(lo), int(hi) + 1))
        elif part:
            seeds.append(int(part))
    return tuple(seeds)


def _parse_subsample(text: str):
    text = text.strip()
    if text == "all":
        return "all"
    if text == "default":
        return "default"
    if text.startswith("uniform:"):
        return int(text.split(":", 1)[1])
    raise ConfigError(
        f"interleave.prefix_subsample: expected all|default|uniform:N, got {text!r}"
    )


_BOOL = {"on": True, "true": True, "1": True, "yes": True,
         "off": False, "false": False, "0": False, "no": False}


def load_config(path) -> ExperimentConfig:
    if not os.path.exists(path):
        raise ConfigError(f"config file not found: {path}")
    cp = configparser.ConfigParser()
    try:
        cp.read(path)
    except configparser.Error as exc:
        raise ConfigError(f"config parse error: {exc}") from exc
    cfg = ExperimentConfig()

    def get(section, key, cast, default):
        if cp.has_option(section, key):
            raw = cp.get(section, key)
            try:
                return cast(raw)
            except (ValueError, ConfigError) as exc:
                raise ConfigError(f"{section}.{key}: {exc}") from exc
        return default

    def as_bool(raw):
        if raw.lower() not in _BOOL:
            raise ValueError(f"expected on/off, got {raw!r}")
        return _BOOL[raw.lower()]

    def opt_float(raw):
        return None if raw.lower() in ("off", "none") else float(raw)

    cfg.seeds = get("experiment", "seeds", _parse_seeds, cfg.seeds)
    cfg.num_episodes = get("experiment", "episodes", int, cfg.num_episodes)
    cfg.workers = get("experiment", "workers", int, cfg.workers)
    cfg.task = get("task", "name", str, cfg.task)
    cfg.map_spec = get("task", "map", str, cfg.map_spec)
    cfg.noise_targets = get("noise", "targets", str, cfg.noise_targets)
    cfg.posterior = get("noise", "posterior", opt_float, cfg.posterior)
    cfg.confidence = get("noise", "confidence", opt_float, cfg.confidence)
    if cp.has_section("noise"):
        for key, raw in cp.items("noise"):
            if key.startswith("prior."):
                cfg.prior_overrides[key[len("prior."):]] = float(raw)
    cfg.gamma = get("agent", "gamma", float, cfg.gamma)
    cfg.alpha = get("agent", "alpha", float, cfg.alpha)
    cfg.epsilon_start = get("agent", "epsilon_start", float, cfg.epsilon_start)
    cfg.epsilon_end = get("agent", "epsilon_end", float, cfg.epsilon_end)
    cfg.epsilon_decay_steps = get("agent", "epsilon_decay_steps", int,
                                  cfg.epsilon_decay_steps)
    cfg.binning_decimals = get("agent", "binning_decimals", int,
                               cfg.binning_decimals)
    cfg.shaping = get("agent", "shaping", as_bool, cfg.shaping)
    cfg.beta = get("interleave", "beta", float, cfg.beta)
    cfg.warmup_episodes = get("interleave", "warmup_episodes", int,
                              cfg.warmup_episodes)
    cfg.max_episode_len = get("interleave", "max_episode_len", int,
                              cfg.max_episode_len)
    cfg.relearn_when = get("interleave", "relearn_when", str, cfg.relearn_when)
    cfg.samples_per_trace = get("interleave", "samples_per_trace", int,
                                cfg.samples_per_trace)
    cfg.prefix_subsample = get("interleave", "prefix_subsample",
                               _parse_subsample, cfg.prefix_subsample)
    cfg.pool_cap = get("interleave", "pool_cap", int, cfg.pool_cap)
    cfg.checkpoint_every = get("interleave", "checkpoint_every", int,
                               cfg.checkpoint_every)
    cfg.max_intermediate_states = get("induction", "max_intermediate_states",
                                      int, cfg.max_intermediate_states)
    cfg.induction_budget = get("induction", "budget_seconds", float,
                               cfg.induction_budget)
    cfg.induction_max_bases = get("induction", "max_bases", int,
                                  cfg.induction_max_bases)
    cfg.edge_cost = get("induction", "edge_cost", str, cfg.edge_cost)
    cfg.strict_budget = get("induction", "strict_budget", as_bool,
                            cfg.strict_budget)
    cfg.threshold = get("threshold", "value", opt_float, cfg.threshold)
    return cfg.validate()


# --- replica construction ----------------------------------------------------

def experiment_maps(cfg: ExperimentConfig):
    """Maps named by the config: the canonical layout or derived random ones."""
    spec = cfg.map_spec
    if spec == "canonical":
        return [canonical_map()]
    if spec.startswith("random"):
        parts = spec.split(":")
        base = int(parts[1]) if len(parts) > 1 else 0
        count = int(parts[2]) if len(parts) > 2 else 1
        return [
            random_map(cfg.task, np.random.default_rng(
                np.random.SeedSequence((base, i))))
            for i in range(count)
        ]
    raise ConfigError(f"task.map: unknown map spec {spec!r}")


def targeted_props(cfg: ExperimentConfig):
    if cfg.noise_targets == "first":
        return first_noise_targets(cfg.task)
    if cfg.noise_targets == "all":
        return tuple(OFFICE_ALPHABET.names)
    names = tuple(n.strip() for n in cfg.noise_targets.split(",") if n.strip())
    for n in names:
        if n not in OFFICE_ALPHABET.names:
            raise ConfigError(f"noise.targets: unknown proposition {n!r}")
    return names


def build_bank(cfg: ExperimentConfig, grid: GridMap) -> SensorBank:
    """Targeted sensors get the confidence matching the requested posterior
    given their map-occupancy prior; the rest are noise-free."""
    priors = occupancy_priors(grid)
    targets = set(targeted_props(cfg))
    specs = []
    for i, name in enumerate(OFFICE_ALPHABET.names):
        prior = cfg.prior_overrides.get(name, float(priors[i]))
        if name in targets and (cfg.posterior is None or cfg.posterior < 1.0):
            if cfg.confidence is not None:
                conf = cfg.confidence
            else:
                conf = solve_confidence(prior, cfg.posterior)
            specs.append(SensorSpec(conf, conf, prior))
        else:
            specs.append(SensorSpec(1.0, 1.0, prior))
    return SensorBank(OFFICE_ALPHABET, specs)


def driver_params(cfg: ExperimentConfig) -> InterleaveParams:
    return InterleaveParams(
        beta=cfg.beta,
        warmup_episodes=cfg.warmup_episodes,
        max_episode_len=cfg.max_episode_len,
        relearn_when=cfg.relearn_when,
        samples_per_trace=cfg.samples_per_trace,
        prefix_subsample=cfg.prefix_subsample,
        pool_cap=cfg.pool_cap,
        gamma=cfg.gamma,
        alpha=cfg.alpha,
        binning_decimals=cfg.binning_decimals,
        shaping=cfg.shaping,
        threshold=cfg.threshold,
        schedule=ExplorationSchedule(cfg.epsilon_start, cfg.epsilon_end,
                                     cfg.epsilon_decay_steps),
        max_intermediate_states=cfg.max_intermediate_states,
        induction_budget=cfg.induction_budget,
        induction_max_bases=cfg.induction_max_bases,
        edge_cost=cfg.edge_cost,
        checkpoint_every=cfg.checkpoint_every,
    )


def run_replica(cfg: ExperimentConfig, seed: int, map_idx: int,
                baseline: bool = False):
    """One (seed, map) replica; returns (records, any_suboptimal_induction)."""
    grid = experiment_maps(cfg)[map_idx]
    bank = build_bank(cfg, grid)
    env = OfficeEnv(grid, cfg.task, bank)
    rng = np.random.default_rng(np.random.SeedSequence((seed, map_idx)))
    fixed = make_task(cfg.task) if baseline else None
    driver = Driver(env, driver_params(cfg), rng, fixed_machine=fixed)
    driver.run(cfg.num_episodes)
    return driver.records, driver.any_induction_suboptimal


def _replica_job(args):
    cfg, seed, map_idx, baseline = args
    return seed, map_idx, run_replica(cfg, seed, map_idx, baseline)


# --- metrics -------------------------------------------------------------------

# wall-time stays on the in-memory record only: with it in the file,
# identical (config, seeds) rerun CSVs could not be byte-identical
RAW_HEADER = ("episode", "return", "outcome", "steps", "relearned",
              "rm_states")
AGG_HEADER = ("episode", "mean_return", "std_return", "smoothed_mean",
              "smoothed_std")


def write_raw_csv(path, records):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(RAW_HEADER)
        for r in records:
            w.writerow([r.index, repr(r.ret), r.outcome, r.steps,
                        int(r.relearned), r.rm_states])


def read_raw_returns(path):
    returns = []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            returns.append(float(row["return"]))
    return returns


def aggregate_returns(per_replica_returns):
    """Aggregate rows (episode, mean, std, smoothed mean, smoothed std).

    The smoothed columns pool every replica's returns over the trailing
    window of 100 episodes.
    """
    arr = np.array(per_replica_returns, dtype=float)  # replicas x episodes
    n_ep = arr.shape[1]
    rows = []
    for e in range(n_ep):
        lo = max(0, e - WINDOW + 1)
        window = arr[:, lo:e + 1]
        rows.append((
            e,
            float(arr[:, e].mean()),
            float(arr[:, e].std()),
            float(window.mean()),
            float(window.std()),
        ))
    return rows


def write_aggregate_csv(path, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(AGG_HEADER)
        for e, mean, std, s_mean, s_std in rows:
            w.writerow([e, repr(mean), repr(std), repr(s_mean), repr(s_std)])


def aggregate_raw_dir(raw_dir, out_path):
    """Recompute the aggregate CSV from the raw per-replica CSVs."""
    files = sorted(
        f for f in os.listdir(raw_dir)
        if f.startswith("replica_") and f.endswith(".csv")
    )
    if not files:
        raise ConfigError(f"no replica_*.csv files under {raw_dir}")
    returns = [read_raw_returns(os.path.join(raw_dir, f)) for f in files]
    rows = aggregate_returns(returns)
    write_aggregate_csv(out_path, rows)
    return rows


def run_experiment(cfg: ExperimentConfig, out_dir, baseline: bool = False):
    """Run |seeds| x |maps| replicas, write raw and aggregate CSVs.

    Returns the aggregate rows.  Raises InductionBudgetExhausted when
    strict budget mode is on and any induction timed out.
    """
    os.makedirs(out_dir, exist_ok=True)
    n_maps = len(experiment_maps(cfg))
    jobs = [(cfg, seed, mi, baseline) for seed in cfg.seeds
            for mi in range(n_maps)]
    results = {}
    if cfg.workers > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            for seed, mi, out in pool.map(_replica_job, jobs):
                results[(seed, mi)] = out
    else:
        for job in jobs:
            seed, mi, out = _replica_job(job)
            results[(seed, mi)] = out
    per_replica = []
    budget_hit = False
    for seed in cfg.seeds:
        for mi in range(n_maps):
            records, suboptimal = results[(seed, mi)]
            budget_hit = budget_hit or suboptimal
            write_raw_csv(
                os.path.join(out_dir, f"replica_s{seed}_m{mi}.csv"), records
            )
            per_replica.append([r.ret for r in records])
    rows = aggregate_returns(per_replica)
    write_aggregate_csv(os.path.join(out_dir, "aggregate.csv"), rows)
    if budget_hit and cfg.strict_budget:
        raise InductionBudgetExhausted(
            "induction budget exhausted during the run (strict mode)"
        )
    return rows


def run_baseline(cfg: ExperimentConfig, out_dir):
    """Identical pipeline with the handcrafted task machine fixed: no
    example generation, no relearning."""
    return run_experiment(cfg, out_dir, baseline=True)
