"""Command line interface.

Subcommands: ``run`` (interleaved training), ``baseline`` (handcrafted
machine, no relearning), ``induce`` (one-shot machine induction from an
example pool file), ``eval-rm`` (outcome agreement of two machines over a
trace file) and ``curves`` (re-aggregate raw CSVs).

Exit codes: 0 ok, 1 config/usage error, 2 runtime failure, 3 induction
budget exhausted in strict mode.
"""

from __future__ import annotations

import argparse
import sys

from .events import make_alphabet, parse_symbolic_trace
from .harness import (ConfigError, InductionBudgetExhausted, aggregate_raw_dir,
                      load_config, run_experiment)
from .induction import InductionTask, induce
from .machine import RewardMachine


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="beliefrm",
        description="Reward-machine RL under noisy symbolic sensing",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="train with interleaved RM learning")
    p_run.add_argument("--config", required=True)
    p_run.add_argument("--out", required=True)
    p_run.add_argument("--seed", type=int, default=None,
                       help="override the config's seed list with one seed")

    p_base = sub.add_parser("baseline", help="train with the handcrafted RM")
    p_base.add_argument("--config", required=True)
    p_base.add_argument("--out", required=True)
    p_base.add_argument("--seed", type=int, default=None)

    p_ind = sub.add_parser("induce", help="induce an RM from an example pool")
    p_ind.add_argument("--examples", required=True)
    p_ind.add_argument("--max-states", type=int, default=1,
                       help="maximum intermediate states")
    p_ind.add_argument("--budget", type=float, default=60.0)
    p_ind.add_argument("--alphabet", default=None,
                       help="comma-separated proposition names (default: "
                            "inferred sorted from the pool file)")
    p_ind.add_argument("--edge-cost", choices=("plus-one", "literals"),
                       default="plus-one")
    p_ind.add_argument("--max-bases", type=int, default=16)
    p_ind.add_argument("--out", default=None, help="write the RM here")

    p_eval = sub.add_parser("eval-rm",
                            help="outcome agreement of two RMs over traces")
    p_eval.add_argument("rm_a")
    p_eval.add_argument("rm_b")
    p_eval.add_argument("--traces", required=True)
    p_eval.add_argument("--alphabet", default=None)

    p_curves = sub.add_parser("curves", help="re-aggregate raw replica CSVs")
    p_curves.add_argument("--raw", required=True)
    p_curves.add_argument("--out", required=True)

    return parser


def _infer_alphabet(lines):
    names = set()
    for line in lines:
        _, _, steps = line.strip().partition(";")
        # pool lines carry a penalty column before the steps
        first, _, rest = steps.partition(";")
        if rest:
            steps = rest
        for step in steps.split("|"):
            if step and step != "-":
                for fieldtext in step.split(","):
                    names.add(fieldtext.partition(":")[0])
    if not names:
        raise ConfigError("cannot infer an alphabet from the input file")
    return make_alphabet(sorted(names))


def _alphabet_from_arg(arg, lines):
    if arg:
        return make_alphabet([n.strip() for n in arg.split(",") if n.strip()])
    return _infer_alphabet(lines)


def _cmd_run(args, baseline: bool) -> int:
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg.seeds = (args.seed,)
    rows = run_experiment(cfg, args.out, baseline=baseline)
    final = rows[-1]
    print(f"episodes={len(rows)} final_smoothed_return={final[3]:.4f}")
    return 0


def _cmd_induce(args) -> int:
    from .examples import load_pool

    with open(args.examples) as fh:
        lines = [ln for ln in fh if ln.strip()]
    alphabet = _alphabet_from_arg(args.alphabet, lines)
    pool = load_pool(args.examples, alphabet)
    task = InductionTask(
        alphabet, pool,
        max_intermediate_states=args.max_states,
        edge_cost=args.edge_cost,
        max_bases=args.max_bases,
        budget_seconds=args.budget,
    )
    hyp = induce(task)
    text = hyp.machine.serialize()
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    status = "suboptimal" if hyp.suboptimal else "optimal"
    print(f"score={hyp.score!r} length={hyp.length!r} "
          f"penalty={hyp.penalty!r} status={status}")
    return 0


def _cmd_eval_rm(args) -> int:
    with open(args.traces) as fh:
        lines = [ln for ln in fh if ln.strip()]
    with open(args.rm_a) as fh:
        text_a = fh.read()
    with open(args.rm_b) as fh:
        text_b = fh.read()
    alphabet = _alphabet_from_arg(args.alphabet, lines)
    rm_a = RewardMachine.parse(alphabet, text_a)
    rm_b = RewardMachine.parse(alphabet, text_b)
    agree = 0
    for line in lines:
        _, trace = parse_symbolic_trace(alphabet, line)
        if rm_a.classify(trace) == rm_b.classify(trace):
            agree += 1
    pct = 100.0 * agree / len(lines) if lines else 100.0
    print(f"agreement {agree}/{len(lines)} = {pct:.2f}%")
    return 0


def _cmd_curves(args) -> int:
    aggregate_raw_dir(args.raw, args.out)
    print(f"wrote {args.out}")
    return 0


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code in (0, None) else 1
    try:
        if args.command == "run":
            return _cmd_run(args, baseline=False)
        if args.command == "baseline":
            return _cmd_run(args, baseline=True)
        if args.command == "induce":
            return _cmd_induce(args)
        if args.command == "eval-rm":
            return _cmd_eval_rm(args)
        if args.command == "curves":
            return _cmd_curves(args)
        parser.error(f"unknown command {args.command!r}")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except InductionBudgetExhausted as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (OSError, ValueError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
