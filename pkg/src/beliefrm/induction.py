"""Cost-optimal induction of reward machines from weighted examples.

The objective is hypothesis length plus the total penalty of uncovered
examples.  A machine covers a goal example when replaying its body ends in
the accepting state, a dead-end example when it ends in the rejecting
state, and an incomplete example when it ends in neither.

The hypothesis space is generated from the pool itself: every edge carries
a "base" guard whose positive literals are a label observed in some body
(or a single observed proposition), and negative literals are added
canonically where sibling edges of one state would otherwise overlap.
``induce`` runs an iterative-deepening branch-and-bound over per-state edge
assignments with an admissible uncovered-penalty bound; the independent
``brute_force_induce`` enumerates the same space exhaustively by edge count
and is only feasible on small instances.
"""

from __future__ import annotations

import itertools
import time
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .events import Alphabet, TraceOutcome
from .examples import WeightedExample
from .machine import Guard, RewardMachine

_OUTCOME_COL = {TraceOutcome.GOAL: 0, TraceOutcome.DEADEND: 1,
                TraceOutcome.INCOMPLETE: 2}
_UNREACHED = 1 << 62


class EmptyAlphabetError(ValueError):
    pass


class InstanceTooLargeError(ValueError):
    """Instance exceeds the hard caps of the brute-force oracle."""


@dataclass
class InductionTask:
    alphabet: Alphabet
    examples: list
    max_intermediate_states: int = 1
    edge_cost: str = "plus-one"  # or "literals"
    max_bases: int | None = 16
    full_base_space: bool = False
    budget_seconds: float | None = 60.0

    def __post_init__(self):
        if len(self.alphabet) == 0:
            raise EmptyAlphabetError("induction needs a non-empty alphabet")
        if self.max_intermediate_states < 0:
            raise ValueError("max_intermediate_states must be >= 0")
        if self.edge_cost not in ("plus-one", "literals"):
            raise ValueError(f"unknown edge cost mode {self.edge_cost!r}")


@dataclass
class ScoredHypothesis:
    machine: RewardMachine
    length: float
    penalty: float
    score: float
    suboptimal: bool = False
    nodes_explored: int = 0


# --- scoring of arbitrary machines -----------------------------------------

def covers(rm: RewardMachine, ex: WeightedExample) -> bool:
    final = rm.traverse(ex.body)[-1]
    if ex.outcome is TraceOutcome.GOAL:
        return final == rm.uA
    if ex.outcome is TraceOutcome.DEADEND:
        return final == rm.uR
    return final not in (rm.uA, rm.uR)


def hypothesis_length(rm: RewardMachine, mode: str = "plus-one") -> int:
    per_edge = 1 if mode == "plus-one" else 0
    return sum(
        per_edge + g.literals for outs in rm.edges.values() for g, _ in outs
    )


def score(rm: RewardMachine, task: InductionTask) -> ScoredHypothesis:
    length = hypothesis_length(rm, task.edge_cost)
    penalty = sum(ex.penalty for ex in task.examples if not covers(rm, ex))
    return ScoredHypothesis(rm, length, penalty, length + penalty)


# --- hypothesis space --------------------------------------------------------

def complete_guards(bases):
    """Attach negative literals to a state's base guards so every pair is
    syntactically mutually exclusive.

    Pairs are processed in canonical order; a pair lacking a complementary
    literal gets the smallest proposition of the set difference negated on
    the more general side.  Returns base -> Guard, or None when two bases
    share their positive set (no completion can separate them).
    """
    ordered = sorted(bases, key=lambda b: tuple(sorted(b)))
    negs = {b: set() for b in ordered}
    for i in range(len(ordered)):
        for j in range(i + 1, len(ordered)):
            bi, bj = ordered[i], ordered[j]
            if bi & negs[bj] or bj & negs[bi]:
                continue
            if bj - bi:
                negs[bi].add(min(bj - bi))
            elif bi - bj:
                negs[bj].add(min(bi - bj))
            else:
                return None
    return {b: Guard(frozenset(b), frozenset(negs[b])) for b in ordered}


class _Space:
    """Shared hypothesis-space data: observed labels, candidate bases and
    the example bodies in replayable form."""

    def __init__(self, task: InductionTask):
        self.task = task
        self.alphabet = task.alphabet
        self.examples = list(task.examples)

        observed = []
        seen = set()
        for ex in self.examples:
            for lab in ex.body:
                if lab not in seen:
                    seen.add(lab)
                    observed.append(lab)
        observed.sort()
        self.labels = observed
        self.label_idx = {lab: i for i, lab in enumerate(observed)}

        props = set()
        for lab in observed:
            for i in range(len(self.alphabet)):
                if lab >> i & 1:
                    props.add(i)
        if task.full_base_space:
            props_all = range(len(self.alphabet))
            bases = set()
            for r in range(1, len(self.alphabet) + 1):
                for combo in itertools.combinations(props_all, r):
                    bases.add(frozenset(combo))
        else:
            bases = {frozenset(p for p in props if lab >> p & 1)
                     for lab in observed if lab != 0}
            bases |= {frozenset({p}) for p in props}
        ordered = sorted(bases, key=lambda b: (len(b), tuple(sorted(b))))
        if task.max_bases is not None and len(ordered) > task.max_bases:
            ranked = sorted(
                ordered,
                key=lambda b: (-self._discrimination(b), len(b), tuple(sorted(b))),
            )
            keep = set(ranked[: task.max_bases])
            ordered = [b for b in ordered if b in keep]
        self.bases = ordered

        self.bodies = [
            tuple(self.label_idx[lab] for lab in ex.body) for ex in self.examples
        ]
        self._build_trie()

    def _discrimination(self, base) -> float:
        """Penalty-weighted frequency of the base matching some body step."""
        mask = 0
        for p in base:
            mask |= 1 << p
        total = 0.0
        for ex in self.examples:
            if any(lab & mask == mask for lab in ex.body):
                total += ex.penalty if np.isfinite(ex.penalty) else 1.0
        return total

    def _build_trie(self):
        children: list = [{}]
        ends: list = [[0.0, 0.0, 0.0]]
        for ex, body in zip(self.examples, self.bodies):
            node = 0
            for li in body:
                nxt = children[node].get(li)
                if nxt is None:
                    nxt = len(children)
                    children[node][li] = nxt
                    children.append({})
                    ends.append([0.0, 0.0, 0.0])
                node = nxt
            ends[node][_OUTCOME_COL[ex.outcome]] += ex.penalty
        n = len(children)
        starts = np.zeros(n + 1, dtype=np.intp)
        labs, nodes = [], []
        for i, ch in enumerate(children):
            starts[i + 1] = starts[i] + len(ch)
            for li, nd in sorted(ch.items()):
                labs.append(li)
                nodes.append(nd)
        self.trie_child_start = starts
        self.trie_child_label = np.array(labs, dtype=np.intp)
        self.trie_child_node = np.array(nodes, dtype=np.intp)
        self.trie_end_pen = np.array(ends, dtype=np.float64)

    # -- machines over k intermediate states --------------------------------

    def n_states(self, k: int) -> int:
        return k + 3

    def accept(self, k: int) -> int:
        return k + 1

    def reject(self, k: int) -> int:
        return k + 2

    def targets(self, u: int, k: int):
        """Allowed edge targets: any state except the source and the
        initial state (no reset edges)."""
        return [t for t in range(1, k + 3) if t != u]

    def edge_cost(self, guard: Guard) -> int:
        per_edge = 1 if self.task.edge_cost == "plus-one" else 0
        return per_edge + guard.literals

    def min_edge_cost(self, base) -> int:
        """Cost lower bound for an edge before negatives are attached."""
        per_edge = 1 if self.task.edge_cost == "plus-one" else 0
        return per_edge + len(base)

    def build_machine(self, k: int, assignment) -> RewardMachine:
        """``assignment[u]`` maps target state -> base positive set."""
        uA, uR = self.accept(k), self.reject(k)
        edges: dict = {}
        rewards = {}
        for u, targ_map in assignment.items():
            if not targ_map:
                continue
            guards = complete_guards(list(targ_map.values()))
            outs = []
            for t, base in sorted(targ_map.items()):
                outs.append((guards[base], t))
                if t == uA:
                    rewards[(u, t)] = 1.0
            edges[u] = outs
        return RewardMachine(self.alphabet, k + 3, 0, uA, uR, edges, rewards)

    def state_edges(self, targ_map):
        """Completed (guard, target) pairs and total cost for one state."""
        if not targ_map:
            return [], 0
        guards = complete_guards(list(targ_map.values()))
        if guards is None:
            return None, 0
        outs = [(guards[base], t) for t, base in sorted(targ_map.items())]
        cost = sum(self.edge_cost(g) for g, _ in outs)
        return outs, cost

    def trans_row(self, outs):
        """Observed-label transition row for a state with edges ``outs``."""
        row = np.empty(len(self.labels), dtype=np.intp)
        for li, lab in enumerate(self.labels):
            nxt = -1
            for g, t in outs:
                if g.satisfied_by(lab):
                    nxt = t
                    break
            row[li] = nxt
        return row

    def canonical_order(self, first_reach, k: int) -> bool:
        """Intermediate states must be first-reached in id order during a
        pool-order replay, and all of them must be reached."""
        prev = -1
        for v in range(1, k + 1):
            fr = first_reach[v]
            if fr >= _UNREACHED or fr <= prev:
                return False
            prev = fr
        return True


def _empty_hypothesis(space: _Space) -> ScoredHypothesis:
    rm = space.build_machine(0, {0: {}})
    penalty = sum(
        ex.penalty for ex in space.examples
        if ex.outcome is not TraceOutcome.INCOMPLETE
    )
    return ScoredHypothesis(rm, 0, penalty, penalty)


# --- branch-and-bound search ---------------------------------------------------

class _Budget:
    def __init__(self, seconds):
        self.deadline = None if seconds is None else time.monotonic() + seconds
        self.expired = False
        self.nodes = 0

    def tick(self) -> bool:
        self.nodes += 1
        if self.deadline is not None and self.nodes % 256 == 0:
            if time.monotonic() > self.deadline:
                self.expired = True
        return self.expired


class _Incumbent:
    def __init__(self):
        self.score = np.inf
        self.serial = None
        self.hypothesis = None

    def offer(self, space, k, assignment, length, penalty):
        total = length + penalty
        if total > self.score:
            return
        rm = space.build_machine(k, assignment)
        serial = rm.serialize()
        if total < self.score or self.serial is None or serial < self.serial:
            self.score = total
            self.serial = serial
            self.hypothesis = ScoredHypothesis(rm, length, penalty, total)


def induce(task: InductionTask) -> ScoredHypothesis:
    """Minimal-score machine over the pool-derived hypothesis space.

    Iterative deepening on the intermediate-state count; for each count, a
    depth-first search assigns each state's outgoing edges in turn, pruning
    a branch when its length plus the penalty lower bound (mismatch mass of
    bodies whose traversal is already fully decided) exceeds the incumbent.
    On budget expiry the best hypothesis so far is returned flagged
    ``suboptimal``.
    """
    space = _Space(task)
    budget = _Budget(task.budget_seconds)
    best = _Incumbent()

    n_labels = len(space.labels)
    sentinel = np.full(1, _UNREACHED, dtype=np.int64)

    for k in range(task.max_intermediate_states + 1):
        if budget.expired:
            break
        uA, uR = space.accept(k), space.reject(k)
        trans = np.zeros((k + 3, max(1, n_labels)), dtype=np.intp)
        assignment: dict = {}

        # per-state candidate assignments, enumerated lazily in DFS
        def assign_state(u: int, length_so_far: float):
            if budget.tick():
                return
            targets = space.targets(u, k)

            def enum_targets(ti: int, targ_map: dict, used, min_cost: float):
                if budget.expired:
                    return
                if ti == len(targets):
                    finish_state(u, dict(targ_map), length_so_far)
                    return
                t = targets[ti]
                # option: no edge toward t
                enum_targets(ti + 1, targ_map, used, min_cost)
                for base in space.bases:
                    if base in used:
                        continue
                    add = space.min_edge_cost(base)
                    if length_so_far + min_cost + add > best.score:
                        continue
                    targ_map[t] = base
                    used.add(base)
                    enum_targets(ti + 1, targ_map, used, min_cost + add)
                    del targ_map[t]
                    used.discard(base)

            enum_targets(0, {}, set(), 0.0)

        def finish_state(u: int, targ_map: dict, length_so_far: float):
            if budget.tick():
                return
            outs, cost = space.state_edges(targ_map)
            if outs is None:
                return
            length = length_so_far + cost
            if length > best.score:
                return
            if n_labels:
                trans[u] = space.trans_row(outs)
            else:
                trans[u] = -1
            assignment[u] = targ_map
            if u == k:
                first_reach = np.full(k + 3, _UNREACHED, dtype=np.int64)
                penalty = _kernels.trie_replay(
                    space.trie_child_start, space.trie_child_label,
                    space.trie_child_node, space.trie_end_pen,
                    _self_defaulted(trans, k), u + 1, uA, uR, first_reach,
                )
                if space.canonical_order(first_reach, k):
                    best.offer(space, k, assignment, length, penalty)
            else:
                lb = _kernels.trie_replay(
                    space.trie_child_start, space.trie_child_label,
                    space.trie_child_node, space.trie_end_pen,
                    _self_defaulted(trans, k), u + 1, uA, uR, None,
                )
                if length + lb <= best.score:
                    assign_state(u + 1, length)
            del assignment[u]

        assign_state(0, 0.0)

    if best.hypothesis is None:
        hyp = _empty_hypothesis(space)
    else:
        hyp = best.hypothesis
    hyp.suboptimal = budget.expired
    hyp.nodes_explored = budget.nodes
    return hyp


def _self_defaulted(trans, k):
    """Resolve -1 (no matching guard) entries to self-loops row by row."""
    out = trans.copy()
    for u in range(out.shape[0]):
        row = out[u]
        row[row == -1] = u
    return out


# --- exhaustive oracle -----------------------------------------------------------

_ORACLE_MAX_PROPS = 3
_ORACLE_MAX_INTERMEDIATE = 2
_ORACLE_MAX_BASES = 30


class _OracleReplayer:
    """Vectorised pool replay for the oracle: all bodies advance through
    the candidate machine in lockstep, padded to a common length."""

    def __init__(self, space: _Space):
        bodies = space.bodies
        self.n_bodies = len(bodies)
        self.max_len = max((len(b) for b in bodies), default=0)
        mat = np.full((self.n_bodies, self.max_len), -1, dtype=np.intp)
        for i, body in enumerate(bodies):
            mat[i, : len(body)] = body
        self.steps = [np.ascontiguousarray(mat[:, t])
                      for t in range(self.max_len)]
        self.pad = [self.steps[t] < 0 for t in range(self.max_len)]
        self.outcome_col = np.array(
            [_OUTCOME_COL[ex.outcome] for ex in space.examples], dtype=np.intp
        )
        self.penalties = np.array([ex.penalty for ex in space.examples])

    def _final_states(self, trans):
        state = np.zeros(self.n_bodies, dtype=np.intp)
        for t in range(self.max_len):
            nxt = trans[state, np.where(self.pad[t], 0, self.steps[t])]
            state = np.where(self.pad[t], state, nxt)
        return state

    def penalty(self, trans, uA, uR) -> float:
        """Uncovered penalty mass of the pool under the transition table."""
        state = self._final_states(trans)
        covered = np.where(
            self.outcome_col == 0, state == uA,
            np.where(self.outcome_col == 1, state == uR,
                     (state != uA) & (state != uR)),
        )
        return float(self.penalties[~covered].sum())

    def first_reach(self, trans, k):
        """Per-state first-reach keys in pool-replay order (body-major,
        step-minor)."""
        first_reach = np.full(k + 3, _UNREACHED, dtype=np.int64)
        first_reach[0] = -1
        state = np.zeros(self.n_bodies, dtype=np.intp)
        stride = self.max_len + 1
        for t in range(self.max_len):
            nxt = trans[state, np.where(self.pad[t], 0, self.steps[t])]
            state = np.where(self.pad[t], state, nxt)
            for v in range(k + 3):
                hits = np.flatnonzero(~self.pad[t] & (state == v))
                if hits.size:
                    key = hits[0] * stride + t + 1
                    if key < first_reach[v]:
                        first_reach[v] = key
        return first_reach


def brute_force_induce(task: InductionTask) -> ScoredHypothesis:
    """Global optimum by exhaustive enumeration, ascending in edge count.

    Enumeration of machines with ``m`` edges stops once the minimum length
    of an ``m``-edge machine alone exceeds the best score found, which is a
    sound cutoff because penalties are nonnegative.  Only meant for small
    instances; raises ``InstanceTooLargeError`` beyond the hard caps.
    """
    if len(task.alphabet) > _ORACLE_MAX_PROPS:
        raise InstanceTooLargeError(
            f"oracle caps the alphabet at {_ORACLE_MAX_PROPS} propositions"
        )
    if task.max_intermediate_states > _ORACLE_MAX_INTERMEDIATE:
        raise InstanceTooLargeError(
            f"oracle caps intermediate states at {_ORACLE_MAX_INTERMEDIATE}"
        )
    space = _Space(task)
    if len(space.bases) > _ORACLE_MAX_BASES:
        raise InstanceTooLargeError(
            f"oracle caps candidate bases at {_ORACLE_MAX_BASES}"
        )

    replayer = _OracleReplayer(space)
    best_score = np.inf
    best_serial = None
    best = None
    checked = 0
    n_labels = len(space.labels)

    # cost and -1-defaulted transition row of one state's edge set; the row
    # is independent of which state carries the edges
    row_memo: dict = {}

    def state_row(targ_items):
        cached = row_memo.get(targ_items)
        if cached is None:
            outs, cost = space.state_edges(dict(targ_items))
            if outs is None:
                cached = (None, 0)
            else:
                row = space.trans_row(outs) if n_labels else \
                    np.full(1, -1, dtype=np.intp)
                cached = (row, cost)
            row_memo[targ_items] = cached
        return cached

    for k in range(task.max_intermediate_states + 1):
        slots = [(u, t) for u in range(k + 1) for t in space.targets(u, k)]
        uA, uR = space.accept(k), space.reject(k)
        per_edge = 1 if task.edge_cost == "plus-one" else 0
        min_single = per_edge + min((len(b) for b in space.bases), default=1)
        sink_rows = {uA: np.full(max(1, n_labels), uA, dtype=np.intp),
                     uR: np.full(max(1, n_labels), uR, dtype=np.intp)}

        for m in range(len(slots) + 1):
            if m * min_single > best_score:
                break
            for chosen in itertools.combinations(slots, m):
                for combo in itertools.product(space.bases, repeat=m):
                    assignment: dict = {u: {} for u in range(k + 1)}
                    ok = True
                    for (u, t), base in zip(chosen, combo):
                        if base in set(assignment[u].values()):
                            ok = False
                            break
                        assignment[u][t] = base
                    if not ok:
                        continue
                    rows = []
                    length = 0
                    for u in range(k + 1):
                        row, cost = state_row(
                            tuple(sorted(assignment[u].items()))
                        )
                        if row is None:
                            ok = False
                            break
                        resolved = row.copy()
                        resolved[resolved == -1] = u
                        rows.append(resolved)
                        length += cost
                    if not ok or length > best_score:
                        continue
                    checked += 1
                    trans = np.vstack(rows + [sink_rows[uA], sink_rows[uR]])
                    penalty = replayer.penalty(trans, uA, uR)
                    total = length + penalty
                    if total > best_score:
                        continue
                    if not space.canonical_order(
                            replayer.first_reach(trans, k), k):
                        continue
                    rm = space.build_machine(k, assignment)
                    serial = rm.serialize()
                    if (total < best_score or best_serial is None
                            or serial < best_serial):
                        best_score = total
                        best_serial = serial
                        best = ScoredHypothesis(rm, length, penalty, total)

    if best is None:
        best = _empty_hypothesis(space)
    best.nodes_explored = checked
    return best
