"""Pure-Python fallback implementations of the hot kernels.

Semantics must match ``_core.pyx`` exactly; the compiled module is just a
faster drop-in.  Kept dependency-light on purpose: plain loops over numpy
buffers, no vectorisation tricks that could change float evaluation order.
"""

from __future__ import annotations

import numpy as np


def belief_step(belief, rel_probs, succ, out):
    """Propagate a belief vector through one probabilistic label.

    ``rel_probs[i]`` is the occurrence posterior of the i-th relevant
    proposition; ``succ[u, idx]`` the successor of state ``u`` under the
    relevant-label bit pattern ``idx``.  ``out`` is zeroed and filled with
    the next belief; mass is conserved because label probabilities sum to 1.
    """
    n_states = belief.shape[0]
    k = rel_probs.shape[0]
    out[:] = 0.0
    for idx in range(1 << k):
        w = 1.0
        for i in range(k):
            w *= rel_probs[i] if idx >> i & 1 else 1.0 - rel_probs[i]
        if w == 0.0:
            continue
        for u in range(n_states):
            b = belief[u]
            if b != 0.0:
                out[succ[u, idx]] += w * b
    return out


def belief_potential(belief, phi, floor):
    """Belief-weighted potential with the 0 * (-inf) := 0 convention,
    clamped below at ``floor``."""
    total = 0.0
    for u in range(belief.shape[0]):
        b = belief[u]
        if b != 0.0:
            total += b * phi[u]
    return max(total, floor)


def trie_replay(child_start, child_label, child_node, end_pen, trans,
                n_assigned, accept_state, reject_state, first_reach=None):
    """Replay a body trie against a (possibly partial) transition table.

    ``trans[u, lab]`` gives the successor of machine state ``u`` on observed
    label id ``lab``.  States with id >= ``n_assigned`` (other than the two
    sinks) have undecided outgoing edges: subtrees entered through them are
    skipped, so the returned mismatch penalty is a lower bound that becomes
    exact once every state is assigned.  ``end_pen[node]`` holds per-outcome
    penalty mass (goal, dead-end, incomplete) for bodies ending at ``node``.

    When ``first_reach`` (int64 array over machine states) is given it is
    filled with the minimal visit key ``node_order * 2**20 + depth`` per
    state, for canonical-order checks.
    """
    n_nodes = child_start.shape[0] - 1
    penalty = 0.0
    # iterative DFS; machine starts in state 0 at the trie root
    stack = [(0, 0, 0)]  # (trie node, machine state, depth)
    while stack:
        node, u, depth = stack.pop()
        if first_reach is not None:
            key = node * (1 << 20) + depth
            if key < first_reach[u]:
                first_reach[u] = key
        pen_g = end_pen[node, 0]
        pen_d = end_pen[node, 1]
        pen_i = end_pen[node, 2]
        if pen_g or pen_d or pen_i:
            if u == accept_state:
                penalty += pen_d + pen_i
            elif u == reject_state:
                penalty += pen_g + pen_i
            else:
                penalty += pen_g + pen_d
        if u == accept_state or u == reject_state:
            nxt_fixed = u
            for ci in range(child_start[node], child_start[node + 1]):
                stack.append((child_node[ci], nxt_fixed, depth + 1))
        elif u < n_assigned:
            for ci in range(child_start[node], child_start[node + 1]):
                stack.append((child_node[ci], trans[u, child_label[ci]], depth + 1))
        # else: undecided state, subtree outcome unknown -> optimistic skip
    return penalty
