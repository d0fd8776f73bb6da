# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels; semantics mirror ``pure.py`` exactly."""

import numpy as np

cimport numpy as cnp

cnp.import_array()


def belief_step(double[::1] belief, double[::1] rel_probs,
                Py_ssize_t[:, ::1] succ, double[::1] out):
    cdef Py_ssize_t n_states = belief.shape[0]
    cdef Py_ssize_t k = rel_probs.shape[0]
    cdef Py_ssize_t n_labels = 1 << k
    cdef Py_ssize_t idx, i, u
    cdef double w, b
    for u in range(n_states):
        out[u] = 0.0
    for idx in range(n_labels):
        w = 1.0
        for i in range(k):
            if idx >> i & 1:
                w *= rel_probs[i]
            else:
                w *= 1.0 - rel_probs[i]
        if w == 0.0:
            continue
        for u in range(n_states):
            b = belief[u]
            if b != 0.0:
                out[succ[u, idx]] += w * b
    return np.asarray(out)


def belief_potential(double[::1] belief, double[::1] phi, double floor):
    cdef Py_ssize_t u
    cdef double total = 0.0
    cdef double b
    for u in range(belief.shape[0]):
        b = belief[u]
        if b != 0.0:
            total += b * phi[u]
    if total < floor:
        return floor
    return total


def trie_replay(Py_ssize_t[::1] child_start, Py_ssize_t[::1] child_label,
                Py_ssize_t[::1] child_node, double[:, ::1] end_pen,
                Py_ssize_t[:, ::1] trans, Py_ssize_t n_assigned,
                Py_ssize_t accept_state, Py_ssize_t reject_state,
                first_reach=None):
    cdef Py_ssize_t n_nodes = child_start.shape[0] - 1
    cdef double penalty = 0.0
    cdef cnp.int64_t[::1] fr
    cdef bint track = first_reach is not None
    if track:
        fr = first_reach
    # explicit DFS stacks sized by trie depth <= node count
    cdef cnp.ndarray[cnp.int64_t, ndim=1] node_stack = np.empty(
        n_nodes + 1, dtype=np.int64)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] state_stack = np.empty(
        n_nodes + 1, dtype=np.int64)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] depth_stack = np.empty(
        n_nodes + 1, dtype=np.int64)
    cdef Py_ssize_t top = 0
    node_stack[0] = 0
    state_stack[0] = 0
    depth_stack[0] = 0
    cdef Py_ssize_t node, u, depth, ci, nxt
    cdef cnp.int64_t key
    cdef double pen_g, pen_d, pen_i
    while top >= 0:
        node = node_stack[top]
        u = state_stack[top]
        depth = depth_stack[top]
        top -= 1
        if track:
            key = (<cnp.int64_t> node) * (1 << 20) + depth
            if key < fr[u]:
                fr[u] = key
        pen_g = end_pen[node, 0]
        pen_d = end_pen[node, 1]
        pen_i = end_pen[node, 2]
        if pen_g != 0.0 or pen_d != 0.0 or pen_i != 0.0:
            if u == accept_state:
                penalty += pen_d + pen_i
            elif u == reject_state:
                penalty += pen_g + pen_i
            else:
                penalty += pen_g + pen_d
        if u == accept_state or u == reject_state:
            for ci in range(child_start[node], child_start[node + 1]):
                top += 1
                node_stack[top] = child_node[ci]
                state_stack[top] = u
                depth_stack[top] = depth + 1
        elif u < n_assigned:
            for ci in range(child_start[node], child_start[node + 1]):
                nxt = trans[u, child_label[ci]]
                top += 1
                node_stack[top] = child_node[ci]
                state_stack[top] = nxt
                depth_stack[top] = depth + 1
    return penalty
