"""Compiled kernels for large runs (CSR assembly and the two-color stabilizer).

Importing this module requires numba; callers fall back to pure
numpy/python implementations when the import fails.
"""

from __future__ import annotations

import numba
import numpy as np


@numba.njit(cache=True)
def scatter_csr(eu, ev, write_pos, indices):  # pragma: no cover - exercised via graph tests
    """Counting-sort scatter: fill CSR ``indices`` from an undirected edge list.

    Each edge is written in both directions, so no doubled copy of the edge
    arrays is ever materialized.  ``write_pos`` must start as a copy of
    ``indptr[:-1]`` (it is consumed).
    """
    for e in range(eu.shape[0]):
        u = eu[e]
        v = ev[e]
        indices[write_pos[u]] = v
        write_pos[u] += 1
        indices[write_pos[v]] = u
        write_pos[v] += 1


@numba.njit(cache=True)
def stabilize(indptr, indices, color, bal, pinned, switch_counts, cap):  # pragma: no cover
    """Run single-switch (benevolent, arbitrary order) steps until stable.

    Mutates ``color``, ``bal`` and ``switch_counts`` in place.  Pops pending
    nodes from a LIFO stack, re-validating each (stale entries are skipped),
    so every switch is of a currently switchable node.  Returns the number of
    switches, or -1 if ``cap`` switches are exceeded (which would indicate a
    broken invariant, as conflict counting bounds the total).
    """
    n = color.shape[0]
    stack = np.empty(n, dtype=np.int64)
    in_stack = np.zeros(n, dtype=np.uint8)
    top = 0
    for v in range(n):
        if bal[v] < 0 and pinned[v] == 0:
            stack[top] = v
            in_stack[v] = 1
            top += 1
    switches = 0
    while top > 0:
        top -= 1
        v = stack[top]
        in_stack[v] = 0
        if bal[v] >= 0:
            continue
        cv = np.uint8(1 - color[v])
        color[v] = cv
        bal[v] = -bal[v]
        for i in range(indptr[v], indptr[v + 1]):
            w = indices[i]
            if color[w] == cv:
                bal[w] -= 2
            else:
                bal[w] += 2
            if bal[w] < 0 and pinned[w] == 0 and in_stack[w] == 0:
                stack[top] = w
                in_stack[w] = 1
                top += 1
        switch_counts[v] += 1
        switches += 1
        if switches > cap:
            return -1
    return switches
