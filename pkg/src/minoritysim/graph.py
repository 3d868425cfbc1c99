"""Graph substrate and single-step semantics for minority-process dynamics.

A minority process runs on a simple undirected graph whose nodes each carry a
color.  A node is *switchable* when some color is strictly rarer in its
neighborhood than its own color; switching adopts a (the) minority color.  In
two-color mode this is summarized by the node's *balance*:

    balance(v) = #opposite-colored neighbors - #same-colored neighbors

A node is switchable iff its balance is negative, and a step that switches a
set S of nodes updates all colors simultaneously.  Nodes can be *pinned*
(permanently fixed); they contribute to their neighbors' balances but never
switch themselves.

The module keeps graphs in CSR form (``indptr``/``indices``) plus the raw edge
list, and tracks dynamic state as a color array with an incrementally
maintained balance cache (two-color mode only; multi-color mode evaluates
neighborhoods directly).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

WHITE: int = 0
BLACK: int = 1


class GraphValidationError(ValueError):
    """Raised when a graph fails structural validation."""


class InvalidStepError(ValueError):
    """Raised when a step switches nodes that are not allowed to switch."""


def _csr_from_edges(num_nodes: int, eu: np.ndarray, ev: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Build CSR adjacency (both directions) from an undirected edge list."""
    deg = np.bincount(eu, minlength=num_nodes)
    deg += np.bincount(ev, minlength=num_nodes)
    indptr = np.zeros(num_nodes + 1, dtype=np.int64)
    np.cumsum(deg, out=indptr[1:])
    del deg
    indices = np.empty(2 * eu.shape[0], dtype=np.int32)
    try:
        from minoritysim._kernels import scatter_csr

        scatter_csr(eu, ev, indptr.copy(), indices)
    except Exception:
        cat_u = np.concatenate([eu, ev])
        order = np.argsort(cat_u, kind="stable")
        del cat_u
        indices[:] = np.concatenate([ev, eu])[order]
    return indptr, indices


def _has_duplicate_edges(num_nodes: int, eu: np.ndarray, ev: np.ndarray) -> bool:
    """Duplicate-edge test via one sorted key array (no extra copies)."""
    key = np.empty(eu.shape[0], dtype=np.int64)
    chunk = 16_000_000
    for lo in range(0, eu.shape[0], chunk):
        a = eu[lo : lo + chunk].astype(np.int64)
        b = ev[lo : lo + chunk].astype(np.int64)
        key[lo : lo + a.shape[0]] = np.minimum(a, b) * np.int64(num_nodes) + np.maximum(a, b)
    key.sort()
    return bool(np.any(key[1:] == key[:-1]))


@dataclass(frozen=True)
class Graph:
    """Immutable simple undirected graph with initial colors and pinned flags.

    ``edges_u``/``edges_v`` store each undirected edge once; ``indptr`` and
    ``indices`` give CSR adjacency with both directions.  ``num_colors`` is 2
    for plain instances and larger after color extension.
    """

    num_nodes: int
    indptr: np.ndarray
    indices: np.ndarray
    init_color: np.ndarray
    pinned: np.ndarray
    edges_u: np.ndarray
    edges_v: np.ndarray
    num_colors: int = 2

    @staticmethod
    def from_edges(
        num_nodes: int,
        edges_u,
        edges_v,
        init_color,
        pinned=None,
        *,
        num_colors: int = 2,
        validate: bool = True,
    ) -> "Graph":
        eu = np.asarray(edges_u, dtype=np.int32).ravel()
        ev = np.asarray(edges_v, dtype=np.int32).ravel()
        color = np.asarray(init_color, dtype=np.uint8).ravel()
        if pinned is None:
            pin = np.zeros(num_nodes, dtype=bool)
        else:
            pin = np.asarray(pinned, dtype=bool).ravel()
        if validate:
            if color.shape[0] != num_nodes or pin.shape[0] != num_nodes:
                raise GraphValidationError("color/pinned arrays must have one entry per node")
            if eu.shape != ev.shape:
                raise GraphValidationError("edge endpoint arrays differ in length")
            if eu.size:
                if int(min(eu.min(), ev.min())) < 0 or int(max(eu.max(), ev.max())) >= num_nodes:
                    raise GraphValidationError("edge endpoint out of range")
                if np.any(eu == ev):
                    raise GraphValidationError("self-loops are not allowed")
                if _has_duplicate_edges(num_nodes, eu, ev):
                    raise GraphValidationError("duplicate edges are not allowed")
            if num_colors < 2:
                raise GraphValidationError("at least two colors are required")
            if color.size and int(color.max()) >= num_colors:
                raise GraphValidationError("node color exceeds num_colors")
        indptr, indices = _csr_from_edges(num_nodes, eu, ev)
        return Graph(
            num_nodes=num_nodes,
            indptr=indptr,
            indices=indices,
            init_color=color,
            pinned=pin,
            edges_u=eu,
            edges_v=ev,
            num_colors=num_colors,
        )

    @property
    def num_edges(self) -> int:
        return int(self.edges_u.shape[0])

    @property
    def num_active(self) -> int:
        """Number of non-pinned nodes (pinned helper nodes are not counted)."""
        return int(self.num_nodes - int(self.pinned.sum()))

    def neighbors(self, v: int) -> np.ndarray:
        return self.indices[self.indptr[v] : self.indptr[v + 1]]

    def degree(self, v: int) -> int:
        return int(self.indptr[v + 1] - self.indptr[v])


@dataclass
class State:
    """Dynamic state: current colors plus (two-color mode) a balance cache."""

    color: np.ndarray
    balance: np.ndarray | None
    num_colors: int = 2

    def copy(self) -> "State":
        return State(
            color=self.color.copy(),
            balance=None if self.balance is None else self.balance.copy(),
            num_colors=self.num_colors,
        )

    def fingerprint(self) -> bytes:
        return self.color.tobytes()


def compute_balances(graph: Graph, color: np.ndarray) -> np.ndarray:
    """Balance of every node under ``color`` (two-color mode), vectorized."""
    n = graph.num_nodes
    bal = np.zeros(n, dtype=np.int64)
    chunk = 16_000_000
    for lo in range(0, graph.num_edges, chunk):
        eu = graph.edges_u[lo : lo + chunk]
        ev = graph.edges_v[lo : lo + chunk]
        w = np.where(color[eu] != color[ev], 1.0, -1.0)
        bal += np.bincount(eu, weights=w, minlength=n).astype(np.int64)
        bal += np.bincount(ev, weights=w, minlength=n).astype(np.int64)
    return bal.astype(np.int32)


def make_state(graph: Graph, color=None) -> State:
    """Initial dynamic state for ``graph`` (colors default to ``init_color``)."""
    c = graph.init_color.copy() if color is None else np.asarray(color, dtype=np.uint8).copy()
    if graph.num_colors == 2:
        return State(color=c, balance=compute_balances(graph, c), num_colors=2)
    return State(color=c, balance=None, num_colors=graph.num_colors)


def balance(graph: Graph, state: State, v: int) -> int:
    """Two-color balance of ``v``: opposite-colored minus same-colored neighbors."""
    if state.balance is not None:
        return int(state.balance[v])
    if state.num_colors != 2:
        raise ValueError("balance is defined in two-color mode only")
    nb = graph.neighbors(v)
    same = int(np.count_nonzero(state.color[nb] == state.color[v]))
    return int(nb.shape[0] - 2 * same)


def neighborhood_counts(graph: Graph, state: State, v: int) -> np.ndarray:
    """Histogram of neighbor colors of ``v`` over all colors."""
    nb = graph.neighbors(v)
    return np.bincount(state.color[nb], minlength=state.num_colors)


def minority_color(graph: Graph, state: State, v: int) -> tuple[int, bool]:
    """Strictly rarest color in ``v``'s neighborhood.

    Returns ``(color, tie)`` where ``color`` is the lowest-index color
    achieving the minimum neighbor count and ``tie`` says whether several
    colors achieve it.  An isolated node reports its own color and no tie.
    """
    counts = neighborhood_counts(graph, state, v)
    if counts.sum() == 0:
        return int(state.color[v]), False
    m = counts.min()
    winners = np.flatnonzero(counts == m)
    return int(winners[0]), bool(winners.shape[0] > 1)


def is_switchable(graph: Graph, state: State, v: int) -> bool:
    """True when some color is strictly rarer around ``v`` than its own color."""
    if graph.pinned[v]:
        return False
    if state.num_colors == 2 and state.balance is not None:
        return bool(state.balance[v] < 0)
    counts = neighborhood_counts(graph, state, v)
    return bool(counts.min() < counts[state.color[v]])


def total_conflicts(graph: Graph, state: State) -> int:
    """Number of monochromatic edges; each singleton switch strictly lowers it."""
    same = state.color[graph.edges_u] == state.color[graph.edges_v]
    return int(np.count_nonzero(same))


def switchable_set(graph: Graph, state: State) -> np.ndarray:
    """Sorted array of all currently switchable (non-pinned) node ids."""
    if state.num_colors == 2 and state.balance is not None:
        return np.flatnonzero((state.balance < 0) & ~graph.pinned).astype(np.int64)
    out = [v for v in range(graph.num_nodes) if is_switchable(graph, state, v)]
    return np.asarray(out, dtype=np.int64)


def _validate_step_nodes(graph: Graph, state: State, nodes: np.ndarray) -> None:
    if nodes.size == 0:
        raise InvalidStepError("a step must switch at least one node")
    if np.unique(nodes).shape[0] != nodes.shape[0]:
        raise InvalidStepError("a step must not repeat nodes")
    if graph.pinned[nodes].any():
        bad = int(nodes[graph.pinned[nodes]][0])
        raise InvalidStepError(f"node {bad} is pinned and can never switch")
    for v in nodes:
        if not is_switchable(graph, state, int(v)):
            raise InvalidStepError(f"node {int(v)} is not switchable")


def apply_step_inplace(graph: Graph, state: State, nodes, *, validate: bool = True) -> int:
    """Simultaneously switch ``nodes``; returns the number of tied choices.

    Two-color mode flips each switching node and maintains the balance cache
    incrementally; multi-color mode moves each switching node to its minority
    color (lowest index on a tie), evaluated on the pre-step state.
    """
    sel = np.asarray(nodes, dtype=np.int64).ravel()
    if validate:
        _validate_step_nodes(graph, state, sel)
    color = state.color
    ties = 0
    if state.num_colors == 2 and state.balance is not None:
        bal = state.balance
        indptr, indices = graph.indptr, graph.indices
        deltas: dict[int, int] = {}
        for u in sel:
            u = int(u)
            cu = color[u]
            for w in indices[indptr[u] : indptr[u + 1]]:
                w = int(w)
                rel = 1 if color[w] != cu else -1
                deltas[w] = deltas.get(w, 0) - 2 * rel
        in_sel = set(int(u) for u in sel)
        for u in in_sel:
            bal[u] = -bal[u] - deltas.pop(u, 0)
        for w, d in deltas.items():
            bal[w] += d
        color[sel] ^= 1
    else:
        new_colors = np.empty(sel.shape[0], dtype=np.uint8)
        for i, u in enumerate(sel):
            c, tie = minority_color(graph, state, int(u))
            new_colors[i] = c
            ties += int(tie)
        color[sel] = new_colors
    return ties


def apply_step(graph: Graph, state: State, nodes) -> State:
    """Functional form of :func:`apply_step_inplace`: returns the new state."""
    out = state.copy()
    apply_step_inplace(graph, out, nodes)
    return out
