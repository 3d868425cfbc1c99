"""Scheduling models and run loops for minority processes.

Seven scheduling models are supported:

====== ============================ =========================================
model  step shape                   selection
====== ============================ =========================================
A      one node                     caller-chosen policy (adversarial intent)
B      one node                     caller-chosen policy (benevolent intent)
C      independent set              policy (default: greedy maximal by id)
D      any set of switchable nodes  policy (default: the whole switchable set)
E      the whole switchable set     fixed (synchronous)
F      one node                     uniformly random, seeded
G      random subset                Bernoulli(p) per switchable node, seeded
====== ============================ =========================================

Models A/B/C/F strictly decrease the number of monochromatic edges with every
switch, so they stabilize after at most ``total_conflicts`` switches; the run
loop treats exceeding that bound as an internal error.  Models D/E/G may
cycle, so runs can enable cycle detection (exact state recurrence over a
rolling window) and honor a step limit.

``run`` drives an instrumented pure-Python loop suitable for tracing and
invariant auditing; ``run_to_stability_fast`` is a compiled single-switch
(model B) path for large instances.  ``replay_schedule`` re-validates a
recorded schedule step by step.
"""

from __future__ import annotations

import random
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from minoritysim.graph import (
    Graph,
    InvalidStepError,
    State,
    apply_step_inplace,
    compute_balances,
    make_state,
    switchable_set,
    total_conflicts,
)

MODELS = ("A", "B", "C", "D", "E", "F", "G")

SINGLETON_MODELS = frozenset({"A", "B", "F"})
SET_MODELS = frozenset({"C", "D", "E", "G"})
MONOTONE_MODELS = frozenset({"A", "B", "C", "F"})

DEFAULT_SET_MODEL_STEP_LIMIT = 1_000_000


class UnknownModelError(ValueError):
    """Raised for a scheduling model outside A..G."""


@dataclass(frozen=True)
class RunLimits:
    """Loop bounds: ``max_steps`` (None = model default) and cycle detection."""

    max_steps: int | None = None
    detect_cycles: bool = False
    cycle_window: int = 2


@dataclass
class RunResult:
    """Outcome of a run: ``stable``, ``step_limit`` or ``cycle``."""

    outcome: str
    step_count: int
    switch_count: int
    final_state: State
    model: str
    policy: str | None = None
    seed: int | None = None
    p: float | None = None
    cycle_period: int | None = None
    tie_count: int = 0
    empty_redraws: int = 0
    trace: list[tuple[int, ...]] | None = None


@dataclass
class ReplayResult:
    """Validation verdict for a recorded schedule."""

    valid: bool
    steps_applied: int
    switch_count: int
    final_state: State
    failed_index: int | None = None
    reason: str | None = None


def _policy_lowest(switchable: np.ndarray, rng: random.Random | None) -> int:
    return int(switchable[0])


def _policy_highest(switchable: np.ndarray, rng: random.Random | None) -> int:
    return int(switchable[-1])


def _policy_uniform(switchable: np.ndarray, rng: random.Random | None) -> int:
    if rng is None:
        raise ValueError("the uniform policy needs a seed")
    return int(switchable[rng.randrange(switchable.shape[0])])


SINGLETON_POLICIES = {
    "lowest-id": _policy_lowest,
    "highest-id": _policy_highest,
    "uniform": _policy_uniform,
}


def _greedy_independent(graph: Graph, switchable: np.ndarray) -> np.ndarray:
    """Maximal independent subset of ``switchable``, greedily by ascending id."""
    chosen: list[int] = []
    chosen_set: set[int] = set()
    for v in switchable:
        v = int(v)
        nb = graph.neighbors(v)
        if not any(int(w) in chosen_set for w in nb):
            chosen.append(v)
            chosen_set.add(v)
    return np.asarray(chosen, dtype=np.int64)


def _check_independent(graph: Graph, nodes: np.ndarray) -> int | None:
    """Return a node involved in an intra-step adjacency, or None."""
    sel = set(int(v) for v in nodes)
    for v in nodes:
        for w in graph.neighbors(int(v)):
            if int(w) in sel:
                return int(v)
    return None


def _select(
    graph: Graph,
    state: State,
    switchable: np.ndarray,
    model: str,
    policy,
    rng: random.Random | None,
    p: float | None,
):
    """Pick this step's switching set; returns (nodes, empty_redraws)."""
    if model in SINGLETON_MODELS:
        if model == "F":
            v = _policy_uniform(switchable, rng)
        else:
            v = policy(switchable, rng)
        return np.asarray([v], dtype=np.int64), 0
    if model == "C":
        if policy is None:
            return _greedy_independent(graph, switchable), 0
        return np.asarray(policy(graph, state, switchable), dtype=np.int64), 0
    if model == "D":
        if policy is None:
            return switchable.copy(), 0
        return np.asarray(policy(graph, state, switchable), dtype=np.int64), 0
    if model == "E":
        return switchable.copy(), 0
    if model == "G":
        if rng is None:
            raise ValueError("model G needs a seed")
        if p is None or not (0.0 < p <= 1.0):
            raise ValueError("model G needs a switching probability p in (0, 1]")
        redraws = 0
        while True:
            mask = np.asarray([rng.random() < p for _ in range(switchable.shape[0])], dtype=bool)
            if mask.any():
                return switchable[mask], redraws
            redraws += 1
    raise UnknownModelError(f"unknown scheduling model {model!r}")


def _validate_shape(graph: Graph, model: str, nodes: np.ndarray) -> None:
    if model in SINGLETON_MODELS and nodes.shape[0] != 1:
        raise InvalidStepError(f"model {model} switches exactly one node per step")
    if model == "C":
        bad = _check_independent(graph, nodes)
        if bad is not None:
            raise InvalidStepError(f"model C steps must be independent sets (node {bad} has a switching neighbor)")


def _resolve_policy(model: str, policy):
    if model in ("A", "B"):
        if policy is None:
            return SINGLETON_POLICIES["lowest-id"], "lowest-id"
        if isinstance(policy, str):
            try:
                return SINGLETON_POLICIES[policy], policy
            except KeyError:
                raise ValueError(f"unknown singleton policy {policy!r}") from None
        return policy, getattr(policy, "__name__", "custom")
    if model in ("C", "D"):
        if policy is None:
            return None, "maximal" if model == "C" else "full-set"
        if isinstance(policy, str):
            raise ValueError(f"model {model} takes a callable policy, not a name")
        return policy, getattr(policy, "__name__", "custom")
    if policy is not None:
        raise ValueError(f"model {model} does not take a policy")
    return None, "uniform" if model == "F" else None


def run(
    graph: Graph,
    state: State | None = None,
    *,
    model: str = "B",
    policy=None,
    seed: int | None = None,
    p: float | None = None,
    limits: RunLimits | None = None,
    record_trace: bool = False,
    hooks=None,
) -> RunResult:
    """Run the process under ``model`` until stable, limited, or cycling.

    ``hooks``, when given, must provide ``before_step(graph, state,
    switchable, nodes)`` and ``after_step(graph, state, nodes)``; the
    invariant auditor plugs in here.
    """
    if model not in MODELS:
        raise UnknownModelError(f"unknown scheduling model {model!r}")
    policy_fn, policy_name = _resolve_policy(model, policy)
    limits = limits or RunLimits()
    st = make_state(graph) if state is None else state
    rng = random.Random(seed) if seed is not None else None
    if model in ("F", "G") and rng is None:
        raise ValueError(f"model {model} needs a seed")

    max_steps = limits.max_steps
    if max_steps is None:
        if model in MONOTONE_MODELS:
            max_steps = total_conflicts(graph, st) + 1
        else:
            max_steps = DEFAULT_SET_MODEL_STEP_LIMIT
    monotone_bound = total_conflicts(graph, st) if model in MONOTONE_MODELS else None

    window: deque[bytes] | None = None
    if limits.detect_cycles:
        window = deque(maxlen=limits.cycle_window)
        window.append(st.fingerprint())

    trace: list[tuple[int, ...]] | None = [] if record_trace else None
    steps = 0
    switches = 0
    ties = 0
    redraws = 0
    while True:
        sw = switchable_set(graph, st)
        if sw.shape[0] == 0:
            return RunResult(
                outcome="stable",
                step_count=steps,
                switch_count=switches,
                final_state=st,
                model=model,
                policy=policy_name,
                seed=seed,
                p=p,
                tie_count=ties,
                empty_redraws=redraws,
                trace=trace,
            )
        if steps >= max_steps:
            if monotone_bound is not None and switches > monotone_bound:
                raise RuntimeError(
                    "termination bound exceeded under a monotone model; "
                    "this indicates corrupted balances"
                )
            return RunResult(
                outcome="step_limit",
                step_count=steps,
                switch_count=switches,
                final_state=st,
                model=model,
                policy=policy_name,
                seed=seed,
                p=p,
                tie_count=ties,
                empty_redraws=redraws,
                trace=trace,
            )
        nodes, new_redraws = _select(graph, st, sw, model, policy_fn, rng, p)
        redraws += new_redraws
        nodes = np.sort(np.asarray(nodes, dtype=np.int64))
        _validate_shape(graph, model, nodes)
        if hooks is not None:
            hooks.before_step(graph, st, sw, nodes)
        ties += apply_step_inplace(graph, st, nodes)
        if hooks is not None:
            hooks.after_step(graph, st, nodes)
        steps += 1
        switches += int(nodes.shape[0])
        if trace is not None:
            trace.append(tuple(int(v) for v in nodes))
        if window is not None:
            fp = st.fingerprint()
            for back, old in enumerate(reversed(window)):
                if old == fp:
                    return RunResult(
                        outcome="cycle",
                        step_count=steps,
                        switch_count=switches,
                        final_state=st,
                        model=model,
                        policy=policy_name,
                        seed=seed,
                        p=p,
                        cycle_period=back + 1,
                        tie_count=ties,
                        empty_redraws=redraws,
                        trace=trace,
                    )
            window.append(fp)


def replay_schedule(
    graph: Graph,
    schedule,
    *,
    model: str = "B",
    state: State | None = None,
) -> ReplayResult:
    """Re-apply a recorded schedule, validating every step.

    ``schedule`` is a sequence of steps; each step is a node id or an
    iterable of node ids.  Validation covers step shape for ``model``,
    switchability of every node, pinned exclusion and (model C)
    independence.  Stops at the first invalid step.
    """
    if model not in MODELS:
        raise UnknownModelError(f"unknown scheduling model {model!r}")
    st = make_state(graph) if state is None else state
    switches = 0
    for i, step in enumerate(schedule):
        if isinstance(step, (int, np.integer)):
            nodes = np.asarray([step], dtype=np.int64)
        else:
            nodes = np.sort(np.asarray(list(step), dtype=np.int64))
        try:
            _validate_shape(graph, model, nodes)
            apply_step_inplace(graph, st, nodes)
        except InvalidStepError as exc:
            return ReplayResult(
                valid=False,
                steps_applied=i,
                switch_count=switches,
                final_state=st,
                failed_index=i,
                reason=str(exc),
            )
        switches += int(nodes.shape[0])
    return ReplayResult(valid=True, steps_applied=len(schedule), switch_count=switches, final_state=st)


def _stabilize_python(indptr, indices, color, bal, pinned, switch_counts, cap) -> int:
    """Interpreter fallback mirroring the compiled stabilizer."""
    n = color.shape[0]
    stack = [int(v) for v in np.flatnonzero((bal < 0) & (pinned == 0))]
    in_stack = np.zeros(n, dtype=bool)
    in_stack[stack] = True
    switches = 0
    while stack:
        v = stack.pop()
        in_stack[v] = False
        if bal[v] >= 0:
            continue
        cv = 1 - color[v]
        color[v] = cv
        bal[v] = -bal[v]
        for w in indices[indptr[v] : indptr[v + 1]]:
            w = int(w)
            if color[w] == cv:
                bal[w] -= 2
            else:
                bal[w] += 2
            if bal[w] < 0 and not pinned[w] and not in_stack[w]:
                stack.append(w)
                in_stack[w] = True
        switches += 1
        switch_counts[v] += 1
        if switches > cap:
            return -1
    return switches


def run_to_stability_fast(
    graph: Graph,
    state: State | None = None,
    *,
    return_counts: bool = False,
):
    """Model-B run to stability on the compiled path (no trace, no hooks).

    Switches pending nodes in LIFO order, re-validating each pop — a
    legitimate arbitrary-order benevolent policy.  Returns a
    :class:`RunResult` (``trace`` is always None); with ``return_counts``
    also returns the per-node switch-count array.
    """
    if graph.num_colors != 2:
        raise ValueError("the fast path supports two-color mode only")
    st = make_state(graph) if state is None else state
    if st.balance is None:
        st.balance = compute_balances(graph, st.color)
    cap = 4 * total_conflicts(graph, st) + graph.num_nodes + 16
    counts = np.zeros(graph.num_nodes, dtype=np.int64)
    pinned8 = graph.pinned.astype(np.uint8)
    try:
        from minoritysim._kernels import stabilize

        switches = int(stabilize(graph.indptr, graph.indices, st.color, st.balance, pinned8, counts, cap))
    except ImportError:
        switches = _stabilize_python(graph.indptr, graph.indices, st.color, st.balance, pinned8, counts, cap)
    if switches < 0:
        raise RuntimeError("termination bound exceeded; balances are corrupted")
    result = RunResult(
        outcome="stable",
        step_count=switches,
        switch_count=switches,
        final_state=st,
        model="B",
        policy="stack-order",
    )
    if return_counts:
        return result, counts
    return result
