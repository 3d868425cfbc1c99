"""Run-time invariant auditing.

An :class:`InvariantAuditor` plugs into :func:`minoritysim.engine.run` via
its ``hooks`` parameter and checks, step by step, that the run only does
things the process semantics allow — and optionally the stronger structural
invariants the generated instances are designed to maintain:

* every switched node was switchable and not pinned (always checked);
* the whole switchable set stays independent (``expect_independent``) —
  the property that makes scheduling irrelevant on generated instances;
* switchable nodes stay switchable until switched (``expect_monotone``);
* the incremental balance cache matches a from-scratch recomputation
  (``recompute_every``);
* registered groups stay color-coherent at every state: a group is either
  monochromatic or mid-fire with its lagging color class entirely
  switchable, so it always re-coheres (group members share neighborhoods,
  hence equal balances within a class — one representative decides);
* at the end: registered groups are monochromatic again and every node's
  balance parity is unchanged (both invariants of the dynamics).

Violations are collected as strings rather than raised, so a single audited
run reports everything that went wrong.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from minoritysim.graph import Graph, State, compute_balances


@dataclass
class AuditReport:
    """Everything an audited run revealed."""

    steps: int
    switches: int
    violations: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations


class InvariantAuditor:
    """Step hooks that verify run and instance invariants.

    Pass ``groups`` (a list of id arrays, e.g. ``instance.build.groups``) to
    include the group coherence checks: per-step coherent-or-completing,
    monochromatic at the end.  ``max_violations`` caps the report so a
    broken run does not flood memory.
    """

    def __init__(
        self,
        graph: Graph,
        *,
        groups: list[np.ndarray] | None = None,
        expect_independent: bool = False,
        expect_monotone: bool = False,
        recompute_every: int = 0,
        max_violations: int = 50,
    ) -> None:
        self.graph = graph
        self.groups = groups or []
        self.expect_independent = expect_independent
        self.expect_monotone = expect_monotone
        self.recompute_every = recompute_every
        self.max_violations = max_violations
        self.violations: list[str] = []
        self.steps = 0
        self.switches = 0
        self._initial_parity: np.ndarray | None = None
        self._prev_switchable: np.ndarray | None = None
        self._prev_nodes: np.ndarray | None = None
        if self.groups:
            self._group_members = np.concatenate(self.groups)
            sizes = np.array([g.shape[0] for g in self.groups], dtype=np.int64)
            self._group_offsets = np.concatenate([[0], np.cumsum(sizes)[:-1]])
        else:
            self._group_members = None
            self._group_offsets = None

    def _record(self, message: str) -> None:
        if len(self.violations) < self.max_violations:
            self.violations.append(message)

    def _check_independent_set(self, nodes: np.ndarray, what: str) -> None:
        sel = set(int(v) for v in nodes)
        for v in nodes:
            for w in self.graph.neighbors(int(v)):
                if int(w) in sel:
                    self._record(f"step {self.steps}: {what} contains adjacent nodes {int(v)} and {int(w)}")
                    return

    def _check_group_coherence(self, state: State) -> None:
        cols = state.color[self._group_members]
        lo = np.minimum.reduceat(cols, self._group_offsets)
        hi = np.maximum.reduceat(cols, self._group_offsets)
        for gi in np.flatnonzero(lo != hi):
            members = self.groups[gi]
            mcols = state.color[members]
            # within one color class all members share one balance, so a
            # single representative decides whether the class can fire on
            can_finish = False
            for c in (int(lo[gi]), int(hi[gi])):
                rep = int(members[mcols == c][0])
                if state.balance[rep] < 0 and not self.graph.pinned[rep]:
                    can_finish = True
                    break
            if not can_finish:
                self._record(
                    f"step {self.steps}: group {gi} is split and neither of its "
                    f"color classes is switchable, so it cannot re-cohere"
                )

    # -- hook interface ------------------------------------------------

    def before_step(self, graph: Graph, state: State, switchable: np.ndarray, nodes: np.ndarray) -> None:
        if self._initial_parity is None and state.balance is not None:
            self._initial_parity = (state.balance.astype(np.int64) & 1).copy()
        pos = np.searchsorted(switchable, nodes)
        ok = (pos < switchable.shape[0]) & (switchable[np.minimum(pos, switchable.shape[0] - 1)] == nodes)
        if not ok.all():
            bad = int(nodes[~ok][0])
            self._record(f"step {self.steps}: node {bad} switched while not switchable")
        if graph.pinned[nodes].any():
            bad = int(nodes[graph.pinned[nodes]][0])
            self._record(f"step {self.steps}: pinned node {bad} switched")
        if self.expect_independent:
            self._check_independent_set(switchable, "the switchable set")
        if self.expect_monotone and self._prev_switchable is not None:
            still_due = np.setdiff1d(self._prev_switchable, self._prev_nodes, assume_unique=True)
            lost = np.setdiff1d(still_due, switchable, assume_unique=True)
            if lost.size:
                self._record(
                    f"step {self.steps}: node {int(lost[0])} lost switchability without switching"
                )
        if self._group_members is not None and state.balance is not None:
            self._check_group_coherence(state)
        self._prev_switchable = switchable
        self._prev_nodes = nodes

    def after_step(self, graph: Graph, state: State, nodes: np.ndarray) -> None:
        self.steps += 1
        self.switches += int(nodes.shape[0])
        if (
            self.recompute_every
            and self.steps % self.recompute_every == 0
            and state.balance is not None
        ):
            fresh = compute_balances(graph, state.color)
            if not np.array_equal(fresh, state.balance):
                bad = int(np.flatnonzero(fresh != state.balance)[0])
                self._record(
                    f"step {self.steps}: balance cache of node {bad} is "
                    f"{int(state.balance[bad])}, recomputation gives {int(fresh[bad])}"
                )

    # -- wrap-up --------------------------------------------------------

    def finish(self, state: State) -> AuditReport:
        """Run the end-of-run checks and return the report."""
        for gi, members in enumerate(self.groups):
            if np.unique(state.color[members]).shape[0] != 1:
                self._record(f"group {gi} ended polychromatic")
        if state.balance is not None:
            fresh = compute_balances(self.graph, state.color)
            if not np.array_equal(fresh, state.balance):
                bad = int(np.flatnonzero(fresh != state.balance)[0])
                self._record(
                    f"final balance cache of node {bad} is {int(state.balance[bad])}, "
                    f"recomputation gives {int(fresh[bad])}"
                )
            if self._initial_parity is not None:
                parity = fresh.astype(np.int64) & 1
                if not np.array_equal(parity, self._initial_parity):
                    bad = int(np.flatnonzero(parity != self._initial_parity)[0])
                    self._record(f"node {bad} changed balance parity, which the dynamics forbid")
        return AuditReport(steps=self.steps, switches=self.switches, violations=list(self.violations))
