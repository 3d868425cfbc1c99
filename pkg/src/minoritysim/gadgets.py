"""Gadget library: build contexts and the reusable building blocks.

Instances are assembled in a :class:`BuildContext`: nodes, edges and node
*groups* (sets given identical neighborhoods so they act as one unit) are
added first, and every node whose initial balance matters registers a
*certificate* — the balance it must have at build time.  ``finalize`` then
computes actual balances from the assembled edges and tops every certified
node up with pinned fixed neighbors of a single color (|cert - balance| of
them; groups receive shared fixed neighbors adjacent to every member, which
preserves the identical-neighborhood property).  This mirrors how the
constructions are specified: internal wiring first, fixed nodes to pad
balances last.

The blocks:

* simple relays and relay chains — one-shot signal propagation;
* rechargeable relays — chain elements whose recharge nodes let the base
  switch once per round;
* recharging systems — one-shot gadgets that drop many target balances by
  twice their per-target demand;
* AND gates — fire an output exactly when every input has reached the armed
  color, leaving the inputs' balances unchanged;
* joins and forks — fan-in/fan-out between rounds;
* ``materialize_fixed_nodes`` — replace pinned flags by two mutually
  stabilizing node sets;
* ``extend_colors`` — embed a two-color instance into k colors without
  changing its dynamics.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from minoritysim.graph import BLACK, WHITE, Graph

_STD = "std"
_MIRROR = "mirror"


class ConstructionError(ValueError):
    """Raised when a gadget or instance cannot be built as requested."""


class BudgetError(ConstructionError):
    """Raised when a node would need more fixed neighbors than its budget."""


def _as_ids(ids) -> np.ndarray:
    return np.asarray(ids, dtype=np.int64).ravel()


def _as_edge_ids(ids) -> np.ndarray:
    """Edge endpoints are stored as int32; ids stay far below 2^31."""
    return np.asarray(ids, dtype=np.int32).ravel()


def _coalesce_chunks(chunks: list[np.ndarray], target: int = 16_000_000) -> list[np.ndarray]:
    """Merge many small arrays into few large ones, freeing the originals."""
    out: list[np.ndarray] = []
    cur: list[np.ndarray] = []
    size = 0
    for a in chunks:
        cur.append(a)
        size += a.shape[0]
        if size >= target:
            out.append(np.concatenate(cur))
            cur = []
            size = 0
    if cur:
        out.append(np.concatenate(cur))
    chunks.clear()
    return out


@dataclass
class Build:
    """Result of :meth:`BuildContext.finalize`."""

    graph: Graph
    arena_size: int
    stub_nodes: int
    groups: list[np.ndarray]
    roles: list[tuple[np.ndarray, str]]
    ports: dict[str, int]

    def role_of(self) -> np.ndarray:
        """Role label per node ('' where untagged); for reports and exports."""
        out = np.full(self.graph.num_nodes, "", dtype=object)
        for ids, role in self.roles:
            out[ids] = role
        return out


class BuildContext:
    """Accumulates nodes, edges, groups and balance certificates."""

    def __init__(self) -> None:
        self._color = np.empty(1024, dtype=np.uint8)
        self._pinned = np.zeros(1024, dtype=bool)
        self._n = 0
        self._eu: list[np.ndarray] = []
        self._ev: list[np.ndarray] = []
        self._su: list[int] = []
        self._sv: list[int] = []
        self.groups: list[np.ndarray] = []
        self._group_certs: list[tuple[int, int]] = []
        self._cert_ids: list[np.ndarray] = []
        self._cert_vals: list[np.ndarray] = []
        self._positive_ids: list[np.ndarray] = []
        self._roles: list[tuple[np.ndarray, str]] = []
        self.ports: dict[str, int] = {}

    @property
    def num_nodes(self) -> int:
        return self._n

    def color_of(self, v: int) -> int:
        return int(self._color[v])

    def colors_of(self, ids) -> np.ndarray:
        return self._color[_as_ids(ids)].copy()

    def _grow(self, extra: int) -> None:
        need = self._n + extra
        if need <= self._color.shape[0]:
            return
        cap = max(need, 2 * self._color.shape[0])
        color = np.empty(cap, dtype=np.uint8)
        color[: self._n] = self._color[: self._n]
        pinned = np.zeros(cap, dtype=bool)
        pinned[: self._n] = self._pinned[: self._n]
        self._color, self._pinned = color, pinned

    def add_nodes(self, count: int, color, *, pinned: bool = False, role: str | None = None) -> np.ndarray:
        if count < 0:
            raise ConstructionError("node count must be non-negative")
        self._grow(count)
        ids = np.arange(self._n, self._n + count, dtype=np.int64)
        self._color[ids] = color
        if pinned:
            self._pinned[ids] = True
        self._n += count
        if role is not None and count:
            self._roles.append((ids, role))
        return ids

    def add_node(self, color: int, *, pinned: bool = False, role: str | None = None) -> int:
        return int(self.add_nodes(1, color, pinned=pinned, role=role)[0])

    def add_edge(self, u: int, v: int) -> None:
        self._su.append(int(u))
        self._sv.append(int(v))

    def add_edges(self, us, vs) -> None:
        us = _as_edge_ids(us)
        vs = _as_edge_ids(vs)
        if us.shape != vs.shape:
            raise ConstructionError("edge endpoint arrays differ in length")
        if us.size:
            self._eu.append(us)
            self._ev.append(vs)

    def add_group(self, ids, cert: int | None = None) -> int:
        members = _as_ids(ids)
        if members.size == 0:
            raise ConstructionError("a group needs at least one member")
        if np.unique(self._color[members]).shape[0] != 1:
            raise ConstructionError("group members must share one color")
        self.groups.append(members)
        idx = len(self.groups) - 1
        if cert is not None:
            self._group_certs.append((idx, int(cert)))
        return idx

    def set_cert(self, ids, cert) -> None:
        """Require the given initial balance(s); finalize pads with stubs."""
        members = _as_ids(ids)
        vals = np.broadcast_to(np.asarray(cert, dtype=np.int64), members.shape).copy()
        self._cert_ids.append(members)
        self._cert_vals.append(vals)

    def require_positive(self, ids) -> None:
        """Assert (at finalize) that these nodes start with positive balance."""
        self._positive_ids.append(_as_ids(ids))

    def attach_fixed(self, nodes, color: int, count: int) -> np.ndarray:
        """Give each node ``count`` pinned degree-1 neighbors of ``color``."""
        nodes = _as_ids(nodes)
        stubs = self.add_nodes(count * nodes.shape[0], color, pinned=True)
        self.add_edges(np.repeat(nodes, count), stubs)
        return stubs

    def attach_fixed_group(self, members, color: int, count: int) -> np.ndarray:
        """Add ``count`` pinned nodes, each adjacent to every group member."""
        members = _as_ids(members)
        stubs = self.add_nodes(count, color, pinned=True)
        self.add_edges(
            np.repeat(stubs, members.shape[0]),
            np.tile(members, count),
        )
        return stubs

    def _gather_chunks(self) -> None:
        """Fold single-edge appends in and coalesce to few large int32 chunks."""
        if self._su:
            self._eu.append(np.asarray(self._su, dtype=np.int32))
            self._ev.append(np.asarray(self._sv, dtype=np.int32))
            self._su, self._sv = [], []
        self._eu = _coalesce_chunks(self._eu)
        self._ev = _coalesce_chunks(self._ev)

    def _balances_and_degrees(self) -> tuple[np.ndarray, np.ndarray]:
        color = self._color[: self._n]
        bal = np.zeros(self._n, dtype=np.int64)
        deg = np.zeros(self._n, dtype=np.int64)
        for u, v in zip(self._eu, self._ev):
            w = np.where(color[u] != color[v], 1.0, -1.0)
            bal += np.bincount(u, weights=w, minlength=self._n).astype(np.int64)
            bal += np.bincount(v, weights=w, minlength=self._n).astype(np.int64)
            deg += np.bincount(u, minlength=self._n)
            deg += np.bincount(v, minlength=self._n)
        return bal, deg

    def finalize(self, *, validate: bool = True) -> Build:
        """Top up certified balances with pinned stubs and build the graph."""
        self._gather_chunks()
        bal, deg = self._balances_and_degrees()
        arena = self._n - int(self._pinned[: self._n].sum())
        color = self._color

        stub_eu: list[np.ndarray] = []
        stub_ev: list[np.ndarray] = []

        if self._cert_ids:
            ids = np.concatenate(self._cert_ids)
            vals = np.concatenate(self._cert_vals)
            if np.unique(ids).shape[0] != ids.shape[0]:
                raise ConstructionError("a node carries two balance certificates")
            need = vals - bal[ids]
            count = np.abs(need)
            over = count > deg[ids] + 1
            if over.any():
                raise BudgetError(
                    f"node {int(ids[over][0])} would need {int(count[over][0])} fixed "
                    f"neighbors, exceeding its degree+1 budget"
                )
            mask = count > 0
            if mask.any():
                owners = ids[mask]
                cnt = count[mask]
                # positive need -> opposite-colored stubs (+1 each); negative -> same.
                stub_color = np.where(need[mask] > 0, color[owners] ^ 1, color[owners]).astype(np.uint8)
                total = int(cnt.sum())
                stubs = self.add_nodes(total, 0, pinned=True)
                self._color[stubs] = np.repeat(stub_color, cnt)
                stub_eu.append(_as_edge_ids(np.repeat(owners, cnt)))
                stub_ev.append(_as_edge_ids(stubs))

        for gidx, cert in self._group_certs:
            members = self.groups[gidx]
            b = bal[members]
            if np.unique(b).shape[0] != 1:
                raise ConstructionError(
                    f"group {gidx} members disagree on balance before top-up"
                )
            need = int(cert) - int(b[0])
            if need == 0:
                continue
            if abs(need) > int(deg[members[0]]) + 1:
                raise BudgetError(f"group {gidx} exceeds its fixed-neighbor budget")
            c = int(color[members[0]]) ^ 1 if need > 0 else int(color[members[0]])
            stubs = self.add_nodes(abs(need), c, pinned=True)
            stub_eu.append(_as_edge_ids(np.repeat(stubs, members.shape[0])))
            stub_ev.append(_as_edge_ids(np.tile(members, abs(need))))

        if self._positive_ids:
            pos = np.concatenate(self._positive_ids)
            if pos.size and bal[pos].min() < 1:
                bad = int(pos[np.argmin(bal[pos])])
                raise ConstructionError(
                    f"trigger node {bad} must start with positive balance, has {int(bal[bad])}"
                )
        del bal, deg

        stub_nodes = self._n - (arena + int(self._pinned[:arena].sum()))
        self._eu.extend(stub_eu)
        self._ev.extend(stub_ev)
        total_edges = sum(int(a.shape[0]) for a in self._eu)
        eu = np.empty(total_edges, dtype=np.int32)
        ev = np.empty(total_edges, dtype=np.int32)
        pos = 0
        while self._eu:
            a = self._eu.pop(0)
            b = self._ev.pop(0)
            eu[pos : pos + a.shape[0]] = a
            ev[pos : pos + b.shape[0]] = b
            pos += int(a.shape[0])
        graph = Graph.from_edges(
            self._n,
            eu,
            ev,
            self._color[: self._n],
            self._pinned[: self._n],
            validate=validate,
        )
        return Build(
            graph=graph,
            arena_size=arena,
            stub_nodes=stub_nodes,
            groups=list(self.groups),
            roles=list(self._roles),
            ports=dict(self.ports),
        )


# ---------------------------------------------------------------------------
# Relays


def build_simple_relay(ctx: BuildContext, color: int, *, role: str | None = None) -> int:
    """One-shot relay base with certified balance 1; caller wires its edges."""
    v = ctx.add_node(color, role=role)
    ctx.set_cert([v], 1)
    return v


def build_link_chain(
    ctx: BuildContext,
    length: int,
    first_color: int,
    *,
    source: int | None = None,
    role: str | None = None,
) -> np.ndarray:
    """Path of ``length`` alternating-color relays, each with certificate 1.

    Firing propagates along the path one node per enabling flip.  When
    ``source`` is given it is wired to the first relay; the caller wires the
    last relay to its destination(s).
    """
    if length < 1:
        raise ConstructionError("a link chain needs at least one relay")
    colors = (np.arange(length, dtype=np.int64) + int(first_color)) % 2
    ids = ctx.add_nodes(length, colors.astype(np.uint8), role=role)
    ctx.set_cert(ids, 1)
    if length > 1:
        ctx.add_edges(ids[:-1], ids[1:])
    if source is not None:
        ctx.add_edge(source, ids[0])
    return ids


@dataclass
class RechargeableRelay:
    """Ids of one rechargeable relay: base, upper, core pair, recharge pair."""

    base: int
    upper: int
    core: tuple[int, int]
    recharge_base_colored: int
    recharge_core_colored: int


def build_rechargeable_relay(ctx: BuildContext, base_color: int, *, role: str | None = None) -> RechargeableRelay:
    """Relay whose base can fire once per round, re-enabled via recharging.

    The base and upper node share ``base_color``; the two core nodes (a
    group) and one recharge node take the opposite color.  The base-colored
    recharge node starts at balance 5 (the first round's active one), the
    core-colored one at 1; core and upper at 1.  During a round: three
    recharge flips fire the active recharge node, the two core nodes follow,
    the upper node fires last and re-enables the base; resetting the active
    node afterwards leaves a fresh relay of the opposite color with the two
    recharge nodes' roles interchanged.
    """
    cc = int(base_color) ^ 1
    b = ctx.add_node(base_color, role=role)
    u = ctx.add_node(base_color)
    c1 = ctx.add_node(cc)
    c2 = ctx.add_node(cc)
    r_core = ctx.add_node(cc)
    r_base = ctx.add_node(base_color)
    ctx.add_edge(b, u)
    ctx.add_edge(u, c1)
    ctx.add_edge(u, c2)
    for c in (c1, c2):
        ctx.add_edge(c, r_core)
        ctx.add_edge(c, r_base)
    ctx.set_cert([b, u], 1)
    ctx.add_group([c1, c2], cert=1)
    ctx.set_cert([r_core], 1)
    ctx.set_cert([r_base], 5)
    return RechargeableRelay(
        base=b,
        upper=u,
        core=(c1, c2),
        recharge_base_colored=r_base,
        recharge_core_colored=r_core,
    )


# ---------------------------------------------------------------------------
# Recharging systems


@dataclass
class RechargingSystem:
    """Ids of one recharging system plus wiring bookkeeping."""

    variant: str
    upper: int
    lower: np.ndarray
    mid: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=np.int64))
    sinks: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=np.int64))
    phys: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=np.int64))
    slot_cursor: int = 0
    finished: bool = False


def _variant_colors(variant: str) -> tuple[int, int, int]:
    """(upper/lower color, mid color, armed target color) for a variant."""
    if variant == _STD:
        return WHITE, BLACK, BLACK
    if variant == _MIRROR:
        return BLACK, WHITE, WHITE
    raise ConstructionError(f"unknown recharging-system variant {variant!r}")


def start_recharging_system(
    ctx: BuildContext,
    variant: str,
    n_lower: int,
    *,
    role: str | None = None,
) -> RechargingSystem:
    """Create the upper and lower levels; targets and mid group come later."""
    side, mid_color, _ = _variant_colors(variant)
    u = ctx.add_node(side, role=None if role is None else role + ".upper")
    lower = ctx.add_nodes(n_lower, side, role=None if role is None else role + ".lower")
    sys = RechargingSystem(variant=variant, upper=u, lower=lower)
    sys.phys = np.zeros(n_lower, dtype=np.int64)
    return sys


def wire_system_targets(ctx: BuildContext, sys: RechargingSystem, targets, demands) -> None:
    """Deal each target ``demand`` slots round-robin over the lower level.

    Consecutive slots land on distinct lower nodes, so any demand up to the
    lower-level width touches that many distinct lower nodes.
    """
    targets = _as_ids(targets)
    demands = np.broadcast_to(np.asarray(demands, dtype=np.int64), targets.shape)
    if demands.size and int(demands.max()) > sys.lower.shape[0]:
        raise ConstructionError(
            f"target demand {int(demands.max())} exceeds the lower-level width {sys.lower.shape[0]}"
        )
    rep = np.repeat(targets, demands)
    slots = (sys.slot_cursor + np.arange(rep.shape[0], dtype=np.int64)) % sys.lower.shape[0]
    ctx.add_edges(sys.lower[slots], rep)
    np.add.at(sys.phys, slots, 1)
    sys.slot_cursor = int((sys.slot_cursor + rep.shape[0]) % sys.lower.shape[0])


def wire_system_bundles(ctx: BuildContext, sys: RechargingSystem, bundles: np.ndarray, demand: int) -> None:
    """Deal group bundles: each slot wires a lower node to a whole group."""
    bundles = np.asarray(bundles, dtype=np.int64)
    if bundles.ndim != 2:
        raise ConstructionError("bundles must be a 2-d array of group member ids")
    nb, size = bundles.shape
    rep = np.repeat(np.arange(nb, dtype=np.int64), demand)
    slots = (sys.slot_cursor + np.arange(rep.shape[0], dtype=np.int64)) % sys.lower.shape[0]
    ctx.add_edges(np.repeat(sys.lower[slots], size), bundles[rep].ravel())
    np.add.at(sys.phys, slots, size)
    sys.slot_cursor = int((sys.slot_cursor + rep.shape[0]) % sys.lower.shape[0])


def finish_recharging_system(
    ctx: BuildContext,
    sys: RechargingSystem,
    *,
    pad_sinks: bool = False,
    sink_color: int | None = None,
    role: str | None = None,
) -> RechargingSystem:
    """Equalize lower degrees (optionally), then add and wire the mid group.

    The mid group gets one more member than the equalized per-lower target
    degree, which makes every lower node reach balance -1 exactly when the
    whole mid group has fired.  Padding sinks are ordinary one-edge nodes
    colored like already-switched targets; each fires once, independently.
    """
    if sys.finished:
        raise ConstructionError("recharging system already finished")
    side, mid_color, armed = _variant_colors(sys.variant)
    d = int(sys.phys.max()) if sys.phys.size else 0
    if d == 0:
        raise ConstructionError("recharging system has no targets")
    if pad_sinks:
        deficit = d - sys.phys
        total = int(deficit.sum())
        if total:
            c = armed if sink_color is None else sink_color
            sinks = ctx.add_nodes(total, c, role=None if role is None else role + ".sink")
            ctx.set_cert(sinks, 1)
            ctx.add_edges(np.repeat(sys.lower, deficit), sinks)
            sys.sinks = sinks
            sys.phys = np.full_like(sys.phys, d)
    elif int(sys.phys.min()) != d:
        raise ConstructionError("lower level is unevenly loaded; pad_sinks required")
    mid = ctx.add_nodes(d + 1, mid_color, role=None if role is None else role + ".mid")
    ctx.add_edges(
        np.repeat(mid, sys.lower.shape[0]),
        np.tile(sys.lower, d + 1),
    )
    ctx.add_edges(np.full(d + 1, sys.upper, dtype=np.int64), mid)
    ctx.set_cert([sys.upper], 1)
    ctx.add_group(mid, cert=1)
    ctx.require_positive(sys.lower)
    sys.mid = mid
    sys.finished = True
    return sys


def build_recharging_system(
    ctx: BuildContext,
    targets,
    demands=1,
    *,
    variant: str = _STD,
    n_lower: int | None = None,
    role: str | None = None,
) -> RechargingSystem:
    """Convenience builder: near-square layout with sink padding.

    For ``m`` demand-1 targets and the default layout this produces the
    compact 2*sqrt(m)+2-node system: sqrt(m) lower nodes, sqrt(m)+1 mid
    nodes, and the upper node.  The caller wires the upper node's enabling
    input.
    """
    targets = _as_ids(targets)
    demands_arr = np.broadcast_to(np.asarray(demands, dtype=np.int64), targets.shape)
    chi = int(demands_arr.sum())
    if chi == 0:
        raise ConstructionError("recharging system has no work to do")
    if n_lower is None:
        n_lower = max(math.isqrt(chi - 1) + 1, int(demands_arr.max()))
    sys = start_recharging_system(ctx, variant, n_lower, role=role)
    wire_system_targets(ctx, sys, targets, demands_arr)
    finish_recharging_system(ctx, sys, pad_sinks=True, role=role)
    return sys


# ---------------------------------------------------------------------------
# AND gates


@dataclass
class AndGate:
    """Ids of one AND gate."""

    a: int
    b1: int
    b2: int
    core: np.ndarray
    d: int
    variant: str


def build_and_gate(
    ctx: BuildContext,
    inputs,
    *,
    variant: str,
    output: int | None = None,
    role: str | None = None,
) -> AndGate:
    """Gate that fires its output once all ``inputs`` show ``variant`` color.

    ``variant`` is ``"white"`` or ``"black"`` — the armed input color.  The
    head node A holds balance 2d-1, where d counts the inputs that are still
    at the opposite (disarmed) color when the gate is built, and loses 2 per
    input that nets a disarmed-to-armed transition; inputs built armed, or
    flipping away and back, cancel out.  Once every input shows the armed
    color A fires, cascades through B1, B2 and the core triple, fires back
    (restoring every input's balance), and D passes the signal on.
    Afterwards the gate is inert regardless of its inputs.
    """
    inputs = _as_ids(inputs)
    x = int(inputs.shape[0])
    if x < 1:
        raise ConstructionError("an AND gate needs at least one input")
    if variant == "white":
        ca, cb = WHITE, BLACK
    elif variant == "black":
        ca, cb = BLACK, WHITE
    else:
        raise ConstructionError(f"unknown gate variant {variant!r}")
    a = ctx.add_node(ca, role=None if role is None else role + ".head")
    b1 = ctx.add_node(cb)
    b2 = ctx.add_node(cb)
    core = ctx.add_nodes(3, ca)
    d = ctx.add_node(ca, role=None if role is None else role + ".out")
    ctx.add_edges(np.full(x, a, dtype=np.int64), inputs)
    ctx.add_edge(a, b1)
    ctx.add_edge(a, b2)
    for c in core:
        ctx.add_edge(a, int(c))
        ctx.add_edge(b1, int(c))
        ctx.add_edge(b2, int(c))
    ctx.add_edge(a, d)
    ctx.add_edge(b1, d)
    if output is not None:
        ctx.add_edge(d, output)
    disarmed = int(np.count_nonzero(ctx.colors_of(inputs) != ca))
    if disarmed < 1:
        raise ConstructionError("an AND gate must be built with at least one disarmed input")
    ctx.set_cert([a], 2 * disarmed - 1)
    ctx.set_cert([b1, b2, d], 1)
    ctx.add_group(core, cert=1)
    return AndGate(a=a, b1=b1, b2=b2, core=core, d=d, variant=variant)


# ---------------------------------------------------------------------------
# Joins and forks


@dataclass
class Join:
    """Ids of a join: starter groups feeding one central collector."""

    a: np.ndarray  # (p, 2) trigger groups
    b: np.ndarray  # (p, 2) follower groups
    c: int

    @property
    def p(self) -> int:
        return int(self.a.shape[0])


def build_join(ctx: BuildContext, p: int, *, role: str | None = None) -> Join:
    """Fan-in of ``p`` starters; the collector fires once per starter.

    Starter i (1-based) is triggered by an input wired to both members of
    its trigger group (callers wire inputs for i >= 2; starter 1 instead
    receives a fixed white neighbor via its certificate, making it the only
    initially switchable unit).  The collector alternates color once per
    round and passes the signal to the output the caller wires to it.
    """
    if p < 1 or p % 2:
        raise ConstructionError("a join needs a positive even number of starters")
    a_rows = []
    b_rows = []
    c = ctx.add_node(WHITE, role=None if role is None else role + ".collector")
    for i in range(1, p + 1):
        ca = WHITE if i % 2 else BLACK
        a = ctx.add_nodes(2, ca, role=None if role is None else role + f".trigger{i}")
        b = ctx.add_nodes(2, ca ^ 1)
        ctx.add_edges(np.repeat(a, 2), np.tile(b, 2))
        ctx.add_edges(b, np.full(2, c, dtype=np.int64))
        ctx.add_group(a, cert=-1 if i == 1 else 1)
        # The collector has fired i-1 times before row i's phase; for even i
        # that leaves it opposite its build color, a net +2 on the followers,
        # so their certificate starts two lower.
        ctx.add_group(b, cert=3 if i % 2 else 1)
        a_rows.append(a)
        b_rows.append(b)
    ctx.set_cert([c], 3)
    return Join(a=np.stack(a_rows), b=np.stack(b_rows), c=c)


@dataclass
class Fork:
    """Ids of a fork: a path of round dispatchers sharing one input."""

    f: np.ndarray

    @property
    def q(self) -> int:
        return int(self.f.shape[0])


def build_fork(ctx: BuildContext, q: int, *, role: str | None = None) -> Fork:
    """Fan-out of ``q`` dispatchers firing one per round, in path order.

    Dispatcher colors alternate starting black; each is adjacent to the
    shared input and to its own output (both wired by the caller, before
    finalize).  Certificates: 1 for the first and the white dispatchers, 3
    for the other black ones.
    """
    if q < 1 or q % 2 == 0:
        raise ConstructionError("a fork needs a positive odd number of outputs")
    colors = (1 + np.arange(q, dtype=np.int64)) % 2  # black, white, black, ...
    f = ctx.add_nodes(q, colors.astype(np.uint8), role=role)
    if q > 1:
        ctx.add_edges(f[:-1], f[1:])
    certs = np.where(colors == BLACK, 3, 1)
    certs[0] = 1
    ctx.set_cert(f, certs)
    return Fork(f=f)


# ---------------------------------------------------------------------------
# Whole-graph transformations


def materialize_fixed_nodes(graph: Graph) -> Graph:
    """Replace pinned stubs by two explicit mutually-stabilizing node sets.

    The non-pinned nodes (which must occupy ids 0..n-1) keep their ids; two
    new sets of n+1 white and n+1 black nodes form a complete bipartite
    block, so no member can ever switch, and every former pinned attachment
    is rewired to a member of the matching set (distinct members per
    attached node, so the graph stays simple).  The result has 3n+2 nodes
    and no pinned flags, and runs switch-for-switch like the original.
    """
    if graph.num_colors != 2:
        raise ConstructionError("materialization applies to two-color instances")
    n = graph.num_active
    if not bool(np.all(~graph.pinned[:n])) or not bool(np.all(graph.pinned[n:])):
        raise ConstructionError("non-pinned nodes must precede pinned nodes")
    fw = n + np.arange(n + 1, dtype=np.int64)
    fb = n + (n + 1) + np.arange(n + 1, dtype=np.int64)
    sets = {WHITE: fw, BLACK: fb}

    eu, ev = graph.edges_u.astype(np.int64), graph.edges_v.astype(np.int64)
    u_pin = graph.pinned[eu]
    v_pin = graph.pinned[ev]
    if np.any(u_pin & v_pin):
        raise ConstructionError("pinned stubs must not be adjacent to each other")
    keep = ~(u_pin | v_pin)
    new_u = [eu[keep]]
    new_v = [ev[keep]]

    owner = np.where(u_pin, ev, eu)[~keep]
    stub = np.where(u_pin, eu, ev)[~keep]
    stub_color = graph.init_color[stub]
    for c in (WHITE, BLACK):
        m = stub_color == c
        if not m.any():
            continue
        own = owner[m]
        order = np.argsort(own, kind="stable")
        own_sorted = own[order]
        # rank of each attachment within its owner -> distinct set members
        first = np.flatnonzero(np.r_[True, own_sorted[1:] != own_sorted[:-1]])
        counts = np.diff(np.r_[first, own_sorted.shape[0]])
        rank = np.arange(own_sorted.shape[0], dtype=np.int64) - np.repeat(first, counts)
        if int(rank.max(initial=0)) >= n + 1:
            raise ConstructionError("a node has more fixed neighbors than the set size")
        new_u.append(own_sorted)
        new_v.append(sets[c][rank])

    # the two sets stabilize each other: complete bipartite block
    new_u.append(np.repeat(fw, n + 1))
    new_v.append(np.tile(fb, n + 1))

    colors = np.concatenate(
        [graph.init_color[:n], np.full(n + 1, WHITE, np.uint8), np.full(n + 1, BLACK, np.uint8)]
    )
    return Graph.from_edges(
        3 * n + 2,
        np.concatenate(new_u),
        np.concatenate(new_v),
        colors,
        pinned=None,
    )


def extend_colors(graph: Graph, k: int) -> Graph:
    """Embed a two-color instance into ``k`` colors, dynamics unchanged.

    Adds one independent set of Delta+1 nodes per extra color (Delta = max
    degree), complete to every existing node and to every other new set.
    Every original node then sees each extra color more often than any
    original color, so original nodes still switch between the two original
    colors only, and new nodes (seeing their own color zero times) never
    switch at all.
    """
    if k < 3:
        raise ConstructionError("extension needs at least three colors")
    if graph.num_colors != 2:
        raise ConstructionError("extension applies to two-color instances")
    n = graph.num_nodes
    deg = np.diff(graph.indptr)
    delta = int(deg.max()) if n else 0
    size = delta + 1
    new_sets = [n + i * size + np.arange(size, dtype=np.int64) for i in range(k - 2)]
    eu = [graph.edges_u.astype(np.int64)]
    ev = [graph.edges_v.astype(np.int64)]
    originals = np.arange(n, dtype=np.int64)
    for s in new_sets:
        eu.append(np.repeat(s, n))
        ev.append(np.tile(originals, size))
    for i in range(len(new_sets)):
        for j in range(i + 1, len(new_sets)):
            eu.append(np.repeat(new_sets[i], size))
            ev.append(np.tile(new_sets[j], size))
    colors = np.concatenate(
        [graph.init_color] + [np.full(size, 2 + i, dtype=np.uint8) for i in range(k - 2)]
    )
    pinned = np.concatenate([graph.pinned, np.zeros((k - 2) * size, dtype=bool)])
    return Graph.from_edges(
        n + (k - 2) * size,
        np.concatenate(eu),
        np.concatenate(ev),
        colors,
        pinned=pinned,
        num_colors=k,
    )
