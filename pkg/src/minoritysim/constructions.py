"""Instance generators for worst-case switching behavior.

Two families:

* :func:`build_adversarial` — instances on which a *sequential adversary*
  can force quadratically many switches; the certifying schedule is
  returned with the instance.
* :func:`build_benevolent` / :func:`build_recursive` — instances on which
  *every* run, however scheduled, performs a superlinear number of
  switches.  The flat (depth-1) generator has exact closed forms for its
  arena size and total switch count (:func:`predicted_arena_size`,
  :func:`predicted_switch_count`); the depth-2 generator restores and
  reuses round hardware to push the exponent higher.

The benevolent instance is organized around a relay chain that a signal
wave crosses once per *traversal*.  Between traversals, one *round* of
recharging re-enables every chain base: four recharging systems fire in
sequence (recharge one half of the active recharge nodes, then the other
half, then reset both halves), each system's completion detected by an AND
gate that triggers the next.  A join collects all round tails back into
the chain head, and a fork dispatches each round's control signal.  At
depth 2 a second level of recharging systems restores the round hardware
itself mid-run, so each quad of systems drives two rounds.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from minoritysim.gadgets import (
    AndGate,
    Build,
    BuildContext,
    ConstructionError,
    Fork,
    Join,
    RechargingSystem,
    build_and_gate,
    build_fork,
    build_join,
    build_link_chain,
    finish_recharging_system,
    start_recharging_system,
    wire_system_bundles,
    wire_system_targets,
)
from minoritysim.graph import BLACK, WHITE, Graph

_SYS_VARIANTS = ("std", "mirror", "std", "mirror")
_GATE_VARIANTS = ("white", "black", "white", "black")
# link-chain lengths (dispatch + three inter-gate + tail) per round parity
_LINK_LENS_ODD = (4, 4, 4, 2, 1)
_LINK_LENS_EVEN = (3, 4, 4, 4, 2)
# enabling relays arrive as the color opposite each system's upper node
_ENABLE_COLORS = (BLACK, WHITE, BLACK, WHITE)


def predicted_arena_size(r: int) -> int:
    """Exact arena size of the flat benevolent instance with ratio ``r``."""
    return 30 * r * r + 5 * r - 31


def predicted_switch_count(r: int) -> int:
    """Exact total switch count of the flat benevolent instance."""
    return 12 * r**3 - 10 * r * r + 54 * r - 52


# ---------------------------------------------------------------------------
# Adversarial family


@dataclass
class AdversarialInstance:
    """Instance plus the schedule certifying the adversarial lower bound."""

    graph: Graph
    build: Build
    m: int
    schedule: list[int]
    pool: np.ndarray
    actors: np.ndarray

    @property
    def arena_size(self) -> int:
        return self.build.arena_size


def build_adversarial(m: int) -> AdversarialInstance:
    """Instance where a sequential adversary forces ~(2/9)n^2 switches.

    A pool of m white nodes is shared by 2m actor nodes, each adjacent to
    the whole pool.  Every actor starts switchable; firing one actor makes
    the whole pool switchable, and firing the pool re-arms nothing — so the
    adversary alternates: one actor, then the full pool, 2m times, for
    2m(m+1) switches on a 3m-node arena.  The returned schedule replays
    exactly that and ends in a stable state.
    """
    if m < 1:
        raise ConstructionError("the adversarial family needs m >= 1")
    ctx = BuildContext()
    pool = ctx.add_nodes(m, WHITE, role="pool")
    actor_colors = np.where(np.arange(2 * m) % 2 == 0, BLACK, WHITE).astype(np.uint8)
    actors = ctx.add_nodes(2 * m, actor_colors, role="actors")
    ctx.add_edges(np.repeat(actors, m), np.tile(pool, 2 * m))
    ctx.add_group(pool, cert=1)
    odd = actors[0::2]
    even = actors[1::2]
    ctx.set_cert(odd, -1)
    ctx.set_cert(even, -(2 * m + 1))
    build = ctx.finalize()
    schedule: list[int] = []
    for a in actors:
        schedule.append(int(a))
        schedule.extend(int(v) for v in pool)
    return AdversarialInstance(
        graph=build.graph,
        build=build,
        m=m,
        schedule=schedule,
        pool=pool,
        actors=actors,
    )


# ---------------------------------------------------------------------------
# Benevolent family: component id bundles


@dataclass
class RelayChain:
    """Column ids of the relay chain (one entry per relay)."""

    base: np.ndarray
    upper: np.ndarray
    core1: np.ndarray
    core2: np.ndarray
    recharge_core: np.ndarray
    recharge_base: np.ndarray

    @property
    def m(self) -> int:
        return int(self.base.shape[0])


@dataclass
class RoundParts:
    """Hardware of one fresh round: systems, gates and link chains."""

    index: int
    dummies: np.ndarray
    systems: list[RechargingSystem]
    gates: list[AndGate]
    links: list[np.ndarray]


@dataclass
class SecondLevel:
    """The mid-run restoration stage of a depth-2 instance."""

    systems: list[RechargingSystem]
    gates: list[AndGate]
    chains: list[np.ndarray]


@dataclass
class ReuseParts:
    """Hardware of one reuse round driving restored systems."""

    index: int
    branch_index: int
    chains: list[np.ndarray]
    repeaters: list[int]
    gates: list[AndGate]
    tail: np.ndarray


@dataclass
class BenevolentInstance:
    """A benevolent-lower-bound instance and handles into its anatomy."""

    graph: Graph
    build: Build
    r: int
    depth: int
    traversals: int
    chain: RelayChain
    join: Join
    fork: Fork
    rounds: list[RoundParts]
    second_level: SecondLevel | None = None
    reuse: list[ReuseParts] = field(default_factory=list)

    @property
    def arena_size(self) -> int:
        return self.build.arena_size


# ---------------------------------------------------------------------------
# Benevolent family: assembly


def _add_relay_chain(ctx: BuildContext, m: int) -> RelayChain:
    """Vectorized chain of m rechargeable relays, bases linked in a path."""
    pattern = np.array(
        [
            [BLACK, BLACK, WHITE, WHITE, WHITE, BLACK],  # odd relays
            [WHITE, WHITE, BLACK, BLACK, BLACK, WHITE],  # even relays
        ],
        dtype=np.uint8,
    )
    colors = pattern[np.arange(m) % 2].ravel()
    ids = ctx.add_nodes(6 * m, colors, role="chain")
    base = ids[0::6]
    upper = ids[1::6]
    core1 = ids[2::6]
    core2 = ids[3::6]
    r_core = ids[4::6]
    r_base = ids[5::6]
    ctx.add_edges(base, upper)
    ctx.add_edges(upper, core1)
    ctx.add_edges(upper, core2)
    for core in (core1, core2):
        ctx.add_edges(core, r_core)
        ctx.add_edges(core, r_base)
    ctx.add_edges(base[:-1], base[1:])
    ctx.set_cert(base, 1)
    ctx.set_cert(upper, 1)
    ctx.set_cert(r_core, 1)
    ctx.set_cert(r_base, 5)
    for i in range(m):
        ctx.add_group(np.array([core1[i], core2[i]]), cert=1)
    return RelayChain(
        base=base,
        upper=upper,
        core1=core1,
        core2=core2,
        recharge_core=r_core,
        recharge_base=r_base,
    )


def _round_classes(chain: RelayChain, t: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(active recharge nodes, same-parity idx, other-parity idx) for round t."""
    m = chain.m
    idx = np.arange(m)
    same = idx[(idx + 1) % 2 == t % 2]
    other = idx[(idx + 1) % 2 != t % 2]
    actives = chain.recharge_base if t % 2 else chain.recharge_core
    return actives, same, other


def _demands(k: int) -> np.ndarray:
    """Per-target slot demands of one round system: k^2 threes, 2k ones."""
    return np.concatenate([np.full(k * k, 3, dtype=np.int64), np.full(2 * k, 1, dtype=np.int64)])


def _add_round(
    ctx: BuildContext,
    j: int,
    k: int,
    chain: RelayChain,
    fork_out: int,
    join: Join,
) -> RoundParts:
    """One fresh round: dummies, four systems, five links, four gates."""
    actives, same, other = _round_classes(chain, j)
    sys_targets = [actives[same], actives[other], actives[other], actives[same]]
    watches = [chain.upper[same], chain.upper[other], actives[other], actives[same]]

    dummies = ctx.add_nodes(2 * k, BLACK, role=f"round{j}.dummies")
    ctx.set_cert(dummies, 1)

    systems: list[RechargingSystem] = []
    demands = _demands(k)
    for s in range(4):
        sys = start_recharging_system(ctx, _SYS_VARIANTS[s], 3 * k + 2, role=f"round{j}.sys{s + 1}")
        wire_system_targets(ctx, sys, np.concatenate([sys_targets[s], dummies]), demands)
        finish_recharging_system(ctx, sys, role=f"round{j}.sys{s + 1}")
        systems.append(sys)

    lens = _LINK_LENS_ODD if j % 2 else _LINK_LENS_EVEN
    first_colors = (ctx.color_of(fork_out) ^ 1, BLACK, WHITE, BLACK, WHITE)
    links = [
        build_link_chain(
            ctx,
            lens[t],
            first_colors[t],
            source=fork_out if t == 0 else None,
            role=f"round{j}.link{t}",
        )
        for t in range(5)
    ]
    for s in range(4):
        enable = int(links[s][-1])
        assert ctx.color_of(enable) == _ENABLE_COLORS[s]
        ctx.add_edge(enable, systems[s].upper)

    gates: list[AndGate] = []
    for s in range(4):
        inputs = np.concatenate([watches[s], dummies, [links[s][-1]]])
        gates.append(
            build_and_gate(
                ctx,
                inputs,
                variant=_GATE_VARIANTS[s],
                output=int(links[s + 1][0]),
                role=f"round{j}.gate{s + 1}",
            )
        )

    tail = int(links[4][-1])
    assert ctx.color_of(tail) != ctx.color_of(int(join.a[j][0]))
    ctx.add_edges(np.full(2, tail, dtype=np.int64), join.a[j])
    return RoundParts(index=j, dummies=dummies, systems=systems, gates=gates, links=links)


def _add_second_level(
    ctx: BuildContext,
    k: int,
    rounds: list[RoundParts],
    src: int,
) -> SecondLevel:
    """Four gate-chained systems that restore the reusable round hardware.

    Restoration lowers the used mid groups (one bundle slot per lower node,
    wired to every group member) and upper nodes back to balance 1 without
    firing them.  Lower-level loading is equalized with sink padding so
    every second-level lower node completes its countdown only once the
    whole mid group above it has fired.
    """
    mid_white = np.stack([rd.systems[s].mid for rd in rounds for s in (1, 3)])
    mid_black = np.stack([rd.systems[s].mid for rd in rounds for s in (0, 2)])
    up_std = np.array([rd.systems[s].upper for rd in rounds for s in (0, 2)], dtype=np.int64)
    up_mirror = np.array([rd.systems[s].upper for rd in rounds for s in (1, 3)], dtype=np.int64)
    specs = [
        ("std", mid_white, 3 * k + 2, "black"),
        ("mirror", mid_black, 3 * k + 2, "white"),
        ("std", up_std, k + 1, "black"),
        ("mirror", up_mirror, k + 1, "white"),
    ]
    first_colors = (BLACK, WHITE, BLACK, WHITE)
    systems: list[RechargingSystem] = []
    chains: list[np.ndarray] = []
    deficits: list[np.ndarray] = []
    for i, (variant, targets, demand, _) in enumerate(specs):
        chains.append(
            build_link_chain(
                ctx, 3, first_colors[i], source=src if i == 0 else None, role=f"level2.chain{i + 1}"
            )
        )
        if targets.ndim == 2:
            edge_units = targets.shape[0] * demand * targets.shape[1]
        else:
            edge_units = targets.shape[0] * demand
        width = max(demand, int(np.ceil(np.sqrt(edge_units))))
        sys = start_recharging_system(ctx, variant, width, role=f"level2.sys{i + 1}")
        if targets.ndim == 2:
            wire_system_bundles(ctx, sys, targets, demand)
        else:
            wire_system_targets(ctx, sys, targets, np.full(targets.shape[0], demand, dtype=np.int64))
        deficits.append(int(sys.phys.max()) - sys.phys)
        finish_recharging_system(ctx, sys, pad_sinks=True, role=f"level2.sys{i + 1}")
        ctx.add_edge(int(chains[i][-1]), sys.upper)
        systems.append(sys)
    gates: list[AndGate] = []
    for i, (_, _, _, gate_variant) in enumerate(specs):
        inputs = np.concatenate([systems[i].lower, [chains[i][-2]]])
        output = int(chains[i + 1][0]) if i < 3 else None
        gates.append(
            build_and_gate(ctx, inputs, variant=gate_variant, output=output, role=f"level2.gate{i + 1}")
        )
        # Re-pin each lower node's build balance.  Unlike a fresh round,
        # here the +2 gains before the mid cascade come only from real
        # targets switching back (padding sinks sit still until the lower
        # itself fires), and bundle dealing can load lowers unevenly; the
        # gate head's edge shifts the balance by one more.  Starting at
        # 1 + 2*deficit makes every lower reach the uniform 1 + 2*max_load
        # after its targets flip, hence exactly -1 once the whole mid group
        # above it has fired -- never earlier.
        ctx.set_cert(systems[i].lower, 1 + 2 * deficits[i])
    return SecondLevel(systems=systems, gates=gates, chains=chains)


def _reused_round_index(t: int, r: int) -> int:
    """Fresh round whose hardware drives reuse round t (parity preserved)."""
    off = t - r
    return off + 2 if off % 2 == 0 else off


def _add_reuse_round(
    ctx: BuildContext,
    t: int,
    bb: int,
    chain: RelayChain,
    parts: RoundParts,
    src: int,
    join: Join,
) -> ReuseParts:
    """Drive one restored quad through a second round, in reverse order.

    The four systems run as [sys4, sys3, sys2, sys1]; with their lower
    levels already flipped this reverses each system's action, so the quad
    again recharges both active classes and then resets them.  Each
    position gets a fresh repeater: the last two same-colored relays of its
    link chain both feed a repeater node that arrives at balance 3 (its
    system's upper node fed it one flip during the fresh round) and fires
    the upper node a second time.  Fresh gates watch the same node classes
    as in a fresh round, with the repeater as the one-shot enable.
    """
    actives, same, other = _round_classes(chain, t)
    phys = [parts.systems[3], parts.systems[2], parts.systems[1], parts.systems[0]]
    watches = [chain.upper[same], chain.upper[other], actives[other], actives[same]]

    chains: list[np.ndarray] = []
    repeaters: list[int] = []
    gates: list[AndGate] = []
    cur_src: int | None = src
    for pos in range(4):
        u_build = WHITE if phys[pos].variant == "std" else BLACK
        rep_color = u_build
        e_color = u_build ^ 1
        if pos == 0:
            first = ctx.color_of(src) ^ 1
            length = 3 if first == e_color else 4
        else:
            first = e_color
            length = 3
        ch = build_link_chain(ctx, length, first, source=cur_src, role=f"reuse{t}.link{pos}")
        assert ctx.color_of(int(ch[-1])) == e_color
        rep = ctx.add_node(rep_color, role=f"reuse{t}.repeater{pos + 1}")
        ctx.add_edge(int(ch[-3]), rep)
        ctx.add_edge(int(ch[-1]), rep)
        ctx.add_edge(rep, phys[pos].upper)
        ctx.set_cert([rep], 1)
        chains.append(ch)
        repeaters.append(rep)
        cur_src = None

    for pos in range(4):
        inputs = np.concatenate([watches[pos], parts.dummies, [repeaters[pos]]])
        output = int(chains[pos + 1][0]) if pos < 3 else None
        gates.append(
            build_and_gate(
                ctx, inputs, variant=_GATE_VARIANTS[pos], output=output, role=f"reuse{t}.gate{pos + 1}"
            )
        )

    tail_first = WHITE  # last gate is black-armed; its D node fires to white
    tail_len = 1 if t % 2 else 2
    tail = build_link_chain(ctx, tail_len, tail_first, role=f"reuse{t}.tail")
    ctx.add_edge(gates[3].d, int(tail[0]))
    assert ctx.color_of(int(tail[-1])) != ctx.color_of(int(join.a[t][0]))
    ctx.add_edges(np.full(2, int(tail[-1]), dtype=np.int64), join.a[t])
    return ReuseParts(
        index=t,
        branch_index=bb,
        chains=chains,
        repeaters=repeaters,
        gates=gates,
        tail=tail,
    )


def _assemble(r: int, depth: int) -> BenevolentInstance:
    k = r - 1
    m = 2 * k * k
    traversals = r if depth == 1 else 2 * r - 2
    num_rounds = traversals - 1

    ctx = BuildContext()
    chain = _add_relay_chain(ctx, m)
    join = build_join(ctx, traversals, role="join")
    fork = build_fork(ctx, num_rounds, role="fork")
    ctx.add_edge(join.c, int(chain.base[0]))
    ctx.add_edges(fork.f, np.full(num_rounds, chain.base[m - 1], dtype=np.int64))

    rounds = [
        _add_round(ctx, j, k, chain, int(fork.f[j - 1]), join) for j in range(1, r)
    ]

    second_level: SecondLevel | None = None
    reuse: list[ReuseParts] = []
    if depth == 2:
        second_level = _add_second_level(ctx, k, rounds[: r - 2], int(fork.f[r - 1]))
        for t in range(r, 2 * r - 2):
            bb = _reused_round_index(t, r)
            src = second_level.gates[3].d if t == r else int(fork.f[t - 1])
            reuse.append(_add_reuse_round(ctx, t, bb, chain, rounds[bb - 1], src, join))

    build = ctx.finalize()
    return BenevolentInstance(
        graph=build.graph,
        build=build,
        r=r,
        depth=depth,
        traversals=traversals,
        chain=chain,
        join=join,
        fork=fork,
        rounds=rounds,
        second_level=second_level,
        reuse=reuse,
    )


def build_benevolent(r: int) -> BenevolentInstance:
    """Flat instance: every run stabilizes after exactly
    :func:`predicted_switch_count` switches on a
    :func:`predicted_arena_size`-node arena (cubic in sqrt(size))."""
    if r < 2 or r % 2:
        raise ConstructionError("the benevolent family needs an even ratio r >= 2")
    return _assemble(r, 1)


def build_recursive(r: int, depth: int = 2) -> BenevolentInstance:
    """Instance whose round hardware is restored and reused mid-run.

    ``depth=1`` is exactly the flat instance.  ``depth=2`` drives 2r-2
    traversals through r-1 fresh rounds plus r-2 reuse rounds, restoring
    the reusable quads with a second level of recharging systems.  Deeper
    nesting is not implemented; requests are clamped to 2 with a warning.
    """
    if depth < 1:
        raise ConstructionError("depth must be at least 1")
    if depth > 2:
        warnings.warn("recursion depth is capped at 2; building depth 2", stacklevel=2)
        depth = 2
    if r < 2 or r % 2:
        raise ConstructionError("the benevolent family needs an even ratio r >= 2")
    if depth == 2 and r == 2:
        raise ConstructionError("depth 2 needs r >= 4: with r = 2 there is no hardware to reuse")
    return _assemble(r, depth)


# ---------------------------------------------------------------------------
# Reporting


def instance_report(instance: AdversarialInstance | BenevolentInstance) -> dict:
    """Summary statistics of a built instance, for logs and the CLI."""
    g = instance.graph
    deg = np.diff(g.indptr)
    report: dict = {
        "nodes": int(g.num_nodes),
        "arena_nodes": int(instance.build.arena_size),
        "fixed_nodes": int(g.num_nodes - instance.build.arena_size),
        "edges": int(g.num_edges),
        "max_degree": int(deg.max()) if g.num_nodes else 0,
    }
    groups: dict[str, int] = {}
    for ids, role in instance.build.roles:
        key = role.split(".")[0]
        groups[key] = groups.get(key, 0) + int(ids.shape[0])
    report["components"] = dict(sorted(groups.items()))
    if isinstance(instance, AdversarialInstance):
        report["kind"] = "adversarial"
        report["m"] = instance.m
        report["schedule_length"] = len(instance.schedule)
    else:
        report["kind"] = "benevolent"
        report["r"] = instance.r
        report["depth"] = instance.depth
        report["traversals"] = instance.traversals
        if instance.depth == 1:
            report["predicted_arena_size"] = predicted_arena_size(instance.r)
            report["predicted_switch_count"] = predicted_switch_count(instance.r)
    return report
