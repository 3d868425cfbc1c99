"""Instance generators: closed-form sizes, structure, and rejection rules."""

from __future__ import annotations

import numpy as np
import pytest

from minoritysim import (
    ConstructionError,
    build_adversarial,
    build_benevolent,
    build_recursive,
    instance_report,
    predicted_arena_size,
    predicted_switch_count,
    replay_schedule,
    run,
    run_to_stability_fast,
    switchable_set,
)
from minoritysim.io import graph_digest

EXPECTED = {2: (99, 112), 4: (469, 772), 6: (1079, 2504)}


# ---------------------------------------------------------------------------
# benevolent family (flat)


@pytest.mark.parametrize("r", sorted(EXPECTED))
def test_flat_instance_matches_closed_forms(r):
    arena, switches = EXPECTED[r]
    assert predicted_arena_size(r) == arena
    assert predicted_switch_count(r) == switches
    inst = build_benevolent(r)
    assert inst.arena_size == arena
    result = run_to_stability_fast(inst.graph)
    assert result.outcome == "stable"
    assert result.switch_count == switches


def test_flat_instance_traverses_the_chain_r_times(bene2):
    result = run(bene2.graph, model="B", record_trace=True)
    base = set(int(b) for b in bene2.chain.base)
    fires = [v for step in result.trace for v in step if v in base]
    m = bene2.chain.base.shape[0]
    assert len(fires) == m * bene2.traversals
    assert bene2.traversals == 2


@pytest.mark.parametrize("r", [0, 1, 3, -2])
def test_ratio_must_be_even_and_positive(r):
    with pytest.raises(ConstructionError):
        build_benevolent(r)


def test_flat_report_carries_predictions(bene2):
    report = instance_report(bene2)
    assert report["kind"] == "benevolent"
    assert report["arena_nodes"] == 99
    assert report["nodes"] == bene2.graph.num_nodes
    assert report["fixed_nodes"] == report["nodes"] - 99
    assert report["predicted_arena_size"] == 99
    assert report["predicted_switch_count"] == 112
    assert report["depth"] == 1
    assert sum(report["components"].values()) <= report["nodes"]


# ---------------------------------------------------------------------------
# recursive (depth-2) family


def test_depth_one_recursive_build_is_the_flat_build():
    assert graph_digest(build_recursive(4, 1).graph) == graph_digest(
        build_benevolent(4).graph
    )


def test_depth_two_needs_reusable_hardware():
    with pytest.raises(ConstructionError):
        build_recursive(2, 2)
    with pytest.raises(ConstructionError):
        build_recursive(4, 0)


def test_depth_is_capped_with_a_warning():
    with pytest.warns(UserWarning, match="capped"):
        inst = build_recursive(4, 3)
    assert inst.depth == 2


def test_depth_two_structure_and_replayed_rounds():
    inst = build_recursive(6, 2)
    assert inst.traversals == 2 * 6 - 2
    assert inst.second_level is not None
    assert len(inst.second_level.systems) == 4
    assert len(inst.second_level.gates) == 4
    assert len(inst.reuse) == 6 - 2
    # replayed rounds run in pairs, mirrored within each pair
    assert [(p.index, p.branch_index) for p in inst.reuse] == [
        (6, 2),
        (7, 1),
        (8, 4),
        (9, 3),
    ]
    result = run(inst.graph, model="B", record_trace=True)
    assert result.outcome == "stable"
    base = [int(b) for b in inst.chain.base]
    fires = [v for step in result.trace for v in step if v in set(base)]
    m = len(base)
    assert len(fires) == m * inst.traversals
    # every traversal crosses each base node exactly once
    blocks = [fires[i : i + m] for i in range(0, len(fires), m)]
    assert all(sorted(block) == sorted(base) for block in blocks)
    report = instance_report(inst)
    assert report["traversals"] == 10
    assert "predicted_switch_count" not in report


# ---------------------------------------------------------------------------
# adversarial family


@pytest.mark.parametrize("m", [1, 2, 3, 5])
def test_adversarial_schedule_replays_to_stability(m):
    inst = build_adversarial(m)
    assert len(inst.schedule) == 2 * m * m + 2 * m
    replay = replay_schedule(inst.graph, inst.schedule)
    assert replay.valid
    assert replay.switch_count == len(inst.schedule)
    assert switchable_set(inst.graph, replay.final_state).shape[0] == 0


def test_adversarial_structure_m3(adv3):
    assert adv3.build.arena_size == 9
    assert adv3.pool.shape[0] == 3
    assert adv3.actors.shape[0] == 2 * 3
    report = instance_report(adv3)
    assert report["kind"] == "adversarial"
    assert report["m"] == 3
    assert report["schedule_length"] == 24
    assert report["components"] == {"actors": 6, "pool": 3}


def test_adversarial_stabilizes_under_any_order(adv3):
    # the long schedule is one adversarial order; autonomous runs still halt
    result = run(adv3.graph, model="B")
    assert result.outcome == "stable"


def test_adversarial_needs_a_positive_m():
    with pytest.raises(ConstructionError):
        build_adversarial(0)
