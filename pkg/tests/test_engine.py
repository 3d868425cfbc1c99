"""Scheduling models, policies, limits, replay, and the fast path."""

from __future__ import annotations

import numpy as np
import pytest

from minoritysim import (
    BLACK,
    WHITE,
    Graph,
    MODELS,
    MONOTONE_MODELS,
    RunLimits,
    UnknownModelError,
    make_state,
    replay_schedule,
    run,
    run_to_stability_fast,
    switchable_set,
)


@pytest.fixture()
def two_pairs() -> Graph:
    """Two disjoint monochromatic pairs; nodes 0..3, edges (0,1) and (2,3)."""
    return Graph.from_edges(4, [0, 2], [1, 3], np.zeros(4, dtype=np.uint8))


# ---------------------------------------------------------------------------
# singleton models and policies


def test_model_b_defaults_to_lowest_id(two_pairs):
    result = run(two_pairs, model="B", record_trace=True)
    assert result.outcome == "stable"
    assert result.policy == "lowest-id"
    assert result.trace == [(0,), (2,)]
    assert result.step_count == result.switch_count == 2


def test_highest_id_policy(two_pairs):
    result = run(two_pairs, model="A", policy="highest-id", record_trace=True)
    assert result.trace == [(3,), (1,)]


def test_uniform_policy_is_seed_deterministic(two_pairs):
    runs = [
        run(two_pairs, model="B", policy="uniform", seed=11, record_trace=True)
        for _ in range(2)
    ]
    assert runs[0].trace == runs[1].trace
    assert runs[0].outcome == "stable"


def test_uniform_policy_requires_seed(two_pairs):
    with pytest.raises(ValueError):
        run(two_pairs, model="B", policy="uniform")


def test_custom_callable_policy(two_pairs):
    def pick_last(switchable, rng):
        return int(switchable[-1])

    result = run(two_pairs, model="B", policy=pick_last, record_trace=True)
    assert result.trace == [(3,), (1,)]
    assert result.policy == "pick_last"


def test_unknown_model_and_policy_are_rejected(two_pairs):
    with pytest.raises(UnknownModelError):
        run(two_pairs, model="Z")
    with pytest.raises(ValueError):
        run(two_pairs, model="B", policy="no-such-policy")
    with pytest.raises(ValueError):
        run(two_pairs, model="E", policy="lowest-id")


def test_model_f_forces_seeded_uniform(two_pairs):
    with pytest.raises(ValueError):
        run(two_pairs, model="F")
    first = run(two_pairs, model="F", seed=3, record_trace=True)
    second = run(two_pairs, model="F", seed=3, record_trace=True)
    assert first.trace == second.trace
    assert first.policy == "uniform"


# ---------------------------------------------------------------------------
# set models


def test_model_c_default_takes_greedy_maximal_independent_set(make_path):
    graph = make_path([WHITE, WHITE, WHITE])
    result = run(graph, model="C", record_trace=True)
    assert result.outcome == "stable"
    assert result.trace[0] == (0, 2)
    assert result.step_count == 1
    assert result.switch_count == 2


def test_model_d_default_takes_whole_switchable_set(make_path):
    graph = make_path([WHITE, WHITE, WHITE])
    result = run(
        graph, model="D", limits=RunLimits(max_steps=10, detect_cycles=True), record_trace=True
    )
    # the full set {0,1,2} is not independent: all three flip together and
    # the path oscillates, which cycle detection reports
    assert result.trace[0] == (0, 1, 2)
    assert result.outcome == "cycle"
    assert result.cycle_period == 2


def test_model_e_is_synchronous_on_everything(mono_pair):
    result = run(mono_pair, model="E", limits=RunLimits(max_steps=4, detect_cycles=True))
    assert result.outcome == "cycle"
    assert result.cycle_period == 2
    assert result.step_count <= 4


def test_model_e_without_detection_hits_step_limit(mono_pair):
    result = run(mono_pair, model="E", limits=RunLimits(max_steps=3))
    assert result.outcome == "step_limit"
    assert result.step_count == 3


def test_model_g_with_p_one_matches_synchronous(mono_pair):
    result = run(
        mono_pair,
        model="G",
        seed=5,
        p=1.0,
        limits=RunLimits(max_steps=10, detect_cycles=True),
    )
    assert result.outcome == "cycle"
    assert result.cycle_period == 2


def test_model_g_counts_empty_redraws(two_pairs):
    first = run(two_pairs, model="G", seed=9, p=0.05)
    second = run(two_pairs, model="G", seed=9, p=0.05)
    assert first.outcome == "stable"
    assert first.empty_redraws == second.empty_redraws >= 0
    assert first.switch_count == second.switch_count


def test_model_g_validates_parameters(two_pairs):
    with pytest.raises(ValueError):
        run(two_pairs, model="G", p=0.5)  # no seed
    with pytest.raises(ValueError):
        run(two_pairs, model="G", seed=1, p=0.0)
    with pytest.raises(ValueError):
        run(two_pairs, model="G", seed=1, p=1.5)


def test_model_registry_constants():
    assert set(MODELS) == set("ABCDEFG")
    assert MONOTONE_MODELS <= set(MODELS)
    assert "E" not in MONOTONE_MODELS


# ---------------------------------------------------------------------------
# limits and hooks


def test_step_limit_is_reported(two_pairs):
    result = run(two_pairs, model="B", limits=RunLimits(max_steps=1))
    assert result.outcome == "step_limit"
    assert result.step_count == 1
    assert list(switchable_set(two_pairs, result.final_state)) == [2, 3]


def test_hooks_fire_once_per_step(two_pairs):
    calls = {"before": 0, "after": 0}

    class Counter:
        def before_step(self, graph, state, switchable, nodes):
            calls["before"] += 1

        def after_step(self, graph, state, nodes):
            calls["after"] += 1

    result = run(two_pairs, model="B", hooks=Counter())
    assert calls == {"before": result.step_count, "after": result.step_count}


# ---------------------------------------------------------------------------
# schedule replay


def test_replay_accepts_a_valid_schedule(mono_pair):
    result = replay_schedule(mono_pair, [0], model="A")
    assert result.valid
    assert result.steps_applied == 1
    assert result.switch_count == 1
    assert result.failed_index is None
    assert switchable_set(mono_pair, result.final_state).shape[0] == 0


def test_replay_stops_at_first_invalid_step(mono_pair):
    result = replay_schedule(mono_pair, [0, 1], model="A")
    assert not result.valid
    assert result.failed_index == 1
    assert result.steps_applied == 1
    assert "switchable" in result.reason


def test_replay_checks_step_shape_per_model(two_pairs):
    # singleton models reject set steps outright
    result = replay_schedule(two_pairs, [[0, 2]], model="B")
    assert not result.valid
    assert result.failed_index == 0
    # the same step is a fine independent set for model C
    result = replay_schedule(two_pairs, [[0, 2]], model="C")
    assert result.valid


def test_replay_rejects_adjacent_sets_for_model_c(make_path):
    graph = make_path([WHITE, WHITE, WHITE])
    result = replay_schedule(graph, [[0, 1]], model="C")
    assert not result.valid
    assert "independent" in result.reason


# ---------------------------------------------------------------------------
# compiled fast path


def test_fast_path_agrees_with_engine(two_pairs, bene2):
    fast = run_to_stability_fast(two_pairs)
    assert fast.outcome == "stable"
    assert fast.switch_count == 2
    engine = run(bene2.graph, model="B")
    fast2, counts = run_to_stability_fast(bene2.graph, return_counts=True)
    assert fast2.switch_count == engine.switch_count
    assert counts.sum() == fast2.switch_count
    assert switchable_set(bene2.graph, fast2.final_state).shape[0] == 0
