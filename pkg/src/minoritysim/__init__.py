"""Minority-process simulation and worst-case instance generation.

A *minority process* runs on an undirected graph whose nodes each hold a
color: a node is switchable when some color is strictly rarer in its
neighborhood than its own, and switching adopts that minority color.  This
package simulates the process under seven scheduling models (sequential,
independent-set, free-set, synchronous and randomized variants), audits run
invariants, and generates instance families with certified worst-case
behavior: adversarial instances where a schedule forces quadratically many
switches, and benevolent instances where *every* schedule needs a
superlinear number — with exact closed forms at depth 1, and a depth-2
variant that restores and reuses its own round hardware.
"""

from minoritysim.audit import AuditReport, InvariantAuditor
from minoritysim.constructions import (
    AdversarialInstance,
    BenevolentInstance,
    build_adversarial,
    build_benevolent,
    build_recursive,
    instance_report,
    predicted_arena_size,
    predicted_switch_count,
)
from minoritysim.engine import (
    DEFAULT_SET_MODEL_STEP_LIMIT,
    MODELS,
    MONOTONE_MODELS,
    ReplayResult,
    RunLimits,
    RunResult,
    UnknownModelError,
    replay_schedule,
    run,
    run_to_stability_fast,
)
from minoritysim.gadgets import (
    BudgetError,
    Build,
    BuildContext,
    ConstructionError,
    build_and_gate,
    build_fork,
    build_join,
    build_link_chain,
    build_recharging_system,
    build_rechargeable_relay,
    build_simple_relay,
    extend_colors,
    materialize_fixed_nodes,
)
from minoritysim.graph import (
    BLACK,
    WHITE,
    Graph,
    GraphValidationError,
    InvalidStepError,
    State,
    apply_step,
    apply_step_inplace,
    balance,
    compute_balances,
    is_switchable,
    make_state,
    minority_color,
    neighborhood_counts,
    switchable_set,
    total_conflicts,
)
from minoritysim.io import (
    fit_log_slope,
    graph_digest,
    load_graph,
    read_trace,
    save_graph,
    to_dot,
    write_trace,
)

__version__ = "0.1.0"

__all__ = [
    "AdversarialInstance",
    "AuditReport",
    "BLACK",
    "BenevolentInstance",
    "BudgetError",
    "Build",
    "BuildContext",
    "ConstructionError",
    "DEFAULT_SET_MODEL_STEP_LIMIT",
    "Graph",
    "GraphValidationError",
    "InvalidStepError",
    "InvariantAuditor",
    "MODELS",
    "MONOTONE_MODELS",
    "ReplayResult",
    "RunLimits",
    "RunResult",
    "State",
    "UnknownModelError",
    "WHITE",
    "apply_step",
    "apply_step_inplace",
    "balance",
    "build_adversarial",
    "build_and_gate",
    "build_benevolent",
    "build_fork",
    "build_join",
    "build_link_chain",
    "build_recharging_system",
    "build_rechargeable_relay",
    "build_recursive",
    "build_simple_relay",
    "compute_balances",
    "extend_colors",
    "fit_log_slope",
    "graph_digest",
    "instance_report",
    "is_switchable",
    "load_graph",
    "make_state",
    "materialize_fixed_nodes",
    "minority_color",
    "neighborhood_counts",
    "predicted_arena_size",
    "predicted_switch_count",
    "read_trace",
    "replay_schedule",
    "run",
    "run_to_stability_fast",
    "save_graph",
    "switchable_set",
    "to_dot",
    "total_conflicts",
    "write_trace",
]
