"""Command-line interface.

Four subcommands: ``build`` writes generated instances, ``run`` executes a
scheduling model on a stored graph, ``verify`` rebuilds an instance and
checks its certified behavior, and ``stats`` produces the growth table of
the benevolent family.

Exit codes: 0 a run reached a stable state (or the command simply
succeeded), 2 step limit hit, 3 cycle detected, 4 verification or audit
failure, 1 usage error.
"""

from __future__ import annotations

import json
import sys
import time
from pathlib import Path

import click
import numpy as np

from minoritysim import io as mio
from minoritysim.audit import InvariantAuditor
from minoritysim.constructions import (
    build_adversarial,
    build_benevolent,
    build_recursive,
    instance_report,
    predicted_arena_size,
    predicted_switch_count,
)
from minoritysim.engine import RunLimits, replay_schedule, run, run_to_stability_fast
from minoritysim.gadgets import ConstructionError
from minoritysim.graph import switchable_set

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_STEP_LIMIT = 2
EXIT_CYCLE = 3
EXIT_FAIL = 4

_OUTCOME_CODES = {"stable": EXIT_OK, "step_limit": EXIT_STEP_LIMIT, "cycle": EXIT_CYCLE}


@click.group()
def cli() -> None:
    """Minority-process simulation and worst-case instance generation."""


def _build_instance(kind: str, m: int | None, r: int | None, depth: int):
    try:
        if kind == "adversarial":
            if m is None:
                raise click.UsageError("--kind adversarial needs --m")
            return build_adversarial(m)
        if r is None:
            raise click.UsageError(f"--kind {kind} needs --r")
        if kind == "benevolent":
            return build_benevolent(r)
        return build_recursive(r, depth)
    except ConstructionError as exc:
        raise click.UsageError(str(exc)) from exc


def _metadata(kind: str, instance) -> dict:
    meta = {"kind": kind}
    if kind == "adversarial":
        meta["m"] = instance.m
    else:
        meta["r"] = instance.r
        meta["depth"] = instance.depth
    return meta


@cli.command()
@click.option("--kind", type=click.Choice(["adversarial", "benevolent", "recursive"]), required=True)
@click.option("--m", type=int, default=None, help="adversarial size parameter")
@click.option("--r", type=int, default=None, help="benevolent ratio (even, >= 2)")
@click.option("--depth", type=int, default=2, show_default=True, help="recursive nesting depth")
@click.option("--out", type=click.Path(dir_okay=False), default=None, help="graph output path")
@click.option("--format", "fmt", type=click.Choice(["json", "dot"]), default="json", show_default=True)
@click.option("--schedule-out", type=click.Path(dir_okay=False), default=None, help="adversarial schedule output")
@click.option("--report/--no-report", default=True, show_default=True, help="print the instance report")
def build(kind, m, r, depth, out, fmt, schedule_out, report):
    """Generate an instance and optionally write graph and schedule files."""
    instance = _build_instance(kind, m, r, depth)
    if out:
        if fmt == "json":
            mio.save_graph(out, instance.graph, metadata=_metadata(kind, instance))
        else:
            Path(out).write_text(mio.to_dot(instance.graph))
    if schedule_out:
        if kind != "adversarial":
            raise click.UsageError("--schedule-out applies to adversarial instances only")
        Path(schedule_out).write_text(json.dumps(instance.schedule) + "\n")
    if report:
        click.echo(json.dumps(instance_report(instance), sort_keys=True))


@cli.command("run")
@click.option("--graph", "graph_path", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--model", type=click.Choice(list("ABCDEFG")), default="B", show_default=True)
@click.option("--policy", type=str, default=None, help="singleton policy name (models A/B)")
@click.option("--seed", type=int, default=None, help="RNG seed (models F/G)")
@click.option("--p", type=float, default=None, help="per-node switch probability (model G)")
@click.option("--max-steps", type=int, default=None)
@click.option("--detect-cycles", is_flag=True, help="stop when a recent state recurs")
@click.option("--cycle-window", type=int, default=2, show_default=True)
@click.option("--trace", "trace_path", type=click.Path(dir_okay=False), default=None)
@click.option("--audit", is_flag=True, help="check run invariants; violations exit 4")
@click.option("--fast", is_flag=True, help="compiled model-B path (no trace/audit)")
def run_cmd(graph_path, model, policy, seed, p, max_steps, detect_cycles, cycle_window, trace_path, audit, fast):
    """Run a scheduling model on a stored graph until it stops."""
    graph = mio.load_graph(graph_path)
    if fast:
        if model != "B" or trace_path or audit or policy:
            raise click.UsageError("--fast runs plain model B without trace or audit")
        started = time.perf_counter()
        result = run_to_stability_fast(graph)
        elapsed = time.perf_counter() - started
        auditor = None
    else:
        auditor = InvariantAuditor(graph) if audit else None
        limits = RunLimits(max_steps=max_steps, detect_cycles=detect_cycles, cycle_window=cycle_window)
        started = time.perf_counter()
        try:
            result = run(
                graph,
                model=model,
                policy=policy,
                seed=seed,
                p=p,
                limits=limits,
                record_trace=bool(trace_path),
                hooks=auditor,
            )
        except ValueError as exc:
            raise click.UsageError(str(exc)) from exc
        elapsed = time.perf_counter() - started
    summary = {
        "outcome": result.outcome,
        "steps": result.step_count,
        "switches": result.switch_count,
        "ties": result.tie_count,
        "model": result.model,
        "policy": result.policy,
        "seconds": round(elapsed, 6),
    }
    if result.cycle_period is not None:
        summary["cycle_period"] = result.cycle_period
    click.echo(json.dumps(summary, sort_keys=True))
    if trace_path:
        mio.write_trace(trace_path, graph, result)
    if auditor is not None:
        report = auditor.finish(result.final_state)
        if not report.ok:
            for violation in report.violations:
                click.echo(f"AUDIT: {violation}", err=True)
            sys.exit(EXIT_FAIL)
    sys.exit(_OUTCOME_CODES[result.outcome])


def _check(label: str, ok: bool, detail: str = "") -> bool:
    status = "PASS" if ok else "FAIL"
    suffix = f" ({detail})" if detail else ""
    click.echo(f"{status} {label}{suffix}")
    return ok


@cli.command()
@click.option("--kind", type=click.Choice(["adversarial", "benevolent", "recursive"]), required=True)
@click.option("--m", type=int, default=None)
@click.option("--r", type=int, default=None)
@click.option("--depth", type=int, default=2, show_default=True)
def verify(kind, m, r, depth):
    """Rebuild an instance and check the behavior it certifies."""
    instance = _build_instance(kind, m, r, depth)
    ok = True
    if kind == "adversarial":
        replay = replay_schedule(instance.graph, instance.schedule, model="A")
        want = 2 * instance.m * (instance.m + 1)
        bound = 2 * instance.arena_size**2 // 9
        ok &= _check("schedule replays", replay.valid, replay.reason or "")
        ok &= _check(
            "switch count",
            replay.switch_count == want,
            f"{replay.switch_count} vs {want}",
        )
        ok &= _check(
            "quadratic bound",
            replay.switch_count >= bound,
            f"{replay.switch_count} >= {bound}",
        )
        ok &= _check(
            "final state stable",
            switchable_set(instance.graph, replay.final_state).shape[0] == 0,
        )
    else:
        started = time.perf_counter()
        result, counts = run_to_stability_fast(instance.graph, return_counts=True)
        elapsed = time.perf_counter() - started
        ok &= _check("run stabilizes", result.outcome == "stable", f"{elapsed:.2f}s")
        base_counts = counts[instance.chain.base]
        ok &= _check(
            "every chain base switches once per traversal",
            bool(np.all(base_counts == instance.traversals)),
            f"traversals={instance.traversals}",
        )
        if instance.depth == 1:
            ok &= _check(
                "arena size matches closed form",
                instance.arena_size == predicted_arena_size(instance.r),
                f"{instance.arena_size} vs {predicted_arena_size(instance.r)}",
            )
            ok &= _check(
                "switch count matches closed form",
                result.switch_count == predicted_switch_count(instance.r),
                f"{result.switch_count} vs {predicted_switch_count(instance.r)}",
            )
    sys.exit(EXIT_OK if ok else EXIT_FAIL)


@cli.command()
@click.option("--rs", type=str, default="2,4,8,16", show_default=True, help="comma-separated ratios")
@click.option("--out", type=click.Path(dir_okay=False), default=None, help="CSV output path")
def stats(rs, out):
    """Growth table of the benevolent family, with the log-log slope."""
    try:
        ratios = [int(tok) for tok in rs.split(",") if tok.strip()]
    except ValueError as exc:
        raise click.UsageError(f"--rs wants comma-separated integers: {exc}") from exc
    if not ratios:
        raise click.UsageError("--rs is empty")
    rows = []
    for r in ratios:
        instance = _build_instance("benevolent", None, r, 1)
        started = time.perf_counter()
        result = run_to_stability_fast(instance.graph)
        elapsed = time.perf_counter() - started
        rows.append(
            {
                "r": r,
                "arena_nodes": instance.arena_size,
                "edges": instance.graph.num_edges,
                "switches": result.switch_count,
                "seconds": round(elapsed, 3),
            }
        )
        click.echo(json.dumps(rows[-1], sort_keys=True))
    if len(rows) >= 2:
        slope = mio.fit_log_slope([row["arena_nodes"] for row in rows], [row["switches"] for row in rows])
        click.echo(f"log-log slope of switches against arena nodes: {slope:.4f}")
    if out:
        mio.write_growth_csv(out, rows)


def main() -> None:
    """Console entry point mapping usage errors to exit code 1."""
    try:
        cli.main(standalone_mode=False)
    except click.ClickException as exc:
        exc.show()
        sys.exit(EXIT_USAGE)
    except click.Abort:
        sys.exit(EXIT_USAGE)


if __name__ == "__main__":
    main()
