"""Serialization: canonical graph JSON, run traces, stats CSV, DOT export.

Graphs serialize to a canonical JSON document — keys sorted, no spaces,
edges stored once as ``[lo, hi]`` pairs in lexicographic order, trailing
newline — so equal graphs produce byte-identical files and a stable
:func:`graph_digest`.  Traces are newline-delimited JSON with a header
(graph digest and run parameters), one record per step, and a footer with
the outcome, suitable for streaming and for :func:`minoritysim.engine.
replay_schedule`.
"""

from __future__ import annotations

import csv
import hashlib
import json
from pathlib import Path

import numpy as np

from minoritysim.engine import RunResult
from minoritysim.graph import Graph

GRAPH_FORMAT = "minority-graph/1"
TRACE_FORMAT = "minority-trace/1"


def _canonical_edges(graph: Graph) -> list[list[int]]:
    lo = np.minimum(graph.edges_u, graph.edges_v).astype(np.int64)
    hi = np.maximum(graph.edges_u, graph.edges_v).astype(np.int64)
    order = np.lexsort((hi, lo))
    return np.stack([lo[order], hi[order]], axis=1).tolist()


def graph_payload(graph: Graph) -> dict:
    """The digest-covered part of a graph document."""
    return {
        "format": GRAPH_FORMAT,
        "num_nodes": int(graph.num_nodes),
        "num_colors": int(graph.num_colors),
        "colors": graph.init_color.astype(int).tolist(),
        "pinned": np.flatnonzero(graph.pinned).astype(int).tolist(),
        "edges": _canonical_edges(graph),
    }


def _dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":")) + "\n"


def graph_digest(graph: Graph) -> str:
    """Stable sha256 of the canonical graph document (metadata excluded)."""
    return hashlib.sha256(_dumps(graph_payload(graph)).encode()).hexdigest()


def save_graph(path, graph: Graph, *, metadata: dict | None = None) -> None:
    """Write the canonical graph document, optionally with a metadata block."""
    doc = graph_payload(graph)
    if metadata:
        doc["metadata"] = metadata
    Path(path).write_text(_dumps(doc))


def load_graph(path, *, with_metadata: bool = False):
    """Read a graph document; optionally also return its metadata block."""
    doc = json.loads(Path(path).read_text())
    if doc.get("format") != GRAPH_FORMAT:
        raise ValueError(f"not a {GRAPH_FORMAT} document: {path}")
    n = int(doc["num_nodes"])
    edges = np.asarray(doc["edges"], dtype=np.int64).reshape(-1, 2)
    pinned = np.zeros(n, dtype=bool)
    pinned[np.asarray(doc["pinned"], dtype=np.int64)] = True
    graph = Graph.from_edges(
        n,
        edges[:, 0],
        edges[:, 1],
        np.asarray(doc["colors"], dtype=np.uint8),
        pinned=pinned,
        num_colors=int(doc["num_colors"]),
    )
    if with_metadata:
        return graph, doc.get("metadata", {})
    return graph


# ---------------------------------------------------------------------------
# Traces


def write_trace(path, graph: Graph, result: RunResult) -> None:
    """Write a recorded run as newline-delimited JSON."""
    if result.trace is None:
        raise ValueError("the run was not recorded; pass record_trace=True to run()")
    with open(path, "w") as fh:
        fh.write(
            _dumps(
                {
                    "type": "header",
                    "format": TRACE_FORMAT,
                    "graph": graph_digest(graph),
                    "model": result.model,
                    "policy": result.policy,
                    "seed": result.seed,
                    "p": result.p,
                }
            )
        )
        for i, nodes in enumerate(result.trace):
            fh.write(_dumps({"type": "step", "i": i, "nodes": list(nodes)}))
        fh.write(
            _dumps(
                {
                    "type": "footer",
                    "outcome": result.outcome,
                    "steps": result.step_count,
                    "switches": result.switch_count,
                    "ties": result.tie_count,
                }
            )
        )


def read_trace(path) -> dict:
    """Read a trace file into ``{"header": ..., "steps": [...], "footer": ...}``."""
    header = None
    footer = None
    steps: list[list[int]] = []
    with open(path) as fh:
        for line in fh:
            rec = json.loads(line)
            kind = rec.get("type")
            if kind == "header":
                if rec.get("format") != TRACE_FORMAT:
                    raise ValueError(f"not a {TRACE_FORMAT} file: {path}")
                header = rec
            elif kind == "step":
                steps.append(rec["nodes"])
            elif kind == "footer":
                footer = rec
    if header is None:
        raise ValueError(f"trace file has no header: {path}")
    return {"header": header, "steps": steps, "footer": footer}


# ---------------------------------------------------------------------------
# Stats


GROWTH_FIELDS = ("r", "arena_nodes", "edges", "switches", "seconds")


def write_growth_csv(path, rows: list[dict]) -> None:
    """Write growth-table rows (dicts with :data:`GROWTH_FIELDS` keys)."""
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=GROWTH_FIELDS)
        writer.writeheader()
        for row in rows:
            writer.writerow({k: row[k] for k in GROWTH_FIELDS})


def read_growth_csv(path) -> list[dict]:
    """Read growth-table rows back with numeric types restored."""
    with open(path, newline="") as fh:
        rows = []
        for row in csv.DictReader(fh):
            rows.append(
                {
                    k: (float(v) if k == "seconds" else int(v))
                    for k, v in row.items()
                    if k in GROWTH_FIELDS
                }
            )
        return rows


def fit_log_slope(xs, ys) -> float:
    """Least-squares slope of log(y) against log(x)."""
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if xs.shape[0] < 2:
        raise ValueError("need at least two points to fit a slope")
    return float(np.polyfit(np.log(xs), np.log(ys), 1)[0])


# ---------------------------------------------------------------------------
# DOT export


def to_dot(graph: Graph, *, max_nodes: int = 5000) -> str:
    """Graphviz DOT text (small graphs only; the layout cost explodes)."""
    if graph.num_nodes > max_nodes:
        raise ValueError(f"refusing DOT export beyond {max_nodes} nodes")
    fills = {0: "white", 1: "black", 2: "gray"}
    lines = ["graph minority {", "  node [style=filled];"]
    for v in range(graph.num_nodes):
        c = int(graph.init_color[v])
        fill = fills.get(c, "gray")
        font = "white" if c == 1 else "black"
        shape = ", shape=box" if bool(graph.pinned[v]) else ""
        lines.append(f'  n{v} [fillcolor={fill}, fontcolor={font}{shape}];')
    lo = np.minimum(graph.edges_u, graph.edges_v)
    hi = np.maximum(graph.edges_u, graph.edges_v)
    order = np.lexsort((hi, lo))
    for u, v in zip(lo[order], hi[order]):
        lines.append(f"  n{int(u)} -- n{int(v)};")
    lines.append("}")
    return "\n".join(lines) + "\n"
