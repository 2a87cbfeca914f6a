"""Command-line pipeline: monolith JSON in, microservice partition report out.

Example::

    cogcn --input app.json --clusters 6 --output report.json --dot clusters.dot
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from .gcn import LossWeights
from .ingest import AppGraph, EmptyGraphError, MonolithFormatError, MonolithValidationError
from .ingest import build_graph, parse_monolith
from .metrics import evaluate_partition
from .synth import PlantedSpec, planted_graph, planted_to_monolith, synthetic_monolith
from .trainer import DivergenceError, TrainConfig, TrainState, fit, rank_outliers, write_loss_csv

SCHEMA_VERSION = 1

EXIT_OK = 0
EXIT_BAD_INPUT = 2
EXIT_DIVERGED = 3
EXIT_BAD_FLAGS = 4

log = logging.getLogger("cogcn")


class FlagError(ValueError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_BAD_FLAGS, f"{self.prog}: error: {message}\n")


def _alphas(text: str) -> LossWeights:
    try:
        parts = [float(x) for x in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected three comma-separated numbers, got {text!r}")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError(f"expected three comma-separated numbers, got {text!r}")
    return LossWeights(*parts)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="cogcn", description="Partition a monolith into candidate microservices with CO-GCN.")
    p.add_argument("--input", required=True, type=Path, help="monolith description (JSON)")
    p.add_argument("--clusters", required=True, type=int, help="number of microservices K")
    p.add_argument("--embedding-dim", type=int, default=32)
    p.add_argument("--hidden-dim", type=int, default=64)
    p.add_argument("--alpha", type=_alphas, default=LossWeights(0.1, 0.1, 0.8),
                   help="loss weights a1,a2,a3 (default 0.1,0.1,0.8)")
    p.add_argument("--pretrain-iters", type=int, default=250)
    p.add_argument("--iters", type=int, default=500)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--symmetrize", action=argparse.BooleanOptionalAction, default=True,
                   help="treat calls as undirected for propagation and reconstruction")
    p.add_argument("--top-outliers", type=int, default=5)
    p.add_argument("--ablation", choices=("no-cluster", "no-outlier"), action="append", default=[],
                   help="disable the clustering loss or the outlier weighting (repeatable)")
    p.add_argument("--output", type=Path, help="report path (default: stdout)")
    p.add_argument("--dot", type=Path, help="also write a Graphviz rendering of the clusters")
    p.add_argument("--loss-csv", type=Path, help="also write the per-iteration loss history")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def config_from_args(args: argparse.Namespace) -> TrainConfig:
    if args.top_outliers < 0:
        raise FlagError("--top-outliers must be non-negative")
    try:
        return TrainConfig(
            n_clusters=args.clusters,
            hidden_dim=args.hidden_dim,
            embed_dim=args.embedding_dim,
            pretrain_iters=args.pretrain_iters,
            main_iters=args.iters,
            weights=args.alpha,
            seed=args.seed,
            symmetrize=args.symmetrize,
            ablation_no_cluster="no-cluster" in args.ablation,
            ablation_no_outlier="no-outlier" in args.ablation,
        )
    except ValueError as exc:
        raise FlagError(str(exc)) from exc


def build_report(graph: AppGraph, state: TrainState, config: TrainConfig, top_n: int = 5,
                 pruned: list[str] | None = None, loss_history_path: str | None = None) -> dict:
    names = graph.node_names
    labels = state.labels
    k = config.n_clusters
    clusters = {str(c): [names[i] for i in np.flatnonzero(labels == c)] for c in range(k)}
    outliers = [
        {
            "position": pos,
            "class": names[r.node],
            "kind": r.kind,
            "rank": r.rank,
            "o_s": r.o_s,
            "o_a": r.o_a,
        }
        for pos, r in enumerate(rank_outliers(state.O_s, state.O_a, top_n), start=1)
    ]
    metrics = evaluate_partition(graph.adjacency, labels, k).to_dict()
    return {
        "schema_version": SCHEMA_VERSION,
        "clusters": clusters,
        "outliers": outliers,
        "metrics": metrics,
        "config": {**config.to_dict(), "top_outliers": top_n},
        "graph": {
            "n_classes": graph.n_nodes,
            "n_entrypoints": len(graph.entrypoint_names),
            "n_features": graph.n_features,
            "n_call_edges": int(graph.adjacency.sum()),
            "pruned_classes": list(pruned or []),
        },
        "scores": {
            names[i]: {"o_s": float(state.O_s[i]), "o_a": float(state.O_a[i])}
            for i in range(graph.n_nodes)
        },
        "loss_history_path": loss_history_path,
    }


def dumps_report(report: dict) -> str:
    return json.dumps(report, sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def _dot_id(name: str) -> str:
    return json.dumps(name, ensure_ascii=False)


def export_dot(report: dict, graph: AppGraph) -> str:
    """Render clusters as Graphviz subgraphs; outliers get a red double outline."""
    cluster_of = {name: int(c) for c, members in report["clusters"].items() for name in members}
    flagged = {o["class"]: o["position"] for o in report["outliers"]}
    lines = ["digraph microservices {", "  compound=true;", "  node [shape=box];"]
    intra: dict[int, list[str]] = {int(c): [] for c in report["clusters"]}
    cross = []
    names = graph.node_names
    for i, j in zip(*np.nonzero(graph.adjacency)):
        a, b = names[i], names[j]
        edge = f"{_dot_id(a)} -> {_dot_id(b)}"
        if cluster_of[a] == cluster_of[b]:
            intra[cluster_of[a]].append(edge)
        else:
            cross.append(edge)
    for c in sorted(intra):
        lines.append(f"  subgraph cluster_{c} {{")
        lines.append(f'    label="service {c}";')
        for name in report["clusters"][str(c)]:
            if name in flagged:
                lines.append(
                    f'    {_dot_id(name)} [color=red, peripheries=2, outlier=true, '
                    f'xlabel="outlier #{flagged[name]}"];'
                )
            else:
                lines.append(f"    {_dot_id(name)};")
        lines.extend(f"    {e};" for e in intra[c])
        lines.append("  }")
    lines.extend(f"  {e} [style=dashed, color=gray40];" for e in cross)
    lines.append("}")
    return "\n".join(lines) + "\n"


def run_decompose(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        config = config_from_args(args)
    except FlagError as exc:
        print(f"cogcn: invalid flags: {exc}", file=sys.stderr)
        return EXIT_BAD_FLAGS

    try:
        raw = parse_monolith(args.input)
        graph = build_graph(raw)
    except (OSError, MonolithFormatError, MonolithValidationError, EmptyGraphError) as exc:
        print(f"cogcn: invalid input: {exc}", file=sys.stderr)
        return EXIT_BAD_INPUT
    if config.n_clusters > graph.n_nodes:
        print(f"cogcn: invalid flags: --clusters {config.n_clusters} exceeds the "
              f"{graph.n_nodes} traced classes", file=sys.stderr)
        return EXIT_BAD_FLAGS
    pruned = [c for c in raw.classes if c not in set(graph.node_names)]
    log.info("graph: %d classes (%d pruned), %d entrypoints, F=%d",
             graph.n_nodes, len(pruned), len(graph.entrypoint_names), graph.n_features)

    try:
        state = fit(graph, config)
    except DivergenceError as exc:
        print(f"cogcn: training diverged: {exc}", file=sys.stderr)
        return EXIT_DIVERGED

    loss_path = None
    if args.loss_csv is not None:
        write_loss_csv(state.loss_history, args.loss_csv)
        loss_path = str(args.loss_csv)
    report = build_report(graph, state, config, args.top_outliers, pruned, loss_path)
    report["config"]["input"] = str(args.input)
    text = dumps_report(report)
    if args.output is None:
        sys.stdout.write(text)
    else:
        args.output.write_text(text, encoding="utf-8")
    if args.dot is not None:
        args.dot.write_text(export_dot(report, graph), encoding="utf-8")
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    return run_decompose(argv)


def synth_main(argv: list[str] | None = None) -> int:
    """Write a synthetic monolith JSON (planted fixture or sized random app)."""
    p = argparse.ArgumentParser(prog="cogcn-synth", description=synth_main.__doc__)
    p.add_argument("--output", type=Path, required=True)
    p.add_argument("--seed", type=int, default=0)
    sub = p.add_subparsers(dest="kind", required=True)
    pl = sub.add_parser("planted", help="planted-partition graph with injected outliers")
    pl.add_argument("--blocks", type=int, default=4)
    pl.add_argument("--block-size", type=int, default=15)
    pl.add_argument("--p-in", type=float, default=0.3)
    pl.add_argument("--p-out", type=float, default=0.02)
    pl.add_argument("--struct-outliers", type=int, default=3)
    pl.add_argument("--attr-outliers", type=int, default=3)
    sz = sub.add_parser("sized", help="random app with given class/entrypoint counts")
    sz.add_argument("--classes", type=int, required=True)
    sz.add_argument("--entrypoints", type=int, required=True)
    sz.add_argument("--blocks", type=int, required=True)
    args = p.parse_args(argv)
    if args.kind == "planted":
        spec = PlantedSpec(
            n_blocks=args.blocks, nodes_per_block=args.block_size, p_in=args.p_in,
            p_out=args.p_out, n_struct_outliers=args.struct_outliers,
            n_attr_outliers=args.attr_outliers, seed=args.seed,
        )
        doc = planted_to_monolith(planted_graph(spec))
    else:
        doc = synthetic_monolith(args.classes, args.entrypoints, args.blocks, seed=args.seed)
    args.output.write_text(json.dumps(doc, indent=1) + "\n", encoding="utf-8")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
