"""Command-line front end: solve, eval-ami, and bench subcommands.

The CLI is a thin client over the same runner the HTTP service uses, so a
solve here and a solve against the service produce identical reports (up to
wall-clock fields).
"""

from __future__ import annotations

import csv
import io
import json
import sys
import time
from pathlib import Path

import click

from . import __version__
from .graphs import (
    EdgeListParseError,
    Graph,
    GraphError,
    connected_components,
    largest_connected_component,
    parse_edge_list,
)
from .ipmodel import build_sparse_model, write_lp_text
from .partitions import (
    AMI_NORMALIZERS,
    PartitionError,
    aligned_label_pairs,
    ami,
    parse_partition_file,
)
from .runner import MODES, SolveOptions, run_solve

_PROGRESS_HEADER = "level,open_nodes,incumbent,best_bound,gap,elapsed_s"


def _load_graph(path: Path, fmt: str, weighted: bool) -> Graph:
    try:
        text = path.read_text()
    except OSError as exc:
        raise click.ClickException(f"cannot read {path}: {exc}") from exc
    try:
        return parse_edge_list(text, weighted=weighted, fmt=fmt)
    except (EdgeListParseError, GraphError) as exc:
        raise click.ClickException(f"{path}: {exc}") from exc


def _emit_report(report: dict, output: str) -> None:
    if output == "json":
        click.echo(json.dumps(report, indent=2))
    elif output == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf)
        fields = [
            "n", "m", "gamma", "mode", "modularity", "best_bound", "gap",
            "proven_optimal", "runtime_s", "termination_reason", "communities",
        ]
        writer.writerow(fields)
        row = {**report}
        row["communities"] = "|".join(
            " ".join(str(v) for v in comm) for comm in report["communities"]
        )
        writer.writerow([row[f] for f in fields])
        click.echo(buf.getvalue().rstrip("\n"))
    else:
        click.echo(f"n={report['n']} m={report['m']} gamma={report['gamma']}")
        click.echo(f"modularity      {report['modularity']}")
        click.echo(f"best bound      {report['best_bound']}")
        click.echo(f"gap             {report['gap']}")
        click.echo(f"proven optimal  {report['proven_optimal']}")
        click.echo(f"termination     {report['termination_reason']}")
        for idx, comm in enumerate(report["communities"]):
            click.echo(f"community {idx}: {' '.join(str(v) for v in comm)}")


solve_options = [
    click.option("--gamma", type=float, default=1.0, show_default=True,
                 help="Resolution parameter."),
    click.option("--mode", type=click.Choice(MODES), default="exact", show_default=True),
    click.option("--gap-tolerance", type=float, default=0.0, show_default=True,
                 help="Relative optimality gap accepted in approximate mode."),
    click.option("--time-limit", "time_limit_s", type=float, default=None,
                 help="Wall-clock limit in seconds."),
    click.option("--delta", type=float, default=None,
                 help="Perturbation subtracted from separated entries for the "
                      "heuristic bound; defaults to 2/(2m)."),
    click.option("--seed", type=int, default=0, show_default=True,
                 envvar="MODMAX_SEED", help="Heuristic random seed."),
    click.option("--restarts", type=int, default=3, show_default=True,
                 help="Heuristic restarts per bound."),
    click.option("--workers", type=int, default=1, show_default=True,
                 envvar="MODMAX_WORKERS",
                 help="Concurrent node bounds per tree level."),
    click.option("--separation/--no-separation", default=False,
                 help="Add violated triangle inequalities lazily before branching."),
]


def _with_solve_options(fn):
    for opt in reversed(solve_options):
        fn = opt(fn)
    return fn


@click.group()
@click.version_option(version=__version__, prog_name="modmax")
def main():
    """Guaranteed modularity maximization for small and mid-size graphs."""


@main.command("solve")
@click.argument("input_path", type=click.Path(path_type=Path))
@click.option("--format", "fmt", type=click.Choice(["edgelist", "pairs"]),
              default="edgelist", show_default=True)
@click.option("--weighted", is_flag=True, help="Read the third column as weights.")
@click.option("--lcc-only", is_flag=True,
              help="Solve only the largest connected component.")
@click.option("--output", type=click.Choice(["json", "csv", "plain"]),
              default="json", show_default=True)
@click.option("--progress", is_flag=True,
              help="Stream per-level CSV progress rows to stderr.")
@click.option("--dump-lp", type=click.Path(path_type=Path), default=None,
              help="Write the root model in LP text format and continue.")
@_with_solve_options
def cmd_solve(input_path, fmt, weighted, lcc_only, output, progress, dump_lp, **opts):
    """Solve one graph and print the report."""
    graph = _load_graph(input_path, fmt, weighted)
    n_components = len(connected_components(graph)) if graph.n else 0
    if lcc_only and n_components > 1:
        original_n = graph.n
        graph, _ = largest_connected_component(graph)
        click.echo(
            f"warning: --lcc-only kept {graph.n} of {original_n} nodes",
            err=True,
        )
    elif not lcc_only and n_components > 1:
        click.echo(
            f"warning: input has {n_components} connected components; "
            "solving each and concatenating (use --lcc-only to restrict)",
            err=True,
        )

    try:
        options = SolveOptions(**opts)
    except ValueError as exc:
        raise click.ClickException(str(exc)) from exc

    if dump_lp is not None:
        model = build_sparse_model(graph, options.gamma)
        with open(dump_lp, "w") as fh:
            write_lp_text(model, None, fh)

    progress_cb = None
    if progress:
        click.echo(_PROGRESS_HEADER, err=True)

        def progress_cb(row):
            click.echo(
                f"{row.level},{row.open_nodes},{row.incumbent!r},"
                f"{row.best_bound!r},{row.gap!r},{row.elapsed_s:.3f}",
                err=True,
            )

    try:
        report = run_solve(graph, options, progress=progress_cb)
    except GraphError as exc:
        raise click.ClickException(str(exc)) from exc
    _emit_report(report, output)
    if (
        options.mode == "exact"
        and report["termination_reason"] == "time_limit"
        and not report["proven_optimal"]
    ):
        sys.exit(2)


@main.command("eval-ami")
@click.argument("partition_a", type=click.Path(path_type=Path))
@click.argument("partition_b", type=click.Path(path_type=Path))
@click.option("--normalizer", type=click.Choice(AMI_NORMALIZERS),
              default="arithmetic", show_default=True)
def cmd_eval_ami(partition_a, partition_b, normalizer):
    """AMI similarity of two partition files (one `node community` per line)."""
    try:
        map_a = parse_partition_file(partition_a.read_text())
        map_b = parse_partition_file(partition_b.read_text())
        labels_a, labels_b = aligned_label_pairs(map_a, map_b)
        value = ami(labels_a, labels_b, average_method=normalizer)
    except OSError as exc:
        raise click.ClickException(str(exc)) from exc
    except PartitionError as exc:
        raise click.ClickException(str(exc)) from exc
    click.echo(f"{value:.6f}")


@main.command("bench")
@click.argument("corpus_dir", type=click.Path(path_type=Path, file_okay=False))
@click.option("--format", "fmt", type=click.Choice(["edgelist", "pairs"]),
              default="edgelist", show_default=True)
@click.option("--weighted", is_flag=True)
@_with_solve_options
def cmd_bench(corpus_dir, fmt, weighted, **opts):
    """Solve every file in a directory; emit one CSV row per graph."""
    try:
        options = SolveOptions(**opts)
    except ValueError as exc:
        raise click.ClickException(str(exc)) from exc

    writer = csv.writer(sys.stdout)
    writer.writerow(
        ["name", "n", "m", "modularity", "best_bound", "gap",
         "proven_optimal", "runtime_s", "error"]
    )
    files = sorted(p for p in corpus_dir.iterdir() if p.is_file())
    for path in files:
        try:
            graph = parse_edge_list(path.read_text(), weighted=weighted, fmt=fmt)
            report = run_solve(graph, options)
            writer.writerow(
                [path.name, report["n"], report["m"], report["modularity"],
                 report["best_bound"], report["gap"], report["proven_optimal"],
                 report["runtime_s"], ""]
            )
        except (OSError, EdgeListParseError, GraphError, PartitionError) as exc:
            writer.writerow([path.name, "", "", "", "", "", "", "", str(exc)])


if __name__ == "__main__":
    main()
