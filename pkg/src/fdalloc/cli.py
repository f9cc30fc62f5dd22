"""Command line: ``fdalloc solve``, ``fdalloc scenario``, ``fdalloc list-scenarios``."""
from __future__ import annotations

import json
import math
import sys
from pathlib import Path

import click

from . import __version__, config, harness, scenarios
from .baselines import ebop
from .errors import DomainError, InfeasibleError
from .fd_problem import solve_fd

EXIT_INFEASIBLE = 2
EXIT_INVALID = 3


def _clean(obj):
    # JSON has no inf/nan; emit them as strings so the output stays parseable
    if isinstance(obj, float) and not math.isfinite(obj):
        return str(obj)
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    return obj


def _fail(code, kind, message, **extra):
    click.echo(json.dumps(_clean({"error": kind, "message": message, **extra})), err=True)
    sys.exit(code)


@click.group()
@click.version_option(__version__)
def main():
    """Bandwidth and power allocation for full-duplex video pairs."""


@main.command()
@click.argument("config_file", type=click.Path(exists=True, dir_okay=False))
@click.option("--eps", type=float, default=None, help="Polyblock gap tolerance in dB.")
@click.option("--method", type=click.Choice(["optimal", "ebop", "both"]), default="optimal")
@click.option("--max-iter", type=int, default=100_000, show_default=True)
@click.option("--reduce/--no-reduce", default=False, show_default=True,
              help="Shrink polyblock vertices against the incumbent.")
@click.option("--out-dir", type=click.Path(file_okay=False), default=None,
              help="Also write the result (and the iteration trace) here.")
@click.option("--format", "fmt", type=click.Choice(["csv", "long"]), default="csv", show_default=True)
def solve(config_file, eps, method, max_iter, reduce, out_dir, fmt):
    """Solve the system described by CONFIG_FILE and print the result as JSON.

    Exits with status 2 and a JSON error on stderr when the quality floors
    cannot be met.
    """
    try:
        cfg = config.load(config_file)
        spec = config.to_spec(cfg)
    except (DomainError, KeyError, ValueError) as exc:
        _fail(EXIT_INVALID, "invalid-config", str(exc), path=str(config_file))
    out = {"K": spec.K}
    name = Path(config_file).stem
    rows, traces = [], []
    try:
        if method in ("optimal", "both"):
            alloc, report = solve_fd(spec, eps=eps, max_iter=max_iter, reduce=reduce)
            out["optimal"] = {**alloc.as_dict(), "status": report.status.value, "iterations": report.iterations,
                              "gap": report.gap, "eps": report.eps}
            rows.append(harness.make_row(name, math.nan, "optimal", spec.K, alloc, report, report.eps,
                                         status=report.status.value))
            traces.append(report)
        if method in ("ebop", "both"):
            alloc = ebop(spec)
            out["ebop"] = alloc.as_dict()
            rows.append(harness.make_row(name, math.nan, "ebop", spec.K, alloc))
    except InfeasibleError as exc:
        _fail(EXIT_INFEASIBLE, "infeasible", exc.detail, check=exc.check, pair=exc.pair)
    if out_dir:
        table = harness.ResultTable(name, harness.columns_for(spec.K), rows,
                                    meta={"config": str(config_file), "method": method})
        harness.emit(table, out_dir, (fmt,))
        for report in traces:
            report.write_trace_csv(Path(out_dir) / f"{name}_trace.csv")
    click.echo(json.dumps(_clean(out), indent=2))


@main.command()
@click.argument("name_or_file")
@click.option("--eps", type=float, default=None, help="Override the scenario's tolerance (dB).")
@click.option("--method", type=click.Choice(["optimal", "ebop", "both"]), default=None,
              help="Override the scenario's methods.")
@click.option("--out-dir", type=click.Path(file_okay=False), default="results", show_default=True)
@click.option("--format", "fmt", type=click.Choice(["csv", "long"]), default="csv", show_default=True)
@click.option("--workers", type=int, default=None, help="Worker processes (default: CPU count).")
def scenario(name_or_file, eps, method, out_dir, fmt, workers):
    """Run a built-in scenario by name, or one described in a file."""
    try:
        if Path(name_or_file).is_file():
            sc = scenarios.from_mapping(config.load(name_or_file))
        else:
            sc = scenarios.get(name_or_file)
        methods = None if method is None else (("optimal", "ebop") if method == "both" else (method,))
        table = harness.run_scenario(sc, workers=workers, methods=methods, eps=eps)
    except (DomainError, KeyError, ValueError) as exc:
        _fail(EXIT_INVALID, "invalid-scenario", str(exc))
    paths = harness.emit(table, out_dir, (fmt,))
    for p in paths:
        click.echo(str(p))


@main.command("list-scenarios")
def list_scenarios():
    """List the built-in scenarios."""
    for name in scenarios.names():
        sc = scenarios.get(name)
        click.echo(f"{name:<12} {sc.description}")


if __name__ == "__main__":
    main()
