"""Batch runner for parameter sweeps and the multi-pair tables.

A :class:`Scenario` is a base configuration (see :mod:`fdalloc.config`), an
optional sweep that rewrites some configuration entries as an affine function
of the sweep value, and the methods to run on each resulting system. Running
it gives a :class:`ResultTable` with one row per sweep value and method;
:func:`emit` writes it as CSV.
"""
from __future__ import annotations

import copy
import csv
import json
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import BACKEND, config
from .baselines import OracleGrid, ebop, grid_oracle, split_oracle
from .errors import DomainError, InfeasibleError
from .fd_problem import solve_fd

METHODS = ("optimal", "ebop", "oracle")
PAIR_FIELDS = ("bw", "p1", "p2", "rate1", "rate2", "q1", "q2")


@dataclass(frozen=True)
class SweepTarget:
    """Configuration entry set to ``offset + scale * x`` for sweep value ``x``."""

    path: str
    scale: float = 1.0
    offset: float = 0.0


@dataclass(frozen=True)
class Sweep:
    label: str
    values: tuple
    targets: tuple

    def validate(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.size == 0:
            raise DomainError(f"sweep {self.label!r} has no values")
        if not np.all(np.isfinite(vals)):
            raise DomainError(f"sweep {self.label!r} has non-finite values")
        d = np.diff(vals)
        if vals.size > 1 and not (np.all(d > 0) or np.all(d < 0)):
            raise DomainError(f"sweep {self.label!r} values must be strictly monotone")
        if not self.targets:
            raise DomainError(f"sweep {self.label!r} sets no configuration entry")


@dataclass(frozen=True)
class SolverOptions:
    """Polyblock settings; ``eps=None`` uses the configuration's ``eps``."""

    eps: float | None = None
    max_iter: int = 100_000
    reduce: bool = False
    rule: str = "absolute"


@dataclass(frozen=True)
class Scenario:
    name: str
    base: dict
    sweep: Sweep | None = None
    methods: tuple = ("optimal",)
    solver: SolverOptions = SolverOptions()
    description: str = ""

    def validate(self):
        if self.sweep is not None:
            self.sweep.validate()
        bad = [m for m in self.methods if m not in METHODS]
        if bad or not self.methods:
            raise DomainError(f"unknown methods {bad}; choose from {METHODS}")
        config.normalize(self.base)

    def points(self):
        """``(x, normalized configuration)`` per sweep value."""
        base = config.normalize(self.base)
        if self.sweep is None:
            yield math.nan, base
            return
        for x in self.sweep.values:
            cfg = copy.deepcopy(base)
            for t in self.sweep.targets:
                config.set_path(cfg, t.path, t.offset + t.scale * float(x))
            yield float(x), cfg


@dataclass
class ResultTable:
    """Rows of one scenario run.

    ``rows`` holds flat dictionaries (numbers and strings); ``traces`` keeps
    each optimal solve's upper-bound and incumbent sequences, aligned with
    ``rows`` (``None`` for the other methods).
    """

    scenario: str
    columns: list
    rows: list
    traces: list = field(default_factory=list)
    meta: dict = field(default_factory=dict)


def columns_for(K: int) -> list:
    cols = ["scenario", "x", "method", "status", "K"]
    for k in range(1, K + 1):
        cols += [f"{f}_{k}" for f in PAIR_FIELDS]
    return cols + ["weighted_sum", "iterations", "gap", "eps", "error"]


def make_row(name, x, method, K, alloc=None, report=None, eps=math.nan, status="OK", error=""):
    row = {"scenario": name, "x": x, "method": method, "status": status, "K": K}
    for k in range(K):
        vals = dict.fromkeys(PAIR_FIELDS, math.nan)
        if alloc is not None:
            vals.update(bw=alloc.bw[k], p1=alloc.p1[k], p2=alloc.p2[k], rate1=alloc.rates[k],
                        rate2=alloc.rates[K + k], q1=alloc.psnr[k], q2=alloc.psnr[K + k])
        row.update({f"{f}_{k + 1}": float(v) for f, v in vals.items()})
    row["weighted_sum"] = float(alloc.weighted_sum_quality) if alloc is not None else math.nan
    row["iterations"] = report.iterations if report is not None else 0
    row["gap"] = float(report.gap) if report is not None else math.nan
    row["eps"] = eps
    row["error"] = error
    return row


def _run_one(task):
    name, x, cfg, method, opts = task
    spec = config.to_spec(cfg)
    K = spec.K
    t0 = time.perf_counter()
    trace = None
    eps = opts.eps if opts.eps is not None else spec.eps
    try:
        if method == "optimal":
            alloc, report = solve_fd(spec, eps=eps, max_iter=opts.max_iter, reduce=opts.reduce, rule=opts.rule)
            status = report.status.value
            row = make_row(name, x, method, K, alloc, report, eps, status=status)
            trace = (list(report.upper_bounds), list(report.best_values))
        elif method == "ebop":
            row = make_row(name, x, method, K, ebop(spec))
        else:
            alloc = grid_oracle(spec, OracleGrid()) if K <= 2 else split_oracle(spec)
            row = make_row(name, x, method, K, alloc)
    except InfeasibleError as exc:
        row = make_row(name, x, method, K, eps=eps if method == "optimal" else math.nan,
                       status="Infeasible", error=f"{exc.check}: {exc.detail}")
    return row, trace, time.perf_counter() - t0


def run_scenario(scenario: Scenario, workers: int | None = None, methods=None,
                 eps: float | None = None) -> ResultTable:
    """Solve every sweep point of ``scenario`` with each method.

    Parameters
    ----------
    workers : int, optional
        Size of the process pool; defaults to the CPU count. With one worker
        everything runs in this process.
    methods : sequence of str, optional
        Override the scenario's methods.
    eps : float, optional
        Override the polyblock tolerance.

    An infeasible point is recorded as a row with status ``Infeasible`` and
    the run continues. Rows come back in sweep order, methods in the order
    given.
    """
    if methods is not None:
        scenario = Scenario(scenario.name, scenario.base, scenario.sweep, tuple(methods),
                            scenario.solver, scenario.description)
    if eps is not None:
        s = scenario.solver
        scenario = Scenario(scenario.name, scenario.base, scenario.sweep, scenario.methods,
                            SolverOptions(eps, s.max_iter, s.reduce, s.rule), scenario.description)
    scenario.validate()
    tasks = [(scenario.name, x, cfg, m, scenario.solver)
             for x, cfg in scenario.points() for m in scenario.methods]
    workers = min(workers or os.cpu_count() or 1, len(tasks))
    if workers <= 1:
        results = [_run_one(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_one, tasks))
    K = len(config.normalize(scenario.base)["pairs"])
    table = ResultTable(scenario.name, columns_for(K), [r[0] for r in results], [r[1] for r in results])
    table.meta = {
        "scenario": scenario.name,
        "description": scenario.description,
        "backend": BACKEND,
        "solver": {"eps": scenario.solver.eps, "max_iter": scenario.solver.max_iter,
                   "reduce": scenario.solver.reduce, "rule": scenario.solver.rule},
        "sweep": scenario.sweep.label if scenario.sweep else None,
        "wall_time_s": [round(r[2], 6) for r in results],
        "notes": ["rows with status Infeasible are excluded from comparisons"]
        if any(r[0]["status"] == "Infeasible" for r in results) else [],
    }
    return table


# ---------------------------------------------------------------- output

def _fmt(v):
    if isinstance(v, float):
        return repr(v)
    return v


def emit(table: ResultTable, out_dir, formats=("csv",)) -> list:
    """Write ``table`` under ``out_dir``; returns the paths written.

    ``"csv"`` gives ``<scenario>.csv`` with one row per result, ``"long"``
    gives ``<scenario>_long.csv`` with columns ``scenario, x, series, value``
    where ``series`` is ``<method>:<column>``. A ``<scenario>.meta.json`` with
    the solver settings and wall times always accompanies them; wall times
    stay out of the CSV files so that reruns reproduce them byte for byte.

    Raises
    ------
    OSError
        With the offending path in the message.
    """
    if not table.rows:
        raise DomainError("nothing to emit: the result table is empty")
    bad = [f for f in formats if f not in ("csv", "long")]
    if bad:
        raise DomainError(f"unknown output formats {bad}")
    out_dir = Path(out_dir)
    written = []

    def write(path, header, rows):
        try:
            with open(path, "w", newline="") as fh:
                w = csv.writer(fh, quoting=csv.QUOTE_MINIMAL, lineterminator="\n")
                w.writerow(header)
                w.writerows(rows)
        except OSError as exc:
            raise OSError(exc.errno, f"cannot write {path}: {exc.strerror}") from exc
        written.append(path)

    try:
        out_dir.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(exc.errno, f"cannot create {out_dir}: {exc.strerror}") from exc
    if "csv" in formats:
        write(out_dir / f"{table.scenario}.csv", table.columns,
              [[_fmt(r[c]) for c in table.columns] for r in table.rows])
    if "long" in formats:
        skip = {"scenario", "x", "method", "status", "error"}
        rows = []
        for r in table.rows:
            for c in table.columns:
                if c not in skip:
                    rows.append([table.scenario, _fmt(r["x"]), f"{r['method']}:{c}", _fmt(float(r[c]))])
        write(out_dir / f"{table.scenario}_long.csv", ["scenario", "x", "series", "value"], rows)
    meta = out_dir / f"{table.scenario}.meta.json"
    try:
        meta.write_text(json.dumps(table.meta, indent=2) + "\n")
    except OSError as exc:
        raise OSError(exc.errno, f"cannot write {meta}: {exc.strerror}") from exc
    written.append(meta)
    return written


def read_csv(path) -> list:
    """Rows of a file written by :func:`emit`, numbers parsed back to float/int."""
    out = []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            parsed = {}
            for k, v in row.items():
                if k in ("scenario", "method", "status", "error", "series"):
                    parsed[k] = v
                elif k in ("K", "iterations"):
                    parsed[k] = int(v)
                else:
                    parsed[k] = float(v)
            out.append(parsed)
    return out
