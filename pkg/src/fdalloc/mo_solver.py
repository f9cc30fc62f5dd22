"""Polyblock outer approximation for monotonic optimization.

Maximizes an increasing objective over ``G ∩ J`` where ``G`` is a compact
normal set (closed downward) and ``J = {y >= u}`` is conormal. The feasible
set is enclosed in a polyblock, the union of boxes ``[0, v]`` over a proper
vertex set. Each iteration takes the vertex with the largest objective,
projects it onto the upper boundary of ``G`` along the ray from ``u``, and
cuts away the part of the polyblock that lies strictly above the projection.
The best vertex bounds the optimum from above and the best projected point
from below; the loop stops when the two meet.
"""
from __future__ import annotations

import csv
import enum
import math
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Any, Callable

import numpy as np

from .errors import ContractError

DOMINANCE_TOL = 1e-12


class Status(str, enum.Enum):
    CONVERGED = "Converged"
    INFEASIBLE = "Infeasible"
    ITERATION_CAP = "IterationCap"


@dataclass
class Projection:
    """Result of projecting a point onto the upper boundary of ``G``.

    ``point`` equals ``lam * (y - u) + u``; ``payload`` carries whatever the
    problem needs to recover a physical solution (e.g. an allocation).
    """

    lam: float
    point: np.ndarray
    payload: Any = None


class MoProblem(ABC):
    """Interface the solver needs from a monotonic problem.

    Subclasses supply the objective, the projection, the origin ``u`` and an
    enclosing vertex. ``initial_vertex`` may raise ``InfeasibleError``.
    """

    dimension: int

    @abstractmethod
    def origin(self) -> np.ndarray: ...

    @abstractmethod
    def initial_vertex(self) -> np.ndarray: ...

    @abstractmethod
    def objective(self, y: np.ndarray) -> float: ...

    def objective_many(self, ys: np.ndarray) -> np.ndarray:
        return np.array([self.objective(y) for y in ys], dtype=float)

    @abstractmethod
    def project(self, y: np.ndarray) -> Projection: ...

    def reduce(self, v: np.ndarray, gamma: float) -> np.ndarray | None:
        """Optionally shrink vertex ``v`` given the incumbent value ``gamma``.

        Must return a vertex ``w <= v`` whose box still holds every feasible
        point of ``[0, v]`` with objective above ``gamma``, or ``None`` when
        there is no such point. The default keeps ``v``.
        """
        return v

    def is_feasible(self, y: np.ndarray, tol: float = 1e-9) -> bool:
        y = np.asarray(y, dtype=float)
        if np.any(y < self.origin() * (1 - tol)):
            return False
        return self.project(y).lam >= 1.0 - tol


def _geq(a: np.ndarray, b: np.ndarray, tol: float = DOMINANCE_TOL) -> np.ndarray:
    """Componentwise ``a >= b`` up to a relative tolerance, broadcasting over rows."""
    return np.all(a >= b - tol * np.maximum(1.0, np.abs(b)), axis=-1)


def remove_improper(vertices) -> np.ndarray:
    """Keep only the maximal vertices under the componentwise order.

    Vertices equal up to the tolerance collapse to the first occurrence.
    """
    v = np.atleast_2d(np.asarray(vertices, dtype=float))
    if len(v) <= 1:
        return v.copy()
    idx = np.arange(len(v))
    keep = np.ones(len(v), dtype=bool)
    for i in range(len(v)):
        above = _geq(v, v[i])
        above[i] = False
        twin = above & _geq(v[i], v)
        if (above & ~twin).any() or (twin & (idx < i)).any():
            keep[i] = False
    return v[keep]


def cut_polyblock(vertices, t_star, x, skip_tight: bool = False) -> np.ndarray:
    """Replace every vertex of ``t_star`` by its ``n`` shrunken copies.

    Copy ``j`` of vertex ``v`` has coordinate ``j`` lowered to ``x_j``. With
    ``skip_tight`` only coordinates where ``x_j < v_j`` are shrunk, since
    copies with ``x_j == v_j`` coincide with ``v`` and would undo the cut.

    Raises
    ------
    ContractError
        If ``x`` exceeds some vertex of ``t_star`` in any coordinate.
    """
    v = np.atleast_2d(np.asarray(vertices, dtype=float))
    ts = np.atleast_2d(np.asarray(t_star, dtype=float))
    x = np.asarray(x, dtype=float)
    if len(ts) and not np.all(_geq(ts, x)):
        raise ContractError("projection point exceeds a vertex being cut")
    in_star = np.zeros(len(v), dtype=bool)
    for w in ts:
        in_star |= np.all(v == w, axis=1)
    new = []
    for w in ts:
        for j in range(len(x)):
            if skip_tight and not x[j] < w[j]:
                continue
            c = w.copy()
            c[j] = x[j]
            new.append(c)
    if not new:
        return v[~in_star] if len(ts) else v.copy()
    return np.vstack([v[~in_star], np.array(new)])


@dataclass
class SolverReport:
    """Outcome and trace of one polyblock run.

    ``upper_bounds[j]`` is the objective of the vertex selected at iteration
    ``j``; ``best_values[j]`` the incumbent after it. ``best_payload`` is the
    payload of the projection that produced the incumbent.
    """

    best_point: np.ndarray | None
    best_value: float
    best_payload: Any
    upper_bounds: list = field(default_factory=list)
    best_values: list = field(default_factory=list)
    vertex_counts: list = field(default_factory=list)
    gap: float = math.inf
    iterations: int = 0
    status: Status = Status.ITERATION_CAP
    eps: float = 1e-3
    rule: str = "absolute"

    def trace_rows(self):
        for j, (ub, cbv, nv) in enumerate(zip(self.upper_bounds, self.best_values, self.vertex_counts), 1):
            yield {"iteration": j, "upper_bound": ub, "best_value": cbv, "vertices": nv}

    def write_trace_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=["iteration", "upper_bound", "best_value", "vertices"])
            w.writeheader()
            for row in self.trace_rows():
                w.writerow({k: repr(v) if isinstance(v, float) else v for k, v in row.items()})


def _gap_closed(ub, cbv, eps, rule):
    if rule == "absolute":
        return abs(ub - cbv) <= eps
    if rule == "relative":
        return (1.0 + eps) * cbv >= ub
    raise ValueError(f"unknown termination rule {rule!r}")


def _drop_dominated(fresh, kept):
    """Proper subset of ``fresh`` that no vertex of ``kept`` dominates."""
    fresh = remove_improper(fresh)
    if len(kept) and len(fresh):
        fresh = fresh[[not _geq(kept, w).any() for w in fresh]]
    return fresh


def solve(problem: MoProblem, eps: float = 1e-3, max_iter: int = 100_000,
          rule: str = "absolute", reduce: bool = False, prune: bool = False,
          on_iteration: Callable | None = None) -> SolverReport:
    """Run the polyblock outer approximation on ``problem``.

    Parameters
    ----------
    problem : MoProblem
    eps : float
        Gap tolerance, in objective units for ``rule="absolute"``.
    max_iter : int
        Budget of projections; on exhaustion the report has status ``IterationCap``.
    rule : {"absolute", "relative"}
        Stop when ``|UB - CBV| <= eps`` or when ``(1 + eps) * CBV >= UB``.
    reduce : bool
        Pass new vertices through ``problem.reduce`` against the incumbent.
        A vertex selected after the incumbent improved is reduced again
        before it is projected.
    prune : bool
        Drop vertices that cannot beat the incumbent by more than ``eps``.
    on_iteration : callable, optional
        Called as ``on_iteration(j, old_vertices, new_vertices, x)`` after each cut.

    Notes
    -----
    With ``reduce`` or ``prune`` the polyblock only encloses feasible points
    that beat the incumbent; without them it encloses the whole feasible set.

    Raises
    ------
    InfeasibleError
        Propagated from ``problem.initial_vertex()``.
    """
    if not eps > 0:
        raise ValueError("eps must be positive")
    _gap_closed(0.0, 0.0, eps, rule)  # validates rule
    u = np.asarray(problem.origin(), dtype=float)
    v0 = np.asarray(problem.initial_vertex(), dtype=float)
    if v0.shape != u.shape or not np.all(_geq(v0, u)):
        raise ContractError("initial vertex must dominate the origin")

    verts = v0[None, :].copy()
    vals = problem.objective_many(verts)
    stamp = np.full(1, -math.inf)   # incumbent value each vertex was reduced against
    report = SolverReport(best_point=None, best_value=-math.inf, best_payload=None, eps=eps, rule=rule)
    j = 0

    def finish(status, gap):
        report.status = status
        report.gap = gap
        return report

    while True:
        if len(verts) == 0:
            # every remaining box was shown unable to beat the incumbent
            return finish(Status.CONVERGED, 0.0)
        k = int(np.argmax(vals))
        y = verts[k]
        if reduce and stamp[k] < report.best_value:
            w = problem.reduce(y, report.best_value)
            keep = np.ones(len(verts), dtype=bool)
            keep[k] = False
            if w is not None and not np.array_equal(w, y):
                w = np.asarray(w, dtype=float)
                if _geq(verts[keep], w).any():
                    w = None
            if w is None:
                verts, vals, stamp = verts[keep], vals[keep], stamp[keep]
            else:
                verts[k] = w
                vals[k] = problem.objective(w)
                stamp[k] = report.best_value
            continue

        if j >= max_iter:
            return finish(Status.ITERATION_CAP, report.gap)
        j += 1
        ub = float(vals[k])
        proj = problem.project(y)

        if proj.lam >= 1.0:
            report.best_point, report.best_value, report.best_payload = y.copy(), ub, proj.payload
        else:
            x = np.asarray(proj.point, dtype=float)
            fx = problem.objective(x)
            if fx >= report.best_value:
                report.best_point, report.best_value, report.best_payload = x.copy(), fx, proj.payload
        report.upper_bounds.append(ub)
        report.best_values.append(report.best_value)
        report.vertex_counts.append(len(verts))
        report.iterations = j
        report.gap = ub - report.best_value

        if proj.lam >= 1.0 or _gap_closed(ub, report.best_value, eps, rule):
            return finish(Status.CONVERGED, report.gap)

        # vertices to cut: at or above x everywhere, strictly above where x moved
        moved = x < y
        star = _geq(verts, x) & np.all(verts[:, moved] > x[moved], axis=1)
        old = verts
        n_kept = int((~star).sum())
        grown = cut_polyblock(verts, verts[star], x, skip_tight=True)
        kept, fresh = grown[:n_kept], grown[n_kept:]
        if reduce and len(fresh):
            shrunk = [problem.reduce(w, report.best_value) for w in fresh]
            fresh = np.array([w for w in shrunk if w is not None], dtype=float).reshape(-1, len(u))
        # fresh vertices can be dominated by surviving ones, never the reverse
        fresh = _drop_dominated(fresh, kept)
        verts = np.vstack([kept, fresh])
        vals = np.concatenate([vals[~star], problem.objective_many(fresh) if len(fresh) else []])
        stamp = np.concatenate([stamp[~star], np.full(len(fresh), report.best_value if reduce else -math.inf)])
        if prune:
            margin = eps if rule == "absolute" else eps * abs(report.best_value)
            keep = vals > report.best_value + margin
            verts, vals, stamp = verts[keep], vals[keep], stamp[keep]
        if on_iteration is not None:
            on_iteration(j, old, verts, x)
