"""Reference allocations: equal bandwidth with optimal power, and grid search.

Both work pair by pair. Once a pair's bandwidth is fixed its two powers only
affect that pair's two qualities, so the weighted sum splits into per-pair
terms. Within a pair the best powers have one user at peak: scaling both
powers up by the same factor raises both ``V`` values, so any interior point
is beaten by a point on one of the two edges ``P1 = P1max`` or ``P2 = P2max``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize, minimize_scalar

from ._backend import kernels
from .errors import DomainError, InfeasibleError
from .fd_problem import Allocation, PairSpec, SystemSpec, _ch, _link
from .quality import KBIT, ln_v_min

EDGE_SCAN = 64
POWER_XTOL = 1e-8
ORACLE_MAX_PAIRS = 2


@dataclass(frozen=True)
class OracleGrid:
    """Resolution and bounds of the brute-force search.

    Parameters
    ----------
    power_points : int
        Samples along each peak-power edge.
    box_points : int
        Samples per power axis of the full ``[0, P1max] x [0, P2max]`` box;
        0 skips the box.
    bw_points : int
        Samples of pair 1's share of the band (two pairs only).
    bw_bounds : (float, float), optional
        Range of pair 1's bandwidth in Hz; defaults to the whole band.
    """

    power_points: int = 401
    box_points: int = 0
    bw_points: int = 101
    bw_bounds: tuple | None = None

    def __post_init__(self):
        for name in ("power_points", "bw_points"):
            if getattr(self, name) < 2:
                raise DomainError(f"{name} must be at least 2")
        if self.box_points and self.box_points < 2:
            raise DomainError("box_points must be 0 or at least 2")


class _PairEval:
    """Vectorized qualities of one pair at a fixed bandwidth."""

    def __init__(self, pr: PairSpec, spec: SystemSpec):
        self.pr, self.spec = pr, spec
        self.z = _ch(pr)
        self.links = [_link(pr, 0), _link(pr, 1)]
        self.models = [pr.quality_1, pr.quality_2]
        self.weights = [pr.w1, pr.w2]
        self.ln_u = [ln_v_min(q, th, spec.tc) for q, (th, _, _) in zip(self.models, self.links)]

    def ln_v(self, i, p_own, p_other, bw):
        theta, mu, _ = self.links[i]
        return kernels.ln_v_array(p_own, p_other, bw, theta, mu, self.spec.n0, self.spec.tc, *self.z)

    def value(self, p1, p2, bw):
        """Weighted pair quality; ``-inf`` where a floor is missed."""
        p1, p2 = np.broadcast_arrays(np.asarray(p1, float), np.asarray(p2, float))
        total = np.zeros(p1.shape)
        ok = np.ones(p1.shape, dtype=bool)
        for i, (own, other) in enumerate(((p1, p2), (p2, p1))):
            lv = self.ln_v(i, own, other, bw)
            ok &= lv >= self.ln_u[i] * (1 - 1e-12)
            q = self.models[i]
            if self.weights[i] > 0:
                with np.errstate(divide="ignore"):
                    total += self.weights[i] * (q.a * np.log(lv / (self.links[i][0] * self.spec.tc * KBIT)) + q.b)
        return np.where(ok, total, -np.inf)

    def edge_interval(self, pinned, bw):
        """Range of the free power on the edge where user ``pinned`` is at peak.

        The free user's own floor sets the lower end, the pinned user's floor
        (hurt by the free user's leakage) the upper end. ``None`` if empty.
        """
        free = 1 - pinned
        pmax_pin = self.links[pinned][2]
        theta_f, mu_f, pmax_f = self.links[free]
        theta_p, mu_p, _ = self.links[pinned]
        n0, tc = self.spec.n0, self.spec.tc
        lo = kernels.power_for_ln_v(self.ln_u[free], pmax_pin, bw, theta_f, mu_f, n0, tc, *self.z, pmax_f)
        hi = kernels.interferer_power_for_ln_v(self.ln_u[pinned], pmax_pin, bw, theta_p, mu_p,
                                               n0, tc, *self.z, pmax_f)
        if not math.isfinite(lo) or hi < 0 or lo > hi:
            return None
        return lo, hi

    def edge_powers(self, pinned, free_power):
        pmax = self.links[pinned][2]
        free_power = np.asarray(free_power, float)
        pin = np.full(free_power.shape, pmax)
        return (pin, free_power) if pinned == 0 else (free_power, pin)


def _best_on_edge(ev: _PairEval, pinned: int, bw: float, n_scan: int, xtol: float):
    span = ev.edge_interval(pinned, bw)
    if span is None:
        return None
    lo, hi = span
    if hi - lo <= xtol:
        x = 0.5 * (lo + hi)
        return float(ev.value(*ev.edge_powers(pinned, x), bw)), x
    grid = np.linspace(lo, hi, n_scan)
    vals = ev.value(*ev.edge_powers(pinned, grid), bw)
    j = int(np.argmax(vals))
    best_x, best_v = grid[j], vals[j]
    # the scan isolates the basin; a bounded Brent/golden search polishes it
    a, b = grid[max(j - 1, 0)], grid[min(j + 1, n_scan - 1)]
    res = minimize_scalar(lambda x: -float(ev.value(*ev.edge_powers(pinned, x), bw)),
                          bounds=(a, b), method="bounded", options={"xatol": xtol})
    if res.success and -res.fun > best_v:
        best_x, best_v = float(res.x), -float(res.fun)
    return float(best_v), float(best_x)


def best_pair_powers(pr: PairSpec, spec: SystemSpec, bw: float,
                     n_scan: int = EDGE_SCAN, xtol: float = POWER_XTOL):
    """Best ``(value, p1, p2)`` of one pair in band ``bw``; ``None`` if its floors cannot be met.

    ``value`` is the pair's share of the weighted sum.
    """
    ev = _PairEval(pr, spec)
    best = None
    for pinned in (0, 1):
        hit = _best_on_edge(ev, pinned, bw, n_scan, xtol)
        if hit is None:
            continue
        p1, p2 = ev.edge_powers(pinned, hit[1])
        cand = (hit[0], float(p1), float(p2), pinned)
        if best is None or cand[0] > best[0]:
            best = cand
    return best


def ebop(spec: SystemSpec) -> Allocation:
    """Equal bandwidth per pair, best powers within each pair.

    Raises
    ------
    InfeasibleError
        ``check="ebop-floor"`` if some pair cannot meet its quality floors
        with ``B / K`` of bandwidth.
    """
    K = spec.K
    bw = spec.total_bw / K
    p1, p2, pats = np.empty(K), np.empty(K), []
    for k, pr in enumerate(spec.pairs):
        hit = best_pair_powers(pr, spec, bw)
        if hit is None:
            raise InfeasibleError("ebop-floor", f"pair {k} cannot meet its quality floors with B/K = {bw:.6g} Hz",
                                  pair=k)
        _, p1[k], p2[k], pat = hit
        pats.append(pat)
    alloc = Allocation.evaluate(spec, np.full(K, bw), p1, p2, patterns=pats)
    alloc.info["method"] = "ebop"
    return alloc


def _pair_table(ev: _PairEval, bw: float, grid: OracleGrid):
    """Best grid value of one pair at ``bw`` with its powers and a local step bound."""
    best = (-math.inf, math.nan, math.nan, 0.0)
    for pinned in (0, 1):
        pmax_free = ev.links[1 - pinned][2]
        xs = np.linspace(0.0, pmax_free, grid.power_points)
        vals = ev.value(*ev.edge_powers(pinned, xs), bw)
        j = int(np.argmax(vals))
        if vals[j] > best[0]:
            nb = vals[[max(j - 1, 0), min(j + 1, len(xs) - 1)]]
            step = float(np.max(np.abs(vals[j] - nb[np.isfinite(nb)]), initial=0.0))
            p1, p2 = ev.edge_powers(pinned, xs[j])
            best = (float(vals[j]), float(p1), float(p2), step)
    if grid.box_points:
        a = np.linspace(0.0, ev.links[0][2], grid.box_points)
        b = np.linspace(0.0, ev.links[1][2], grid.box_points)
        P1, P2 = np.meshgrid(a, b, indexing="ij")
        vals = ev.value(P1, P2, bw)
        i, j = np.unravel_index(int(np.argmax(vals)), vals.shape)
        if vals[i, j] > best[0]:
            best = (float(vals[i, j]), float(P1[i, j]), float(P2[i, j]), best[3])
    return best


def grid_oracle(spec: SystemSpec, grid: OracleGrid | None = None) -> Allocation:
    """Brute-force optimum over a grid, for one or two pairs.

    With one pair the whole band is used (every ``V`` grows with bandwidth).
    With two pairs pair 1's bandwidth runs over ``grid.bw_points`` values and
    pair 2 takes the rest. Powers are sampled on both peak-power edges, and on
    the full box when ``grid.box_points`` is set. ``info["grid_bound"]`` is the
    largest change of the objective between the winning sample and its grid
    neighbours, a practical measure of the grid's resolution error.

    Raises
    ------
    DomainError
        For more than two pairs.
    InfeasibleError
        If no grid point meets every quality floor.
    """
    grid = grid or OracleGrid()
    K = spec.K
    if K > ORACLE_MAX_PAIRS:
        raise DomainError(f"grid oracle supports at most {ORACLE_MAX_PAIRS} pairs, got {K}")
    evs = [_PairEval(pr, spec) for pr in spec.pairs]
    if K == 1:
        v, p1, p2, step = _pair_table(evs[0], spec.total_bw, grid)
        if not math.isfinite(v):
            raise InfeasibleError("oracle-empty", "no grid point meets the quality floors")
        alloc = Allocation.evaluate(spec, [spec.total_bw], [p1], [p2])
        alloc.info.update(method="oracle", grid_bound=step)
        return alloc

    lo, hi = grid.bw_bounds or (0.0, spec.total_bw)
    splits = np.linspace(lo, hi, grid.bw_points)
    rows = []
    for b1 in splits:
        t1 = _pair_table(evs[0], b1, grid) if b1 > 0 else (-math.inf,) * 4
        b2 = spec.total_bw - b1
        t2 = _pair_table(evs[1], b2, grid) if b2 > 0 else (-math.inf,) * 4
        rows.append((t1[0] + t2[0], t1, t2))
    totals = np.array([r[0] for r in rows])
    j = int(np.argmax(totals))
    if not math.isfinite(totals[j]):
        raise InfeasibleError("oracle-empty", "no grid point meets the quality floors")
    _, t1, t2 = rows[j]
    nb = totals[[max(j - 1, 0), min(j + 1, len(totals) - 1)]]
    bw_step = float(np.max(np.abs(totals[j] - nb[np.isfinite(nb)]), initial=0.0))
    b1 = float(splits[j])
    alloc = Allocation.evaluate(spec, [b1, spec.total_bw - b1], [t1[1], t2[1]], [t1[2], t2[2]])
    alloc.info.update(method="oracle", grid_bound=bw_step + t1[3] + t2[3])
    return alloc


def split_oracle(spec: SystemSpec, bw_points: int = 301, polish: bool = True) -> Allocation:
    """Global reference for any number of pairs by searching the bandwidth split.

    Each pair's best value ``F_k(b)`` at bandwidth ``b`` comes from
    :func:`best_pair_powers`. The split maximizing ``sum_k F_k(b_k)`` with
    ``sum_k b_k = B`` is found by dynamic programming over a grid of
    ``bw_points`` bandwidth levels and then polished by a local simplex
    search on the continuous split.

    Raises
    ------
    InfeasibleError
        If no grid split meets every quality floor.
    """
    K, B = spec.K, spec.total_bw
    levels = np.linspace(0.0, B, bw_points)
    table = np.full((K, bw_points), -np.inf)
    for k, pr in enumerate(spec.pairs):
        for j, b in enumerate(levels[1:], 1):
            hit = best_pair_powers(pr, spec, float(b))
            if hit is not None:
                table[k, j] = hit[0]
    # best[k][j]: pairs 0..k sharing j grid steps; arg[k][j]: steps given to pair k
    best = table[0].copy()
    args = [np.arange(bw_points)]
    for k in range(1, K):
        nxt = np.full(bw_points, -np.inf)
        arg = np.zeros(bw_points, dtype=int)
        for j in range(bw_points):
            cand = best[j::-1] + table[k, :j + 1]
            i = int(np.argmax(cand))
            nxt[j], arg[j] = cand[i], i
        best = nxt
        args.append(arg)
    if not math.isfinite(best[-1]):
        raise InfeasibleError("oracle-empty", "no bandwidth split on the grid meets every quality floor")
    steps = np.zeros(K, dtype=int)
    j = bw_points - 1
    for k in range(K - 1, -1, -1):
        steps[k] = args[k][j] if k else j
        j -= steps[k]
    split = levels[steps]

    def total(x):
        b = np.append(x, B - x.sum())
        if np.any(b <= 0):
            return math.inf
        hits = [best_pair_powers(pr, spec, float(bk)) for pr, bk in zip(spec.pairs, b)]
        if any(h is None for h in hits):
            return math.inf
        return -sum(h[0] for h in hits)

    if polish and K > 1:
        res = minimize(total, split[:-1], method="Nelder-Mead",
                       options={"xatol": 1e-3, "fatol": 1e-10, "maxiter": 2000})
        if res.fun < total(split[:-1]):
            split = np.append(res.x, B - res.x.sum())
    hits = [best_pair_powers(pr, spec, float(bk)) for pr, bk in zip(spec.pairs, split)]
    alloc = Allocation.evaluate(spec, split, [h[1] for h in hits], [h[2] for h in hits],
                                patterns=[h[3] for h in hits])
    alloc.info.update(method="split-oracle")
    return alloc
