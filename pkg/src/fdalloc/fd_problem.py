"""Weighted video-quality maximization over full-duplex pairs.

Pair ``k`` shares one band of width ``B_k`` between its two users, who
transmit simultaneously; each receiver sees its partner's transmission as
self-interference scaled by the partner's suppression factor. The decision
variables are the bandwidths and the ``2K`` powers; the objective is the
weighted sum of the users' PSNR.

In the monotonic reformulation the variables are ``Y_m = V`` of each user,
ordered user 1 of every pair first, then user 2 (``m = (i - 1) K + k``). The
achievable ``Y`` form a normal set because every ``V`` rises with bandwidth
and with a joint scaling of a pair's powers; the PSNR floors turn into the
conormal constraint ``Y >= u``.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from . import mo_solver
from ._backend import kernels
from .ec_model import ChannelModel, LinkRadioParams
from .errors import DomainError, InfeasibleError, NoFeasiblePatternError
from .quality import KBIT, QualityModel, ln_v_min

WEIGHT_TOL = 1e-9
BW_CEILING_FACTOR = 10.0
POWER_TOL = 1e-9
LN_V_LIMIT = 700.0
BIG = 1e300
REDUCE_ROUNDS = 6
REDUCE_STOP = 1e-6


@dataclass(frozen=True, kw_only=True)
class PairSpec:
    """Everything that describes one full-duplex pair.

    ``mu_i`` is the suppression factor of user ``i``'s transmitter as seen by
    its own receiver, so user 1 is disturbed by ``mu_2 * p2`` and vice versa.
    """

    theta_1: float
    theta_2: float
    quality_1: QualityModel
    quality_2: QualityModel
    channel: ChannelModel
    w1: float
    w2: float
    mu_1: float = 0.1
    mu_2: float = 0.1
    p1_max: float = 5.0
    p2_max: float = 5.0

    def __post_init__(self):
        for name in ("theta_1", "theta_2", "p1_max", "p2_max"):
            val = getattr(self, name)
            if not (val > 0 and math.isfinite(val)):
                raise DomainError(f"{name} must be positive and finite, got {val}")
        for name in ("mu_1", "mu_2"):
            # zero is accepted: it models perfect self-interference cancellation
            if not 0 <= getattr(self, name) <= 1:
                raise DomainError(f"{name} must lie in [0, 1], got {getattr(self, name)}")
        for name in ("w1", "w2"):
            if not 0 <= getattr(self, name) <= 1:
                raise DomainError(f"{name} must lie in [0, 1], got {getattr(self, name)}")

    def radio(self, user: int, n0: float, tc: float) -> LinkRadioParams:
        """Radio parameters of ``user``'s receiver (1 or 2)."""
        if user == 1:
            return LinkRadioParams(self.theta_1, self.mu_2, n0, tc)
        return LinkRadioParams(self.theta_2, self.mu_1, n0, tc)


@dataclass(frozen=True)
class SystemSpec:
    """System-wide constants and the list of pairs."""

    pairs: tuple
    total_bw: float
    n0: float = 1e-6
    tc: float = 1e-3
    eps: float = 1e-3

    def __post_init__(self):
        object.__setattr__(self, "pairs", tuple(self.pairs))
        if not self.pairs:
            raise DomainError("need at least one pair")
        if not (self.total_bw > 0 and math.isfinite(self.total_bw)):
            raise DomainError(f"total_bw must be positive, got {self.total_bw}")
        if not (self.n0 > 0 and self.tc > 0 and self.eps > 0):
            raise DomainError("n0, tc and eps must be positive")
        wsum = sum(p.w1 + p.w2 for p in self.pairs)
        if abs(wsum - 1.0) > WEIGHT_TOL:
            raise DomainError(f"weights must sum to 1, got {wsum!r}")

    @property
    def K(self) -> int:
        return len(self.pairs)


@dataclass
class Allocation:
    """Bandwidths and powers per pair with the rates and qualities they give.

    ``rates`` and ``psnr`` have length ``2K`` with all user-1 entries first.
    ``patterns[k]`` is 0 when user 1 of pair ``k`` is at peak power, 1 when
    user 2 is. ``info`` holds free-form notes from whoever produced it.
    """

    bw: np.ndarray
    p1: np.ndarray
    p2: np.ndarray
    rates: np.ndarray
    psnr: np.ndarray
    weighted_sum_quality: float
    patterns: tuple = field(default=())
    info: dict = field(default_factory=dict)

    @classmethod
    def evaluate(cls, spec: SystemSpec, bw, p1, p2, patterns=()) -> "Allocation":
        bw, p1, p2 = (np.asarray(x, dtype=float) for x in (bw, p1, p2))
        K = spec.K
        rates = np.empty(2 * K)
        psnr = np.empty(2 * K)
        total = 0.0
        for k, pr in enumerate(spec.pairs):
            for i, (own, other, q, w) in enumerate(((p1[k], p2[k], pr.quality_1, pr.w1),
                                                    (p2[k], p1[k], pr.quality_2, pr.w2))):
                radio = pr.radio(i + 1, spec.n0, spec.tc)
                lv = _ln_v(pr, i, own, other, bw[k], spec)
                r = lv / (radio.theta * spec.tc)
                rates[i * K + k] = r
                psnr[i * K + k] = q.a * math.log(r / KBIT) + q.b if r > 0 else -math.inf
                if w > 0:
                    total += w * psnr[i * K + k]
        return cls(bw, p1, p2, rates, psnr, total, tuple(patterns))

    def as_dict(self) -> dict:
        return {
            "bw": self.bw.tolist(), "p1": self.p1.tolist(), "p2": self.p2.tolist(),
            "rates": self.rates.tolist(), "psnr": self.psnr.tolist(),
            "weighted_sum_quality": self.weighted_sum_quality, "patterns": list(self.patterns),
        }


# ---------------------------------------------------------------- kernels glue

def _ch(pr: PairSpec):
    return pr.channel.mean_gain, int(pr.channel.quadrature_order), bool(pr.channel.deterministic)


def _link(pr: PairSpec, i: int):
    """(theta, mu of the interferer, peak power) for user ``i`` (0-based) of a pair."""
    if i == 0:
        return pr.theta_1, pr.mu_2, pr.p1_max
    return pr.theta_2, pr.mu_1, pr.p2_max


def _ln_v(pr, i, p_own, p_other, bw, spec):
    theta, mu, _ = _link(pr, i)
    return kernels.ln_v(float(p_own), float(p_other), float(bw), theta, mu, spec.n0, spec.tc, *_ch(pr))


def _pair_args(pr: PairSpec, spec: SystemSpec):
    return (pr.theta_1, pr.theta_2, pr.mu_1, pr.mu_2, pr.p1_max, pr.p2_max,
            spec.n0, spec.tc, *_ch(pr), BW_CEILING_FACTOR * spec.total_bw)


def _max_ln_v(pr: PairSpec, spec: SystemSpec, i: int, t_partner: float, bw: float) -> float:
    """Largest ``ln V`` of user ``i`` in band ``bw`` while the partner keeps ``ln V >= t_partner``.

    One power sits at its peak: user ``i``'s own if the partner can still
    reach its target, otherwise the partner's, with user ``i`` backing off
    until the partner just makes it. ``-inf`` when neither works.
    """
    theta_i, mu_i_other, pmax_i = _link(pr, i)
    theta_j, mu_j_other, pmax_j = _link(pr, 1 - i)
    z = _ch(pr)
    q = kernels.power_for_ln_v(t_partner, pmax_i, bw, theta_j, mu_j_other, spec.n0, spec.tc, *z, pmax_j)
    if math.isfinite(q):
        return kernels.ln_v(pmax_i, q, bw, theta_i, mu_i_other, spec.n0, spec.tc, *z)
    p_i = kernels.interferer_power_for_ln_v(t_partner, pmax_j, bw, theta_j, mu_j_other,
                                            spec.n0, spec.tc, *z, pmax_i)
    if p_i < 0:
        return -math.inf
    return kernels.ln_v(p_i, pmax_j, bw, theta_i, mu_i_other, spec.n0, spec.tc, *z)


# ---------------------------------------------------------------- objective

class _Coords:
    """Per-coordinate constants of ``Y``, flattened in solver order."""

    def __init__(self, spec: SystemSpec):
        K = spec.K
        self.K = K
        self.theta = np.empty(2 * K)
        self.w = np.empty(2 * K)
        self.a = np.empty(2 * K)
        self.b = np.empty(2 * K)
        self.ln_u = np.empty(2 * K)
        for k, pr in enumerate(spec.pairs):
            for i, (th, w, q) in enumerate(((pr.theta_1, pr.w1, pr.quality_1),
                                            (pr.theta_2, pr.w2, pr.quality_2))):
                m = i * K + k
                self.theta[m], self.w[m], self.a[m], self.b[m] = th, w, q.a, q.b
                self.ln_u[m] = ln_v_min(q, th, spec.tc)
        self.scale = self.theta * spec.tc * KBIT   # ln V per kbit/s
        self.active = self.w > 0

    def terms(self, y: np.ndarray) -> np.ndarray:
        """Weighted PSNR of each coordinate; ``-inf`` where ``Y <= 1``."""
        y = np.asarray(y, dtype=float)
        out = np.zeros(y.shape)
        with np.errstate(divide="ignore", invalid="ignore"):
            lv = np.log(y)
            q = self.a * np.log(lv / self.scale) + self.b
        q = np.where(y > 1.0, q, -np.inf)
        np.copyto(out, self.w * q, where=np.broadcast_to(self.active, y.shape))
        return out


def phi(Y, spec: SystemSpec) -> float:
    """Weighted-sum PSNR (dB) of the operating point ``Y``.

    Coordinates at or below 1 carry zero rate, for which the log model is
    undefined; they contribute ``-inf`` unless their weight is zero.
    """
    return float(_Coords(spec).terms(np.asarray(Y, dtype=float)).sum())


# ---------------------------------------------------------------- problem

class FullDuplexProblem(mo_solver.MoProblem):
    """:class:`~fdalloc.mo_solver.MoProblem` view of a :class:`SystemSpec`.

    Parameters
    ----------
    spec : SystemSpec
    projection : {"pairwise", "enumerate"}
        ``"pairwise"`` finds each pair's peak-power user directly (exactly one
        choice is valid, so this equals the enumeration); ``"enumerate"``
        tries every assignment of peak-power users across pairs.
    """

    def __init__(self, spec: SystemSpec, projection: str = "pairwise"):
        if projection not in ("pairwise", "enumerate"):
            raise ValueError(f"unknown projection method {projection!r}")
        self.spec = spec
        self.projection = projection
        self.dimension = 2 * spec.K
        self.c = _Coords(spec)
        self.ln_u = self.c.ln_u
        with np.errstate(over="ignore"):   # absurd floors overflow; _initialize rejects them
            self.u = np.exp(self.ln_u)
        self._init = None
        self.stats = {"projections": 0, "reductions": 0}

    # -- solver interface
    def origin(self) -> np.ndarray:
        return self.u.copy()

    def initial_vertex(self) -> np.ndarray:
        if self._init is None:
            self._init = self._initialize()
        return np.exp(self._init[0])

    def objective(self, y) -> float:
        return float(self.c.terms(np.asarray(y, dtype=float)).sum())

    def objective_many(self, ys) -> np.ndarray:
        return self.c.terms(np.atleast_2d(ys)).sum(axis=1)

    # -- per-pair minimum bandwidth
    def _bmin(self, k: int, t1: float, t2: float):
        return kernels.pair_min_bandwidth(t1, t2, *_pair_args(self.spec.pairs[k], self.spec))

    def _bmin_all(self, ln_targets):
        K = self.spec.K
        return [self._bmin(k, ln_targets[k], ln_targets[K + k]) for k in range(K)]

    # -- initial box
    def _initialize(self):
        spec, K = self.spec, self.spec.K
        bmin = np.empty(K)
        for k, pr in enumerate(spec.pairs):
            t1, t2 = self.ln_u[k], self.ln_u[K + k]
            best = math.inf
            for pattern in (0, 1):
                bw, p1, p2 = kernels.pattern_bandwidth(t1, t2, pattern, *_pair_args(pr, spec))
                free, cap = (p2, pr.p2_max) if pattern == 0 else (p1, pr.p1_max)
                if math.isfinite(bw) and free <= cap * (1 + POWER_TOL):
                    best = min(best, bw)
            if not math.isfinite(best):
                raise InfeasibleError("pair-floor",
                                      f"pair {k} cannot meet both quality floors within its peak powers",
                                      pair=k)
            bmin[k] = best
        if bmin.sum() > spec.total_bw:
            raise InfeasibleError("bandwidth-budget",
                                  f"quality floors need {bmin.sum():.6g} Hz, only {spec.total_bw:.6g} Hz available")
        ln_v = np.empty(2 * K)
        for k, pr in enumerate(spec.pairs):
            bk = spec.total_bw - (bmin.sum() - bmin[k])
            ln_v[k] = _max_ln_v(pr, spec, 0, self.ln_u[K + k], bk)
            ln_v[K + k] = _max_ln_v(pr, spec, 1, self.ln_u[k], bk)
        if np.any(ln_v > LN_V_LIMIT):
            raise DomainError("operating point too large for double precision (ln V > 700)")
        ln_v = np.maximum(ln_v, self.ln_u)
        return ln_v, bmin

    # -- projection
    def _excess(self, ln_targets):
        total = 0.0
        for bw, *_ in self._bmin_all(ln_targets):
            if not math.isfinite(bw):
                return BIG
            total += bw
        return total - self.spec.total_bw

    def _targets(self, y, lam):
        d = (np.asarray(y, dtype=float) - self.u) / self.u
        return self.ln_u + np.log1p(lam * d)

    def _largest_lambda(self, excess):
        """Largest ``lam`` in [0, 1] with ``excess(lam) <= 0``, from the feasible side."""
        if excess(1.0) <= 0:
            return 1.0
        if excess(0.0) > 0:
            return -1.0
        lam = brentq(excess, 0.0, 1.0, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=200)
        step = 4 * np.finfo(float).eps * max(lam, 1e-300)
        while lam > 0 and excess(lam) > 0:
            lam = max(lam - step, 0.0)
            step *= 2
        return lam

    def project(self, y) -> mo_solver.Projection:
        """Push ``y`` back along the ray from ``u`` onto the upper boundary.

        Raises
        ------
        NoFeasiblePatternError
            If not even ``u`` can be served, which means ``y`` was not built
            from a feasible problem.
        """
        self.stats["projections"] += 1
        y = np.maximum(np.asarray(y, dtype=float), self.u)
        if self.projection == "enumerate":
            return self._project_enumerate(y)
        lam = self._largest_lambda(lambda s: self._excess(self._targets(y, s)))
        if lam < 0:
            raise NoFeasiblePatternError("projection", "no allocation reaches the origin point")
        sols = self._bmin_all(self._targets(y, lam))
        return mo_solver.Projection(lam, self.u + lam * (y - self.u), self._allocation(sols))

    def _allocation(self, sols):
        bw = [s[0] for s in sols]
        p1 = [s[1] for s in sols]
        p2 = [s[2] for s in sols]
        return Allocation.evaluate(self.spec, bw, p1, p2, patterns=[s[3] for s in sols])

    def _pattern_solutions(self, ln_targets, patterns):
        K, spec = self.spec.K, self.spec
        out = []
        for k, pat in enumerate(patterns):
            pr = spec.pairs[k]
            bw, p1, p2 = kernels.pattern_bandwidth(ln_targets[k], ln_targets[K + k], pat,
                                                   *_pair_args(pr, spec))
            free, cap = (p2, pr.p2_max) if pat == 0 else (p1, pr.p1_max)
            out.append((bw, p1, p2, pat, math.isfinite(bw) and free <= cap * (1 + POWER_TOL)))
        return out

    def _project_enumerate(self, y):
        spec, K = self.spec, self.spec.K
        zero = self._targets(y, 0.0)
        best = None
        for patterns in itertools.product((0, 1), repeat=K):
            if not all(math.isfinite(s[0]) for s in self._pattern_solutions(zero, patterns)):
                # the pinned user's equation has no solution even at the
                # floors; targets only grow with lam, so it never will
                continue

            def excess(lam, patterns=patterns):
                sols = self._pattern_solutions(self._targets(y, lam), patterns)
                if not all(math.isfinite(s[0]) for s in sols):
                    return BIG
                return sum(s[0] for s in sols) - spec.total_bw

            lam = self._largest_lambda(excess)
            if lam < 0:
                continue
            sols = self._pattern_solutions(self._targets(y, lam), patterns)
            if not all(s[4] for s in sols):
                continue
            if best is None or lam > best[0] + 1e-12:
                best = (lam, sols)
        if best is None:
            raise NoFeasiblePatternError("projection", "every peak-power pattern violates a power cap")
        lam, sols = best
        return mo_solver.Projection(lam, self.u + lam * (y - self.u),
                                    self._allocation([s[:4] for s in sols]))

    # -- vertex reduction
    def reduce(self, v, gamma, rounds: int = REDUCE_ROUNDS):
        """Shrink vertex ``v`` to the part of its box that can still beat ``gamma``.

        Feasible points in ``[0, v]`` worth more than ``gamma`` are bounded
        below by ``u'`` (each coordinate lowered until the objective, others at
        ``v``, drops to ``gamma``). Above ``u'`` the bandwidth the other pairs
        leave caps each user's ``V``. A lower ``v`` raises ``u'`` in turn, so
        the two steps alternate for a few rounds. Returns ``None`` if nothing
        is left.
        """
        if not math.isfinite(gamma):
            return v
        self.stats["reductions"] += 1
        c, spec, K = self.c, self.spec, self.spec.K
        act = c.active
        ln_v = np.log(np.asarray(v, dtype=float))
        for _ in range(rounds):
            terms = c.terms(np.exp(ln_v))
            total = terms.sum()
            if not total > gamma:
                return None
            lo = self.ln_u.copy()
            with np.errstate(over="ignore"):
                need = (gamma - (total - terms[act])) / c.w[act]
                lo[act] = np.maximum(lo[act], c.scale[act] * np.exp((need - c.b[act]) / c.a[act]))
            if np.any(lo > ln_v + 1e-12 * np.maximum(1.0, ln_v)):
                return None
            bws = np.array([s[0] for s in self._bmin_all(lo)])
            if not np.all(np.isfinite(bws)) or bws.sum() > spec.total_bw:
                return None
            new = ln_v.copy()
            for k, pr in enumerate(spec.pairs):
                bk = spec.total_bw - (bws.sum() - bws[k])
                for i in (0, 1):
                    m = i * K + k
                    new[m] = min(new[m], _max_ln_v(pr, spec, i, lo[(1 - i) * K + k], bk))
            shrink = np.max((ln_v - new) / np.maximum(ln_v, 1e-300))
            ln_v = new
            if shrink < REDUCE_STOP:
                break
        return np.exp(ln_v)

    def is_feasible(self, y, tol: float = 1e-9) -> bool:
        y = np.asarray(y, dtype=float)
        if np.any(y < 1.0) or np.any(y < self.u * (1 - tol)):
            return False
        self.initial_vertex()
        return self.project(y).lam >= 1.0 - tol


def init_polyblock(spec: SystemSpec):
    """Enclosing vertex ``v'`` and origin ``u`` of the feasible set.

    Raises
    ------
    InfeasibleError
        ``check="pair-floor"`` when a pair cannot meet both quality floors at
        any bandwidth, ``check="bandwidth-budget"`` when the floors together
        need more than the total bandwidth.
    """
    prob = FullDuplexProblem(spec)
    return prob.initial_vertex(), prob.origin()


def project(Y, spec: SystemSpec, u=None, method: str = "pairwise"):
    """``(lam, boundary point, supporting Allocation)`` for ``Y``."""
    prob = FullDuplexProblem(spec, projection=method)
    if u is not None and not np.allclose(u, prob.u, rtol=1e-12, atol=0):
        raise DomainError("origin u does not match the spec's quality floors")
    res = prob.project(Y)
    return res.lam, res.point, res.payload


def feasibility_check(Y, spec: SystemSpec) -> bool:
    """Whether some allocation gives every user at least ``Y`` (and the floors hold)."""
    prob = FullDuplexProblem(spec)
    try:
        return prob.is_feasible(Y)
    except InfeasibleError:
        return False


def _polish(spec: SystemSpec, alloc: Allocation) -> Allocation:
    from .baselines import best_pair_powers   # baselines builds on this module

    p1, p2, pats = alloc.p1.copy(), alloc.p2.copy(), list(alloc.patterns)
    for k, pr in enumerate(spec.pairs):
        hit = best_pair_powers(pr, spec, float(alloc.bw[k]))
        if hit is not None:
            p1[k], p2[k] = hit[1], hit[2]
            if pats:
                pats[k] = hit[3]
    better = Allocation.evaluate(spec, alloc.bw, p1, p2, pats)
    if not better.weighted_sum_quality > alloc.weighted_sum_quality:
        alloc.info["polish_gain"] = 0.0
        return alloc
    better.info = {**alloc.info, "polish_gain": float(better.weighted_sum_quality - alloc.weighted_sum_quality)}
    return better


def solve_fd(spec: SystemSpec, eps: float | None = None, max_iter: int = 100_000,
             rule: str = "absolute", reduce: bool = False, projection: str = "pairwise",
             polish: bool = True, on_iteration=None):
    """Optimal bandwidth and power allocation for ``spec``.

    Parameters
    ----------
    eps : float, optional
        Gap tolerance in dB; defaults to ``spec.eps``.
    reduce : bool
        Shrink new vertices against the incumbent. Each reduction costs a
        few extra root solves and, in measurements on two to four pairs, does
        not pay for itself. With ``False`` (the default) the polyblock keeps
        enclosing the whole feasible set.
    polish : bool
        Once the polyblock stops, keep the incumbent's bandwidths and
        re-optimize each pair's powers on its peak-power edges. Pairs only
        interact through bandwidth, so this never lowers the value and leaves
        the certified gap intact; it lands exactly on corners such as both
        users at peak, which the polyblock only approaches to within ``eps``.
        ``info["polish_gain"]`` records the improvement.

    Returns
    -------
    (Allocation, SolverReport)

    Raises
    ------
    InfeasibleError
        When the quality floors cannot all be met.
    """
    prob = FullDuplexProblem(spec, projection=projection)
    report = mo_solver.solve(prob, eps=spec.eps if eps is None else eps, max_iter=max_iter,
                             rule=rule, reduce=reduce, on_iteration=on_iteration)
    alloc = report.best_payload
    if alloc is not None:
        alloc.weighted_sum_quality = report.best_value
        if polish:
            alloc = _polish(spec, alloc)
    report.problem_stats = dict(prob.stats)
    return alloc, report
