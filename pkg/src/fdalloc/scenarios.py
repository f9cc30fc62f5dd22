"""Built-in scenarios: the single-pair and two-pair sweeps and the multi-pair tables.

Common settings: N0 = 1e-6 W/Hz, coherence time 1 ms, suppression factor 0.1
at every user, 20 dB quality floor, 5 W peak power.

The multi-pair tables do not list channel means or video sequences. The
values used here (pair k has mean gain k; videos Bus/Coastguard,
News/Akiyo, Bus/Foreman, News/Foreman) reproduce every published quality
of those tables from the published allocations.
"""
from __future__ import annotations

import copy

import numpy as np

from .errors import DomainError
from .harness import Scenario, SolverOptions, Sweep, SweepTarget

THETAS = tuple(round(v, 2) for v in np.arange(0.01, 0.1001, 0.01))
TABLE_VIDEOS = (("Bus", "Coastguard"), ("News", "Akiyo"), ("Bus", "Foreman"), ("News", "Foreman"))

# Tolerances (dB) for the 2K-dimensional polyblock. Its certified gap shrinks
# slowly once 2K >= 4; these are the tightest values that close within
# minutes on one core.
EPS_ONE_PAIR = 1e-3
EPS_TWO_PAIRS = 0.1
EPS_TABLE3 = 0.75
EPS_TABLE4 = 1.25


def _pair(z, videos, theta, w):
    return {"z": z, "video": list(videos), "theta": list(theta), "weights": list(w)}


def _one_pair(theta=(0.01, 0.01), w=(0.5, 0.5)):
    return {"total_bw": 100e3, "eps": EPS_ONE_PAIR, "pairs": [_pair(1, ("Bus", "Coastguard"), theta, w)]}


def _two_pairs(theta1=0.01, w=0.25):
    return {"total_bw": 200e3, "eps": EPS_TWO_PAIRS,
            "pairs": [_pair(1, ("Bus", "Coastguard"), (theta1, theta1), (w, w)),
                      _pair(3, ("Bus", "Coastguard"), (0.01, 0.01), (0.5 - w, 0.5 - w))]}


def _table(K, thetas, weights, eps):
    return {"total_bw": 100e3 * K, "eps": eps,
            "pairs": [_pair(k + 1, TABLE_VIDEOS[k], (thetas[k],) * 2, (weights[k],) * 2) for k in range(K)]}


def _theta_sweep(paths):
    return Sweep("theta", THETAS, tuple(SweepTarget(p) for p in paths))


_SCENARIOS = {
    "fig3": Scenario(
        "fig3", _one_pair(),
        Sweep("theta_11", THETAS, (SweepTarget("pairs.0.theta_1"),)),
        description="one pair: QoS exponent of user 1 from 0.01 to 0.1, user 2 fixed at 0.01"),
    "fig5": Scenario(
        "fig5", _one_pair(), _theta_sweep(("pairs.0.theta_1", "pairs.0.theta_2")),
        description="one pair: both QoS exponents from 0.01 to 0.1 together"),
    "fig6": Scenario(
        "fig6", _one_pair(),
        Sweep("w_11", tuple(round(v, 1) for v in np.arange(0.0, 1.0001, 0.1)),
              (SweepTarget("pairs.0.w1"), SweepTarget("pairs.0.w2", scale=-1.0, offset=1.0))),
        description="one pair: weight of user 1 from 0 to 1, user 2 gets the rest"),
    "fig8": Scenario(
        "fig8", _two_pairs(), _theta_sweep(("pairs.0.theta_1", "pairs.0.theta_2")),
        methods=("optimal", "ebop"),
        description="two pairs: QoS exponents of pair 1 from 0.01 to 0.1, optimal vs equal bandwidth"),
    "fig10": Scenario(
        "fig10", _two_pairs(),
        Sweep("w_1", tuple(round(v, 2) for v in np.arange(0.05, 0.4501, 0.05)),
              (SweepTarget("pairs.0.w1"), SweepTarget("pairs.0.w2"),
               SweepTarget("pairs.1.w1", scale=-1.0, offset=0.5),
               SweepTarget("pairs.1.w2", scale=-1.0, offset=0.5))),
        methods=("optimal", "ebop"),
        description="two pairs: weights of pair 1 from 0.05 to 0.45, optimal vs equal bandwidth"),
    "table3pairs": Scenario(
        "table3pairs", _table(3, (0.1, 0.07, 0.04), (0.05, 0.3, 0.15), EPS_TABLE3),
        solver=SolverOptions(max_iter=20_000),
        description="three pairs, 300 kHz"),
    "table4pairs": Scenario(
        "table4pairs", _table(4, (0.1, 0.07, 0.04, 0.01), (0.05, 0.2, 0.05, 0.2), EPS_TABLE4),
        solver=SolverOptions(max_iter=20_000),
        description="four pairs, 400 kHz"),
}


def names() -> list:
    return list(_SCENARIOS)


def get(name: str) -> Scenario:
    try:
        return copy.deepcopy(_SCENARIOS[name])
    except KeyError:
        raise DomainError(f"unknown scenario {name!r}; built-in: {names()}") from None


def from_mapping(data: dict) -> Scenario:
    """Scenario from a configuration file with an optional ``scenario`` section.

    The section may hold ``name``, ``methods``, ``sweep`` (``label``,
    ``values`` and ``set``: a list of ``{path, scale, offset}``) and
    ``solver`` (``eps``, ``max_iter``, ``reduce``, ``rule``).
    """
    data = copy.deepcopy(data)
    sc = data.pop("scenario", {}) or {}
    sweep = None
    if "sweep" in sc:
        sw = sc["sweep"]
        targets = tuple(SweepTarget(t["path"], float(t.get("scale", 1.0)), float(t.get("offset", 0.0)))
                        for t in sw.get("set", []))
        sweep = Sweep(sw.get("label", "x"), tuple(sw.get("values", ())), targets)
    solver = SolverOptions(**{**sc.get("solver", {}), **data.pop("solver", {})})
    return Scenario(sc.get("name", "custom"), data, sweep, tuple(sc.get("methods", ("optimal",))), solver,
                    sc.get("description", ""))
