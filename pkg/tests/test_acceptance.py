"""End-to-end acceptance suite.

Every test records its verdict through ``conftest.record``; the terminal
summary prints one PASS/FAIL line per criterion. Tolerances are the stated
ones and are never widened here.
"""
import dataclasses
import math
import time

import numpy as np
import pytest

from fdalloc import config, harness, scenarios
from fdalloc.baselines import OracleGrid, grid_oracle
from fdalloc.errors import InfeasibleError
from fdalloc.fd_problem import FullDuplexProblem, init_polyblock, solve_fd
from fdalloc.quality import fit_log_model, preset, psnr

import props
from conftest import random_pair_spec, record

pytestmark = pytest.mark.slow

TABLE3 = "3-pair table"
TABLE4 = "4-pair table"
ORACLE = "oracle equivalence"
PROPS = "structural properties"
TRACES = "solver traces"
TRENDS = "figure trends"
FITTING = "quality fitting"

TABLE3_SUM, TABLE4_SUM, SUM_TOL = 33.9269, 36.8243, 0.15
TABLE3_P2 = (3.8971, 4.0473, 4.3400)
TABLE3_BW = (51.626e3, 150.691e3, 97.683e3)
BAND = 0.02


def _optimal(table):
    return [r for r in table.rows if r["method"] == "optimal"]


def _within(got, want, rel):
    return all(abs(g - w) <= rel * abs(w) for g, w in zip(got, want))


def natural_log_variant(scenario):
    """Same scenario with rates measured in nat/s instead of bit/s.

    Dropping the ``1/ln 2`` from the fading exponent is the same as running the
    bit model at ``theta * ln 2``; the rate then comes out ``ln 2`` times
    larger, which the log quality model absorbs as ``b + a ln(ln 2)``.
    """
    base = config.normalize(scenario.base)
    for pr in base["pairs"]:
        for i in (1, 2):
            pr[f"theta_{i}"] *= math.log(2)
            q = preset(pr.pop(f"video_{i}")) if f"video_{i}" in pr else None
            if q is not None:
                pr[f"quality_{i}"] = {"a": q.a, "b": q.b + q.a * math.log(math.log(2)), "q_min": q.q_min}
    return dataclasses.replace(scenario, name=scenario.name + "_natlog", base=base)


@pytest.fixture(scope="module")
def other_runs():
    return {name: harness.run_scenario(scenarios.get(name), workers=1)
            for name in ("fig5", "fig6", "fig8", "fig10", "table4pairs")}


@pytest.fixture(scope="module")
def all_runs(other_runs, table3_run, fig3_run):
    return dict(other_runs, table3pairs=table3_run, fig3=fig3_run)


# ----------------------------------------------------------------- tables

def test_table3_weighted_sum(table3_run):
    (row,) = _optimal(table3_run)
    ok = row["status"] == "Converged" and abs(row["weighted_sum"] - TABLE3_SUM) <= SUM_TOL
    assert record(TABLE3, ok, f"weighted sum {row['weighted_sum']:.4f} dB vs {TABLE3_SUM} +/- {SUM_TOL}")


def test_table3_user1_at_peak(table3_run):
    (row,) = _optimal(table3_run)
    p1 = [row[f"p1_{k}"] for k in (1, 2, 3)]
    assert record(TABLE3, p1 == [5.0] * 3, f"P1 = {p1}")


def test_table3_runtime(table3_run):
    wall = sum(table3_run.meta["wall_time_s"])
    assert record(TABLE3, wall < 300, f"runtime {wall:.0f} s < 300 s")


@pytest.mark.xfail(strict=True, reason="the printed powers and bandwidths are not the optimum of the stated "
                                       "problem under either log convention; see the decisions ledger")
def test_table3_allocation_bands(table3_run):
    outcomes = []
    for label, table in (("base-2", table3_run),
                         ("natural-log", harness.run_scenario(natural_log_variant(scenarios.get("table3pairs")),
                                                              workers=1))):
        (row,) = _optimal(table)
        p2 = [row[f"p2_{k}"] for k in (1, 2, 3)]
        bw = [row[f"bw_{k}"] for k in (1, 2, 3)]
        ok = _within(p2, TABLE3_P2, BAND) and _within(bw, TABLE3_BW, BAND)
        outcomes.append(ok)
        record(TABLE3, ok, f"{label}: P2 {np.round(p2, 4).tolist()} vs {list(TABLE3_P2)}, "
                           f"B/kHz {np.round(np.array(bw) / 1e3, 3).tolist()} vs "
                           f"{[b / 1e3 for b in TABLE3_BW]} (+/- 2%)")
    assert any(outcomes)


def test_table4_weighted_sum(other_runs):
    (row,) = _optimal(other_runs["table4pairs"])
    ok = row["status"] == "Converged" and abs(row["weighted_sum"] - TABLE4_SUM) <= SUM_TOL
    assert record(TABLE4, ok, f"weighted sum {row['weighted_sum']:.4f} dB vs {TABLE4_SUM} +/- {SUM_TOL}")


# ----------------------------------------------------------------- oracle

def test_oracle_equivalence():
    rng = np.random.default_rng(2024)
    t0 = time.perf_counter()
    worst = []
    for K, n, eps in ((1, 20, scenarios.EPS_ONE_PAIR), (2, 5, scenarios.EPS_TWO_PAIRS)):
        done = 0
        while done < n:
            spec = random_pair_spec(rng, K, eps=eps)
            try:
                orc = grid_oracle(spec, OracleGrid())
            except InfeasibleError:
                continue
            alloc, rep = solve_fd(spec)
            excess = abs(alloc.weighted_sum_quality - orc.weighted_sum_quality) - (eps + orc.info["grid_bound"])
            worst.append(excess)
            done += 1
    wall = time.perf_counter() - t0
    ok = max(worst) <= 0 and wall < 600
    assert record(ORACLE, ok, f"25 instances, worst |diff| - (eps + grid bound) = {max(worst):.2e} dB, "
                              f"{wall:.0f} s < 600 s")


# ------------------------------------------------------------- properties

@pytest.mark.parametrize("name", list(props.CHECKS))
def test_structural_property(name):
    failures = props.run(props.CHECKS[name], 1000, seed=99)
    assert record(PROPS, not failures, f"{name}: {len(failures)} violations in 1000 draws (tol {props.TOL})")


# ----------------------------------------------------------------- traces

def test_traces_on_every_scenario(all_runs):
    bad = []
    count = 0
    for name, table in all_runs.items():
        for row, trace in zip(table.rows, table.traces):
            if trace is None:
                continue
            count += 1
            ub, cbv = np.array(trace[0]), np.array(trace[1])
            if not (np.all(np.diff(ub) <= 0) and np.all(np.diff(cbv) >= 0) and row["gap"] <= row["eps"]):
                bad.append((name, row["x"]))
    assert record(TRACES, not bad and count > 0,
                  f"{count} optimal solves over {len(all_runs)} scenarios, violations: {bad}")


def _k1_points():
    for name in ("fig3", "fig5", "fig6"):
        pts = list(scenarios.get(name).points())
        for x, cfg in (pts[0], pts[len(pts) // 2], pts[-1]):
            yield name, x, config.to_spec(cfg)


def test_nesting_on_one_pair_runs():
    rng = np.random.default_rng(5)
    bad, iters = [], 0
    for name, x, spec in _k1_points():
        prob = FullDuplexProblem(spec)
        v, u = init_polyblock(spec)
        samples = u + (v - u) * rng.uniform(0, 1, (400, 2))
        feas = np.array([prob.is_feasible(s) for s in samples])

        def member(points, verts):
            return np.any(np.all(points[:, None, :] <= verts[None, :, :] * (1 + 1e-12), axis=2), axis=1)

        ok = []

        def on_iter(j, old, new, y):
            inside_new = member(samples, np.asarray(new))
            ok.append(bool(np.all(member(samples[inside_new], np.asarray(old))) and np.all(inside_new[feas])))

        _, rep = solve_fd(spec, on_iteration=on_iter)
        iters += len(ok)
        if not all(ok):
            bad.append((name, x))
    assert record(TRACES, not bad and iters > 0,
                  f"nesting sampled on 9 one-pair solves ({iters} iterations), violations: {bad}")


# ----------------------------------------------------------------- trends

def test_fig3_trends(fig3_run):
    rows = _optimal(fig3_run)
    x = np.array([r["x"] for r in rows])
    p1 = np.array([r["p1_1"] for r in rows])
    q11 = np.array([r["q1_1"] for r in rows])
    q21 = np.array([r["q2_1"] for r in rows])
    pinned = np.all(p1[x <= 0.06] == 5.0)
    falling = np.all(np.diff(p1[x >= 0.06]) < 0)
    ok = pinned and falling and np.all(np.diff(q11) <= 0) and np.all(np.diff(q21) >= 0)
    assert record(TRENDS, ok, f"fig3: P11 at 5 up to 0.06 then {np.round(p1[x > 0.06], 3).tolist()}; "
                              f"Q11 nonincreasing, Q21 nondecreasing")


def test_fig10_trends(other_runs):
    rows = other_runs["fig10"].rows
    xs = sorted({r["x"] for r in rows})
    val = {(r["x"], r["method"]): r["weighted_sum"] for r in rows}
    gap = np.array([val[(x, "optimal")] - val[(x, "ebop")] for x in xs])
    centre = xs.index(0.25)
    ok = (int(np.argmin(gap)) == centre and np.all(np.diff(gap[:centre + 1]) < 0)
          and np.all(np.diff(gap[centre:]) > 0))
    assert record(TRENDS, ok, f"fig10: EBOP gap {np.round(gap, 3).tolist()} smallest at equal weights")


# ---------------------------------------------------------------- quality

def test_quality_fitting():
    rng = np.random.default_rng(8)
    worst = 0.0
    for _ in range(50):
        a, b = rng.uniform(2, 7), rng.uniform(0, 20)
        rates = rng.uniform(20, 2000, 12)
        fa, fb = fit_log_model(zip(rates, a * np.log(rates) + b))
        worst = max(worst, abs(fa - a), abs(fb - b))
    bus = psnr(100.0, preset("Bus"))
    ok = worst <= 1e-9 and abs(bus - 27.215) <= 5e-4
    assert record(FITTING, ok, f"noiseless recovery error {worst:.1e} <= 1e-9; Bus at 100 kbit/s {bus:.4f} dB")
